"""Acceptance criteria, one test per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal
summary prints one PASS/FAIL line per criterion.
"""

import time

import numpy as np
import pytest

from helpers import coupling_oracle, eig_radius, random_nonneg_matrix, scaled_scenario
from interfmap import (
    CanonicalProblem,
    MonotoneNorm,
    SolverConfig,
    affine_mapping,
    capped_load_mapping,
    check_axioms,
    compute_fixed_point,
    constrained_feasibility,
    derive_asymptotic,
    efficiency_bound,
    has_fixed_point,
    load_mapping,
    scalar_affine_mapping,
    solve_canonical,
    solve_conditional_eigenproblem,
    spectral_radius,
    spectral_radius_upper_via_budget,
    sweep,
    transition_point,
    two_user_concave_mapping,
    utility_bound,
)
from interfmap.asymptotic import as_gi_mapping
from interfmap.core import eval_norm
from interfmap.loadmodel import power_asymptotic_radius, power_mapping, rate_sweep
from interfmap.maxmin import asymptotic_radius
from interfmap.scenario import load_scenario


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.2f} s, limit {self.limit} s"


@pytest.mark.acceptance(1, "two-user concave family: feasibility table")
def test_criterion_1_feasibility_table():
    with Timer(1.0):
        for alpha in (0.0, 0.25, 0.5, 0.9, 0.99):
            v = has_fixed_point(two_user_concave_mapping(alpha))
            assert v.feasible is True, alpha
            assert abs(v.rho - alpha) <= 1e-6, (alpha, v.rho)
        for alpha in (1.5, 3.0):
            v = has_fixed_point(two_user_concave_mapping(alpha))
            assert v.feasible is False, alpha
            assert abs(v.rho - alpha) <= 1e-6, (alpha, v.rho)


@pytest.mark.acceptance(2, "affine mappings: verdict and fixed point vs dense oracles")
def test_criterion_2_affine_oracle_equivalence():
    rng = np.random.default_rng(2024)
    compared = solved = 0
    with Timer(10.0):
        for _ in range(200):
            n = int(rng.integers(2, 7))
            X = random_nonneg_matrix(rng, n, rng.uniform(0.2, 2.0))
            u = rng.uniform(0.1, 2.0, size=n)
            rho = eig_radius(X)
            if abs(rho - 1.0) <= 1e-3:
                continue
            T = affine_mapping(X, u)
            v = has_fixed_point(T)
            assert v.feasible is (rho < 1.0), (rho, v.rho)
            compared += 1
            if rho < 1.0:
                fp = compute_fixed_point(T)
                oracle = np.linalg.solve(np.eye(n) - X, u)
                assert fp.exists
                np.testing.assert_allclose(fp.point, oracle, rtol=1e-8)
                solved += 1
    assert compared >= 190 and solved >= 50


@pytest.mark.acceptance(3, "scalar affine problem: closed-form utility and transition point")
def test_criterion_3_closed_form_canonical():
    with Timer(1.0):
        prob = CanonicalProblem(scalar_affine_mapping(0.5, 1.0), MonotoneNorm.l1())
        for pbar in (0.5, 1.0, 2.0, 4.0, 8.0):
            sol = solve_canonical(prob, pbar)
            assert abs(sol.utility - pbar / (0.5 * pbar + 1.0)) <= 1e-8
        rho = asymptotic_radius(prob)
        pt = transition_point(prob, rho)
        assert pt == 2.0
        # At the transition point both branches of each bound coincide.
        t0 = prob.norm_a(prob.noise_level)
        assert pt / t0 == 1.0 / rho == utility_bound(prob, pt, rho) == 2.0
        assert 1.0 / prob.norm_b(prob.noise_level) == prob.alpha / (rho * pt) == efficiency_bound(prob, pt, rho) == 1.0
        sol = solve_canonical(prob, pt)
        assert sol.utility <= utility_bound(prob, pt, rho)
        assert sol.utility / prob.norm_b(sol.power) <= efficiency_bound(prob, pt, rho)


@pytest.mark.acceptance(4, "load model: numeric asymptotic mapping vs closed-form matrix")
def test_criterion_4_asymptotic_agreement():
    rng = np.random.default_rng(4)
    with Timer(5.0):
        for k in range(20):
            s = scaled_scenario(seed=400 + k, num_bs=2 + k % 4, target_rho=rng.uniform(0.2, 1.8))
            T = load_mapping(s)
            A = derive_asymptotic(T, force_numeric=True)
            oracle = np.diag(1.0 / s.power) @ coupling_oracle(s) @ np.diag(s.power)
            for _ in range(10):
                x = rng.uniform(0.0, 2.0, size=s.num_bs)
                want = oracle @ x
                # Relative to the sup norm, the accuracy unit of numeric limits.
                assert np.max(np.abs(A(x) - want)) <= 1e-6 * np.max(np.abs(want)), (k, x)


@pytest.mark.acceptance(5, "capped and uncapped load mappings share the feasibility verdict")
def test_criterion_5_capped_equivalence():
    rng = np.random.default_rng(5)
    numeric = SolverConfig(tol_x=1e-8, tol_lambda=1e-8)
    checked = 0
    with Timer(5.0):
        for k in range(20):
            # Alternate sides of the boundary, away from it.
            target = rng.uniform(0.3, 0.9) if k % 2 else rng.uniform(1.1, 1.7)
            s = scaled_scenario(seed=400 + k, num_bs=2 + k % 4, target_rho=target)
            base = has_fixed_point(load_mapping(s))
            assert base.feasible is (target < 1.0)
            # Per-block rate at zero load bounds every achievable rate.
            top = s.bandwidth * np.log2(1 + np.max(s.power) * np.max(s.gains) / s.noise)
            for cap in (1e-3 * top, top, 1e15):
                Tc = capped_load_mapping(s.replace(rate_cap=cap))
                assert has_fixed_point(Tc).feasible is base.feasible, (k, cap)
                # Independent routes: numeric asymptotic radius and plain iteration.
                sr = spectral_radius(derive_asymptotic(Tc, force_numeric=True), cfg=numeric)
                assert (sr.value < 1.0) is base.feasible, (k, cap, sr.value)
                fp = compute_fixed_point(Tc)
                assert fp.exists is base.feasible, (k, cap, fp.status)
                checked += 1
    assert checked == 60


@pytest.mark.acceptance(6, "five-station sweep: utility and efficiency curve shapes")
def test_criterion_6_sweep_shape():
    s = load_scenario("builtin:five_bs")
    with Timer(60.0):
        rho = power_asymptotic_radius(s)
        H = power_mapping(s, np.ones(s.num_bs))
        h0 = float(np.max(H(np.zeros(s.num_bs))))
        pT = h0 / rho
        budgets = np.geomspace(1e-4 * pT, 1e4 * pT, 25)
        rows, rho_s, prob = rate_sweep(s, budgets)
        assert rho_s == rho
        assert all(r.ok for r in rows)
        U = np.array([r.utility for r in rows])
        E = np.array([r.efficiency for r in rows])
        assert np.all(np.diff(U) > 0)
        assert np.all(np.diff(E) <= 1e-10 * E[1:])
        for r in rows:
            assert r.utility <= r.utility_bound * (1 + 1e-9)
            assert r.efficiency <= r.efficiency_bound * (1 + 1e-9)
        assert np.all(np.abs(U[-3:] * rho - 1.0) <= 0.05)
        pe = budgets[-3:] * E[-3:]
        assert pe.max() / pe.min() <= 2.0
        assert np.all(np.abs(U[:3] / budgets[:3] * h0 - 1.0) <= 0.05)


def _random_si_instance(rng, k):
    """SI mapping plus a budget-scaled norm for the constrained test."""
    kind = k % 4
    if kind in (0, 1):
        n = int(rng.integers(2, 6))
        X = random_nonneg_matrix(rng, n, rng.uniform(0.2, 1.5))
        T = affine_mapping(X, rng.uniform(0.1, 2.0, size=n))
    elif kind == 2:
        T = two_user_concave_mapping(rng.uniform(0.0, 1.4))
    else:
        T = load_mapping(scaled_scenario(seed=700 + k, num_bs=2 + k % 3, target_rho=rng.uniform(0.2, 1.4)))
    base = MonotoneNorm.l1() if rng.random() < 0.5 else MonotoneNorm.linf()
    return T, base


@pytest.mark.acceptance(7, "constrained feasibility agrees with the direct fixed-point test")
def test_criterion_7_constrained_feasibility():
    rng = np.random.default_rng(7)
    compared = 0
    with Timer(10.0):
        for k in range(100):
            T, base = _random_si_instance(rng, k)
            fp = compute_fixed_point(T)
            # Radius chosen around the fixed point's norm so both verdicts occur.
            ref = base(fp.point) if fp.exists else base(T(np.zeros(T.dim))) * 10
            norm = base.scaled(1.0 / (ref * rng.uniform(0.5, 2.0)))
            cv = constrained_feasibility(T, norm)
            if abs(cv.lambda_star - 1.0) <= 1e-6:
                continue
            if fp.exists and abs(norm(fp.point) - 1.0) <= 1e-6:
                continue
            assert fp.status in ("converged", "diverged")
            direct = bool(fp.exists) and norm(fp.point) <= 1 + 1e-8
            assert cv.feasible_within_ball is direct, (k, cv.lambda_star, fp.status)
            compared += 1
    assert compared >= 95


class Counter:
    def __init__(self):
        self.n = 0

    def check(self, cond, msg=""):
        self.n += 1
        assert cond, msg


def _bundled_mappings():
    s = load_scenario("builtin:five_bs")
    cap = s.bandwidth * 2.0
    return {
        "scalar_affine": scalar_affine_mapping(0.5, 1.0),
        "two_user": two_user_concave_mapping(0.5),
        "load": load_mapping(s),
        "capped_load": capped_load_mapping(s.replace(rate_cap=cap)),
        "power": power_mapping(s, np.ones(s.num_bs)),
    }


@pytest.mark.acceptance(8, "invariant suites over 10^4 sampled assertions")
def test_criterion_8_invariant_suites():
    rng = np.random.default_rng(8)
    c = Counter()
    with Timer(60.0):
        # Monotone norms.
        norms = [MonotoneNorm.l1(), MonotoneNorm.linf(),
                 MonotoneNorm.from_name("l1").scaled(0.25), MonotoneNorm.linf().scaled(3.0)]
        for _ in range(800):
            n = int(rng.integers(1, 7))
            x = rng.exponential(size=n)
            y = x + rng.exponential(size=n) * (rng.random(n) < 0.6)
            a = rng.uniform(0.0, 5.0)
            for nm in norms:
                c.check(eval_norm(nm, x) <= eval_norm(nm, y) * (1 + 1e-12))
                c.check(abs(eval_norm(nm, a * x) - a * eval_norm(nm, x)) <= 1e-12 * (1 + a * eval_norm(nm, x)))

        # Axioms of every bundled mapping.
        maps = _bundled_mappings()
        for name, T in maps.items():
            rep = check_axioms(T, samples=150, seed=8)
            for axiom in ("monotonicity", "scalability", "positivity"):
                c.check(rep[axiom].passed, (name, axiom, rep[axiom].witness))

        # Homogeneity and monotonicity of asymptotic mappings.
        for name, T in maps.items():
            A = derive_asymptotic(T, force_numeric=name in ("two_user", "capped_load", "power"))
            for _ in range(40):
                x = rng.uniform(0.0, 3.0, size=T.dim)
                y = x + rng.uniform(0.0, 1.0, size=T.dim)
                a = rng.uniform(0.1, 10.0)
                ax, ay, aax = A(x), A(y), A(a * x)
                c.check(np.all(ax <= ay + 1e-7 * max(np.max(ay), np.max(y))), (name, "monotone"))
                # Numeric limits are accurate relative to the sup norm of the input.
                scale = max(np.max(a * ax), a * np.max(x), 1e-300)
                c.check(np.max(np.abs(aax - a * ax)) <= 1e-6 * scale, (name, "homog"))
            c.check(np.all(A(np.zeros(T.dim)) == 0.0))

        # Fixed-point iterates from the origin are nondecreasing.
        for k in range(60):
            n = int(rng.integers(2, 6))
            X = random_nonneg_matrix(rng, n, rng.uniform(0.2, 0.95))
            T = affine_mapping(X, rng.uniform(0.1, 2.0, size=n))
            x = np.zeros(n)
            for _ in range(25):
                nxt = T(x)
                c.check(np.all(nxt >= x - 1e-14 * (1 + x)))
                x = nxt

        # Budget-method bounds are nonincreasing and stay above the radius.
        for k in range(30):
            n = int(rng.integers(2, 5))
            X = random_nonneg_matrix(rng, n, rng.uniform(0.2, 1.5))
            T = affine_mapping(X, rng.uniform(0.1, 2.0, size=n))
            bounds = spectral_radius_upper_via_budget(T, np.geomspace(0.1, 1e4, 12), MonotoneNorm.l1())
            rho = eig_radius(X)
            for b0, b1 in zip(bounds, bounds[1:]):
                c.check(b1 <= b0 * (1 + 1e-9))
            for b in bounds:
                c.check(b >= rho * (1 - 1e-9))

        # Ordering of conditional eigenvalues and upper-bound certificates.
        for k in range(60):
            n = int(rng.integers(2, 5))
            X = random_nonneg_matrix(rng, n, rng.uniform(0.2, 1.5))
            T = affine_mapping(X, rng.uniform(0.1, 2.0, size=n))
            nm = MonotoneNorm.l1().scaled(1.0 / rng.uniform(0.5, 10.0))
            lam = solve_conditional_eigenproblem(T, nm).lambda_star
            A = as_gi_mapping(derive_asymptotic(T))
            rho = spectral_radius(derive_asymptotic(T)).value
            for _ in range(20):
                x = rng.exponential(size=n)
                x /= nm(x)
                lam_sub = float(np.min(T(x) / x))
                c.check(lam >= lam_sub - 1e-9, ("ordering", lam, lam_sub))
                lam_sup = float(np.max(A(x) / x))
                c.check(rho <= lam_sup + 1e-9, ("certificate", rho, lam_sup))
    assert c.n >= 10_000, c.n
