"""Conditional eigenvalue problems and spectral radii of monotone mappings.

The workhorse is the normalized fixed-point iteration
``x_{n+1} = T(x_n) / ||T(x_n)||`` with ``lambda_n = ||T(x_n)||``, which
converges for SI mappings and for primitive nonnegative concave mappings.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .asymptotic import AsymptoticMapping, LinearForm, NumericForm, as_gi_mapping, numeric_limit
from .core import ConvergenceError, InterferenceMapping, MappingClass, MonotoneNorm, as_nonneg, require_si

BOUNDARY_RTOL = 1e-6
SHIFTS = (1e-6, 1e-8)


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules shared by the iterative solvers.

    Tolerances are relative: iterate changes are measured against
    ``||x||_inf`` and eigenvalue changes against ``lambda``.
    """

    tol_x: float = 1e-10
    tol_lambda: float = 1e-10
    max_iter: int = 100_000
    x0: Optional[tuple] = None

    def __post_init__(self):
        if not (self.tol_x > 0 and self.tol_lambda > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.x0 is not None:
            object.__setattr__(self, "x0", tuple(float(v) for v in as_nonneg(self.x0)))

    @property
    def tol(self) -> float:
        return max(self.tol_x, self.tol_lambda)


@dataclass
class EigenSolution:
    x_star: np.ndarray
    lambda_star: float
    iterations: int
    converged: bool
    residual: float


def _start_vector(dim, cfg):
    if cfg.x0 is None:
        return np.ones(dim)
    x = as_nonneg(cfg.x0, dim)
    if np.any(x <= 0):
        raise ValueError("x0 must be strictly positive")
    return x


def solve_conditional_eigenproblem(
    T: InterferenceMapping, norm: MonotoneNorm, cfg: SolverConfig = SolverConfig()
) -> EigenSolution:
    """Find ``(x, lam)`` with ``T(x) = lam * x`` and ``norm(x) = 1``.

    Iterates ``x <- T(x) / norm(T(x))`` until both the sup-norm change in
    ``x`` and the change in ``lam`` fall below the (relative) tolerances.
    On non-convergence the last iterate is returned with
    ``converged=False``.
    """
    x = _start_vector(T.dim, cfg)
    x = x / norm(x)
    lam_prev = None
    converged = False
    n = 0
    for n in range(1, cfg.max_iter + 1):
        y = T(x)
        lam = norm(y)
        if lam == 0.0:
            # T vanishes on a positive vector: x is an eigenvector for 0.
            return EigenSolution(x, 0.0, n, True, 0.0)
        x_new = y / lam
        dx = float(np.max(np.abs(x_new - x)))
        x = x_new
        if lam_prev is not None:
            if (dx <= cfg.tol_x * float(np.max(x))
                    and abs(lam - lam_prev) <= cfg.tol_lambda * lam):
                converged = True
                break
        lam_prev = lam
    y = T(x)
    lam_star = norm(y)
    residual = float(np.max(np.abs(y - lam_star * x)))
    return EigenSolution(x, lam_star, n, converged, residual)


# ---------------------------------------------------------------------------
# Spectral radius
# ---------------------------------------------------------------------------


@dataclass
class SpectralRadius:
    """Spectral radius estimate with a certified bracket.

    ``status`` is ``"exact"`` when a strictly positive eigenvector was
    found (or the matrix route succeeded), ``"needs_budget_method"`` when
    the numeric iteration ran into the orthant boundary, and
    ``"bracketed"`` after :func:`refine_with_budgets`.
    """

    value: float
    status: str
    lower: float
    upper: float
    iterations: int = 0
    vector: Optional[np.ndarray] = None

    def __float__(self):
        return float(self.value)


def _cw_bounds(Bx, x):
    return float(np.min(Bx / x)), float(np.max(Bx / x))


def _perron_positive(B, tol, max_iter, shift=None, detect_boundary=True):
    """Power iteration on ``B + c*I`` from the all-ones vector.

    With ``shift=None`` the shift ``c`` follows the current
    Collatz-Wielandt upper bound, so it stays on the scale of ``rho(B)``
    and a dominant pair ``+-rho`` of a periodic block is damped at once.

    Returns ``(lower, upper, x, iterations, status)`` where the bounds are
    Collatz-Wielandt bounds on ``rho(B)`` and status is one of
    ``converged``, ``boundary`` (the iterate settled on the orthant
    boundary) or ``stalled``.
    """
    n = B.shape[0]
    x = np.full(n, 1.0 / n)
    lo, hi = 0.0, np.inf
    c = float(np.max(B.sum(axis=1))) if shift is None else shift
    for it in range(1, max_iter + 1):
        Bx = B @ x
        if np.all(x > 0):
            lo, hi = _cw_bounds(Bx, x)
            if hi - lo <= tol * hi:
                return lo, hi, x, it, "converged"
            if shift is None and hi > 0:
                c = hi
        y = Bx + c * x
        x_new = y / y.sum()
        if (detect_boundary and np.max(np.abs(x_new - x)) <= tol * np.max(x_new)
                and np.min(x_new) <= BOUNDARY_RTOL * np.max(x_new)):
            return lo, hi, x_new, it, "boundary"
        x = x_new
    return lo, hi, x, max_iter, "stalled"


def strong_components(X) -> list:
    """Index arrays of the strongly connected components of ``X``'s graph.

    Uses the transitive closure by repeated boolean squaring, which is
    cheap at the matrix sizes handled here.
    """
    n = X.shape[0]
    R = ((X > 0) | np.eye(n, dtype=bool)).astype(float)
    while True:
        R2 = ((R @ R) > 0).astype(float)
        if np.array_equal(R2, R):
            break
        R = R2
    mutual = (R > 0) & (R.T > 0)
    seen = np.zeros(n, dtype=bool)
    comps = []
    for i in range(n):
        if not seen[i]:
            members = np.flatnonzero(mutual[i])
            seen[members] = True
            comps.append(members)
    return comps


def _shift_extrapolate(B, tol, max_iter):
    """Radius from ``B + eps`` for eps in :data:`SHIFTS`, extrapolated to 0."""
    estimates = []
    total = 0
    for eps in SHIFTS:
        lo, hi, x, its, status = _perron_positive(B + eps, tol, max_iter, detect_boundary=False)
        total += its
        if status != "converged":
            raise ConvergenceError(
                f"shifted power iteration did not converge (eps={eps:g})",
                last=x, gap=hi - lo, iterations=total,
            )
        estimates.append(0.5 * (lo + hi))
    (e1, r1), (e2, r2) = zip(SHIFTS, estimates)
    rho = (e1 * r2 - e2 * r1) / (e1 - e2)
    return min(max(rho, 0.0), r2), x, total


def _irreducible_radius(B, tol, max_iter):
    lo, hi, x, its, status = _perron_positive(B, tol, max_iter, detect_boundary=False)
    if status == "converged":
        return 0.5 * (lo + hi), x, its
    rho, x, more = _shift_extrapolate(B, tol, max_iter)
    return rho, x, its + more


def matrix_spectral_radius(X, tol: float = 1e-10, max_iter: int = 100_000):
    """Spectral radius of a nonnegative matrix by power iteration.

    Returns ``(rho, vector, iterations)``. The matrix is split into its
    strongly connected components; the radius is the largest radius of an
    irreducible diagonal block, each found by power iteration on
    ``B + I`` stopped by a Collatz-Wielandt bracket. A block that stalls
    falls back to perturbing with ``eps * max(X) * ones`` for eps in
    (1e-6, 1e-8) and extrapolating linearly to ``eps = 0``.

    For reducible matrices ``vector`` is the Perron vector of the dominant
    block padded with zeros, so ``X v >= rho v``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(X < 0):
        raise ValueError("matrix must be nonnegative")
    scale = float(np.max(X)) if X.size else 0.0
    n = X.shape[0]
    if scale == 0.0:
        return 0.0, np.full(n, 1.0 / n), 0
    B = X / scale
    comps = strong_components(B)
    if len(comps) == 1:
        rho, x, its = _irreducible_radius(B, tol, max_iter)
        return rho * scale, x, its
    best, vec, total = -1.0, None, 0
    for c in comps:
        if c.size == 1:
            rho, x, its = B[c[0], c[0]], np.ones(1), 0
        else:
            rho, x, its = _irreducible_radius(B[np.ix_(c, c)], tol, max_iter)
        total += its
        if rho > best:
            best = rho
            vec = np.zeros(n)
            vec[c] = x / x.sum()
    return best * scale, vec, total


def _warm_started(A: AsymptoticMapping, x) -> AsymptoticMapping:
    """Numeric form whose schedule starts two steps before the limit settled at ``x``.

    ``T(h x)/h`` is nonincreasing in ``h``, so skipping the small scales
    loses no accuracy; it only saves evaluations in repeated use.
    """
    sched = A.form.schedule
    steps = numeric_limit(A.source, x, sched).steps
    skip = max(steps - 2, 0)
    if skip == 0:
        return A
    warm = dataclasses.replace(sched, h0=sched.h0 * sched.growth ** skip, max_steps=sched.max_steps - skip)
    return AsymptoticMapping(A.source, NumericForm(warm))


def spectral_radius(
    A: AsymptoticMapping, norm: MonotoneNorm = MonotoneNorm.linf(), cfg: SolverConfig = SolverConfig()
) -> SpectralRadius:
    """Spectral radius of an asymptotic (GI) mapping.

    Linear forms go through :func:`matrix_spectral_radius`. Numeric forms
    run the normalized iteration on the shifted map ``A + c I``; a strictly positive
    limit ``x*`` certifies ``rho = ||A(x*)||``. A limit on the boundary is
    still an eigenvector, so its eigenvalue is returned as a lower bound
    with ``status="needs_budget_method"``.
    """
    if isinstance(A.form, LinearForm):
        rho, vec, its = matrix_spectral_radius(A.form.matrix, cfg.tol, cfg.max_iter)
        return SpectralRadius(rho, "exact", rho, rho, its, vec)

    # Numeric evaluations are only accurate to the limit tolerance.
    sched_tol = A.form.schedule.tol
    loose = SolverConfig(
        tol_x=max(cfg.tol_x, 10 * sched_tol),
        tol_lambda=max(cfg.tol_lambda, 10 * sched_tol),
        max_iter=cfg.max_iter,
        x0=cfg.x0,
    )
    ones = np.ones(A.dim) / norm(np.ones(A.dim))
    A = _warm_started(A, ones)
    G = as_gi_mapping(A)
    c = norm(G(ones))
    if c == 0.0:
        # Monotone and homogeneous, so G vanishes on the whole orthant.
        return SpectralRadius(0.0, "exact", 0.0, 0.0, 0, ones)
    # Iterating on G + c*I keeps the eigenvectors, shifts every eigenvalue
    # by c, and damps the oscillation of periodic (e.g. zero-diagonal) maps.
    S = InterferenceMapping(A.dim, MappingClass.GI, lambda x: G(x) + c * x)
    sol = solve_conditional_eigenproblem(S, norm, loose)
    if not sol.converged:
        raise ConvergenceError(
            f"spectral radius iteration did not converge in {sol.iterations} iterations",
            last=sol.x_star, iterations=sol.iterations,
        )
    sol.lambda_star = norm(G(sol.x_star))
    x = sol.x_star
    if sol.lambda_star == 0.0 and np.all(x > 0):
        return SpectralRadius(0.0, "exact", 0.0, 0.0, sol.iterations, x)
    if np.min(x) > BOUNDARY_RTOL * np.max(x):
        lo, hi = _cw_bounds(G(x), x)
        return SpectralRadius(sol.lambda_star, "exact", min(lo, sol.lambda_star),
                              max(hi, sol.lambda_star), sol.iterations, x)
    return SpectralRadius(sol.lambda_star, "needs_budget_method", sol.lambda_star, np.inf,
                          sol.iterations, x)


def spectral_radius_upper_via_budget(
    T: InterferenceMapping,
    budgets: Sequence[float],
    norm_a: MonotoneNorm,
    cfg: SolverConfig = SolverConfig(),
) -> np.ndarray:
    """Upper bounds ``lambda_pbar = 1/U(pbar)`` on ``rho(T_inf)``.

    For each budget, solves the conditional eigenvalue problem of ``T``
    under ``norm_a / pbar``. The bounds are nonincreasing in the budget and
    converge to ``rho(T_inf)``.
    """
    require_si(T)
    budgets = np.asarray(budgets, dtype=float)
    if budgets.ndim != 1 or budgets.size == 0 or np.any(budgets <= 0):
        raise ValueError("budgets must be a nonempty sequence of positive reals")
    if np.any(np.diff(budgets) <= 0):
        raise ValueError("budgets must be strictly increasing")
    out = np.empty(budgets.size)
    for k, pbar in enumerate(budgets):
        sol = solve_conditional_eigenproblem(T, norm_a.scaled(1.0 / pbar), cfg)
        if not sol.converged:
            raise ConvergenceError(f"eigenproblem at budget {pbar:g} did not converge",
                                   last=sol.x_star, iterations=sol.iterations)
        out[k] = sol.lambda_star
    rises = np.diff(out) > cfg.tol * out[1:]
    if np.any(rises):
        warnings.warn("budget-method bounds are not nonincreasing; tolerances may be too loose",
                      RuntimeWarning, stacklevel=2)
    return out


def default_budgets(T: InterferenceMapping, norm: MonotoneNorm, decades: int = 10) -> np.ndarray:
    """Budgets ``||T(0)|| * 10**k`` for ``k = 1..decades``."""
    base = norm(T(np.zeros(T.dim)))
    return base * 10.0 ** np.arange(1, decades + 1)


def refine_with_budgets(
    T: InterferenceMapping,
    sr: SpectralRadius,
    norm: MonotoneNorm,
    cfg: SolverConfig = SolverConfig(),
    budgets: Optional[Sequence[float]] = None,
) -> SpectralRadius:
    """Tighten the upper end of a boundary result with the budget method.

    The returned value is the smallest budget bound; the lower end stays
    the eigenvalue found on the boundary.
    """
    if sr.status == "exact":
        return sr
    if budgets is None:
        budgets = default_budgets(T, norm)
    bounds = spectral_radius_upper_via_budget(T, budgets, norm, cfg)
    upper = float(min(sr.upper, bounds[-1]))
    return SpectralRadius(upper, "bracketed", sr.lower, upper, sr.iterations, sr.vector)
