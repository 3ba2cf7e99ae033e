"""Load-coupled downlink interference model.

A resource block assigned by base station ``i`` to user ``j`` achieves

    omega_ij(x, p) = B log2(1 + p_i g_ij / (sum_{k != i} x_k p_k g_kj + sigma2))

where ``x`` is the load vector and ``p`` the power per resource block.
The load mapping, its rate-capped variant and the reverse (power) mapping
are all SI mappings built on this rate.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InterferenceMapping, MappingClass, MonotoneNorm, as_nonneg
from .maxmin import CanonicalProblem, solve_canonical, sweep
from .spectral import SolverConfig

LN2 = math.log(2.0)
ZERO_POWER = 1e-300
_SERIES_CUTOFF = 1e-8


class ScenarioError(ValueError):
    """A scenario violates one of the model's invariants."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """Data of the load-coupled model (all quantities in linear units).

    Parameters
    ----------
    gains : (M, N) array
        Pathloss gains ``g_ij`` between base station ``i`` and user ``j``.
    assignment : (N,) int array
        Serving base station of each user; every station serves a user.
    demands : (N,) array
        Requested rate of each user in bit/s.
    resource_blocks : int
        Resource blocks per base station ``K``.
    bandwidth : float
        Bandwidth of a resource block ``B`` in Hz.
    noise : float
        Noise power per resource block in W. Zero only for noise-free
        (asymptotic) power mappings.
    power, load : (M,) arrays, optional
        Power per resource block (for the load mappings) and target load
        (for the power mapping).
    rate_cap : float, optional
        Maximum rate per resource block in bit/s (capped load mapping).
    """

    gains: np.ndarray
    assignment: np.ndarray
    demands: np.ndarray
    resource_blocks: int
    bandwidth: float
    noise: float
    power: Optional[np.ndarray] = None
    load: Optional[np.ndarray] = None
    rate_cap: Optional[float] = None

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.gains, dtype=float))
        M, N = G.shape
        if M < 1 or N < 1:
            raise ScenarioError("need at least one base station and one user")
        if not np.all(np.isfinite(G)) or np.any(G <= 0):
            raise ScenarioError("gains must be positive and finite")
        a = np.asarray(self.assignment)
        if a.shape != (N,) or not np.issubdtype(a.dtype, np.integer):
            raise ScenarioError(f"assignment must be {N} integer base-station indices")
        if np.any(a < 0) or np.any(a >= M):
            raise ScenarioError(f"assignment index out of range [0, {M})")
        empty = np.setdiff1d(np.arange(M), a)
        if empty.size:
            raise ScenarioError(f"base stations {empty.tolist()} serve no user")
        d = np.asarray(self.demands, dtype=float)
        if d.shape != (N,) or np.any(~np.isfinite(d)) or np.any(d <= 0):
            raise ScenarioError(f"demands must be {N} positive rates")
        if int(self.resource_blocks) != self.resource_blocks or self.resource_blocks < 1:
            raise ScenarioError("resource_blocks must be a positive integer")
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ScenarioError("bandwidth must be positive")
        if not (np.isfinite(self.noise) and self.noise >= 0):
            raise ScenarioError("noise must be nonnegative")
        for name in ("power", "load"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (M,) or np.any(~np.isfinite(v)) or np.any(v <= 0):
                    raise ScenarioError(f"{name} must be {M} positive values")
                object.__setattr__(self, name, _frozen(v))
        if self.rate_cap is not None and not (self.rate_cap > 0):
            raise ScenarioError("rate_cap must be positive")
        object.__setattr__(self, "gains", _frozen(G))
        object.__setattr__(self, "assignment", _frozen(a, dtype=np.int64))
        object.__setattr__(self, "demands", _frozen(d))
        object.__setattr__(self, "resource_blocks", int(self.resource_blocks))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))
        object.__setattr__(self, "noise", float(self.noise))
        if self.rate_cap is not None:
            object.__setattr__(self, "rate_cap", float(self.rate_cap))

    @property
    def num_bs(self) -> int:
        return self.gains.shape[0]

    @property
    def num_users(self) -> int:
        return self.gains.shape[1]

    def users_of(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == i)

    def replace(self, **changes) -> "NetworkScenario":
        return dataclasses.replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, NetworkScenario):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True

    __hash__ = None


def noise_from_psd(psd_dbm_hz: float, bandwidth: float) -> float:
    """Noise power per resource block (W) from a PSD in dBm/Hz."""
    return 10.0 ** ((psd_dbm_hz - 30.0) / 10.0) * bandwidth


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


# ---------------------------------------------------------------------------
# Rates and mappings
# ---------------------------------------------------------------------------


def _own_gain(s):
    return s.gains[s.assignment, np.arange(s.num_users)]


def _interference(s, x, p):
    """``sum_{k != own(j)} x_k p_k g_kj`` for every user ``j``."""
    Gx = s.gains * (x * p)[:, None]
    # Mask the serving station rather than subtracting it from the total,
    # which would cancel catastrophically when it dominates.
    Gx[s.assignment, np.arange(s.num_users)] = 0.0
    return Gx.sum(axis=0)


def _inv_log2_1p(r):
    """``1 / log2(1 + r)``, accurate for tiny ``r`` and ``inf`` at ``r = 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        series = LN2 * (1.0 / r + 0.5 - r / 12.0)
        exact = LN2 / np.log1p(r)
    return np.where(r < _SERIES_CUTOFF, series, exact)


def _user_rates(s, x, p):
    S = p[s.assignment] * _own_gain(s)
    with np.errstate(divide="ignore"):
        sinr = S / (_interference(s, x, p) + s.noise)
    return s.bandwidth * np.log1p(sinr) / LN2


def rate_per_block(s: NetworkScenario, i: int, j: int, x, p=None) -> float:
    """Achievable rate of one resource block of station ``i`` serving user ``j``."""
    if s.assignment[j] != i:
        raise ValueError(f"user {j} is served by base station {s.assignment[j]}, not {i}")
    p = _require(s, "power") if p is None else as_nonneg(p, s.num_bs)
    x = as_nonneg(x, s.num_bs)
    interference = sum(x[k] * p[k] * s.gains[k, j] for k in range(s.num_bs) if k != i)
    return s.bandwidth * math.log2(1.0 + p[i] * s.gains[i, j] / (interference + s.noise))


def _require(s, name):
    v = getattr(s, name)
    if v is None:
        raise ScenarioError(f"scenario has no {name} vector")
    return v


def coupling_matrix(s: NetworkScenario) -> np.ndarray:
    """``[M]_ik = sum_{j in N_i} ln2 d_j g_kj / (K B g_ij)`` with zero diagonal."""
    w = LN2 * s.demands / (s.resource_blocks * s.bandwidth * _own_gain(s))
    member = np.zeros((s.num_bs, s.num_users))
    member[s.assignment, np.arange(s.num_users)] = 1.0
    Mat = member @ (s.gains * w).T
    np.fill_diagonal(Mat, 0.0)
    return Mat


def _per_station(s, per_user):
    return np.bincount(s.assignment, weights=per_user, minlength=s.num_bs)


def load_mapping(s: NetworkScenario) -> InterferenceMapping:
    """Load mapping ``t_i(x) = sum_{j in N_i} d_j / (K omega_ij(x, p))``.

    Positive concave, hence SI. Its asymptotic mapping is the linear map
    ``diag(p)^-1 M diag(p)`` with ``M`` the coupling matrix.
    """
    p = _require(s, "power")
    if s.noise <= 0:
        raise ScenarioError("load mapping needs positive noise power")
    S = p[s.assignment] * _own_gain(s)
    coef = s.demands / (s.resource_blocks * s.bandwidth)

    def func(x):
        with np.errstate(divide="ignore"):
            r = S / (_interference(s, x, p) + s.noise)
        return _per_station(s, coef * _inv_log2_1p(r))

    return InterferenceMapping(
        s.num_bs, MappingClass.LOAD_MODEL, func,
        asymptotic_matrix=(coupling_matrix(s) * p[None, :]) / p[:, None],
        name="load",
    )


def capped_load_mapping(s: NetworkScenario) -> InterferenceMapping:
    """Load mapping with per-block rate cap: ``sum_j max(d_j/(K omega_ij), d_j/u)``.

    Not concave, but SI; same asymptotic mapping as :func:`load_mapping`.
    """
    if s.rate_cap is None:
        raise ScenarioError("capped load mapping needs rate_cap")
    base = load_mapping(s)
    p = s.power
    S = p[s.assignment] * _own_gain(s)
    coef = s.demands / (s.resource_blocks * s.bandwidth)
    floor = s.demands / s.rate_cap

    def func(x):
        with np.errstate(divide="ignore"):
            r = S / (_interference(s, x, p) + s.noise)
        return _per_station(s, np.maximum(coef * _inv_log2_1p(r), floor))

    return InterferenceMapping(
        s.num_bs, MappingClass.CAPPED_LOAD_MODEL, func,
        asymptotic_matrix=base.asymptotic_matrix, name="capped_load",
    )


def power_mapping(s: NetworkScenario, load=None) -> InterferenceMapping:
    """Reverse mapping ``H`` whose fixed point is the power inducing ``load``.

    For ``p_i > 0``: ``h_i(p) = (p_i/x_i) sum_{j in N_i} d_j / (K omega_ij(x, p))``;
    for ``p_i = 0`` (below 1e-300):
    ``h_i(p) = sum_{j in N_i} d_j ln2 (I_j + sigma2) / (K B g_ij x_i)``.
    With zero noise the mapping is homogeneous and is tagged GI.
    """
    x = as_nonneg(_require(s, "load") if load is None else load, s.num_bs)
    if np.any(x <= 0):
        raise ScenarioError("target load must be strictly positive")
    g_own = _own_gain(s)
    own = s.assignment
    coef = s.demands / (s.resource_blocks * s.bandwidth)

    def func(p):
        I = _interference(s, x, p) + s.noise
        p_own = p[own]
        scale = coef * LN2 / x[own]
        out = np.empty(s.num_users)
        zero = p_own < ZERO_POWER
        with np.errstate(divide="ignore", invalid="ignore"):
            r = p_own * g_own / I
        # Small SINR: p_i / log(1 + r) = (I + sigma2) / g_ij + p_i (1/2 - r/12) + O(r^2).
        small = ~zero & (r < _SERIES_CUTOFF)
        big = ~zero & ~small
        out[zero] = scale[zero] * I[zero] / g_own[zero]
        out[small] = scale[small] * (I[small] / g_own[small] + p_own[small] * (0.5 - r[small] / 12.0))
        out[big] = scale[big] * p_own[big] / np.log1p(r[big])
        return _per_station(s, out)

    tag = MappingClass.POWER_MODEL if s.noise > 0 else MappingClass.GI
    return InterferenceMapping(s.num_bs, tag, func, name="power", meta={"noise": s.noise})


def noise_free_power_mapping(s: NetworkScenario, load=None) -> InterferenceMapping:
    """``H`` with ``sigma2 = 0``: the asymptotic mapping of :func:`power_mapping`."""
    return power_mapping(s.replace(noise=0.0), load)


# ---------------------------------------------------------------------------
# Max-min rate
# ---------------------------------------------------------------------------


@dataclass
class MaxMinRate:
    power: np.ndarray
    rate: float
    lam: float
    residual: float
    iterations: int


def maxmin_problem(s: NetworkScenario, norm: MonotoneNorm = MonotoneNorm.linf()) -> CanonicalProblem:
    """Max-min common-rate problem at full load (``x = 1``) as a canonical problem."""
    if s.noise <= 0:
        raise ScenarioError("max-min rate problem needs positive noise power")
    H = power_mapping(s, np.ones(s.num_bs))
    return CanonicalProblem(H, norm, norm)


def maxmin_rate(
    s: NetworkScenario,
    budget: float,
    cfg: SolverConfig = SolverConfig(),
    norm: MonotoneNorm = MonotoneNorm.linf(),
) -> MaxMinRate:
    """Powers and common rate maximizing the minimum user rate at all loads one."""
    sol = solve_canonical(maxmin_problem(s, norm), budget, cfg)
    return MaxMinRate(sol.power, sol.utility, sol.lam, sol.residual, sol.iterations)


def power_asymptotic_radius(
    s: NetworkScenario, norm: MonotoneNorm = MonotoneNorm.linf(), cfg: SolverConfig = SolverConfig()
) -> float:
    """``rho(H_inf)`` at full load, from the noise-free power mapping."""
    from .asymptotic import derive_asymptotic
    from .spectral import refine_with_budgets, spectral_radius

    H0 = noise_free_power_mapping(s, np.ones(s.num_bs))
    sr = spectral_radius(derive_asymptotic(H0), norm, cfg)
    if sr.status == "needs_budget_method":
        sr = refine_with_budgets(maxmin_problem(s, norm).T, sr, norm, cfg)
    return float(sr.value)


def rate_sweep(
    s: NetworkScenario,
    budgets,
    cfg: SolverConfig = SolverConfig(),
    norm: MonotoneNorm = MonotoneNorm.linf(),
    jobs: int = 1,
):
    """Budget sweep of the max-min rate problem.

    Returns ``(rows, rho_inf, problem)``.
    """
    prob = maxmin_problem(s, norm)
    rho = power_asymptotic_radius(s, norm, cfg)
    return sweep(prob, budgets, cfg, rho_inf=rho, jobs=jobs), rho, prob


# ---------------------------------------------------------------------------
# Random scenarios
# ---------------------------------------------------------------------------


def random_scenario(
    num_bs: int,
    users_per_bs: int = 4,
    seed: int = 0,
    demand: float = 1e6,
    spacing: float = 200.0,
    pathloss_exponent: float = 3.5,
    reference_gain: float = 1e-3,
    resource_blocks: int = 50,
    bandwidth: float = 180e3,
    noise_psd_dbm_hz: float = -154.0,
    power: Optional[float] = 1.0,
    rate_cap: Optional[float] = None,
) -> NetworkScenario:
    """Seeded scenario: stations on a square grid, users uniform in its hull.

    One user per station is dropped within ``spacing/5`` of it, so every
    station serves someone; users attach to the strongest station. Gains
    are ``reference_gain * max(d, 10 m) ** -pathloss_exponent`` and demands
    are ``demand`` times a uniform factor in ``[0.5, 1.5]``.
    """
    rng = np.random.default_rng(seed)
    cols = int(math.ceil(math.sqrt(num_bs)))
    bs = np.array([(spacing * (k % cols), spacing * (k // cols)) for k in range(num_bs)], dtype=float)
    lo = bs.min(axis=0) - spacing / 2
    hi = bs.max(axis=0) + spacing / 2
    n_users = num_bs * users_per_bs
    users = rng.uniform(lo, hi, size=(n_users, 2))
    radius = rng.uniform(0.0, spacing / 5, size=num_bs)
    angle = rng.uniform(0.0, 2 * math.pi, size=num_bs)
    users[:num_bs] = bs + np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    dist = np.linalg.norm(bs[:, None, :] - users[None, :, :], axis=2)
    gains = reference_gain * np.maximum(dist, 10.0) ** (-pathloss_exponent)
    assignment = np.argmax(gains, axis=0)
    demands = demand * rng.uniform(0.5, 1.5, size=n_users)
    return NetworkScenario(
        gains=gains,
        assignment=assignment,
        demands=demands,
        resource_blocks=resource_blocks,
        bandwidth=bandwidth,
        noise=noise_from_psd(noise_psd_dbm_hz, bandwidth),
        power=None if power is None else np.full(num_bs, power),
        load=np.ones(num_bs),
        rate_cap=rate_cap,
    )
