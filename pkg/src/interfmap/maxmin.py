"""Max-min utility problems: utility, budget and efficiency functions.

For an SI mapping ``T`` and budget ``pbar`` the problem

    maximize u  s.t.  p = u T(p),  ||p||_a <= pbar

is solved by the conditional eigenproblem of ``T`` under ``||.||_a / pbar``:
``P(pbar) = x*`` and ``U(pbar) = 1 / lambda*``.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .asymptotic import LimitSchedule, derive_asymptotic
from .core import (
    ConvergenceError,
    InterferenceMapping,
    MonotoneNorm,
    norm_equivalence_constant,
    require_si,
)
from .spectral import SolverConfig, refine_with_budgets, solve_conditional_eigenproblem, spectral_radius

log = logging.getLogger(__name__)

MONOTONE_RTOL = 1e-10
TOL_BOUNDARY = 1e-6


@dataclass
class CanonicalProblem:
    """Canonical max-min problem data.

    ``alpha`` must satisfy ``||x||_a <= alpha ||x||_b``; when omitted it is
    the exact (smallest) constant for the two norms. A user-supplied
    ``alpha`` is checked on 1000 random vectors and the basis vectors.
    """

    T: InterferenceMapping
    norm_a: MonotoneNorm = field(default_factory=MonotoneNorm.l1)
    norm_b: Optional[MonotoneNorm] = None
    alpha: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        require_si(self.T)
        if self.norm_b is None:
            self.norm_b = self.norm_a
        exact = norm_equivalence_constant(self.norm_a, self.norm_b, self.T.dim)
        if self.alpha is None:
            self.alpha = exact
        else:
            if not self.alpha > 0:
                raise ValueError("alpha must be positive")
            rng = np.random.default_rng(self.seed)
            probes = np.vstack([np.eye(self.T.dim), rng.exponential(size=(1000, self.T.dim))])
            for x in probes:
                if self.norm_a(x) > self.alpha * self.norm_b(x) * (1 + 1e-12):
                    raise ValueError(f"alpha={self.alpha:g} violates ||x||_a <= alpha ||x||_b at x={x}")

    @property
    def noise_level(self) -> np.ndarray:
        """``T(0)``, the interference-free demand."""
        return self.T(np.zeros(self.T.dim))


@dataclass
class CanonicalSolution:
    power: np.ndarray
    utility: float
    lam: float
    iterations: int
    residual: float


def solve_canonical(prob: CanonicalProblem, budget: float, cfg: SolverConfig = SolverConfig()) -> CanonicalSolution:
    """Solve the max-min problem for one budget.

    Returns the optimal power ``P(budget)`` and utility ``U(budget)``. The
    budget identity ``||P||_a = budget`` and the fixed-point identity
    ``P = U T(P)`` are checked against the solver tolerance.
    """
    if not budget > 0:
        raise ValueError("budget must be positive")
    sol = solve_conditional_eigenproblem(prob.T, prob.norm_a.scaled(1.0 / budget), cfg)
    if not sol.converged:
        raise ConvergenceError(f"max-min solve at budget {budget:g} did not converge",
                               last=sol.x_star, iterations=sol.iterations)
    p = sol.x_star
    u = 1.0 / sol.lambda_star
    used = prob.norm_a(p)
    if abs(used - budget) > 1e3 * cfg.tol * budget:
        raise ConvergenceError(f"budget identity violated: ||P||_a={used:.12g}, budget={budget:.12g}")
    residual = float(np.max(np.abs(p - u * prob.T(p))))
    return CanonicalSolution(p, u, sol.lambda_star, sol.iterations, residual)


def asymptotic_radius(
    prob: CanonicalProblem,
    cfg: SolverConfig = SolverConfig(),
    schedule: LimitSchedule = LimitSchedule(),
) -> float:
    """``rho(T_inf)`` for the problem's mapping (budget-bracketed if needed)."""
    sr = spectral_radius(derive_asymptotic(prob.T, schedule), prob.norm_a, cfg)
    if sr.status == "needs_budget_method":
        sr = refine_with_budgets(prob.T, sr, prob.norm_a, cfg)
    return float(sr.value)


def _check_rho(rho_inf):
    if not rho_inf > 0:
        raise ValueError("bound undefined for rho_inf <= 0 (utility is unbounded)")


def utility_bound(prob: CanonicalProblem, budget: float, rho_inf: float) -> float:
    """``budget / ||T(0)||_a`` below the transition point, ``1/rho_inf`` above."""
    _check_rho(rho_inf)
    t0 = prob.norm_a(prob.noise_level)
    if budget <= t0 / rho_inf:
        return budget / t0
    return 1.0 / rho_inf


def efficiency_bound(prob: CanonicalProblem, budget: float, rho_inf: float) -> float:
    """``min(1/||T(0)||_b, alpha / (rho_inf * budget))``."""
    _check_rho(rho_inf)
    return min(1.0 / prob.norm_b(prob.noise_level), prob.alpha / (rho_inf * budget))


def transition_point(prob: CanonicalProblem, rho_inf: float, tol_boundary: float = TOL_BOUNDARY) -> Optional[float]:
    """``||T(0)||_a / rho_inf``, or ``None`` when ``rho_inf`` is (numerically) zero."""
    if rho_inf <= tol_boundary:
        log.info("transition point undefined: rho_inf=%g (utility grows without bound)", rho_inf)
        return None
    return prob.norm_a(prob.noise_level) / rho_inf


@dataclass
class SweepRow:
    budget: float
    utility: float = float("nan")
    power: Optional[np.ndarray] = None
    efficiency: float = float("nan")
    utility_bound: float = float("nan")
    efficiency_bound: float = float("nan")
    lam: float = float("nan")
    iterations: int = 0
    residual: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _sweep_row(prob, budget, cfg, rho_inf):
    row = SweepRow(budget)
    try:
        sol = solve_canonical(prob, budget, cfg)
    except (ConvergenceError, FloatingPointError, ValueError) as exc:
        row.error = str(exc)
        return row
    row.utility = sol.utility
    row.power = sol.power
    row.efficiency = sol.utility / prob.norm_b(sol.power)
    row.lam = sol.lam
    row.iterations = sol.iterations
    row.residual = sol.residual
    if rho_inf is not None and rho_inf > 0:
        row.utility_bound = utility_bound(prob, budget, rho_inf)
        row.efficiency_bound = efficiency_bound(prob, budget, rho_inf)
    else:
        row.utility_bound = row.efficiency_bound = float("inf")
    return row


def sweep(
    prob: CanonicalProblem,
    budgets: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
    rho_inf: Optional[float] = None,
    jobs: int = 1,
) -> list:
    """Solve the problem over increasing budgets, one :class:`SweepRow` each.

    ``rho_inf`` defaults to :func:`asymptotic_radius`. Rows may be solved
    concurrently (``jobs > 1``) and are returned in budget order. Solver
    failures are recorded on the row. Violations of the expected
    monotonicity (utility strictly increasing, efficiency nonincreasing)
    are reported as warnings.
    """
    budgets = np.asarray(budgets, dtype=float)
    if budgets.ndim != 1 or budgets.size == 0 or np.any(budgets <= 0):
        raise ValueError("budgets must be a nonempty sequence of positive reals")
    if np.any(np.diff(budgets) <= 0):
        raise ValueError("budgets must be strictly increasing")
    if rho_inf is None:
        rho_inf = asymptotic_radius(prob, cfg)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda b: _sweep_row(prob, b, cfg, rho_inf), budgets))
    else:
        rows = [_sweep_row(prob, b, cfg, rho_inf) for b in budgets]
    for prev, cur in zip(rows, rows[1:]):
        if not (prev.ok and cur.ok):
            continue
        if cur.utility <= prev.utility * (1 - MONOTONE_RTOL):
            warnings.warn(f"utility not strictly increasing at budget {cur.budget:g}", RuntimeWarning, stacklevel=2)
        if cur.efficiency > prev.efficiency * (1 + MONOTONE_RTOL):
            warnings.warn(f"efficiency increased at budget {cur.budget:g}", RuntimeWarning, stacklevel=2)
    return rows
