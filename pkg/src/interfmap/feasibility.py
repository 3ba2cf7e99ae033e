"""Existence, computation and norm-constrained feasibility of fixed points."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .asymptotic import LimitSchedule, derive_asymptotic
from .core import ConvergenceError, InterferenceMapping, MonotoneNorm, as_nonneg, require_si
from .spectral import (
    EigenSolution,
    SolverConfig,
    SpectralRadius,
    refine_with_budgets,
    solve_conditional_eigenproblem,
    spectral_radius,
)

TOL_BOUNDARY = 1e-6
DIVERGENCE_CEILING = 1e12
_ROUNDOFF = 1e-14


@dataclass
class FeasibilityVerdict:
    """Result of :func:`has_fixed_point`.

    ``feasible`` is ``None`` when the spectral radius is within the
    boundary tolerance of one (or its bracket straddles one).
    """

    feasible: Optional[bool]
    rho: float
    spectral: SpectralRadius

    @property
    def boundary_inconclusive(self) -> bool:
        return self.feasible is None


def has_fixed_point(
    T: InterferenceMapping,
    schedule: LimitSchedule = LimitSchedule(),
    norm: MonotoneNorm = MonotoneNorm.linf(),
    cfg: SolverConfig = SolverConfig(),
    tol_boundary: float = TOL_BOUNDARY,
    budgets: Optional[Sequence[float]] = None,
) -> FeasibilityVerdict:
    """Decide whether a continuous SI mapping has a fixed point.

    A fixed point exists iff ``rho(T_inf) < 1``. When the numeric route
    cannot certify ``rho`` (eigenvector on the boundary), the budget method
    supplies an upper bound and the boundary eigenvalue a lower bound; the
    verdict is drawn from that bracket.
    """
    require_si(T)
    sr = spectral_radius(derive_asymptotic(T, schedule), norm, cfg)
    if sr.status == "needs_budget_method":
        sr = refine_with_budgets(T, sr, norm, cfg, budgets)
    if sr.status == "exact":
        lo = hi = sr.value
    else:
        lo, hi = sr.lower, sr.upper
    if hi < 1.0 - tol_boundary:
        verdict = True
    elif lo > 1.0 + tol_boundary:
        verdict = False
    else:
        verdict = None
    return FeasibilityVerdict(verdict, float(sr.value), sr)


@dataclass
class FixedPointResult:
    """Outcome of the plain fixed-point iteration.

    ``exists`` is ``True`` on convergence, ``False`` when the iterates
    crossed the divergence ceiling and ``None`` when neither happened
    within the iteration budget.
    """

    exists: Optional[bool]
    point: Optional[np.ndarray]
    iterations: int
    monotone_direction: str
    residual: float
    status: str


def compute_fixed_point(
    T: InterferenceMapping,
    cfg: SolverConfig = SolverConfig(),
    x0=None,
    ceiling: float = DIVERGENCE_CEILING,
) -> FixedPointResult:
    """Iterate ``x <- T(x)`` from ``x0`` (default: the origin).

    Stops when the step ``||T(x) - x||_inf`` is below
    ``tol_x * (1 + ||x||_inf)`` and the geometric error estimate
    ``step * q / (1 - q)`` (``q`` the observed step ratio) is too. From a
    start with ``T(x0) >= x0`` the iterates must be nondecreasing; a
    decrease beyond rounding raises ``ValueError`` since the mapping is
    then not monotone.
    """
    require_si(T)
    x = np.zeros(T.dim) if x0 is None else as_nonneg(x0, T.dim).copy()
    tx = T(x)
    expect_up = bool(np.all(tx >= x))
    expect_down = bool(np.all(tx <= x))
    went_up = went_down = False
    step_prev = None
    step = np.inf
    for it in range(1, cfg.max_iter + 1):
        delta = tx - x
        slack = _ROUNDOFF * (1.0 + np.abs(x))
        if np.any(delta < -slack):
            went_down = True
            if expect_up:
                raise ValueError(
                    f"iterate decreased at step {it} from a sub-fixed start; mapping is not monotone"
                )
        if np.any(delta > slack):
            went_up = True
            if expect_down:
                raise ValueError(
                    f"iterate increased at step {it} from a super-fixed start; mapping is not monotone"
                )
        step = float(np.max(np.abs(delta)))
        x = tx
        scale = 1.0 + float(np.max(x))
        if not np.isfinite(scale) or scale > ceiling:
            return FixedPointResult(False, None, it, _direction(went_up, went_down), np.inf, "diverged")
        tx = T(x)
        if step <= cfg.tol_x * scale:
            if step <= _ROUNDOFF * scale:
                break
            if step_prev is not None and step_prev > 0:
                q = step / step_prev
                if q < 1.0 and step * q / (1.0 - q) <= cfg.tol_x * scale:
                    break
        step_prev = step
    else:
        return FixedPointResult(None, x, cfg.max_iter, _direction(went_up, went_down),
                                float(np.max(np.abs(tx - x))), "inconclusive")
    residual = float(np.max(np.abs(tx - x)))
    return FixedPointResult(True, x, it, _direction(went_up, went_down), residual, "converged")


def _direction(up, down):
    if up and down:
        return "mixed"
    if down:
        return "nonincreasing"
    return "nondecreasing"


@dataclass
class ConstrainedVerdict:
    feasible_within_ball: bool
    lambda_star: float
    solution: EigenSolution

    @property
    def verdict(self) -> str:
        return "feasible_within_ball" if self.feasible_within_ball else "infeasible_within_ball"


def constrained_feasibility(
    T: InterferenceMapping, norm: MonotoneNorm, cfg: SolverConfig = SolverConfig()
) -> ConstrainedVerdict:
    """Whether ``T`` has a fixed point ``x'`` with ``norm(x') <= 1``.

    Equivalent to ``lambda* <= 1`` for the conditional eigenvalue problem
    of ``T`` under ``norm``.
    """
    require_si(T)
    sol = solve_conditional_eigenproblem(T, norm, cfg)
    if not sol.converged:
        raise ConvergenceError("conditional eigenproblem did not converge",
                               last=sol.x_star, iterations=sol.iterations)
    return ConstrainedVerdict(sol.lambda_star <= 1.0, sol.lambda_star, sol)
