"""Asymptotic mappings ``T_inf(x) = lim_{h->inf} T(h x) / h`` of WSI mappings.

Mappings with a known closed form (affine, load models, linear GI
mappings, families that carry ``asymptotic_matrix``) get a
:class:`LinearForm`; everything else is evaluated numerically along a
geometric schedule ``h_n = h0 * growth**n``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import ConvergenceError, DimensionError, InterferenceMapping, MappingClass, as_nonneg

log = logging.getLogger(__name__)


class NotWeaklyStandardError(ValueError):
    """The numeric limit increased, which a WSI mapping cannot do."""


@dataclass(frozen=True)
class LimitSchedule:
    h0: float = 1.0
    growth: float = 10.0
    tol: float = 1e-9
    max_steps: int = 40

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        if not self.growth > 1:
            raise ValueError("growth must exceed 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def scales(self):
        return self.h0 * self.growth ** np.arange(self.max_steps + 1, dtype=float)


@dataclass(frozen=True)
class LinearForm:
    matrix: np.ndarray


@dataclass(frozen=True)
class NumericForm:
    schedule: LimitSchedule


@dataclass
class LimitResult:
    value: np.ndarray
    steps: int
    gap: float
    converged: bool
    # False when T(h x) overflowed before the limit settled.
    confident: bool = True


@dataclass(frozen=True, eq=False)
class AsymptoticMapping:
    """The asymptotic mapping of ``source``; GI by construction."""

    source: InterferenceMapping
    form: Union[LinearForm, NumericForm]

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def class_tag(self) -> MappingClass:
        return MappingClass.GI

    @property
    def is_linear(self) -> bool:
        return isinstance(self.form, LinearForm)

    def __call__(self, x) -> np.ndarray:
        return asymptotic_eval(self, x)


def numeric_limit(T: InterferenceMapping, x, schedule: LimitSchedule = LimitSchedule()) -> LimitResult:
    """Iterate ``g_n = T(h_n x) / h_n`` until successive iterates agree.

    Stops when ``||g_n - g_{n-1}||_inf <= tol * max(||g_n||_inf, 1)``, with
    ``x`` rescaled to unit sup-norm first (the limit is positively
    homogeneous, so the result is scaled back). The sequence is
    coordinatewise nonincreasing for WSI mappings; an increase beyond that
    tolerance raises :class:`NotWeaklyStandardError`.
    """
    x = as_nonneg(x, T.dim)
    xscale = float(np.max(x))
    if xscale == 0.0:
        return LimitResult(np.zeros(T.dim), 0, 0.0, True)
    # Tiny or huge x would otherwise need far more scales to settle.
    x = x / xscale
    prev = older = None
    gap = np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for n, h in enumerate(schedule.scales()):
            # x was validated above, so the raw evaluation is safe here.
            g = np.asarray(T.func(h * x), dtype=float) / h
            if g.shape != x.shape:
                raise DimensionError(f"mapping returned shape {g.shape}, expected {x.shape}")
            if not math.isfinite(g.max()):
                if prev is None:
                    raise ConvergenceError("T(h x) is not finite at the first scale", iterations=n)
                log.warning("T(h x) overflowed at h=%g; returning last finite iterate", h)
                return LimitResult(prev * xscale, n, gap * xscale, False, confident=False)
            if prev is not None:
                thresh = schedule.tol * max(float(np.max(g)), 1.0)
                if np.any(g > prev + thresh):
                    raise NotWeaklyStandardError(
                        f"numeric limit increased at h={h:g} (max rise "
                        f"{float(np.max(g - prev)):.3g}); mapping is not WSI"
                    )
                gap = float(np.max(np.abs(g - prev)))
                if gap <= thresh:
                    return LimitResult(g * xscale, n, gap * xscale, True)
            older, prev = prev, g
    raise ConvergenceError(
        f"asymptotic limit did not settle within {schedule.max_steps} steps (gap {gap:.3g})",
        last=None if prev is None else prev * xscale,
        previous=None if older is None else older * xscale,
        gap=gap * xscale,
        iterations=schedule.max_steps,
    )


def asymptotic_eval(A: AsymptoticMapping, x) -> np.ndarray:
    """Evaluate an asymptotic mapping at a nonnegative vector."""
    x = as_nonneg(x, A.dim)
    if isinstance(A.form, LinearForm):
        return A.form.matrix @ x
    res = numeric_limit(A.source, x, A.form.schedule)
    if not res.confident:
        warnings.warn("asymptotic evaluation stopped early on overflow", RuntimeWarning, stacklevel=2)
    return res.value


def probe_matrix(T: InterferenceMapping) -> np.ndarray:
    """Columns ``T(e_i)`` of a mapping known to be linear."""
    return np.column_stack([T(e) for e in np.eye(T.dim)])


def derive_asymptotic(
    T: InterferenceMapping,
    schedule: LimitSchedule = LimitSchedule(),
    force_numeric: bool = False,
) -> AsymptoticMapping:
    """Build the asymptotic mapping associated with a WSI mapping ``T``.

    Affine mappings yield their matrix, load models and other mappings
    carrying ``asymptotic_matrix`` yield that matrix, linear GI mappings
    are probed at the basis vectors. Any other WSI mapping, or any mapping
    when ``force_numeric`` is set, gets a numeric form.
    """
    if not T.is_wsi:
        raise ValueError(f"asymptotic mappings need a WSI-class mapping, got {T.class_tag.value}")
    if not force_numeric:
        if T.class_tag is MappingClass.AFFINE:
            return AsymptoticMapping(T, LinearForm(np.array(T.matrix)))
        if T.asymptotic_matrix is not None:
            return AsymptoticMapping(T, LinearForm(np.array(T.asymptotic_matrix)))
        if T.class_tag is MappingClass.GI and T.linear:
            mat = T.matrix if T.matrix is not None else probe_matrix(T)
            return AsymptoticMapping(T, LinearForm(np.array(mat)))
    return AsymptoticMapping(T, NumericForm(schedule))


def as_gi_mapping(A: AsymptoticMapping, name: Optional[str] = None) -> InterferenceMapping:
    """Wrap an asymptotic mapping as a GI-class :class:`InterferenceMapping`."""
    linear = A.is_linear
    return InterferenceMapping(
        A.dim,
        MappingClass.GI,
        lambda x: asymptotic_eval(A, x),
        matrix=A.form.matrix if linear else None,
        linear=linear,
        name=name or f"asymptotic({A.source.name})",
    )
