"""Small closed-form mapping families used as fixtures and in the CLI."""

import numpy as np

from .core import InterferenceMapping, MappingClass, affine_mapping


def two_user_concave_mapping(alpha: float) -> InterferenceMapping:
    """Positive concave mapping on R^2_+ with a linear asymptotic mapping.

    ``T(x) = [ln(1 + x2) + alpha*x1 + 0.1, sqrt(x1 + x2 + 1)]``. Its
    asymptotic mapping is ``x -> A x`` with ``A = [[alpha, 0], [0, 0]]``,
    so it has a fixed point iff ``alpha < 1``.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    a = float(alpha)

    def func(x):
        return np.array([np.log1p(x[1]) + a * x[0] + 0.1, np.sqrt(x[0] + x[1] + 1.0)])

    return InterferenceMapping(
        2,
        MappingClass.SI,
        func,
        asymptotic_matrix=np.array([[a, 0.0], [0.0, 0.0]]),
        name=f"two_user_concave(alpha={a:g})",
        meta={"alpha": a},
    )


def scalar_affine_mapping(slope: float = 0.5, intercept: float = 1.0) -> InterferenceMapping:
    """One-dimensional ``T(p) = slope*p + intercept``."""
    return affine_mapping([[slope]], [intercept], name=f"scalar_affine({slope:g},{intercept:g})")
