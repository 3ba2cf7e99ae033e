"""Vectors, monotone norms, interference mappings and sampled axiom checks.

Nonnegative vectors are plain ``numpy`` float arrays; :func:`as_nonneg`
validates them at the boundary of every public operation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class DimensionError(ValueError):
    """Raised when vector, weight or matrix dimensions disagree."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative procedure exhausts its step budget.

    The last iterates are kept on the exception so callers can inspect
    how far the procedure got.
    """

    def __init__(self, message, last=None, previous=None, gap=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.previous = previous
        self.gap = gap
        self.iterations = iterations


def as_nonneg(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a 1-D float array with nonnegative finite entries."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a nonempty 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.size}")
    lo, hi = arr.min(), arr.max()
    # One pass over the extremes; NaN fails both comparisons.
    if lo >= 0 and hi < np.inf:
        return arr
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    raise ValueError("vector entries must be nonnegative")


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


class NormKind(str, enum.Enum):
    L1 = "l1"
    LINF = "linf"
    WEIGHTED_L1 = "weighted_l1"
    WEIGHTED_LINF = "weighted_linf"


@dataclass(frozen=True)
class MonotoneNorm:
    """An l1 / l-infinity norm, optionally weighted and scaled.

    ``norm(x) = scale * sum(w * |x|)`` for the l1 kinds and
    ``scale * max(w * |x|)`` for the l-infinity kinds, with ``w = 1`` for
    the unweighted kinds. All four are monotone on the nonnegative orthant.
    """

    kind: NormKind = NormKind.L1
    weights: Optional[tuple] = None
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("norm scale must be a positive finite number")
        weighted = self.kind in (NormKind.WEIGHTED_L1, NormKind.WEIGHTED_LINF)
        if weighted:
            if self.weights is None:
                raise ValueError(f"{self.kind.value} norm requires weights")
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or w.size == 0 or np.any(~np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("norm weights must be a nonempty vector of positive reals")
            object.__setattr__(self, "weights", tuple(float(v) for v in w))
        elif self.weights is not None:
            raise ValueError(f"{self.kind.value} norm does not take weights")

    @classmethod
    def l1(cls, scale: float = 1.0) -> "MonotoneNorm":
        return cls(NormKind.L1, scale=scale)

    @classmethod
    def linf(cls, scale: float = 1.0) -> "MonotoneNorm":
        return cls(NormKind.LINF, scale=scale)

    @classmethod
    def from_name(cls, name: str, scale: float = 1.0) -> "MonotoneNorm":
        return cls(NormKind(name.lower()), scale=scale)

    @property
    def is_l1_type(self) -> bool:
        return self.kind in (NormKind.L1, NormKind.WEIGHTED_L1)

    def weight_vector(self, dim: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(dim)
        w = np.asarray(self.weights)
        if w.size != dim:
            raise DimensionError(f"norm has {w.size} weights but vector has dimension {dim}")
        return w

    def scaled(self, factor: float) -> "MonotoneNorm":
        """Return the norm ``factor * ||.||`` (e.g. ``factor = 1/budget``)."""
        return MonotoneNorm(self.kind, self.weights, self.scale * factor)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        w = self.weight_vector(x.size)
        v = w * np.abs(x)
        raw = v.sum() if self.is_l1_type else v.max()
        return float(self.scale * raw)


def eval_norm(norm: MonotoneNorm, x) -> float:
    """Evaluate a monotone norm at a nonnegative vector."""
    return norm(as_nonneg(x))


def norm_equivalence_constant(norm_a: MonotoneNorm, norm_b: MonotoneNorm, dim: int) -> float:
    """Smallest ``alpha`` with ``||x||_a <= alpha * ||x||_b`` for all ``x``.

    Both norms are absolute and polyhedral, so the ratio is maximised at a
    vertex of the unit ball of ``norm_b``: the scaled basis vectors when
    ``norm_b`` is of l1 type, the vector ``1 / w_b`` when it is of
    l-infinity type.
    """
    wb = norm_b.weight_vector(dim)
    if norm_b.is_l1_type:
        vertices = np.diag(1.0 / (wb * norm_b.scale))
        return max(norm_a(v) for v in vertices)
    return norm_a(1.0 / (wb * norm_b.scale))


# ---------------------------------------------------------------------------
# Mappings
# ---------------------------------------------------------------------------


class MappingClass(str, enum.Enum):
    SI = "SI"
    WSI = "WSI"
    GI = "GI"
    AFFINE = "Affine"
    LOAD_MODEL = "LoadModel"
    CAPPED_LOAD_MODEL = "CappedLoadModel"
    POWER_MODEL = "PowerModel"
    CUSTOM = "Custom"


_WSI_CLASSES = frozenset(MappingClass) - {MappingClass.CUSTOM}


@dataclass(frozen=True, eq=False)
class InterferenceMapping:
    """A self-mapping of the nonnegative orthant with a declared class tag.

    Parameters
    ----------
    dim : int
        Dimension of the input and output vectors.
    class_tag : MappingClass
        Declared membership (SI, WSI, GI, ...). Declarations are trusted by
        the solvers; use :func:`check_axioms` to collect sampled evidence.
    func : callable
        Pure evaluation ``ndarray -> ndarray``.
    matrix, offset : ndarray, optional
        For affine mappings ``T(x) = matrix @ x + offset``.
    linear : bool
        Marks a GI mapping that is linear, so its matrix may be probed.
    asymptotic_matrix : ndarray, optional
        Closed-form matrix of the asymptotic mapping when one is known.
    """

    dim: int
    class_tag: MappingClass
    func: Callable[[np.ndarray], np.ndarray]
    matrix: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    linear: bool = False
    asymptotic_matrix: Optional[np.ndarray] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "class_tag", MappingClass(self.class_tag))
        if self.dim < 1:
            raise DimensionError("mapping dimension must be at least 1")
        for attr in ("matrix", "asymptotic_matrix"):
            mat = getattr(self, attr)
            if mat is not None:
                mat = np.array(mat, dtype=float)
                if mat.shape != (self.dim, self.dim):
                    raise DimensionError(f"{attr} must be {self.dim}x{self.dim}")
                mat.setflags(write=False)
                object.__setattr__(self, attr, mat)
        if self.offset is not None:
            off = np.array(as_nonneg(self.offset, self.dim))
            off.setflags(write=False)
            object.__setattr__(self, "offset", off)

    def __call__(self, x) -> np.ndarray:
        x = as_nonneg(x, self.dim)
        y = np.asarray(self.func(x), dtype=float)
        if y.shape != (self.dim,):
            raise DimensionError(f"mapping returned shape {y.shape}, expected ({self.dim},)")
        return y

    @property
    def is_wsi(self) -> bool:
        return self.class_tag in _WSI_CLASSES

    @property
    def is_si(self) -> bool:
        """Whether the declared class guarantees the SI axioms."""
        tag = self.class_tag
        if tag in (MappingClass.SI, MappingClass.LOAD_MODEL, MappingClass.CAPPED_LOAD_MODEL):
            return True
        if tag is MappingClass.AFFINE:
            return bool(np.all(self.offset > 0))
        if tag is MappingClass.POWER_MODEL:
            return bool(self.meta.get("noise", 0.0) > 0)
        return False

    def scaled(self, factor: float) -> "InterferenceMapping":
        """The mapping ``x -> factor * T(x)`` (same class for ``factor > 0``)."""
        if factor <= 0:
            raise ValueError("scaling factor must be positive")
        base = self.func
        return InterferenceMapping(
            self.dim,
            self.class_tag,
            lambda x: factor * base(x),
            matrix=None if self.matrix is None else factor * self.matrix,
            offset=None if self.offset is None else factor * self.offset,
            linear=self.linear,
            asymptotic_matrix=None if self.asymptotic_matrix is None else factor * self.asymptotic_matrix,
            name=f"{factor:g}*{self.name}" if self.name else "",
            meta=dict(self.meta),
        )


def require_si(T: InterferenceMapping) -> None:
    if not T.is_si:
        raise ValueError(f"operation requires an SI-class mapping, got {T.class_tag.value}")


def affine_mapping(X, u, name: str = "affine") -> InterferenceMapping:
    """``T(x) = X x + u`` with ``X`` nonnegative and ``u`` nonnegative."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError("affine matrix must be square")
    if np.any(X < 0) or not np.all(np.isfinite(X)):
        raise ValueError("affine matrix must be nonnegative and finite")
    u = as_nonneg(u, X.shape[0])
    Xc, uc = X.copy(), u.copy()
    return InterferenceMapping(
        X.shape[0], MappingClass.AFFINE, lambda x: Xc @ x + uc, matrix=Xc, offset=uc, name=name
    )


def linear_mapping(X, name: str = "linear") -> InterferenceMapping:
    """The GI mapping ``x -> X x`` for a nonnegative matrix ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError("matrix must be square")
    if np.any(X < 0):
        raise ValueError("matrix must be nonnegative")
    Xc = X.copy()
    return InterferenceMapping(
        X.shape[0], MappingClass.GI, lambda x: Xc @ x, matrix=Xc, linear=True, name=name
    )


# ---------------------------------------------------------------------------
# Sampled axiom checks
# ---------------------------------------------------------------------------

SCALING_FACTORS = (1.5, 2.0, 10.0)
STRICT_MARGIN = 1e-12
EQUALITY_RTOL = 1e-10


@dataclass
class AxiomResult:
    passed: bool
    checked: int = 0
    witness: Optional[dict] = None


@dataclass
class AxiomReport:
    """Outcome of :func:`check_axioms`, keyed by axiom name.

    A pass is evidence over the sampled points only, never a proof.
    """

    results: dict

    def __getitem__(self, key) -> AxiomResult:
        return self.results[key]

    @property
    def standard(self) -> bool:
        return self["monotonicity"].passed and self["scalability"].passed

    @property
    def weakly_standard(self) -> bool:
        return self["monotonicity"].passed and self["weak_scalability"].passed

    @property
    def general(self) -> bool:
        return self["monotonicity"].passed and self["homogeneity"].passed

    def summary(self) -> dict:
        return {k: v.passed for k, v in self.results.items()}


def _log_uniform(rng, size, low=1e-3, high=1e3):
    return np.exp(rng.uniform(np.log(low), np.log(high), size=size))


def check_axioms(T: InterferenceMapping, samples: int = 100, seed: int = 0) -> AxiomReport:
    """Test scalability (P1), weak scalability (P2), homogeneity (P3),
    monotonicity (P4) and positivity of ``T`` on sampled points.

    Sample entries are log-uniform on ``[1e-3, 1e3]``; scaling factors are
    1.5, 2 and 10 (plus 0.5 for homogeneity). The origin and doubled basis
    vectors are always probed first. Each failed axiom carries the first
    counterexample found.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    n = T.dim
    rng = np.random.default_rng(seed)

    points = [np.zeros(n)]
    pairs = [(np.zeros(n), 2.0 * e) for e in np.eye(n)] + [(np.zeros(n), 2.0 * np.ones(n))]
    for _ in range(samples):
        x = _log_uniform(rng, n)
        # Sparse supports exercise the orthant boundary.
        x[rng.random(n) < 0.2] = 0.0
        bump = _log_uniform(rng, n) * (rng.random(n) < 0.7)
        points.append(x)
        pairs.append((x, x + bump))

    res = {
        name: AxiomResult(True)
        for name in ("scalability", "weak_scalability", "homogeneity", "monotonicity", "positivity")
    }

    def fail(name, **witness):
        r = res[name]
        if r.passed:
            r.passed = False
            r.witness = {k: np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
                         for k, v in witness.items()}

    for x, y in pairs:
        tx, ty = T(x), T(y)
        res["monotonicity"].checked += 1
        slack = EQUALITY_RTOL * np.maximum(np.abs(tx), np.abs(ty))
        if np.any(ty < tx - slack):
            fail("monotonicity", x=x, y=y, Tx=tx, Ty=ty)

    for x in points:
        tx = T(x)
        res["positivity"].checked += 1
        if np.any(tx <= 0):
            fail("positivity", x=x, Tx=tx)
        for a in SCALING_FACTORS:
            tax = T(a * x)
            lhs = a * tx
            res["scalability"].checked += 1
            if np.any(lhs - tax <= STRICT_MARGIN * np.abs(lhs)):
                fail("scalability", x=x, alpha=a, alpha_Tx=lhs, T_alpha_x=tax)
            res["weak_scalability"].checked += 1
            if np.any(tax > lhs + EQUALITY_RTOL * np.abs(lhs)):
                fail("weak_scalability", x=x, alpha=a, alpha_Tx=lhs, T_alpha_x=tax)
        for a in (0.5,) + SCALING_FACTORS:
            tax = T(a * x)
            lhs = a * tx
            res["homogeneity"].checked += 1
            if np.any(np.abs(tax - lhs) > EQUALITY_RTOL * np.maximum(np.abs(lhs), np.abs(tax)) + 1e-300):
                fail("homogeneity", x=x, alpha=a, alpha_Tx=lhs, T_alpha_x=tax)
    return AxiomReport(res)
