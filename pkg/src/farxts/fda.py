"""B-spline representation of curves observed on a common grid.

Curves live in the span of a :class:`BasisSystem`; a :class:`FunctionalSeries`
holds one coefficient row per curve. :func:`gram_pair` supplies the inner
product matrix of a basis together with its symmetric square root, which is
what turns coefficient vectors into coordinates with the L2 metric.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    IllConditionedBasisError,
    InvalidArgumentError,
    OutOfDomainError,
    RankDeficientError,
    ShapeError,
    UnderdeterminedFitError,
)

MONTHS = 12
EIG_CLAMP = 1e-12
MAX_CONDITION = 1e12
_DOMAIN_SLACK = 1e-12


def monthly_grid(n_months: int = MONTHS) -> np.ndarray:
    """Month midpoints ``(j - 0.5) / n`` on [0, 1] for ``j = 1..n``."""
    return (np.arange(1, n_months + 1) - 0.5) / n_months


def month_to_point(month, n_months: int = MONTHS):
    return (np.asarray(month, dtype=float) - 0.5) / n_months


def point_to_month(point, n_months: int = MONTHS):
    return np.asarray(point, dtype=float) * n_months + 0.5


@dataclass(frozen=True, eq=False)
class BasisSystem:
    """B-spline family of a given order on a closed interval.

    ``knots`` has ``order``-fold multiplicity at both ends, so the number of
    basis functions is ``len(knots) - order``.
    """

    order: int
    domain: tuple
    knots: np.ndarray

    def __post_init__(self):
        self.knots.setflags(write=False)

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.order

    def evaluate(self, points) -> np.ndarray:
        return eval_basis(self, points)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "domain": [float(self.domain[0]), float(self.domain[1])],
            "knots": self.knots.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSystem":
        return cls(int(d["order"]), (float(d["domain"][0]), float(d["domain"][1])),
                   np.asarray(d["knots"], dtype=float))

    def same_as(self, other: "BasisSystem") -> bool:
        return (self.order == other.order
                and tuple(self.domain) == tuple(other.domain)
                and np.array_equal(self.knots, other.knots))


def make_bspline_basis(n_basis: int, order: int = 4, domain=(0.0, 1.0)) -> BasisSystem:
    """Uniform-knot B-spline basis with ``n_basis`` functions.

    Examples
    --------
    >>> b = make_bspline_basis(4, 4)
    >>> b.evaluate([0.0]).round(12).tolist()
    [[1.0, 0.0, 0.0, 0.0]]
    """
    if order < 1:
        raise InvalidArgumentError(f"order must be >= 1, got {order}")
    if n_basis < order:
        raise InvalidArgumentError(f"need n_basis >= order, got K={n_basis} < order={order}")
    a, b = float(domain[0]), float(domain[1])
    if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
        raise InvalidArgumentError(f"degenerate domain [{a}, {b}]")
    n_interior = n_basis - order
    breaks = np.linspace(a, b, n_interior + 2)
    knots = np.concatenate([np.full(order - 1, a), breaks, np.full(order - 1, b)])
    return BasisSystem(order, (a, b), knots)


def eval_basis(basis: BasisSystem, points) -> np.ndarray:
    """Basis matrix with entry ``(j, k) = phi_k(points[j])``."""
    pts = np.ascontiguousarray(np.atleast_1d(np.asarray(points, dtype=np.float64)))
    if pts.ndim != 1:
        raise ShapeError("points must be one-dimensional")
    a, b = basis.domain
    if np.any(pts < a - _DOMAIN_SLACK) or np.any(pts > b + _DOMAIN_SLACK) or not np.all(np.isfinite(pts)):
        raise OutOfDomainError(f"evaluation points must lie in [{a}, {b}]")
    pts = np.clip(pts, a, b)
    return kernels.bspline_basis(np.ascontiguousarray(basis.knots), int(basis.order), pts)


def quadrature_rule(basis: BasisSystem, n_points: Optional[int] = None):
    """Composite Gauss-Legendre nodes and weights over the knot spans."""
    if n_points is None:
        n_points = max(64, 4 * basis.n_basis)
    breaks = np.unique(basis.knots)
    n_spans = len(breaks) - 1
    per_span = max(basis.order, -(-n_points // n_spans))
    x, w = np.polynomial.legendre.leggauss(per_span)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = (hi - lo) / 2
    nodes = (lo + half * (x[None, :] + 1)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class GramPair:
    gram: np.ndarray
    sqrt: np.ndarray
    sqrt_inv: np.ndarray

    def __post_init__(self):
        for name in ("gram", "sqrt", "sqrt_inv"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))

    @property
    def size(self) -> int:
        return self.gram.shape[0]


def gram_from_matrix(gram: np.ndarray) -> GramPair:
    """Symmetric square root and its inverse from one eigendecomposition."""
    gram = (gram + gram.T) / 2
    evals, evecs = np.linalg.eigh(gram)
    clamped = np.maximum(evals, EIG_CLAMP)
    if clamped.min() <= 0 or clamped.max() / clamped.min() > MAX_CONDITION:
        raise IllConditionedBasisError(
            f"Gram matrix is numerically singular (eigenvalue range {evals.min():.3g}..{evals.max():.3g})")
    root = np.sqrt(clamped)
    sqrt = (evecs * root) @ evecs.T
    sqrt_inv = (evecs / root) @ evecs.T
    return GramPair(gram, (sqrt + sqrt.T) / 2, (sqrt_inv + sqrt_inv.T) / 2)


def gram_pair(basis: BasisSystem, quadrature_points: Optional[int] = None) -> GramPair:
    """Inner products of the basis functions and the matrix square roots."""
    if quadrature_points is not None and quadrature_points < 2 * basis.n_basis:
        raise InvalidArgumentError("quadrature_points must be at least 2K")
    nodes, weights = quadrature_rule(basis, quadrature_points)
    B = eval_basis(basis, nodes)
    gram = (B * weights[:, None]).T @ B
    return gram_from_matrix(gram)


def block_gram_pair(blocks: Sequence[GramPair]) -> GramPair:
    """Block-diagonal GramPair; blocks are kept independent."""
    def diag(mats):
        n = sum(m.shape[0] for m in mats)
        out = np.zeros((n, n))
        i = 0
        for m in mats:
            k = m.shape[0]
            out[i:i + k, i:i + k] = m
            i += k
        return out

    return GramPair(diag([b.gram for b in blocks]), diag([b.sqrt for b in blocks]),
                    diag([b.sqrt_inv for b in blocks]))


@dataclass(frozen=True, eq=False)
class FunctionalSeries:
    """N curves sharing one basis, one coefficient row per curve."""

    basis: BasisSystem
    coeffs: np.ndarray
    labels: np.ndarray = field(default=None)
    mean_coeffs: Optional[np.ndarray] = None

    def __post_init__(self):
        # C order keeps BLAS results independent of how the rows were built
        coeffs = np.ascontiguousarray(np.atleast_2d(np.asarray(self.coeffs, dtype=float)))
        if coeffs.shape[1] != self.basis.n_basis:
            raise ShapeError(f"coefficient rows have {coeffs.shape[1]} entries, basis has {self.basis.n_basis}")
        object.__setattr__(self, "coeffs", coeffs)
        labels = np.arange(coeffs.shape[0]) if self.labels is None else np.asarray(self.labels)
        if len(labels) != coeffs.shape[0]:
            raise ShapeError("one label per curve required")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, points, with_mean: bool = False) -> np.ndarray:
        c = self.add_back().coeffs if with_mean else self.coeffs
        return c @ eval_basis(self.basis, points).T

    def subset(self, rows) -> "FunctionalSeries":
        return FunctionalSeries(self.basis, self.coeffs[rows], self.labels[rows], None)

    def add_back(self) -> "FunctionalSeries":
        """Undo :func:`center`; a no-op for uncentered series."""
        if self.mean_coeffs is None:
            return self
        return FunctionalSeries(self.basis, self.coeffs + self.mean_coeffs, self.labels, None)


def center(fts: FunctionalSeries) -> FunctionalSeries:
    if len(fts) < 2:
        raise InvalidArgumentError("centering needs at least 2 curves")
    base = fts.add_back()
    mean = base.coeffs.mean(axis=0)
    return FunctionalSeries(fts.basis, base.coeffs - mean, fts.labels, mean)


def smooth(observations, grid, basis: BasisSystem, labels=None) -> FunctionalSeries:
    """Least-squares B-spline coefficients for each row of ``observations``."""
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    grid = np.asarray(grid, dtype=float)
    if obs.shape[1] != len(grid):
        raise ShapeError(f"observation rows have {obs.shape[1]} values, grid has {len(grid)}")
    if len(grid) < basis.n_basis:
        raise UnderdeterminedFitError(f"{len(grid)} grid points cannot determine {basis.n_basis} coefficients")
    if np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("grid must be strictly increasing")
    E = eval_basis(basis, grid)
    if np.linalg.matrix_rank(E) < basis.n_basis:
        raise RankDeficientError("basis evaluation matrix is rank deficient on this grid")
    coef, *_ = np.linalg.lstsq(E, obs.T, rcond=None)
    return FunctionalSeries(basis, coef.T, labels)


def seasonal_difference(values, period: int = MONTHS) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if period < 1 or len(x) <= period:
        raise InvalidArgumentError(f"series of length {len(x)} too short for period {period}")
    return x[period:] - x[:-period]


def inverse_seasonal_difference(diffs, initial, period: int = MONTHS) -> np.ndarray:
    """Rebuild the original series from its differences and first ``period`` values."""
    d = np.asarray(diffs, dtype=float)
    init = np.asarray(initial, dtype=float)
    if len(init) != period:
        raise InvalidArgumentError(f"need exactly {period} initial values")
    out = np.empty(len(d) + period)
    out[:period] = init
    for t in range(len(d)):
        out[t + period] = out[t] + d[t]
    return out
