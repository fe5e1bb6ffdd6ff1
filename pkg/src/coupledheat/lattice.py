"""Lattice algebra on W = R^m with the componentwise order.

Vectors of W are plain 1-D float arrays.  This module provides the lattice
decomposition (positive/negative part, absolute value, sign), closed
subspaces with their orthogonal projections, order intervals, nearest-point
projections onto the domination cone {(u, v): |u| <= v}, and the matrix-level
decision procedures (positivity, box invariance, closed-ideal and
irreducibility tests) used by the analyzer.

All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

#: default tolerance for membership / idempotence checks (relative)
MEMBERSHIP_TOL = 1e-9
#: default tolerance for sparsity-pattern graphs
PATTERN_TOL = 1e-10
#: rank cutoff when orthonormalizing generators
RANK_TOL = 1e-10


LatticeParts = namedtuple("LatticeParts", ["pos", "neg", "abs", "sign"])


def lattice_decompose(x) -> LatticeParts:
    """Split x into positive part, negative part, absolute value and sign.

    The parts satisfy x = pos - neg, abs = pos + neg, min(pos, neg) = 0 and
    sign * abs = x componentwise, with sign(0) = 0.
    """
    x = np.asarray(x, dtype=float)
    pos = np.maximum(x, 0.0)
    neg = np.maximum(-x, 0.0)
    return LatticeParts(pos, neg, pos + neg, np.sign(x))


# ---------------------------------------------------------------------------
# subspaces


@dataclass(frozen=True)
class Subspace:
    """Closed subspace of R^m, stored as an orthonormal basis and projector.

    ``basis`` has shape (m, k) with orthonormal columns (k = 0 for the zero
    subspace) and ``projection = basis @ basis.T`` is the orthogonal
    projection onto the span.
    """

    dim_ambient: int
    basis: np.ndarray
    projection: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, v):
        return self.projection @ np.asarray(v, dtype=float)

    def contains(self, v, tol: float = MEMBERSHIP_TOL) -> bool:
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(v - self.projection @ v)) <= tol * (
            1.0 + float(np.linalg.norm(v))
        )

    def complement(self) -> "Subspace":
        """Orthogonal complement within the same ambient space."""
        m = self.dim_ambient
        q = np.eye(m) - self.projection
        u, s, _ = np.linalg.svd(q)
        basis = u[:, s > 0.5]
        return Subspace(m, basis, basis @ basis.T)

    @classmethod
    def zero(cls, m: int) -> "Subspace":
        return cls(m, np.zeros((m, 0)), np.zeros((m, m)))

    @classmethod
    def full(cls, m: int) -> "Subspace":
        return cls(m, np.eye(m), np.eye(m))

    @classmethod
    def span_of_ones(cls, m: int) -> "Subspace":
        return make_subspace([np.ones(m)])


def make_subspace(generators, ambient_dim: int | None = None,
                  tol: float = RANK_TOL) -> Subspace:
    """Build a Subspace from (possibly dependent) generator vectors.

    Dependent or duplicate generators are dropped at relative tolerance
    ``tol``.  An empty generator list together with ``ambient_dim`` gives
    the zero subspace.

    Raises ValueError on inconsistent generator dimensions.
    """
    gens = [np.asarray(g, dtype=float).ravel() for g in generators]
    if not gens:
        if ambient_dim is None:
            raise ValueError("ambient_dim required for the zero subspace")
        return Subspace.zero(ambient_dim)
    m = gens[0].size
    if any(g.size != m for g in gens):
        raise ValueError("generators have mismatched ambient dimensions")
    if ambient_dim is not None and ambient_dim != m:
        raise ValueError(f"generators live in R^{m}, expected R^{ambient_dim}")
    a = np.column_stack(gens)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    cutoff = tol * max(s[0], 1.0) if s.size else 0.0
    basis = u[:, s > cutoff]
    return Subspace(m, basis, basis @ basis.T)


# ---------------------------------------------------------------------------
# order intervals


@dataclass(frozen=True)
class OrderInterval:
    """Order interval [lower, upper] of R^m; bounds may be +-inf."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("empty order interval (lower > upper)")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def nonnegative(cls, m: int) -> "OrderInterval":
        return cls(np.zeros(m), np.full(m, np.inf))

    @classmethod
    def symmetric_box(cls, m: int, radius: float = 1.0) -> "OrderInterval":
        return cls(np.full(m, -radius), np.full(m, radius))

    def is_nonnegative_orthant(self) -> bool:
        return bool(np.all(self.lower == 0.0) and np.all(np.isinf(self.upper)))

    def is_symmetric_box(self) -> bool:
        return bool(
            np.all(np.isfinite(self.lower))
            and np.all(self.lower == -self.upper)
            and np.all(self.upper > 0)
        )

    def project(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def violation(self, x) -> float:
        """Largest componentwise excursion of x outside of the interval."""
        x = np.asarray(x, dtype=float)
        under = self.lower - x
        over = x - self.upper
        worst = np.maximum(np.maximum(under, over), 0.0)
        worst = np.where(np.isnan(worst), 0.0, worst)  # inf bounds never bind
        return float(worst.max()) if worst.size else 0.0

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.violation(x) <= tol

    def sample(self, count: int, rng: np.random.Generator,
               scale: float = 3.0) -> np.ndarray:
        """Random points of the interval, shape (count, m).

        Unbounded coordinates are sampled within ``scale`` of the finite
        bound (or of 0 for doubly infinite coordinates).
        """
        lo = np.where(np.isfinite(self.lower), self.lower,
                      np.where(np.isfinite(self.upper), self.upper - scale, -scale))
        hi = np.where(np.isfinite(self.upper), self.upper,
                      np.where(np.isfinite(self.lower), self.lower + scale, scale))
        return rng.uniform(lo, hi, size=(count, self.dim))

    def finite_vertices(self, cap: int = 4096) -> np.ndarray:
        """Vertices of the interval with infinite bounds clipped to the
        sampling box; at most ``cap`` vertices (coordinates beyond the cap
        stay at the midpoint)."""
        lo = np.where(np.isfinite(self.lower), self.lower, -3.0)
        hi = np.where(np.isfinite(self.upper), self.upper, 3.0)
        m = self.dim
        free = min(m, int(np.log2(cap))) if cap > 1 else 0
        grid = np.stack([lo[:free], hi[:free]], axis=0)
        if free:
            idx = np.indices((2,) * free).reshape(free, -1).T
            corners = grid[idx, np.arange(free)]
        else:
            corners = np.zeros((1, 0))
        rest = np.broadcast_to((lo[free:] + hi[free:]) / 2.0,
                               (corners.shape[0], m - free))
        return np.hstack([corners, rest])


def project_interval(interval: OrderInterval, x):
    """Euclidean nearest point of the interval (componentwise clamp)."""
    return interval.project(x)


# ---------------------------------------------------------------------------
# domination cone


def project_domination_cone(x, y):
    """Nearest point of the cone C = {(u, v): |u| <= v} in R^m x R^m.

    Returns the pair (u, v) with u = ((|x| + |x| /\\ y)^+ sgn x) / 2 and
    v = ((|x| \\/ y + y)^+) / 2; the output lies in C and the map is
    idempotent.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax = np.abs(x)
    u = 0.5 * np.maximum(ax + np.minimum(ax, y), 0.0) * np.sign(x)
    v = 0.5 * np.maximum(np.maximum(ax, y) + y, 0.0)
    return u, v


# ---------------------------------------------------------------------------
# matrix invariance tests


def is_positive_operator(mat, tol: float = 1e-12) -> bool:
    """True iff the matrix maps the positive cone into itself
    (all entries >= -tol)."""
    return bool(np.all(np.asarray(mat, dtype=float) >= -tol))


def leaves_box_invariant(mat, tol: float = 1e-12) -> bool:
    """True iff M [-1,1]^m is contained in [-1,1]^m, i.e. the maximal row sum
    of absolute entries is at most 1."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return True
    return bool(np.abs(mat).sum(axis=1).max() <= 1.0 + tol)


def _image_bounds(mat: np.ndarray, interval: OrderInterval):
    """Componentwise inf/sup of M x over x in the interval (inf-aware)."""
    lo, hi = interval.lower, interval.upper
    pos = mat > 0
    neg = mat < 0
    with np.errstate(invalid="ignore"):
        sup = np.where(pos, mat * hi[None, :], 0.0) + np.where(
            neg, mat * lo[None, :], 0.0)
        inf = np.where(pos, mat * lo[None, :], 0.0) + np.where(
            neg, mat * hi[None, :], 0.0)
    return inf.sum(axis=1), sup.sum(axis=1)


def interval_invariant(mat, interval: OrderInterval, samples: int = 200,
                       rng: np.random.Generator | None = None,
                       margin: float = 1e-9) -> bool:
    """Decide whether M maps the order interval into itself.

    The nonnegative orthant reduces to an entrywise sign test and the
    symmetric box to the absolute row-sum test; every other box is decided
    by the same vertex bound computed with inf-aware arithmetic (the image
    extremes of a box under a linear map sit at vertices).  When
    ``samples > 0`` a randomized witness search over vertices and interior
    points is run as well and a witness always wins.
    """
    mat = np.asarray(mat, dtype=float)
    m = interval.dim
    if mat.shape != (m, m):
        raise ValueError("matrix/interval dimension mismatch")
    if interval.is_nonnegative_orthant():
        verdict = is_positive_operator(mat, tol=margin)
    elif interval.is_symmetric_box():
        scaled = mat * (interval.upper[None, :] / interval.upper[:, None])
        verdict = leaves_box_invariant(scaled, tol=margin)
    else:
        inf, sup = _image_bounds(mat, interval)
        verdict = bool(
            np.all(sup <= interval.upper + margin)
            and np.all(inf >= interval.lower - margin)
        )
    if samples > 0:
        rng = np.random.default_rng(0) if rng is None else rng
        pts = np.vstack([interval.finite_vertices(),
                         interval.sample(samples, rng)])
        inside = np.array([interval.violation(p) <= margin for p in pts])
        for p in pts[inside]:
            if interval.violation(mat @ p) > margin:
                return False
    return verdict


# ---------------------------------------------------------------------------
# commuting projections (subspaces and order intervals)


def _members(c, rng: np.random.Generator, count: int) -> np.ndarray:
    if isinstance(c, Subspace):
        if c.dim == 0:
            return np.zeros((1, c.dim_ambient))
        cols = []
        for scale in (1.0, 4.0, 16.0):  # cover several magnitudes
            cols += [scale * c.basis[:, j] for j in range(c.dim)]
            cols += [-scale * c.basis[:, j] for j in range(c.dim)]
        coef = rng.standard_normal((count, c.dim))
        coef *= 4.0 ** rng.uniform(-1.0, 2.0, size=(count, 1))
        cols += list(coef @ c.basis.T)
        return np.array(cols)
    return np.vstack([c.finite_vertices(), c.sample(count, rng)])


def _contains(c, v, tol: float) -> bool:
    if isinstance(c, Subspace):
        return c.contains(v, tol)
    return c.contains(v, tol)


def _project(c, v):
    return c.project(v)


def _ambient_dim(c) -> int:
    return c.dim_ambient if isinstance(c, Subspace) else c.dim


def commuting_projection_equivalence(c1, c2, samples: int = 100,
                                     rng: np.random.Generator | None = None,
                                     tol: float = MEMBERSHIP_TOL):
    """Evaluate the three equivalent statements about a pair of closed
    convex sets: P_{C1} C2 within C2, P_{C2} C1 within C1, and commutation
    of the two projections on sampled points.

    ``c1`` and ``c2`` are each a Subspace or an OrderInterval of the same
    ambient space.  Subspace-subspace inclusions are decided exactly through
    matrix identities, subspace-into-interval inclusions through the exact
    interval test; the remaining cases are sampled.  Returns a tuple of
    three booleans, which agree whenever the numbers are not borderline.
    """
    m = _ambient_dim(c1)
    if _ambient_dim(c2) != m:
        raise ValueError("descriptors have different ambient dimensions")
    rng = np.random.default_rng(0) if rng is None else rng

    def inclusion(a, b):
        # P_a b subset of b
        if isinstance(a, Subspace) and isinstance(b, Subspace):
            resid = (np.eye(m) - b.projection) @ a.projection @ b.projection
            return bool(np.linalg.norm(resid) <= tol * (1.0 + m))
        if isinstance(a, Subspace) and isinstance(b, OrderInterval):
            return interval_invariant(a.projection, b, samples=0, margin=tol)
        pts = _members(b, rng, samples)
        return all(_contains(b, _project(a, p), tol) for p in pts)

    first = inclusion(c1, c2)
    second = inclusion(c2, c1)
    if isinstance(c1, Subspace) and isinstance(c2, Subspace):
        comm = c1.projection @ c2.projection - c2.projection @ c1.projection
        third = bool(np.linalg.norm(comm) <= tol * (1.0 + m))
    else:
        z = rng.standard_normal((samples, m))
        z *= 4.0 ** rng.uniform(-1.0, 2.0, size=(samples, 1))
        gap = max(
            float(np.linalg.norm(_project(c1, _project(c2, v))
                                 - _project(c2, _project(c1, v))))
            for v in z
        )
        third = gap <= tol * (1.0 + float(np.abs(z).max()))
    return first, second, third


# ---------------------------------------------------------------------------
# closed ideals and irreducibility


def _sign_complete_sample(y: Subspace, rng: np.random.Generator,
                          count: int, cap: int = 64) -> np.ndarray:
    """Points of the subspace covering all +- basis combinations (up to
    ``cap``) plus random coefficient draws."""
    k = y.dim
    if k == 0:
        return np.zeros((1, y.dim_ambient))
    pts = []
    if 2 ** k <= cap:
        signs = np.indices((2,) * k).reshape(k, -1).T * 2 - 1
        pts.extend(signs @ y.basis.T)
    else:
        pts.extend((rng.integers(0, 2, size=(cap, k)) * 2 - 1) @ y.basis.T)
    pts.extend(rng.standard_normal((count, k)) @ y.basis.T)
    return np.array(pts)


def is_ideal(y1: Subspace, y2: Subspace, samples: int = 200,
             rng: np.random.Generator | None = None,
             tol: float = MEMBERSHIP_TOL) -> bool:
    """Randomized test whether Y1 is a closed ideal of Y2.

    Checks (i) |x| in Y2 over a sign-pattern-complete sample of Y1 and
    (ii) y sgn x in Y1 for sampled x in Y1 and y in Y2 rescaled so that
    |y| <= |x|.  The test is one-sided: a returned False comes with an
    explicit witness, while True can in principle be a false positive of
    the sampling (seeded, fixed budget).
    """
    if y1.dim_ambient != y2.dim_ambient:
        raise ValueError("subspaces have different ambient dimensions")
    rng = np.random.default_rng(20240901) if rng is None else rng
    xs = _sign_complete_sample(y1, rng, samples)
    for x in xs:
        if not y2.contains(np.abs(x), tol):
            return False
    ys = _sign_complete_sample(y2, rng, samples)
    nx = xs.shape[0]
    for i, y in enumerate(ys):
        x = xs[i % nx]
        ax, ay = np.abs(x), np.abs(y)
        active = ay > tol
        if not np.any(active):
            continue
        scale = float(np.min(ax[active] / ay[active]))  # 0 if x vanishes there
        for t in (scale, 0.5 * scale):
            if not y1.contains(t * y * np.sign(x), tol):
                return False
    return True


def is_irreducible(p, tol: float = PATTERN_TOL) -> bool:
    """True iff no nontrivial coordinate subspace is invariant under the
    (symmetric) matrix, i.e. the graph of its nonzero pattern is connected.
    """
    mat = p.projection if isinstance(p, Subspace) else np.asarray(p, dtype=float)
    adj = sp.csr_matrix((np.abs(mat) > tol).astype(int))
    n_comp, _ = connected_components(adj, directed=False)
    return bool(n_comp == 1)


def joint_pattern_irreducible(mats, tol: float = PATTERN_TOL) -> bool:
    """Connectivity of the union of the nonzero patterns of several
    symmetric matrices (no coordinate subspace invariant under all)."""
    acc = None
    for mat in mats:
        mat = mat.projection if isinstance(mat, Subspace) else np.asarray(mat, float)
        part = (np.abs(mat) > tol).astype(int)
        acc = part if acc is None else acc + part
    adj = sp.csr_matrix(acc)
    n_comp, _ = connected_components(adj, directed=False)
    return bool(n_comp == 1)


# ---------------------------------------------------------------------------
# componentwise lifts


def lift_norm_check(t_mat, m: int):
    """Spectral norms of a matrix and of its blockwise lift acting
    componentwise on R^m-valued coordinates (Kronecker with the identity).
    The two agree up to floating point.
    """
    t_mat = np.asarray(t_mat, dtype=float)
    if m < 1:
        raise ValueError("lift dimension must be at least 1")
    norm_t = float(np.linalg.norm(t_mat, 2))
    norm_lift = float(np.linalg.norm(np.kron(t_mat, np.eye(m)), 2))
    return norm_t, norm_lift
