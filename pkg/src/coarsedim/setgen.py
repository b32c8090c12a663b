"""Symbolic generators for possibly unbounded subsets of R^d.

A generator never materialises its set; it enumerates the points lying in
the open ball B_d(r) for a requested radius.  Every enumeration goes
through :meth:`PointCloud.from_points`, which applies the open-ball filter,
dedups at the resolution ``rho`` and sorts lexicographically.

Dedup keeps, for every cell of the grid ``rint(x / rho)``, the point of
smallest norm (ties broken lexicographically).  The kept points are always
genuine points of the input, so a deduped cloud is a subset of the set it
came from.  Keeping the smallest norm makes enumeration monotone in r.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, ConfigError

RHO_DEDUP = 1e-9
MAX_POINTS = 10**7
MAX_PAIRS = 10**8


def point_budget() -> int:
    env = os.environ.get("COARSEDIM_BUDGET")
    if env:
        try:
            return int(float(env))
        except ValueError as exc:
            raise ConfigError(f"COARSEDIM_BUDGET must be numeric, got {env!r}") from exc
    return MAX_POINTS


def norms(points: np.ndarray) -> np.ndarray:
    """Euclidean norms of the rows of an (N, d) array."""
    if points.shape[1] == 1:
        return np.abs(points[:, 0])
    return np.sqrt(np.einsum("ij,ij->i", points, points))


def _lexsort_rows(points: np.ndarray) -> np.ndarray:
    return np.lexsort(points.T[::-1])


def dedup(points: np.ndarray, rho: float) -> np.ndarray:
    """Identify points sharing a rho-cell; keep the smallest-norm one."""
    if len(points) <= 1:
        return points
    keys = np.rint(points / rho)
    nrm = norms(points)
    # primary keys first in lexsort means they go last
    order = np.lexsort((*points.T[::-1], nrm, *keys.T[::-1]))
    k = keys[order]
    first = np.ones(len(k), dtype=bool)
    first[1:] = np.any(k[1:] != k[:-1], axis=1)
    return points[order[first]]


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite truncation Z ∩ B_d(window_radius), deduped and sorted."""

    points: np.ndarray
    window_radius: float
    ambient_dim: int
    resolution: float = RHO_DEDUP

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.ambient_dim)
        if pts.shape[1] != self.ambient_dim:
            raise ValueError(f"points have dim {pts.shape[1]}, expected {self.ambient_dim}")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points, window: float, dim: int | None = None,
                    resolution: float = RHO_DEDUP) -> "PointCloud":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1 if dim is None else dim)
        if dim is None:
            dim = pts.shape[1]
        pts = pts.reshape(-1, dim)
        pts = pts[norms(pts) < window]
        pts = dedup(pts, resolution)
        pts = pts[_lexsort_rows(pts)]
        return cls(pts, float(window), dim, resolution)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> np.ndarray:
        """Coordinates of a 1-D cloud as a flat array."""
        if self.ambient_dim != 1:
            raise ValueError("values is only defined for 1-D clouds")
        return self.points[:, 0]

    def restrict(self, radius: float) -> "PointCloud":
        keep = norms(self.points) < radius
        return PointCloud(self.points[keep], min(radius, self.window_radius),
                          self.ambient_dim, self.resolution)

    def tolist(self) -> list:
        return self.points.tolist()


@dataclass(frozen=True)
class LinearMap:
    """T(x_1, ..., x_n) = sum_i c_i x_i."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    @property
    def arity(self) -> int:
        return len(self.coefficients)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ np.asarray(self.coefficients)

    def is_nonzero(self) -> bool:
        return any(c != 0.0 for c in self.coefficients)


# --------------------------------------------------------------------------
# generators


class SetGenerator:
    """Base class; subclasses implement ``_candidates`` and ``ambient_dim``."""

    ambient_dim: int

    def enumerate(self, radius: float, resolution: float = RHO_DEDUP,
                  max_points: int | None = None) -> PointCloud:
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        max_points = point_budget() if max_points is None else max_points
        pts = self._candidates(float(radius), resolution, max_points)
        pts = np.asarray(pts, dtype=float).reshape(-1, self.ambient_dim)
        if len(pts) > max_points:
            raise BudgetExceeded(f"{self.to_sexpr()} yields {len(pts)} points within "
                                 f"r={radius}, budget {max_points}")
        return PointCloud.from_points(pts, radius, self.ambient_dim, resolution)

    def _candidates(self, radius, resolution, max_points) -> np.ndarray:
        raise NotImplementedError

    def to_sexpr(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.to_sexpr()


def _fmt(x: float) -> str:
    return repr(float(x))


def _check_count(gen, n, max_points):
    if n > max_points:
        raise BudgetExceeded(f"{gen.to_sexpr()} needs {n} points, budget {max_points}")


@dataclass(frozen=True)
class Integers(SetGenerator):
    ambient_dim = 1

    def _candidates(self, radius, resolution, max_points):
        m = math.ceil(radius) - 1
        _check_count(self, 2 * m + 1, max_points)
        return np.arange(-m, m + 1, dtype=float)

    def to_sexpr(self):
        return "(integers)"


@dataclass(frozen=True)
class PowersPlusIndex(SetGenerator):
    """{2^n, 2^n + n : n = 0, 1, 2, ...}."""

    ambient_dim = 1

    def _candidates(self, radius, resolution, max_points):
        out = []
        n = 0
        while n < 1024 and 2.0**n < radius:
            out.append(2.0**n)
            out.append(2.0**n + n)
            n += 1
        return np.array(out)

    def to_sexpr(self):
        return "(powersplusindex)"


@dataclass(frozen=True)
class Reciprocals(SetGenerator):
    """{1/n : n >= 1}.

    The accumulation at 0 is enumerated down to the dedup resolution: 1/n is
    listed while consecutive terms are at least rho apart, then one genuine
    term per rho-cell, then one representative of the cell containing 0.
    """

    ambient_dim = 1

    def _candidates(self, radius, resolution, max_points):
        rho = resolution
        head_n = int(math.floor((math.sqrt(1 + 4 / rho) - 1) / 2))  # n(n+1) <= 1/rho
        head_n = max(head_n, 1)
        k_max = int(math.ceil(1.0 / (head_n * rho))) + 1
        _check_count(self, head_n + k_max, max_points)
        head = 1.0 / np.arange(1, head_n + 1, dtype=float)
        k = np.arange(1, k_max + 1, dtype=float)
        n_tail = np.floor(1.0 / ((k - 0.5) * rho))
        keep = n_tail > head_n
        tail = 1.0 / n_tail[keep]
        tail = tail[np.rint(tail / rho) == k[keep]]
        zero_cell = np.array([1.0 / (math.floor(2.0 / rho) + 1)])
        return np.concatenate([head, tail, zero_cell])

    def to_sexpr(self):
        return "(reciprocals)"


@dataclass(frozen=True)
class ExplicitList(SetGenerator):
    points: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ConfigError("explicit list needs at least one point")
        object.__setattr__(self, "points", tuple(tuple(p) for p in pts.tolist()))

    @property
    def ambient_dim(self):
        return len(self.points[0])

    def _candidates(self, radius, resolution, max_points):
        return np.array(self.points, dtype=float)

    def to_sexpr(self):
        if self.ambient_dim == 1:
            return "(list " + " ".join(_fmt(p[0]) for p in self.points) + ")"
        return "(list " + " ".join("(" + " ".join(_fmt(c) for c in p) + ")"
                                   for p in self.points) + ")"


@dataclass(frozen=True)
class ArithmeticProgression(SetGenerator):
    """{start + k * step : k in Z}."""

    start: float
    step: float
    ambient_dim = 1

    def __post_init__(self):
        if self.step == 0:
            raise ConfigError("arithmetic progression needs a nonzero step")

    def _candidates(self, radius, resolution, max_points):
        step = abs(self.step)
        lo = math.floor((-radius - self.start) / step)
        hi = math.ceil((radius - self.start) / step)
        _check_count(self, hi - lo + 1, max_points)
        return self.start + np.arange(lo, hi + 1, dtype=float) * step

    def to_sexpr(self):
        return f"(ap {_fmt(self.start)} {_fmt(self.step)})"


@dataclass(frozen=True)
class CantorLike(SetGenerator):
    """Left endpoints of the depth-level intervals of a Cantor set in [0, 1].

    Each interval keeps its two end pieces of relative length ``ratio``.
    """

    ratio: float
    depth: int
    ambient_dim = 1

    def __post_init__(self):
        if not 0 < self.ratio < 0.5:
            raise ConfigError("cantor ratio must lie in (0, 1/2)")
        if self.depth < 0:
            raise ConfigError("cantor depth must be nonnegative")

    def _candidates(self, radius, resolution, max_points):
        _check_count(self, 2**self.depth, max_points)
        pts = np.zeros(1)
        for i in range(self.depth):
            shift = (1 - self.ratio) * self.ratio**i
            pts = np.concatenate([pts, pts + shift])
        return pts

    def to_sexpr(self):
        return f"(cantor {_fmt(self.ratio)} {self.depth})"


def _same_dim(children):
    dims = {c.ambient_dim for c in children}
    if len(dims) != 1:
        raise ConfigError(f"children have mixed ambient dims {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class Union(SetGenerator):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ConfigError("union needs at least one child")
        _same_dim(self.children)

    @property
    def ambient_dim(self):
        return self.children[0].ambient_dim

    def _candidates(self, radius, resolution, max_points):
        return np.concatenate([c.enumerate(radius, resolution, max_points).points
                               for c in self.children])

    def to_sexpr(self):
        return "(union " + " ".join(c.to_sexpr() for c in self.children) + ")"


@dataclass(frozen=True)
class Scale(SetGenerator):
    """x -> factor * x.  A vector factor embeds a 1-D child along a line."""

    child: SetGenerator
    factor: tuple

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.factor, dtype=float))
        if not np.any(f):
            raise ConfigError("scale factor must be nonzero")
        if len(f) > 1 and self.child.ambient_dim != 1:
            raise ConfigError("vector scale factors need a 1-D child")
        object.__setattr__(self, "factor", tuple(f.tolist()))

    @property
    def ambient_dim(self):
        return len(self.factor) if len(self.factor) > 1 else self.child.ambient_dim

    def _candidates(self, radius, resolution, max_points):
        f = np.asarray(self.factor)
        size = float(np.linalg.norm(f))
        src = self.child.enumerate(radius / size * (1 + 1e-12), resolution, max_points)
        if len(f) > 1:
            return src.points[:, :1] * f[None, :]
        return src.points * f[0]

    def to_sexpr(self):
        return f"(scale {self.child.to_sexpr()} " + " ".join(_fmt(c) for c in self.factor) + ")"


@dataclass(frozen=True)
class Translate(SetGenerator):
    child: SetGenerator
    offset: tuple

    def __post_init__(self):
        off = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if len(off) != self.child.ambient_dim:
            raise ConfigError("translate offset must match the child's dimension")
        object.__setattr__(self, "offset", tuple(off.tolist()))

    @property
    def ambient_dim(self):
        return self.child.ambient_dim

    def _candidates(self, radius, resolution, max_points):
        off = np.asarray(self.offset)
        src = self.child.enumerate(radius + float(np.linalg.norm(off)) * (1 + 1e-12) + 1e-12,
                                   resolution, max_points)
        return src.points + off[None, :]

    def to_sexpr(self):
        return f"(translate {self.child.to_sexpr()} " + " ".join(_fmt(c) for c in self.offset) + ")"


def product_within(parts: Sequence[np.ndarray], radius: float,
                   max_points: int | None = None) -> np.ndarray:
    """Cartesian product of point arrays, restricted to norm < radius.

    Pruned on partial norms so only tuples that can still land in the
    ball are formed.
    """
    max_points = point_budget() if max_points is None else max_points
    r2 = radius * radius * (1 + 1e-12)
    acc = np.zeros((1, 0))
    acc_n2 = np.zeros(1)
    for part in parts:
        part = np.asarray(part, dtype=float)
        n2 = np.einsum("ij,ij->i", part, part)
        order = np.argsort(n2, kind="stable")
        part, n2 = part[order], n2[order]
        cnt = np.searchsorted(n2, r2 - acc_n2, side="right")
        total = int(cnt.sum())
        if total > max_points:
            raise BudgetExceeded(f"product has {total} tuples within r={radius}, "
                                 f"budget {max_points}")
        rows = np.repeat(np.arange(len(acc)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        acc = np.hstack([acc[rows], part[offs]])
        acc_n2 = acc_n2[rows] + n2[offs]
    return acc


@dataclass(frozen=True)
class Product(SetGenerator):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ConfigError("product needs at least one child")

    @property
    def ambient_dim(self):
        return sum(c.ambient_dim for c in self.children)

    def _candidates(self, radius, resolution, max_points):
        parts = [c.enumerate(radius, resolution, max_points).points for c in self.children]
        return product_within(parts, radius, max_points)

    def to_sexpr(self):
        return "(product " + " ".join(c.to_sexpr() for c in self.children) + ")"


@dataclass(frozen=True)
class Power(SetGenerator):
    child: SetGenerator
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("power exponent must be >= 1")

    @property
    def ambient_dim(self):
        return self.child.ambient_dim * self.k

    def _candidates(self, radius, resolution, max_points):
        base = self.child.enumerate(radius, resolution, max_points).points
        return product_within([base] * self.k, radius, max_points)

    def to_sexpr(self):
        return f"(power {self.child.to_sexpr()} {self.k})"


def _source_radius(radius, expansion, slack):
    return expansion * radius + slack


@dataclass(frozen=True)
class LinearImage(SetGenerator):
    """T(child) for T(x) = <coefficients, x>, a subset of R.

    The child is enumerated within ``expansion * r + slack``.  When T is a
    (lam, s)-quasi-isometric embedding with T(0) = 0, expansion = lam and
    slack = lam * s make the enumeration exhaustive; otherwise it returns the
    image of that truncation only.
    """

    child: SetGenerator
    coefficients: tuple
    expansion: float = 1.0
    slack: float = 0.0

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(self.coefficients))
        if len(c) != self.child.ambient_dim:
            raise ConfigError(f"linear map arity {len(c)} != child dim {self.child.ambient_dim}")
        object.__setattr__(self, "coefficients", c)

    ambient_dim = 1

    def _candidates(self, radius, resolution, max_points):
        src = self.child.enumerate(_source_radius(radius, self.expansion, self.slack),
                                   resolution, max_points)
        return src.points @ np.asarray(self.coefficients)

    def to_sexpr(self):
        s = f"(linear {self.child.to_sexpr()} " + " ".join(_fmt(c) for c in self.coefficients)
        if self.expansion != 1.0:
            s += f" :expansion {_fmt(self.expansion)}"
        if self.slack != 0.0:
            s += f" :slack {_fmt(self.slack)}"
        return s + ")"


@dataclass(frozen=True)
class Difference(SetGenerator):
    """{a - b : a in A, b in B}, sources truncated like LinearImage."""

    a: SetGenerator
    b: SetGenerator
    expansion: float = 1.0
    slack: float = 0.0

    def __post_init__(self):
        _same_dim((self.a, self.b))

    @property
    def ambient_dim(self):
        return self.a.ambient_dim

    def _candidates(self, radius, resolution, max_points):
        src_r = _source_radius(radius, self.expansion, self.slack)
        A = self.a.enumerate(src_r, resolution, max_points)
        B = self.b.enumerate(src_r, resolution, max_points)
        return difference_cloud(A, B, radius, max_points=max_points).points

    def to_sexpr(self):
        s = f"(diff {self.a.to_sexpr()} {self.b.to_sexpr()}"
        if self.expansion != 1.0:
            s += f" :expansion {_fmt(self.expansion)}"
        if self.slack != 0.0:
            s += f" :slack {_fmt(self.slack)}"
        return s + ")"


# --------------------------------------------------------------------------
# operations on clouds


def enumerate_within(gen: SetGenerator, radius: float, resolution: float = RHO_DEDUP,
                     max_points: int | None = None) -> PointCloud:
    return gen.enumerate(radius, resolution, max_points)


def difference_cloud(A: PointCloud, B: PointCloud, window: float,
                     max_pairs: int = MAX_PAIRS, max_points: int | None = None) -> PointCloud:
    """All differences a - b with norm < window, deduped at A's resolution."""
    if A.ambient_dim != B.ambient_dim:
        raise ValueError("clouds must share ambient_dim")
    rho = max(A.resolution, B.resolution)
    d = A.ambient_dim
    if len(A) == 0 or len(B) == 0:
        return PointCloud(np.zeros((0, d)), window, d, rho)
    if d == 1:
        a, b = A.values, B.values  # both sorted
        lo = np.searchsorted(b, a - window, side="right")
        hi = np.searchsorted(b, a + window, side="left")
        cnt = hi - lo
        total = int(cnt.sum())
        if total > max_pairs:
            raise BudgetExceeded(f"{total} candidate pairs exceed budget {max_pairs}")
        rows = np.repeat(np.arange(len(a)), cnt)
        cols = np.repeat(lo, cnt) + (np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt))
        diffs = a[rows] - b[cols]
        return PointCloud.from_points(diffs, window, 1, rho)
    total = len(A) * len(B)
    if total > max_pairs:
        raise BudgetExceeded(f"{total} candidate pairs exceed budget {max_pairs}")
    chunk = max(1, 4_000_000 // len(B))
    kept = []
    for i in range(0, len(A), chunk):
        diff = (A.points[i:i + chunk, None, :] - B.points[None, :, :]).reshape(-1, d)
        diff = diff[norms(diff) < window]
        kept.append(dedup(diff, rho))
    return PointCloud.from_points(np.concatenate(kept), window, d, rho)


def power_cloud(A: PointCloud, k: int, window: float,
                max_points: int | None = None) -> PointCloud:
    """k-fold Cartesian power of A restricted to the open window ball."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pts = product_within([A.points] * k, window, max_points)
    return PointCloud.from_points(pts, window, A.ambient_dim * k, A.resolution)


def apply_linear(T: LinearMap, A: PointCloud, window: float) -> PointCloud:
    if T.arity != A.ambient_dim:
        raise ValueError(f"map arity {T.arity} != cloud dim {A.ambient_dim}")
    vals = T(A.points)
    return PointCloud.from_points(vals[np.abs(vals) < window], window, 1, A.resolution)


def _half_sums(E: np.ndarray, coeffs: Sequence[float], rho: float, max_points: int) -> np.ndarray:
    sums = np.zeros(1)
    for c in coeffs:
        if len(sums) * len(E) > max_points:
            raise BudgetExceeded(f"partial sumset of size {len(sums) * len(E)} "
                                 f"exceeds budget {max_points}")
        sums = (sums[:, None] + c * E[None, :]).ravel()
        sums = dedup(sums[:, None], rho)[:, 0]
    return np.sort(sums)


def image_of_power(T: LinearMap, E: PointCloud, window: float,
                   max_pairs: int = MAX_PAIRS, max_points: int | None = None) -> PointCloud:
    """T(E^n) ∩ (-window, window) for a 1-D cloud E without forming E^n.

    Meet in the middle: the sums over each half of the coefficients are
    built separately and matched with a sorted search.
    """
    if E.ambient_dim != 1:
        raise ValueError("image_of_power needs a 1-D cloud")
    max_points = point_budget() if max_points is None else max_points
    c = T.coefficients
    e = E.values
    rho = E.resolution
    if len(e) == 0:
        return PointCloud(np.zeros((0, 1)), window, 1, rho)
    left = _half_sums(e, c[: len(c) // 2], rho, max_points)
    right = _half_sums(e, c[len(c) // 2:], rho, max_points)
    lo = np.searchsorted(right, -window - left, side="right")
    hi = np.searchsorted(right, window - left, side="left")
    cnt = np.maximum(hi - lo, 0)
    total = int(cnt.sum())
    if total > max_pairs:
        raise BudgetExceeded(f"{total} matched sums exceed budget {max_pairs}")
    rows = np.repeat(np.arange(len(left)), cnt)
    cols = np.repeat(lo, cnt) + (np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt))
    vals = left[rows] + right[cols]
    return PointCloud.from_points(vals, window, 1, rho)


def contains_origin(gen: SetGenerator, resolution: float = RHO_DEDUP) -> bool:
    cloud = gen.enumerate(max(resolution, 1e-12), resolution)
    return len(cloud) > 0
