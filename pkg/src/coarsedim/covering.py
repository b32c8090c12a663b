"""Grid counts, covering numbers and coarse Minkowski dimension estimates.

Constants (derivations in CONSTANTS.md):

* ``k_grid(d) = 3**d`` compares the closed-unit-cell count with M(1, X).
* ``k_scale(n) = (1 + sqrt n)**n`` bounds M(delta, X) <= k_scale(n) (delta'/delta)^n M(delta', X).
* ``l_product(n, m)`` bounds M(delta, X x Y) against M(delta, X) M(delta, Y) both ways.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import InsufficientData
from .setgen import RHO_DEDUP, PointCloud, Power, SetGenerator, norms

FIT_TOLERANCE = 0.05
INTEGER_TOL = 1e-12
COVER_LIMIT = 5000  # cover brackets in d >= 2 are skipped above this many points


def k_grid(d: int) -> float:
    if d >= 36:
        raise ValueError("k_grid(d) = 3^d is only derived for d < 36")
    return 3.0**d


def k_scale(n: int) -> float:
    return (1.0 + math.sqrt(n)) ** n


def l_product(n: int, m: int) -> float:
    upper = k_scale(n) * k_scale(m) * 2.0 ** ((n + m) / 2)
    lower = 3.0 ** (n + m)
    return max(upper, lower)


# --------------------------------------------------------------------------
# grid counts


def _cell_keys(points: np.ndarray):
    """Encoded indices of every closed unit cell containing each point.

    Returns (keys, owner) where owner[i] is the row of ``points`` that
    produced keys[i].
    """
    n, d = points.shape
    rounded = np.rint(points)
    on_edge = np.abs(points - rounded) <= INTEGER_TOL
    base = np.where(on_edge, rounded - 1, np.floor(points)).astype(np.int64)
    idx_parts, owner_parts = [], []
    for mask in range(2**d):
        bits = np.array([(mask >> j) & 1 for j in range(d)], dtype=np.int64)
        ok = np.all(on_edge | (bits == 0), axis=1)
        idx_parts.append(base[ok] + bits)
        owner_parts.append(np.nonzero(ok)[0])
    idx = np.concatenate(idx_parts)
    owner = np.concatenate(owner_parts)
    if len(idx) == 0:
        return np.zeros(0, dtype=np.int64), owner
    lo = idx.min(axis=0)
    span = idx.max(axis=0) - lo + 1
    if np.prod(span.astype(float)) < 2.0**62:
        keys = np.zeros(len(idx), dtype=np.int64)
        for j in range(d):
            keys = keys * span[j] + (idx[:, j] - lo[j])
        return keys, owner
    # too wide to pack into one int64: fall back to row ids
    _, keys = np.unique(idx, axis=0, return_inverse=True)
    return keys.ravel().astype(np.int64), owner


def grid_count(X: PointCloud) -> int:
    """Number of closed unit cells prod [k_i, k_i + 1] meeting X."""
    if len(X) == 0:
        return 0
    keys, _ = _cell_keys(X.points)
    return int(len(np.unique(keys)))


def grid_count_profile(points: np.ndarray, radii: Sequence[float]) -> list[int]:
    """grid_count(points ∩ B(r)) for every r, from one pass over the cells."""
    if len(points) == 0:
        return [0 for _ in radii]
    keys, owner = _cell_keys(points)
    nrm = norms(points)[owner]
    order = np.lexsort((nrm, keys))
    k = keys[order]
    first = np.ones(len(k), dtype=bool)
    first[1:] = k[1:] != k[:-1]
    cell_min_norm = np.sort(nrm[order][first])
    return [int(c) for c in np.searchsorted(cell_min_norm, np.asarray(radii, float), side="left")]


# --------------------------------------------------------------------------
# covering numbers


@dataclass(frozen=True)
class CoverBracket:
    """lower <= M(delta, X) <= upper; equal when exact."""

    lower: int
    upper: int
    delta: float

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


def _sweep_count_1d(x: np.ndarray, delta: float) -> int:
    """Exact M(delta, X) in R: greedy open intervals of length 2 delta.

    The leftmost uncovered point p starts an interval that covers every
    point < p + 2 delta.  Chain lengths use binary lifting over the jump
    table so the whole count is vectorised.
    """
    n = len(x)
    if n == 0:
        return 0
    nxt = np.searchsorted(x, x + 2 * delta, side="left")
    jumps = [nxt]
    while (1 << len(jumps)) <= n:
        j = jumps[-1]
        ext = np.append(j, n)
        jumps.append(ext[j])
    pos, hops = 0, 0
    for level in range(len(jumps) - 1, -1, -1):
        nxt_pos = jumps[level][pos]
        if nxt_pos < n:
            pos = int(nxt_pos)
            hops += 1 << level
    return hops + 1


def _farthest_point_count(points: np.ndarray, delta: float) -> int:
    """Size of a farthest-point net whose open delta-balls cover the points."""
    mind = np.full(len(points), np.inf)
    idx, count = 0, 0
    while True:
        count += 1
        d = np.sqrt(np.sum((points - points[idx]) ** 2, axis=1))
        np.minimum(mind, d, out=mind)
        idx = int(np.argmax(mind))
        if mind[idx] < delta:
            return count


def _separated_count(points: np.ndarray, radius: float) -> int:
    """Greedy maximal subset with pairwise distance >= radius (canonical order)."""
    tree = cKDTree(points)
    alive = np.ones(len(points), dtype=bool)
    count = 0
    for i in range(len(points)):
        if not alive[i]:
            continue
        count += 1
        # query_ball_point is closed; points at distance exactly radius stay alive
        near = tree.query_ball_point(points[i], radius)
        near = [j for j in near if np.linalg.norm(points[j] - points[i]) < radius]
        alive[near] = False
    return count


def cover_count(X: PointCloud, delta: float) -> CoverBracket:
    """Bracket on the minimal number of open delta-balls covering X.

    Exact in one dimension.  In higher dimension the upper bound is a
    farthest-point net and the lower bound a maximal 2 delta-separated set:
    an open delta-ball holds at most one such point.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if len(X) == 0:
        return CoverBracket(0, 0, delta)
    if X.ambient_dim == 1:
        m = _sweep_count_1d(np.sort(X.values), delta)
        return CoverBracket(m, m, delta)
    upper = _farthest_point_count(X.points, delta)
    lower = _separated_count(X.points, 2 * delta)
    return CoverBracket(lower, upper, delta)


# --------------------------------------------------------------------------
# dimension estimation


@dataclass
class CountRow:
    r: float
    grid_count: int
    cover_lower: int | None
    cover_upper: int | None
    delta: float


@dataclass
class CountTable:
    rows: list[CountRow] = field(default_factory=list)

    def to_csv(self) -> str:
        out = ["r,grid_count,cover_lower,cover_upper,delta"]
        for row in self.rows:
            cl = "" if row.cover_lower is None else str(row.cover_lower)
            cu = "" if row.cover_upper is None else str(row.cover_upper)
            out.append(f"{row.r!r},{row.grid_count},{cl},{cu},{row.delta!r}")
        return "\n".join(out) + "\n"


@dataclass
class DimensionEstimate:
    slope_ols: float
    slope_tail: float
    counts: CountTable
    radii_schedule: list[float]

    def to_json(self) -> dict:
        return {
            "slope_ols": self.slope_ols,
            "slope_tail": self.slope_tail,
            "radii": list(self.radii_schedule),
            "rows": [vars(r).copy() for r in self.counts.rows],
        }


def dyadic_radii(a: int, b: int) -> list[float]:
    return [2.0**k for k in range(a, b + 1)]


def fit_slopes(radii: Sequence[float], counts: Sequence[int]) -> tuple[float, float]:
    pairs = [(r, c) for r, c in zip(radii, counts) if c > 0]
    if len(pairs) < 2:
        raise InsufficientData(f"need >= 2 nonzero count rows, have {len(pairs)}")
    lr = np.log([p[0] for p in pairs])
    lc = np.log([p[1] for p in pairs])
    slope_ols = float(np.polyfit(lr, lc, 1)[0])
    slope_tail = float((lc[-1] - lc[-2]) / (lr[-1] - lr[-2]))
    # exact-count data can give -0.0 or 1e-17 noise; keep JSON stable
    return round(slope_ols, 12) + 0.0, round(slope_tail, 12) + 0.0


def _check_radii(radii):
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise InsufficientData("need at least two radii")
    if any(r <= 1 for r in radii):
        raise ValueError("radii must all exceed 1")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    return radii


def estimate_from_cloud(cloud: PointCloud, radii: Sequence[float], delta: float = 1.0,
                        with_cover: bool = True) -> DimensionEstimate:
    radii = _check_radii(radii)
    grid = grid_count_profile(cloud.points, radii)
    rows = []
    nrm = norms(cloud.points)
    for r, g in zip(radii, grid):
        lo = hi = None
        if with_cover:
            inside = nrm < r
            n_in = int(inside.sum())
            if cloud.ambient_dim == 1 or n_in <= COVER_LIMIT:
                sub = PointCloud(cloud.points[inside], r, cloud.ambient_dim, cloud.resolution)
                b = cover_count(sub, delta)
                lo, hi = b.lower, b.upper
        rows.append(CountRow(r, g, lo, hi, delta))
    slope_ols, slope_tail = fit_slopes(radii, grid)
    return DimensionEstimate(slope_ols, slope_tail, CountTable(rows), radii)


def dimension_estimate(gen: SetGenerator, radii: Sequence[float], delta: float = 1.0,
                       resolution: float = RHO_DEDUP, with_cover: bool = True,
                       max_points: int | None = None) -> DimensionEstimate:
    """OLS slope of log N(B(r) ∩ Z) against log r over the radii schedule.

    The set is enumerated once at the largest radius and restricted for the
    smaller ones.
    """
    radii = _check_radii(radii)
    cloud = gen.enumerate(radii[-1], resolution, max_points)
    return estimate_from_cloud(cloud, radii, delta, with_cover)


# --------------------------------------------------------------------------
# property checks


@dataclass
class ChainCheck:
    name: str
    status: str  # "pass", "fail" or "inconclusive"
    detail: str


@dataclass
class FactReport:
    checks: list[ChainCheck]

    @property
    def hard_failures(self) -> int:
        return sum(c.status == "fail" for c in self.checks)

    @property
    def inconclusive(self) -> int:
        return sum(c.status == "inconclusive" for c in self.checks)

    @property
    def ok(self) -> bool:
        return self.hard_failures == 0


def _leq(name, lhs_lo, lhs_hi, rhs_lo, rhs_hi) -> ChainCheck:
    """Three-valued lhs <= rhs where both sides are only known as brackets."""
    if lhs_hi <= rhs_lo:
        return ChainCheck(name, "pass", f"{lhs_hi} <= {rhs_lo}")
    if lhs_lo > rhs_hi:
        return ChainCheck(name, "fail", f"{lhs_lo} > {rhs_hi}")
    return ChainCheck(name, "inconclusive", f"[{lhs_lo}, {lhs_hi}] vs [{rhs_lo}, {rhs_hi}]")


def check_fact_metric0(X: PointCloud, Y: PointCloud, delta: float,
                       delta_prime: float) -> FactReport:
    """Scale and product comparisons of covering numbers, sound under brackets."""
    if not 0 < delta < delta_prime:
        raise ValueError("need 0 < delta < delta_prime")
    n, m = X.ambient_dim, Y.ambient_dim
    mx = cover_count(X, delta)
    mxp = cover_count(X, delta_prime)
    my = cover_count(Y, delta)
    k = k_scale(n) * (delta_prime / delta) ** n
    checks = [
        _leq("M(delta',X) <= M(delta,X)", mxp.lower, mxp.upper, mx.lower, mx.upper),
        _leq("M(delta,X) <= K (delta'/delta)^n M(delta',X)",
             mx.lower, mx.upper, k * mxp.lower, k * mxp.upper),
    ]
    prod_pts = np.hstack([np.repeat(X.points, len(Y), axis=0), np.tile(Y.points, (len(X), 1))])
    XY = PointCloud(prod_pts, math.inf, n + m, max(X.resolution, Y.resolution))
    mxy = cover_count(XY, delta)
    L = l_product(n, m)
    checks.append(_leq("M(delta,X) M(delta,Y) <= L M(delta,XxY)",
                       mx.lower * my.lower, mx.upper * my.upper, L * mxy.lower, L * mxy.upper))
    checks.append(_leq("M(delta,XxY) <= L M(delta,X) M(delta,Y)",
                       mxy.lower, mxy.upper, L * mx.lower * my.lower, L * mx.upper * my.upper))
    return FactReport(checks)


@dataclass
class PowerLawReport:
    k: int
    slope_base: float
    slope_power: float
    expected: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return abs(self.slope_power - self.expected) <= self.tolerance


def check_fact_metric1(gen: SetGenerator, k: int, radii: Sequence[float],
                       tolerance: float = FIT_TOLERANCE,
                       resolution: float = RHO_DEDUP) -> PowerLawReport:
    """Compare the slope of gen^k with k times the slope of gen."""
    base = dimension_estimate(gen, radii, resolution=resolution, with_cover=False)
    power = dimension_estimate(Power(gen, k), radii, resolution=resolution, with_cover=False)
    return PowerLawReport(k, base.slope_ols, power.slope_ols, k * base.slope_ols, tolerance)


def comparability_holds(X: PointCloud) -> bool:
    """K^-1 * (lower M(1,X)) <= N(X) <= K * (upper M(1,X))."""
    b = cover_count(X, 1.0)
    n = grid_count(X)
    K = k_grid(X.ambient_dim)
    return b.lower / K <= n <= K * b.upper
