"""Double wedges, wedge-avoidance certificates, direction scans, dichotomy.

Conventions
-----------
* Directions are scanned over the open upper half circle at angles
  ``pi * (j + 0.5) / M``; u = (cos t, sin t).
* T_u(z) = <z, u_perp> with u_perp = (u_2, -u_1).  T_u kills u and is
  1-Lipschitz.
* A double wedge around u is {t v : |t| > s, ||v - u|| < eps}.  Its half
  opening angle is theta = 2 arcsin(eps / 2); after rotating u to (0, 1) it
  is {|y| > cot(theta) |x|, ||(x, y)|| > s}.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qi
from .errors import ApertureTooWide, CertificateInvalid, ConfigError
from .setgen import (RHO_DEDUP, LinearMap, PointCloud, SetGenerator, difference_cloud,
                     norms, power_cloud)

DEFAULT_DIRECTIONS = 4096
DEFAULT_S_GRID = (1.0, 4.0, 16.0, 64.0)
DEFAULT_EPS_GRID = (0.8, 0.4, 0.2, 0.1, 0.05)
UNIT_TOL = 1e-12
VALIDATION_PAIRS = 2_000_000


def half_angle(epsilon: float) -> float:
    return 2.0 * math.asin(epsilon / 2.0)


def cone_slope_of_aperture(epsilon: float) -> float:
    """lam with {||v - u|| < eps} = {|y| > lam |x|} once u = (0, 1)."""
    if not epsilon > 0:
        raise ValueError("aperture must be positive")
    if epsilon >= math.sqrt(2.0):
        raise ApertureTooWide(f"aperture {epsilon} >= sqrt(2) reaches the perpendicular")
    return 1.0 / math.tan(half_angle(epsilon))


def scan_angles(direction_count: int) -> np.ndarray:
    if direction_count < 1:
        raise ConfigError("direction_count must be >= 1")
    return np.pi * (np.arange(direction_count) + 0.5) / direction_count


def unit(angle: float) -> tuple[float, float]:
    return (math.cos(angle), math.sin(angle))


@dataclass(frozen=True)
class WedgeSpec:
    direction: tuple[float, float]
    inner_radius: float
    aperture: float
    kind: str = "double"

    def __post_init__(self):
        u = tuple(float(c) for c in self.direction)
        object.__setattr__(self, "direction", u)
        if abs(math.hypot(*u) - 1.0) > UNIT_TOL:
            raise ValueError(f"direction {u} is not a unit vector")
        if not self.inner_radius > 0 or not self.aperture > 0:
            raise ValueError("inner radius and aperture must be positive")
        if self.kind not in ("double", "half_plane"):
            raise ValueError(f"unknown wedge kind {self.kind!r}")
        if self.kind == "half_plane":
            alpha = math.atan2(u[1], u[0])
            theta = half_angle(min(self.aperture, 2.0))
            if not (u[1] > 0 and theta <= alpha and theta <= math.pi - alpha):
                raise ValueError("half-plane wedge does not lie in the upper half plane")

    @property
    def cone_slope(self) -> float:
        return cone_slope_of_aperture(self.aperture)

    def to_json(self) -> dict:
        return {"direction": list(self.direction), "inner_radius": self.inner_radius,
                "aperture": self.aperture, "kind": self.kind}

    @classmethod
    def from_json(cls, d: dict) -> "WedgeSpec":
        return cls(tuple(d["direction"]), d["inner_radius"], d["aperture"], d.get("kind", "double"))


def wedge_contains(w: WedgeSpec, z) -> np.ndarray | bool:
    """Membership straight from the definition; accepts one point or an (N, 2) array."""
    pts = np.asarray(z, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    r = norms(pts)
    inside = r > w.inner_radius
    v = pts[inside] / r[inside, None]
    u = np.asarray(w.direction)
    close = np.linalg.norm(v - u, axis=1) < w.aperture
    if w.kind == "double":
        close |= np.linalg.norm(v + u, axis=1) < w.aperture
    out = np.zeros(len(pts), dtype=bool)
    out[np.nonzero(inside)[0]] = close
    return bool(out[0]) if single else out


def projection(u, z) -> np.ndarray | float:
    """T_u(z) = <z, (u_2, -u_1)>."""
    u = np.asarray(u, dtype=float)
    perp = np.array([u[1], -u[0]])
    pts = np.asarray(z, dtype=float)
    return pts @ perp


# --------------------------------------------------------------------------
# avoidance search


@dataclass
class WedgeCertificate:
    wedge: WedgeSpec
    checked_points: int
    window: float
    resolution: float
    direction_index: int = -1
    direction_count: int = 0

    @property
    def cone_slope(self) -> float:
        return self.wedge.cone_slope

    @property
    def qi_guarantee(self) -> tuple[float, float]:
        """(multiplier, additive): ||d|| / (1 + lam) - s <= |T_u d|."""
        return (1.0 / (1.0 + self.cone_slope), self.wedge.inner_radius)

    def to_json(self) -> dict:
        mult, add = self.qi_guarantee
        return {
            "wedge": self.wedge.to_json(),
            "checked_points": self.checked_points,
            "cone_slope": self.cone_slope,
            "qi_multiplier": mult,
            "qi_additive": add,
            "window": self.window,
            "resolution": self.resolution,
            "direction_index": self.direction_index,
            "direction_count": self.direction_count,
        }

    @classmethod
    def from_json(cls, d: dict) -> "WedgeCertificate":
        return cls(WedgeSpec.from_json(d["wedge"]), d["checked_points"], d["window"],
                   d["resolution"], d.get("direction_index", -1), d.get("direction_count", 0))


def _grids(s_grid, eps_grid):
    if not s_grid or not eps_grid:
        raise ConfigError("s_grid and eps_grid must be nonempty")
    return sorted(float(s) for s in s_grid), sorted((float(e) for e in eps_grid), reverse=True)


def intrusion_counts(diff: PointCloud, direction_count: int, s_grid: Sequence[float],
                     eps_grid: Sequence[float]) -> np.ndarray:
    """counts[e, s, j]: points of diff inside the double wedge (eps_e, s_s, u_j).

    Uses sorted angles mod pi; membership is an open arc of half width
    theta around the direction angle.
    """
    s_sorted, eps_sorted = _grids(s_grid, eps_grid)
    angles = scan_angles(direction_count)
    pts = diff.points
    r = norms(pts)
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), np.pi)
    counts = np.zeros((len(eps_sorted), len(s_sorted), direction_count), dtype=np.int64)
    for si, s in enumerate(s_sorted):
        a = np.sort(phi[r > s])
        ext = np.concatenate([a - np.pi, a, a + np.pi])
        for ei, eps in enumerate(eps_sorted):
            theta = half_angle(eps)
            hi = np.searchsorted(ext, angles + theta, side="left")
            lo = np.searchsorted(ext, angles - theta, side="right")
            counts[ei, si] = hi - lo
    return counts


def avoidance_search(diff: PointCloud, direction_count: int = DEFAULT_DIRECTIONS,
                     s_grid: Sequence[float] = DEFAULT_S_GRID,
                     eps_grid: Sequence[float] = DEFAULT_EPS_GRID) -> WedgeCertificate | None:
    """First grid wedge (largest aperture, then smallest s, then direction
    index) that contains no point of the difference cloud."""
    if diff.ambient_dim != 2:
        raise ValueError("avoidance_search needs a 2-D difference cloud")
    s_sorted, eps_sorted = _grids(s_grid, eps_grid)
    for e in eps_sorted:
        cone_slope_of_aperture(e)
    counts = intrusion_counts(diff, direction_count, s_sorted, eps_sorted)
    angles = scan_angles(direction_count)
    for ei, eps in enumerate(eps_sorted):
        for si, s in enumerate(s_sorted):
            for j in np.nonzero(counts[ei, si] == 0)[0]:
                w = WedgeSpec(unit(angles[j]), s, eps)
                # the angle test can disagree with the definition at the boundary
                if not np.any(wedge_contains(w, diff.points)):
                    return WedgeCertificate(w, len(diff), diff.window_radius, diff.resolution,
                                            int(j), direction_count)
    return None


def best_wedge(diff: PointCloud, direction_count: int = DEFAULT_DIRECTIONS,
               s_grid: Sequence[float] = DEFAULT_S_GRID,
               eps_grid: Sequence[float] = DEFAULT_EPS_GRID) -> tuple[WedgeSpec, int]:
    """Grid wedge with the fewest intruding points (ties by grid order)."""
    s_sorted, eps_sorted = _grids(s_grid, eps_grid)
    counts = intrusion_counts(diff, direction_count, s_sorted, eps_sorted)
    flat = int(np.argmin(counts))
    ei, si, j = np.unravel_index(flat, counts.shape)
    angles = scan_angles(direction_count)
    w = WedgeSpec(unit(angles[j]), s_sorted[si], eps_sorted[ei])
    return w, int(counts[ei, si, j])


def qi_from_wedge(F: PointCloud, cert: WedgeCertificate, *, strict: bool = True,
                  max_pairs: int = qi.MAX_PAIRS, sample: bool = False,
                  seed: int = 0) -> qi.QiReport:
    """Check ||d|| / (1 + lam) - s <= |T_u d| <= ||d|| on all pairs of F.

    With ``strict`` the certificate itself is re-checked: every difference of
    F must lie inside the certificate window and outside its wedge, else
    CertificateInvalid is raised.
    """
    if F.ambient_dim != 2:
        raise ValueError("qi_from_wedge needs a 2-D cloud")
    lam = cert.cone_slope
    s = cert.wedge.inner_radius
    perp = np.array([cert.wedge.direction[1], -cert.wedge.direction[0]])
    worst = qi._WorstPairs(qi.MAX_VIOLATIONS)
    checked, diam = 0, 0.0
    intruder = None
    total = len(F) * (len(F) - 1) // 2
    for i, j in qi.pair_blocks(len(F), max_pairs, sample, seed):
        d = F.points[j] - F.points[i]
        dist = norms(d)
        if len(dist):
            diam = max(diam, float(dist.max()))
        proj = np.abs(d @ perp)
        lower = dist / (1.0 + lam) - s
        tol = qi.REL_TOL * (1.0 + dist)
        excess = np.maximum(lower - proj, proj - dist)
        bad = excess > tol
        worst.add(excess[bad], i[bad], j[bad], lower[bad], proj[bad], dist[bad])
        if strict and intruder is None:
            inside = wedge_contains(cert.wedge, d)
            if np.any(inside):
                intruder = d[np.argmax(inside)].tolist()
        checked += len(i)
    if strict:
        if diam >= cert.window:
            raise CertificateInvalid(f"stale certificate: cloud diameter {diam} >= "
                                     f"certificate window {cert.window}")
        if intruder is not None:
            raise CertificateInvalid(f"difference {intruder} lies inside the certified wedge")
    return qi.QiReport(worst.count == 0, worst.report(F.points), 0.0, worst.count, checked,
                       total <= max_pairs, (1.0 + lam, s))


# --------------------------------------------------------------------------
# direction scan


class _Binned:
    """Points bucketed along one axis, sorted along the other inside each bucket."""

    def __init__(self, key: np.ndarray, search: np.ndarray):
        n = len(key)
        nb = max(1, int(math.sqrt(n)))
        kmin, kmax = float(key.min()), float(key.max())
        h = (kmax - kmin) / nb or 1.0
        b = np.clip(np.floor((key - kmin) / h), 0, nb - 1).astype(np.int64)
        order = np.lexsort((search, b))
        b_sorted = b[order]
        self.order = order
        present, starts = np.unique(b_sorted, return_index=True)
        self.key_lo = np.minimum.reduceat(key[order], starts)
        self.key_hi = np.maximum.reduceat(key[order], starts)
        self.smin, self.smax = float(search.min()), float(search.max())
        self.offset = (self.smax - self.smin) + 1.0
        # bucket rank (not raw bucket id) keeps the packed keys compact
        rank = np.repeat(np.arange(len(present)), np.diff(np.append(starts, n)))
        self.gkey = (search[order] - self.smin) + rank * self.offset
        self.rank_base = np.arange(len(present)) * self.offset
        self.margin = 8 * np.spacing(max(abs(self.gkey[-1]), 1.0))

    def query(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Indices (into the original arrays) with search value in [lo_b, hi_b] per bucket."""
        empty = (hi < self.smin) | (lo > self.smax) | (hi < lo)
        lo_c = np.clip(lo, self.smin, self.smax) - self.smin + self.rank_base - self.margin
        hi_c = np.clip(hi, self.smin, self.smax) - self.smin + self.rank_base + self.margin
        left = np.searchsorted(self.gkey, lo_c, side="left")
        right = np.searchsorted(self.gkey, hi_c, side="right")
        cnt = np.where(empty, 0, right - left)
        total = int(cnt.sum())
        pos = np.repeat(left, cnt) + (np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt))
        return self.order[pos]


class StripIndex:
    """Finds the points of a 2-D cloud whose projection lands in [a, b]."""

    def __init__(self, points: np.ndarray):
        self.points = points
        self.by_x = _Binned(points[:, 0], points[:, 1])
        self.by_y = _Binned(points[:, 1], points[:, 0])

    def projected_in(self, angle: float, a: float, b: float) -> np.ndarray:
        sn, cs = math.sin(angle), math.cos(angle)
        # T(x, y) = x sin - y cos
        if abs(cs) >= abs(sn):
            binned = self.by_x
            ends = [(k * sn - v) / cs for k in (binned.key_lo, binned.key_hi) for v in (a, b)]
        else:
            binned = self.by_y
            ends = [(v + k * cs) / sn for k in (binned.key_lo, binned.key_hi) for v in (a, b)]
        lo = np.minimum.reduce(ends)
        hi = np.maximum.reduce(ends)
        idx = binned.query(lo, hi)
        vals = self.points[idx, 0] * sn - self.points[idx, 1] * cs
        return vals[(vals >= a) & (vals <= b)]


def max_gap(values: np.ndarray, a: float, b: float) -> tuple[float, int]:
    """Longest subinterval of [a, b] free of values, and the witness count."""
    v = np.unique(np.clip(np.asarray(values, dtype=float), a, b))
    inner = v[(v > a) & (v < b)]
    witnesses = int(np.count_nonzero((np.asarray(values) >= a) & (np.asarray(values) <= b)))
    pts = np.concatenate([[a], inner, [b]])
    return float(np.max(np.diff(pts))), witnesses


@dataclass
class DensityCertificate:
    direction: tuple[float, float]
    angle: float
    map: LinearMap
    interval: tuple[float, float]
    delta_dense: float
    max_gap: float
    witness_count: int

    def to_json(self) -> dict:
        return {
            "direction": list(self.direction),
            "angle": self.angle,
            "map": {"coefficients": list(self.map.coefficients)},
            "interval": list(self.interval),
            "delta": self.delta_dense,
            "max_gap": self.max_gap,
            "witness_count": self.witness_count,
        }


def difference_map(angle: float) -> LinearMap:
    """S(x, y, x', y') = T_u(x - x', y - y') for u at the given angle."""
    sn, cs = math.sin(angle), math.cos(angle)
    return LinearMap((sn, -cs, -sn, cs))


@dataclass
class DirectionScan:
    best_index: int
    angle: float
    direction: tuple[float, float]
    max_gap: float
    witness_count: int
    directions_scanned: int
    interval: tuple[float, float]
    delta_dense: float
    certificate: DensityCertificate | None = None

    @property
    def certified(self) -> bool:
        return self.certificate is not None

    def to_json(self) -> dict:
        return {
            "best_index": self.best_index,
            "angle": self.angle,
            "direction": list(self.direction),
            "max_gap": self.max_gap,
            "witness_count": self.witness_count,
            "directions_scanned": self.directions_scanned,
            "interval": list(self.interval),
            "delta": self.delta_dense,
            "certified": self.certified,
        }


def gap_for_angle(index: StripIndex, angle: float, a: float, b: float) -> tuple[float, int]:
    return max_gap(index.projected_in(angle, a, b), a, b)


def direction_scan(F: PointCloud, interval: Sequence[float] = (0.0, 1.0),
                   delta_dense: float = 0.01, direction_count: int = DEFAULT_DIRECTIONS,
                   threads: int = 1) -> DirectionScan:
    """Max gap of T_u(F) on [a, b] for every scanned u; keeps the smallest.

    Ties go to the lower direction index, whatever the thread count.
    """
    if F.ambient_dim != 2:
        raise ValueError("direction_scan needs a 2-D cloud")
    if len(F) == 0:
        raise ValueError("direction_scan on an empty cloud")
    a, b = float(interval[0]), float(interval[1])
    if not a < b or not delta_dense > 0:
        raise ConfigError("need a < b and delta_dense > 0")
    index = StripIndex(F.points)
    angles = scan_angles(direction_count)

    def run(chunk):
        return [gap_for_angle(index, angles[j], a, b) for j in chunk]

    chunks = np.array_split(np.arange(direction_count), max(1, threads) * 4)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    results = [r for part in parts for r in part]
    gaps = np.array([g for g, _ in results])
    best = int(np.argmin(gaps))  # first minimum
    g, count = results[best]
    angle = float(angles[best])
    u = unit(angle)
    scan = DirectionScan(best, angle, u, g, count, direction_count, (a, b), delta_dense)
    if g <= delta_dense:
        scan.certificate = DensityCertificate(u, angle, difference_map(angle), (a, b),
                                              delta_dense, g, count)
    return scan


# --------------------------------------------------------------------------
# dichotomy


@dataclass
class DichotomyParams:
    direction_count: int = DEFAULT_DIRECTIONS
    s_grid: tuple = DEFAULT_S_GRID
    eps_grid: tuple = DEFAULT_EPS_GRID
    interval: tuple = (0.0, 1.0)
    delta_dense: float = 0.02
    resolution: float = RHO_DEDUP
    threads: int = 1
    seed: int = 0  # pair sampling in the wedge validation

    def to_json(self) -> dict:
        return {
            "direction_count": self.direction_count,
            "s_grid": list(self.s_grid),
            "eps_grid": list(self.eps_grid),
            "interval": list(self.interval),
            "delta": self.delta_dense,
            "resolution": self.resolution,
            "seed": self.seed,
        }


@dataclass
class DichotomyResult:
    branch: str  # "wedge", "density" or "inconclusive"
    window: float
    resolution: float
    diff_points: int
    wedge_certificate: WedgeCertificate | None = None
    qi_report: qi.QiReport | None = None
    scan: DirectionScan | None = None
    best_wedge: tuple[WedgeSpec, int] | None = None
    params: DichotomyParams = field(default_factory=DichotomyParams)

    @property
    def density_certificate(self) -> DensityCertificate | None:
        return None if self.scan is None else self.scan.certificate

    def to_json(self) -> dict:
        out = {
            "branch": self.branch,
            "window": self.window,
            "resolution": self.resolution,
            "diff_points": self.diff_points,
            "params": self.params.to_json(),
        }
        if self.wedge_certificate is not None:
            out["wedge_certificate"] = self.wedge_certificate.to_json()
        if self.qi_report is not None:
            out["qi_report"] = self.qi_report.to_json()
        if self.scan is not None:
            out["scan"] = self.scan.to_json()
            if self.scan.certificate is not None:
                out["density_certificate"] = self.scan.certificate.to_json()
        if self.best_wedge is not None:
            w, n = self.best_wedge
            out["best_wedge"] = {"wedge": w.to_json(), "intruders": n}
        return out


def square_and_differences(E: SetGenerator, window: float,
                           resolution: float) -> tuple[PointCloud, PointCloud]:
    """(F, F - F) where F = E^2 for 1-D E and F = E for 2-D E.

    F is truncated at window / 2 so its diameter stays below the window of
    the difference cloud.
    """
    if E.ambient_dim == 1:
        base = E.enumerate(window, resolution)
        d1 = difference_cloud(base, base, window)
        diff = power_cloud(d1, 2, window)
        square = power_cloud(base.restrict(window / 2), 2, window / 2)
    elif E.ambient_dim == 2:
        base = E.enumerate(window, resolution)
        diff = difference_cloud(base, base, window)
        square = base.restrict(window / 2)
    else:
        raise ValueError("dichotomy needs a 1-D or 2-D generator")
    return square, diff


def dichotomy(E: SetGenerator, window: float, params: DichotomyParams | None = None) -> DichotomyResult:
    """Either a wedge avoided by E^2 - E^2 (so T_u embeds E^2 quasi-isometrically)
    or a direction making T_u(E^2 - E^2) delta-dense on the interval."""
    params = params or DichotomyParams()
    if not window > 0:
        raise ValueError("window must be positive")
    square, diff = square_and_differences(E, window, params.resolution)
    res = DichotomyResult("inconclusive", window, params.resolution, len(diff), params=params)
    cert = avoidance_search(diff, params.direction_count, params.s_grid, params.eps_grid)
    if cert is not None:
        res.branch = "wedge"
        res.wedge_certificate = cert
        res.qi_report = qi_from_wedge(square, cert, max_pairs=VALIDATION_PAIRS, sample=True,
                                      seed=params.seed)
        return res
    res.scan = direction_scan(diff, params.interval, params.delta_dense,
                              params.direction_count, params.threads)
    if res.scan.certified:
        res.branch = "density"
        return res
    res.best_wedge = best_wedge(diff, params.direction_count, params.s_grid, params.eps_grid)
    return res
