"""Quasi-isometry checks on finite clouds and the perturbation experiment.

f : X -> Y is a (lam, delta)-quasi-isometry when

    ||x - x'|| / lam - delta <= ||f(x) - f(x')|| <= lam ||x - x'|| + delta

for all pairs and every y in Y lies within delta of f(X).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .covering import fit_slopes, grid_count_profile
from .errors import BudgetExceeded
from .setgen import MAX_PAIRS, PointCloud, SetGenerator, contains_origin, norms

MAX_VIOLATIONS = 100
SAMPLED_PAIRS = 10**6
REL_TOL = 1e-9


@dataclass(frozen=True)
class QiParams:
    lam: float
    delta: float

    def __post_init__(self):
        if not self.lam > 0 or not self.delta > 0:
            raise ValueError("QI constants must be positive")
        if self.lam < 1:
            object.__setattr__(self, "lam", 1.0)


@dataclass
class QiReport:
    holds: bool
    violating_pairs: list = field(default_factory=list)
    coarse_surjectivity_gap: float = 0.0
    violation_count: int = 0
    pairs_checked: int = 0
    exhaustive: bool = True
    params: tuple[float, float] | None = None

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "exhaustive": self.exhaustive,
            "pairs_checked": self.pairs_checked,
            "violation_count": self.violation_count,
            "coarse_surjectivity_gap": self.coarse_surjectivity_gap,
            "params": None if self.params is None else list(self.params),
            "violating_pairs": [
                {"x": x, "x_prime": xp, "lhs": lhs, "mid": mid, "rhs": rhs}
                for x, xp, lhs, mid, rhs in self.violating_pairs
            ],
        }


def _as_map(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    def apply(points):
        out = np.asarray(f(points), dtype=float)
        return out.reshape(len(points), -1)
    return apply


def pair_blocks(n: int, max_pairs: int, sample: bool, seed: int):
    total = n * (n - 1) // 2
    if total <= max_pairs:
        if n <= 4000:
            ii, jj = np.triu_indices(n, k=1)
            yield ii, jj
            return
        rows = max(1, 2_000_000 // n)
        for i0 in range(0, n, rows):
            i = np.repeat(np.arange(i0, min(n, i0 + rows)), n)
            j = np.tile(np.arange(n), min(n, i0 + rows) - i0)
            keep = j > i
            yield i[keep], j[keep]
        return
    if not sample:
        raise BudgetExceeded(f"{total} pairs exceed budget {max_pairs}; pass sample=True")
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, SAMPLED_PAIRS)
    j = rng.integers(0, n, SAMPLED_PAIRS)
    keep = i != j
    i, j = np.minimum(i[keep], j[keep]), np.maximum(i[keep], j[keep])
    order = np.lexsort((j, i))
    yield i[order], j[order]


class _WorstPairs:
    """Keeps the largest-excess violations with deterministic ordering."""

    def __init__(self, cap: int):
        self.cap = cap
        self.rows: list[tuple] = []
        self.count = 0

    def add(self, excess, i, j, lhs, mid, rhs):
        self.count += len(excess)
        if len(excess) == 0:
            return
        if len(excess) > self.cap:
            top = np.argpartition(-excess, self.cap - 1)[: self.cap]
            excess, i, j, lhs, mid, rhs = excess[top], i[top], j[top], lhs[top], mid[top], rhs[top]
        self.rows.extend(zip(excess.tolist(), i.tolist(), j.tolist(),
                             lhs.tolist(), mid.tolist(), rhs.tolist()))
        self.rows.sort(key=lambda r: (-r[0], r[1], r[2]))
        del self.rows[self.cap:]

    def report(self, points: np.ndarray) -> list:
        """The kept violations in lexicographic pair order."""
        out = []
        for _, i, j, lhs, mid, rhs in sorted(self.rows, key=lambda r: (r[1], r[2])):
            out.append((_coords(points[i]), _coords(points[j]), lhs, mid, rhs))
        return out


def _coords(p):
    p = p.tolist()
    return p[0] if len(p) == 1 else p


def verify_qi(X: PointCloud, Y: PointCloud, f: Callable, params: QiParams, *,
              max_pairs: int = MAX_PAIRS, sample: bool = False, seed: int = 0,
              max_violations: int = MAX_VIOLATIONS) -> QiReport:
    """Exhaustive (or, beyond the pair budget, sampled) QI check.

    Violations are ranked by how far the middle term falls outside
    [lhs, rhs]; the first ``max_violations`` are kept.
    """
    fx = _as_map(f)(X.points)
    lam, delta = params.lam, params.delta
    worst = _WorstPairs(max_violations)
    checked = 0
    total = len(X) * (len(X) - 1) // 2
    exhaustive = total <= max_pairs
    for i, j in pair_blocks(len(X), max_pairs, sample, seed):
        dx = norms(X.points[i] - X.points[j])
        df = norms(fx[i] - fx[j])
        lhs = dx / lam - delta
        rhs = lam * dx + delta
        tol = REL_TOL * (1.0 + dx)
        excess = np.maximum(lhs - df, df - rhs)
        bad = excess > tol
        worst.add(excess[bad], i[bad], j[bad], lhs[bad], df[bad], rhs[bad])
        checked += len(i)
    gap = 0.0
    if len(Y) and len(fx):
        dist, _ = cKDTree(fx).query(Y.points)
        gap = float(np.max(dist))
    elif len(Y):
        gap = float("inf")
    holds = worst.count == 0 and gap < delta
    return QiReport(holds, worst.report(X.points), gap, worst.count, checked,
                    exhaustive, (lam, delta))


def _pair_distances(X: PointCloud, f: Callable, max_pairs: int):
    fx = _as_map(f)(X.points)
    total = len(X) * (len(X) - 1) // 2
    if total > max_pairs:
        raise BudgetExceeded(f"{total} pairs exceed budget {max_pairs}")
    i, j = np.triu_indices(len(X), k=1)
    return norms(X.points[i] - X.points[j]), norms(fx[i] - fx[j])


def embedding_holds(dx: np.ndarray, df: np.ndarray, lam: float, delta: float) -> bool:
    tol = REL_TOL * (1.0 + dx)
    return bool(np.all(df >= dx / lam - delta - tol) and np.all(df <= lam * dx + delta + tol))


def min_lambda_profile(X: PointCloud, f: Callable, delta_grid: Sequence[float],
                       tol: float = 1e-3, lam_max: float = 1e6,
                       max_pairs: int = 10**7) -> list[tuple[float, float | None]]:
    """Smallest lam (bisection to ``tol``) making both QI inequalities hold.

    ``None`` marks a delta at which no lam <= lam_max works.
    """
    grid = [float(d) for d in delta_grid]
    if any(d <= 0 for d in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("delta_grid must be positive and increasing")
    dx, df = _pair_distances(X, f, max_pairs)
    out = []
    for delta in grid:
        if not embedding_holds(dx, df, lam_max, delta):
            out.append((delta, None))
            continue
        lo, hi = 1.0, lam_max
        if embedding_holds(dx, df, 1.0, delta):
            out.append((delta, 1.0))
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if embedding_holds(dx, df, mid, delta):
                hi = mid
            else:
                lo = mid
        out.append((delta, hi))
    return out


@dataclass
class PerturbationReport:
    seed: int
    perturbation_bound: float
    slope_original: float
    slope_perturbed: float
    qi_constants: tuple[float, float]

    @property
    def slope_difference(self) -> float:
        return abs(self.slope_perturbed - self.slope_original)


def perturb(points: np.ndarray, bound: float, seed: int) -> np.ndarray:
    """x -> x + eta(x) with ||eta|| <= bound and eta(0) = 0.

    eta is drawn once per point in canonical order from the seeded stream.
    """
    rng = np.random.default_rng(seed)
    d = points.shape[1]
    eta = rng.uniform(-bound, bound, size=points.shape) / np.sqrt(d)
    eta[np.all(points == 0.0, axis=1)] = 0.0
    return points + eta


def qi_dimension_experiment(gen: SetGenerator, perturbation_bound: float,
                            radii: Sequence[float], seed: int) -> PerturbationReport:
    """Slope of N(B(r) ∩ Z) before and after a bounded random perturbation.

    The perturbation is a (1, 2 * bound)-quasi-isometry fixing 0, so the two
    slopes should agree up to finite-scale error.
    """
    if not 0 <= perturbation_bound < 0.5:
        raise ValueError("perturbation_bound must lie in [0, 1/2)")
    if not contains_origin(gen):
        raise ValueError(f"{gen.to_sexpr()} does not contain 0")
    radii = [float(r) for r in radii]
    X = gen.enumerate(radii[-1] + perturbation_bound + 1e-9)
    Y = perturb(X.points, perturbation_bound, seed)
    base = grid_count_profile(X.points, radii)
    moved = grid_count_profile(Y, radii)
    s0, _ = fit_slopes(radii, base)
    s1, _ = fit_slopes(radii, moved)
    return PerturbationReport(seed, perturbation_bound, s0, s1, (1.0, 2 * perturbation_bound))
