"""Dimension amplification and the coordinate-projection bound.

The working set is always F = T(E^n) for an explicit coefficient vector T.
Each round runs the dichotomy on F:

* density branch: S_u(F^4) is delta-dense on the interval; the composed map
  over E^(4n) is returned as a certificate;
* wedge branch: T_u restricted to F^2 is a quasi-isometric embedding, so
  F <- T_u(F^2) roughly doubles the coarse dimension and n doubles.

Non-density after max_iterations rounds proves nothing about E; the loop is a
finite-scale search, not a decision procedure.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import certs
from .covering import FIT_TOLERANCE, DimensionEstimate, estimate_from_cloud
from .errors import BudgetExceeded, CertificateInvalid, CoarseDimError, ConfigError
from .setgen import (LinearImage, LinearMap, PointCloud, Power, SetGenerator, Translate,
                     contains_origin, norms)
from .wedge import DichotomyParams, DichotomyResult, dichotomy

log = logging.getLogger(__name__)

MAX_ARITY = 16
TARGET_POINTS = 100_000
ESTIMATE_RADII = 8


class ArityBudgetExceeded(BudgetExceeded):
    """Composing another quasi-isometric step would push the arity past the cap."""


class AmplificationInconclusive(CoarseDimError):
    """Neither dichotomy branch certified; carries the state reached so far."""

    def __init__(self, message: str, state: "AmplificationState"):
        super().__init__(message)
        self.state = state


@dataclass
class AmplificationState:
    generator: str
    base: SetGenerator
    current_set: SetGenerator
    current_map: LinearMap
    iteration: int = 0
    status: str = "running"  # "density", "exhausted", "inconclusive"
    dim_history: list[DimensionEstimate | None] = field(default_factory=list)
    certificates: list[DichotomyResult] = field(default_factory=list)
    provenance: list[dict] = field(default_factory=list)
    document: dict | None = None

    @property
    def arity(self) -> int:
        return self.current_map.arity

    @property
    def best_slope(self) -> float | None:
        slopes = [d.slope_ols for d in self.dim_history if d is not None]
        return max(slopes) if slopes else None

    def to_json(self) -> dict:
        return {
            "schema": certs.SCHEMA,
            "kind": self.status,
            "generator": self.generator,
            "base": self.base.to_sexpr(),
            "set": self.current_set.to_sexpr(),
            "set_coefficients": list(self.current_map.coefficients),
            "iterations": self.iteration,
            "best_slope": self.best_slope,
            "certificate": self.document,
            "provenance": list(self.provenance),
        }


def anchored(E: SetGenerator, window: float, resolution: float) -> SetGenerator:
    """E itself if 0 is in E, else E translated by its point nearest 0.

    Translation does not change whether some T(E^n) is dense once T is
    allowed a difference form, and every certificate map is one.
    """
    if contains_origin(E):
        return E
    cloud = E.enumerate(window, resolution)
    if len(cloud) == 0:
        raise ConfigError(f"{E.to_sexpr()} has no points within window {window}")
    p = cloud.points[int(np.argmin(norms(cloud.points)))]
    return Translate(E, tuple(float(-c) for c in p))


def _estimate(cloud, window) -> DimensionEstimate | None:
    if window <= 2:
        return None
    radii = np.geomspace(2.0, window, ESTIMATE_RADII)
    try:
        return estimate_from_cloud(cloud, radii, with_cover=False)
    except CoarseDimError:
        return None


def _next_window(F: SetGenerator, cap: float, resolution: float, target: int) -> float:
    """Largest window <= cap with about ``target`` points of F inside."""
    cloud = F.enumerate(cap, resolution)
    if len(cloud) <= target:
        return cap
    r = np.sort(norms(cloud.points))
    return float(max(r[target], resolution))


def amplify(E: SetGenerator, window: float, max_iterations: int = 4, delta_dense: float = 0.02,
            params: DichotomyParams | None = None, target_points: int = TARGET_POINTS,
            max_arity: int = MAX_ARITY) -> AmplificationState:
    """Runs the amplification loop; the returned state has status "density"
    (with ``state.document`` a verified certificate) or "exhausted".

    Raises AmplificationInconclusive when a round certifies neither branch and
    ArityBudgetExceeded when a wedge round would exceed ``max_arity``.
    """
    if max_iterations < 1:
        raise ConfigError("max_iterations must be >= 1")
    if E.ambient_dim != 1:
        raise ConfigError("amplify works on subsets of R")
    if not window > 0 or not delta_dense > 0:
        raise ConfigError("window and delta_dense must be positive")
    params = replace(params or DichotomyParams(), delta_dense=delta_dense)
    # the working resolution never needs to be finer than the density target
    resolution = max(params.resolution, delta_dense / 4)
    params = replace(params, resolution=resolution)
    base = anchored(E, window, resolution)
    state = AmplificationState(E.to_sexpr(), base, base, LinearMap((1.0,)))
    F, w = base, float(window)
    prev_slope = None
    while state.iteration < max_iterations:
        state.iteration += 1
        cloud = F.enumerate(w, resolution)
        est = _estimate(cloud, w)
        state.dim_history.append(est)
        entry = {"iteration": state.iteration, "arity": state.arity, "window": w,
                 "points": len(cloud), "slope": None if est is None else est.slope_ols}
        if est is not None and prev_slope is not None:
            entry["doubling_ok"] = doubling_holds(prev_slope, est.slope_ols)
        if len(cloud) <= 1:
            entry["branch"] = "degenerate"
            state.provenance.append(entry)
            log.info("iteration %d: working set is a single point", state.iteration)
            break
        result = dichotomy(F, w, params)
        state.certificates.append(result)
        entry["branch"] = result.branch
        state.provenance.append(entry)
        log.info("iteration %d: arity %d, window %g, %d points, branch %s",
                 state.iteration, state.arity, w, len(cloud), result.branch)
        if result.branch == "density":
            doc = certs.density_document(
                generator=state.generator, base=base.to_sexpr(), set_expr=F.to_sexpr(),
                set_coefficients=state.current_map.coefficients, scan=result.scan,
                window=w, resolution=resolution, provenance=state.provenance,
                iterations=state.iteration)
            check = certs.verify_density(doc)
            if not check.passed:
                raise CertificateInvalid("density certificate failed replay: "
                                         + "; ".join(check.reasons))
            state.status = "density"
            state.document = doc
            return state
        if result.branch == "inconclusive":
            state.status = "inconclusive"
            raise AmplificationInconclusive(
                f"dichotomy inconclusive at iteration {state.iteration}", state)
        if 2 * state.arity > max_arity:
            raise ArityBudgetExceeded(f"arity {2 * state.arity} exceeds cap {max_arity}")
        cert = result.wedge_certificate
        u = cert.wedge.direction
        perp = (u[1], -u[0])
        lam = 1.0 + cert.cone_slope
        s = cert.wedge.inner_radius
        F = LinearImage(Power(F, 2), perp, expansion=lam, slack=lam * s)
        c = state.current_map.coefficients
        state.current_map = LinearMap(tuple(perp[0] * x for x in c) + tuple(perp[1] * x for x in c))
        state.current_set = F
        prev_slope = None if est is None else est.slope_ols
        # stay inside the range on which the wedge certificate was checked
        cap = w / (2 * lam) - s
        cap = cap if cap > resolution else w
        w = _next_window(F, cap, resolution, target_points)
    state.status = "exhausted"
    return state


# --------------------------------------------------------------------------
# coordinate projections


@dataclass
class ProjectionBoundReport:
    dim_total: float
    dim_coordinates: list[float]
    tolerance: float

    @property
    def bound(self) -> float:
        return sum(self.dim_coordinates) + self.tolerance

    @property
    def holds(self) -> bool:
        return self.dim_total <= self.bound

    def to_json(self) -> dict:
        return {"dim_total": self.dim_total, "dim_coordinates": list(self.dim_coordinates),
                "tolerance": self.tolerance, "bound": self.bound, "holds": self.holds}


def coordinate_projection_bound(Z: SetGenerator, radii: Sequence[float],
                                tolerance: float | None = None) -> ProjectionBoundReport:
    """Compares the slope of Z with the sum of the slopes of its coordinate
    projections; Z sits inside the product of its projections.

    Projections are taken of Z ∩ B(r), which can only shrink them.
    """
    n = Z.ambient_dim
    if n < 2:
        raise ConfigError("coordinate_projection_bound needs ambient_dim >= 2")
    radii = [float(r) for r in radii]
    cloud = Z.enumerate(radii[-1])
    total = estimate_from_cloud(cloud, radii, with_cover=False).slope_ols
    coords = []
    for k in range(n):
        proj = cloud.points[:, [k]]
        pk = PointCloud.from_points(proj, radii[-1], 1, cloud.resolution)
        coords.append(_slope_or_zero(pk, radii))
    tol = FIT_TOLERANCE * n if tolerance is None else tolerance
    return ProjectionBoundReport(total, coords, tol)


def _slope_or_zero(cloud, radii) -> float:
    try:
        return estimate_from_cloud(cloud, radii, with_cover=False).slope_ols
    except CoarseDimError:
        return 0.0


def doubling_holds(before: float, after: float, tolerance: float = FIT_TOLERANCE) -> bool:
    return math.isclose(after, 2 * before, abs_tol=2 * tolerance)
