"""Certificate documents and their replay.

A certificate is a plain JSON document that names its generator by
s-expression, so it can be re-enumerated from scratch and checked without
trusting the run that produced it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import qi
from .errors import CertificateInvalid, CoarseDimError
from .setgen import LinearImage, Power, SetGenerator
from .sexpr import parse_generator
from .wedge import (VALIDATION_PAIRS, WedgeCertificate, difference_map, max_gap,
                    projection, qi_from_wedge, square_and_differences, unit, wedge_contains)

SCHEMA = 1
COEFF_TOL = 1e-12
GAP_TOL = 1e-12


def dumps(doc: dict) -> str:
    """Canonical JSON: sorted keys, repr floats, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def chain_coefficients(F: SetGenerator, base: SetGenerator) -> tuple[float, ...]:
    """Coefficients c with F = {<c, x> : x in base^n} for an amplification chain.

    The chain is base, then repeatedly LinearImage(Power(prev, 2), (a, b)).
    """
    if F == base:
        return (1.0,)
    if isinstance(F, LinearImage) and isinstance(F.child, Power) and F.child.k == 2:
        a, b = F.coefficients
        c = chain_coefficients(F.child.child, base)
        return tuple(a * x for x in c) + tuple(b * x for x in c)
    raise CertificateInvalid(f"{F.to_sexpr()} is not an amplification chain over {base.to_sexpr()}")


def flatten(S, set_coefficients) -> tuple[float, ...]:
    """Coefficients of S(x, y, x', y') with each slot a copy of T(E^n)."""
    c = tuple(set_coefficients)
    return tuple(s * x for s in S.coefficients for x in c)


@dataclass
class VerifyReport:
    passed: bool
    kind: str
    reasons: list[str] = field(default_factory=list)
    recomputed: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"passed": self.passed, "kind": self.kind, "reasons": list(self.reasons),
                "recomputed": dict(self.recomputed)}


def _close(a, b, tol) -> bool:
    return len(a) == len(b) and all(abs(x - y) <= tol for x, y in zip(a, b))


def replay_density(F: SetGenerator, window: float, resolution: float, angle: float,
                   interval) -> tuple[float, int]:
    """Max gap and witness count of T_u(F^2 - F^2) on the interval, from scratch."""
    _, diff = square_and_differences(F, window, resolution)
    vals = projection(unit(angle), diff.points)
    return max_gap(vals, float(interval[0]), float(interval[1]))


def verify_density(doc: dict) -> VerifyReport:
    """Checks a density certificate.

    * the map is S_u flattened through the chain of the working set;
    * a fresh enumeration reproduces the recorded gap and witness count;
    * the gap is at most delta.
    """
    rep = VerifyReport(True, "density")
    base = parse_generator(doc["base"])
    F = parse_generator(doc["set"])
    angle = float(doc["angle"])
    chain = chain_coefficients(F, base) if F.ambient_dim == 1 else None
    if chain is not None and not _close(chain, doc["set_coefficients"], COEFF_TOL):
        rep.reasons.append("set_coefficients do not match the set expression")
    S = difference_map(angle)
    expected = S.coefficients if chain is None else flatten(S, chain)
    if not _close(expected, doc["map"]["coefficients"], COEFF_TOL):
        rep.reasons.append("map coefficients do not match the recorded direction and chain")
    if not _close(unit(angle), doc["direction"], COEFF_TOL):
        rep.reasons.append("direction does not match angle")
    gap, count = replay_density(F, doc["window"], doc["resolution"], angle, doc["interval"])
    rep.recomputed = {"max_gap": gap, "witness_count": count}
    if abs(gap - doc["max_gap"]) > GAP_TOL:
        rep.reasons.append(f"recomputed max gap {gap!r} != recorded {doc['max_gap']!r}")
    if count != doc["witness_count"]:
        rep.reasons.append(f"recomputed witness count {count} != recorded {doc['witness_count']}")
    if gap > doc["delta"]:
        rep.reasons.append(f"max gap {gap!r} exceeds delta {doc['delta']!r}")
    rep.passed = not rep.reasons
    return rep


def verify_wedge(doc: dict) -> VerifyReport:
    """Re-enumerates the difference cloud, checks it avoids the wedge, and
    re-runs the pairwise QI check on the square."""
    rep = VerifyReport(True, "wedge")
    gen = parse_generator(doc["generator"])
    cert = WedgeCertificate.from_json(doc["wedge_certificate"])
    square, diff = square_and_differences(gen, cert.window, cert.resolution)
    inside = wedge_contains(cert.wedge, diff.points)
    rep.recomputed = {"checked_points": len(diff), "intruders": int(np.count_nonzero(inside))}
    if len(diff) != cert.checked_points:
        rep.reasons.append(f"difference cloud has {len(diff)} points, "
                           f"certificate checked {cert.checked_points}")
    if np.any(inside):
        rep.reasons.append(f"{int(np.count_nonzero(inside))} difference points lie inside the wedge")
    else:
        try:
            report = qi_from_wedge(square, cert, max_pairs=VALIDATION_PAIRS, sample=True)
        except CertificateInvalid as exc:
            rep.reasons.append(str(exc))
        else:
            rep.recomputed["qi_violations"] = report.violation_count
            if not report.holds:
                rep.reasons.append(f"{report.violation_count} pairs violate the QI bound")
    rep.passed = not rep.reasons
    return rep


def verify_document(doc: dict) -> VerifyReport:
    if doc.get("schema") != SCHEMA:
        return VerifyReport(False, "unknown", [f"unsupported schema {doc.get('schema')!r}"])
    kind = doc.get("kind")
    try:
        if kind == "density":
            return verify_density(doc)
        if kind == "wedge":
            return verify_wedge(doc)
    except (CoarseDimError, KeyError, TypeError, ValueError) as exc:
        return VerifyReport(False, str(kind), [f"{type(exc).__name__}: {exc}"])
    return VerifyReport(False, str(kind), [f"nothing to verify for kind {kind!r}"])


def density_document(*, generator: str, base: str, set_expr: str, set_coefficients,
                     scan, window: float, resolution: float, provenance=None,
                     **extra) -> dict:
    cert = scan.certificate
    coeffs = list(cert.map.coefficients) if set_coefficients is None else \
        list(flatten(cert.map, set_coefficients))
    doc = {
        "schema": SCHEMA,
        "kind": "density",
        "generator": generator,
        "base": base,
        "set": set_expr,
        "set_coefficients": None if set_coefficients is None else list(set_coefficients),
        "map": {"coefficients": coeffs, "arity": len(coeffs)},
        "angle": cert.angle,
        "direction": list(cert.direction),
        "orientation": "u_perp = (u2, -u1)",
        "interval": list(cert.interval),
        "delta": cert.delta_dense,
        "max_gap": cert.max_gap,
        "witness_count": cert.witness_count,
        "window": window,
        "resolution": resolution,
        "provenance": list(provenance or []),
    }
    doc.update(extra)
    return doc


def wedge_document(*, generator: str, cert: WedgeCertificate, qi_report: qi.QiReport,
                   **extra) -> dict:
    doc = {
        "schema": SCHEMA,
        "kind": "wedge",
        "generator": generator,
        "orientation": "u_perp = (u2, -u1)",
        "wedge_certificate": cert.to_json(),
        "qi_report": qi_report.to_json(),
    }
    doc.update(extra)
    return doc

