"""Acceptance criteria, one check per criterion.

Each ``criterion_N`` returns (passed, detail).  Under pytest the lines are
collected and printed in the terminal summary; ``python tests/test_acceptance.py``
prints them directly.
"""
from __future__ import annotations

import json
import math
import tempfile
import time
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, getcontext
from pathlib import Path

import numpy as np
import pytest

from coarsedim import cli
from coarsedim import setgen as sg
from coarsedim.amplify import coordinate_projection_bound
from coarsedim.covering import check_fact_metric0, check_fact_metric1, dyadic_radii
from coarsedim.errors import CertificateInvalid
from coarsedim.qi import qi_dimension_experiment
from coarsedim.wedge import (WedgeCertificate, WedgeSpec, avoidance_search, max_gap,
                             qi_from_wedge)

RESULTS: list[str] = []

getcontext().prec = 60
SQRT2 = Decimal(2).sqrt()


def _run(**kw):
    with tempfile.TemporaryDirectory() as d:
        out = Path(d) / "out.json"
        cfg = cli.RunConfig(out=str(out), **kw)
        _, code = cli.run(cfg)
        return code, (json.loads(out.read_text()) if out.exists() else None), \
            (out.read_bytes() if out.exists() else b"")


def _timed_dim(gen, radii):
    t0 = time.perf_counter()
    code, doc, _ = _run(command="dim", gen=gen, radii=radii)
    return code, doc["estimate"], time.perf_counter() - t0


def _decimal_gap(values, a=0.0, b=1.0):
    v = np.unique(np.array([float(x) for x in values] + [a, b]))
    v = v[(v >= a) & (v <= b)]
    return float(np.max(np.diff(v)))


def _dense_pairs_oracle(A, B):
    """{a + sqrt2 * b in [0, 1] : a in A, b in B} with 60-digit arithmetic.

    For each b only the integers a in [-sqrt2 b, 1 - sqrt2 b] can contribute.
    """
    A = set(A)
    out = []
    for b in B:
        t = SQRT2 * b
        lo = int((-t).to_integral_value(ROUND_CEILING))
        hi = int((1 - t).to_integral_value(ROUND_FLOOR))
        for a in range(lo, hi + 1):
            if a in A:
                out.append(a + t)
    return out


def criterion_1():
    code, est, dt = _timed_dim("(integers)", "dyadic:6..16")
    ok = code == 0 and 0.99 <= est["slope_ols"] <= 1.01 and dt < 1.0
    return ok, f"slope_ols={est['slope_ols']:.6f} runtime={dt:.3f}s"


def criterion_2():
    code, est, dt = _timed_dim("(powersplusindex)", "dyadic:10..30")
    ok = code == 0 and est["slope_ols"] <= 0.15 and est["slope_tail"] <= 0.08 and dt < 1.0
    return ok, (f"slope_ols={est['slope_ols']:.6f} slope_tail={est['slope_tail']:.6f} "
                f"runtime={dt:.3f}s")


def criterion_3():
    worst = 0.0
    for a, b in [(1, 10), (1, 4), (2, 12), (3, 20)]:
        code, est, _ = _timed_dim("(reciprocals)", f"dyadic:{a}..{b}")
        worst = max(worst, est["slope_ols"])
    return worst <= 0.01, f"max slope_ols over schedules with r >= 2: {worst:.6f}"


def criterion_4():
    t0 = time.perf_counter()
    D = sg.PowersPlusIndex().enumerate(2.0**40 + 41)
    S = sg.LinearMap((1.0, -1.0, math.sqrt(2), -math.sqrt(2)))
    img = sg.image_of_power(S, D, 1.0)
    gap, _ = max_gap(img.values, 0.0, 1.0)
    dt = time.perf_counter() - t0
    d = sorted({v for n in range(41) for v in (2**n, 2**n + n)})
    dd = sorted({x - y for x in d for y in d})
    oracle = _decimal_gap(_dense_pairs_oracle(dd, dd))
    ok = gap <= 0.05 and oracle <= 0.05 and abs(gap - oracle) <= 1e-3 and dt < 5.0
    return ok, f"max_gap={gap:.6f} oracle={oracle:.6f} runtime={dt:.3f}s"


def criterion_5():
    t0 = time.perf_counter()
    E = sg.Integers().enumerate(1000.5)
    img = sg.image_of_power(sg.LinearMap((1.0, math.sqrt(2))), E, 1.0)
    gap, _ = max_gap(img.values, 0.0, 1.0)
    dt = time.perf_counter() - t0
    oracle = _decimal_gap(_dense_pairs_oracle(range(-1000, 1001), range(-1000, 1001)))
    ok = gap <= 0.01 and abs(gap - oracle) <= 1e-9 and dt < 5.0
    return ok, f"max_gap={gap:.6f} oracle={oracle:.6f} runtime={dt:.3f}s"


def fact_battery(count=100):
    """Seeded random finite sets in R^1 and R^2 with random scale pairs."""
    for seed in range(count):
        rng = np.random.default_rng(seed)
        dx, dy = 1 + seed % 2, 1 + (seed // 2) % 2
        X = rng.uniform(0, 20, (int(rng.integers(5, 40)), dx))
        Y = rng.uniform(0, 20, (int(rng.integers(5, 25)), dy))
        delta = float(rng.uniform(0.3, 1.5))
        yield (sg.PointCloud.from_points(X, math.inf, dx), sg.PointCloud.from_points(Y, math.inf, dy),
               delta, delta * float(rng.uniform(1.2, 4.0)))


def criterion_6():
    hard = inconclusive = total = 0
    for X, Y, delta, delta_p in fact_battery():
        rep = check_fact_metric0(X, Y, delta, delta_p)
        hard += rep.hard_failures
        inconclusive += rep.inconclusive
        total += len(rep.checks)
    return hard == 0, (f"hard_failures={hard} inconclusive={inconclusive}/{total} "
                       f"({inconclusive / total:.1%})")


def criterion_7():
    rep = check_fact_metric1(sg.Integers(), 2, dyadic_radii(4, 10))
    return abs(rep.slope_power - 2.0) <= 0.05, f"slope(Z^2)={rep.slope_power:.6f}"


def criterion_8():
    diffs = [qi_dimension_experiment(sg.Integers(), 0.4, dyadic_radii(6, 14), seed).slope_difference
             for seed in range(20)]
    return max(diffs) <= 0.05, f"max |slope difference| over 20 seeds = {max(diffs):.6f}"


def _rejected(cert, spec_kwargs, F):
    try:
        wider = WedgeCertificate(WedgeSpec(**spec_kwargs), cert.checked_points, cert.window,
                                 cert.resolution)
        qi_from_wedge(F, wider)
    except (CertificateInvalid, ValueError):
        return True
    return False


def criterion_9():
    t = np.arange(-500, 501.0)
    F = sg.PointCloud.from_points(np.c_[t, t / 2], 1200, 2)
    diff = sg.difference_cloud(F, F, 1200)
    cert = avoidance_search(diff)
    if cert is None:
        return False, "no wedge found"
    rep = qi_from_wedge(F, cert)
    w = cert.wedge
    default_rejected = _rejected(cert, dict(direction=w.direction, inner_radius=w.inner_radius,
                                            aperture=2 * w.aperture), F)
    narrow = avoidance_search(diff, eps_grid=(0.4,))
    n = narrow.wedge
    narrow_rejected = _rejected(narrow, dict(direction=n.direction, inner_radius=n.inner_radius,
                                             aperture=2 * n.aperture), F)
    ok = rep.holds and rep.violation_count == 0 and default_rejected and narrow_rejected
    return ok, (f"eps={w.aperture} s={w.inner_radius} lam_cone={cert.cone_slope:.4f} "
                f"pairs={rep.pairs_checked} violations={rep.violation_count} "
                f"mutated rejected: {default_rejected}/{narrow_rejected}")


def criterion_10():
    with tempfile.TemporaryDirectory() as d:
        out = Path(d) / "cert.json"
        _, code = cli.run(cli.RunConfig(command="amplify", gen="(integers)", out=str(out)))
        doc = json.loads(out.read_text())
        _, vcode = cli.run(cli.RunConfig(command="verify", certificate=str(out),
                                         out=str(Path(d) / "v.json")))
    ok_int = (code == 0 and doc["kind"] == "density" and doc["iterations"] <= 2
              and doc["max_gap"] <= 0.02 and doc["map"]["arity"] <= 4 and vcode == 0)
    rcode, rdoc, _ = _run(command="amplify", gen="(reciprocals)", delta=0.01)
    ok_rec = rdoc["kind"] == "exhausted" and rdoc["certificate"] is None
    return ok_int and ok_rec, (f"integers: iterations={doc['iterations']} arity={doc['map']['arity']} "
                               f"max_gap={doc['max_gap']:.6f} verify_exit={vcode}; "
                               f"reciprocals: {rdoc['kind']} after {rdoc['iterations']} iterations")


def criterion_11():
    radii = dyadic_radii(4, 10)
    line = coordinate_projection_bound(sg.Product((sg.Integers(), sg.ExplicitList((0.0,)))), radii,
                                       tolerance=0.1)
    plane = coordinate_projection_bound(sg.Power(sg.Integers(), 2), radii)
    ok = line.holds and plane.dim_total <= 2.1
    return ok, (f"dim(Zx0)={line.dim_total:.4f} <= {sum(line.dim_coordinates):.4f}+0.1; "
                f"dim(Z^2)={plane.dim_total:.4f}")


BATTERY = [
    dict(command="dim", gen="(integers)", radii="dyadic:6..16"),
    dict(command="dim", gen="(powersplusindex)", radii="dyadic:10..30"),
    dict(command="dim", gen="(reciprocals)"),
    dict(command="wedge", gen="(integers)"),
    dict(command="wedge", gen="(integers)", threads=4),
    dict(command="wedge", gen="(list 0)"),
    dict(command="wedge", gen="(scale (integers) 1 0.5)", window=300.0),
    dict(command="amplify", gen="(integers)"),
    dict(command="amplify", gen="(reciprocals)", delta=0.01),
    dict(command="amplify", gen="(powersplusindex)"),
]


def criterion_12():
    mismatched = []
    for cfg in BATTERY:
        first = _run(**cfg)[2]
        second = _run(**cfg)[2]
        if not first or first != second:
            mismatched.append(cfg)
    return not mismatched, f"{len(BATTERY) - len(mismatched)}/{len(BATTERY)} runs byte-identical"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def _line(i, ok, detail):
    return f"criterion {i:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("index", range(1, len(CRITERIA) + 1))
def test_criterion(index):
    ok, detail = CRITERIA[index - 1]()
    RESULTS.append(_line(index, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for i, fn in enumerate(CRITERIA, 1):
        print(_line(i, *fn()), flush=True)
