"""Command line: ``coarsedim {dim,wedge,amplify,verify}``.

Every command writes one JSON document (sorted keys, schema 1) to --out or
stdout.  Exit codes: 0 success, 1 inconclusive or failed verification,
2 input error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import certs
from .amplify import AmplificationInconclusive, amplify
from .cloudio import atomic_write
from .covering import dimension_estimate, dyadic_radii
from .errors import BudgetExceeded, CoarseDimError, ConfigError, InsufficientData
from .setgen import RHO_DEDUP
from .sexpr import parse_generator
from .wedge import DEFAULT_DIRECTIONS, DichotomyParams, dichotomy

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
log = logging.getLogger("coarsedim")

_DYADIC = re.compile(r"dyadic:(-?\d+)\.\.(-?\d+)")


def parse_radii(text: str) -> list[float]:
    """``dyadic:a..b`` for 2^a..2^b, or a comma-separated list."""
    m = _DYADIC.fullmatch(text.strip())
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if b < a:
            raise ConfigError(f"empty dyadic range {text!r}")
        return dyadic_radii(a, b)
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad radii {text!r}; use dyadic:a..b or r1,r2,...") from None


def parse_interval(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"bad interval {text!r}; use a,b") from None
    return a, b


@dataclass
class RunConfig:
    command: str
    gen: str | None = None
    radii: str = "dyadic:1..10"
    window: float = 500.0
    delta: float | None = None
    directions: int = DEFAULT_DIRECTIONS
    seed: int = 0
    threads: int = 1
    resolution: float = RHO_DEDUP
    max_iterations: int = 4
    interval: str = "0,1"
    no_cover: bool = False
    certificate: str | None = None
    out: str | None = None
    csv: str | None = None

    def recorded(self) -> dict:
        """The part of the config that determines the output (paths excluded)."""
        d = asdict(self)
        for k in ("out", "csv", "threads"):
            d.pop(k)
        return d


def cmd_dim(cfg: RunConfig) -> tuple[dict, int]:
    gen = parse_generator(cfg.gen)
    radii = parse_radii(cfg.radii)
    delta = 1.0 if cfg.delta is None else cfg.delta
    est = dimension_estimate(gen, radii, delta, cfg.resolution, with_cover=not cfg.no_cover)
    if cfg.csv:
        atomic_write(cfg.csv, est.counts.to_csv())
    doc = {"schema": certs.SCHEMA, "kind": "dimension", "generator": gen.to_sexpr(),
           "config": cfg.recorded(), "estimate": est.to_json()}
    return doc, EXIT_OK


def _dichotomy_params(cfg: RunConfig, delta_default: float) -> DichotomyParams:
    return DichotomyParams(direction_count=cfg.directions,
                           interval=parse_interval(cfg.interval),
                           delta_dense=delta_default if cfg.delta is None else cfg.delta,
                           resolution=cfg.resolution, threads=cfg.threads,
                           seed=cfg.seed)


def cmd_wedge(cfg: RunConfig) -> tuple[dict, int]:
    gen = parse_generator(cfg.gen)
    params = _dichotomy_params(cfg, 0.02)
    res = dichotomy(gen, cfg.window, params)
    common = {"config": cfg.recorded(), "dichotomy": res.to_json()}
    if res.branch == "wedge":
        return certs.wedge_document(generator=gen.to_sexpr(), cert=res.wedge_certificate,
                                    qi_report=res.qi_report, **common), EXIT_OK
    if res.branch == "density":
        chain = (1.0,) if gen.ambient_dim == 1 else None
        expr = gen.to_sexpr()
        return certs.density_document(generator=expr, base=expr, set_expr=expr,
                                      set_coefficients=chain, scan=res.scan,
                                      window=cfg.window, resolution=cfg.resolution,
                                      **common), EXIT_OK
    doc = {"schema": certs.SCHEMA, "kind": "inconclusive", "generator": gen.to_sexpr(), **common}
    return doc, EXIT_INCONCLUSIVE


def cmd_amplify(cfg: RunConfig) -> tuple[dict, int]:
    gen = parse_generator(cfg.gen)
    params = _dichotomy_params(cfg, 0.02)
    try:
        state = amplify(gen, cfg.window, cfg.max_iterations, params.delta_dense, params)
    except AmplificationInconclusive as exc:
        doc = exc.state.to_json()
        doc["config"] = cfg.recorded()
        return doc, EXIT_INCONCLUSIVE
    if state.document is not None:
        doc = dict(state.document)
        doc["config"] = cfg.recorded()
        return doc, EXIT_OK
    doc = state.to_json()
    doc["config"] = cfg.recorded()
    return doc, EXIT_INCONCLUSIVE


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    try:
        doc = json.loads(Path(cfg.certificate).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read certificate {cfg.certificate}: {exc}") from None
    rep = certs.verify_document(doc)
    out = {"schema": certs.SCHEMA, "kind": "verification", **rep.to_json()}
    return out, EXIT_OK if rep.passed else EXIT_INCONCLUSIVE


COMMANDS = {"dim": cmd_dim, "wedge": cmd_wedge, "amplify": cmd_amplify, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coarsedim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, gen=True):
        if gen:
            sp.add_argument("--gen", required=True, help="generator s-expression")
        sp.add_argument("--out", help="output JSON path (default stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--resolution", type=float, default=RHO_DEDUP,
                        help="dedup resolution")

    sp = sub.add_parser("dim", help="coarse Minkowski dimension estimate")
    common(sp)
    sp.add_argument("--radii", default="dyadic:1..10", help="dyadic:a..b or r1,r2,...")
    sp.add_argument("--delta", type=float, help="covering scale (default 1)")
    sp.add_argument("--csv", help="write the count table as CSV")
    sp.add_argument("--no-cover", action="store_true", help="skip covering-number brackets")

    for name, text in (("wedge", "wedge/density dichotomy"), ("amplify", "dimension amplification")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.add_argument("--window", type=float, default=500.0)
        sp.add_argument("--delta", type=float, help="density target (default 0.02)")
        sp.add_argument("--directions", type=int, default=DEFAULT_DIRECTIONS)
        sp.add_argument("--interval", default="0,1", help="target interval a,b")
        if name == "amplify":
            sp.add_argument("--max-iterations", type=int, default=4)

    sp = sub.add_parser("verify", help="replay a certificate file")
    common(sp, gen=False)
    sp.add_argument("certificate")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    known = set(RunConfig.__dataclass_fields__)
    kw = {k: v for k, v in vars(ns).items() if k in known and v is not None}
    return RunConfig(**kw)


def run(cfg: RunConfig) -> tuple[dict | None, int]:
    try:
        doc, code = COMMANDS[cfg.command](cfg)
    except InsufficientData as exc:
        log.error("insufficient data: %s", exc)
        return None, EXIT_INPUT
    except BudgetExceeded as exc:
        log.error("budget exceeded: %s", exc)
        return None, EXIT_BUDGET
    except (CoarseDimError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return None, EXIT_INPUT
    text = certs.dumps(doc)
    if cfg.out:
        atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)
    return doc, code


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    _, code = run(config_from_args(ns))
    return code


if __name__ == "__main__":
    sys.exit(main())
