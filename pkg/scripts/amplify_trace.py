"""Iteration log of the amplification loop for a few seed sets."""
import argparse
import json

from coarsedim.amplify import AmplificationInconclusive, amplify
from coarsedim.sexpr import parse_generator

SEEDS = ["(integers)", "(translate (powersplusindex) -1.0)", "(reciprocals)"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--window", type=float, default=500.0)
    ap.add_argument("--max-iterations", type=int, default=4)
    args = ap.parse_args(argv)
    for expr in SEEDS:
        try:
            state = amplify(parse_generator(expr), args.window, max_iterations=args.max_iterations)
        except AmplificationInconclusive as exc:
            state = exc.state
        print(f"{expr}: {state.status}")
        for entry in state.provenance:
            print("  " + json.dumps(entry, sort_keys=True))


if __name__ == "__main__":
    main()
