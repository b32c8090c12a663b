"""Slope table for the standard generators.

    python scripts/dimension_table.py [--out table.csv]
"""
import argparse
import csv
import sys

from coarsedim import setgen as sg
from coarsedim.covering import dimension_estimate, dyadic_radii
from coarsedim.sexpr import parse_generator

CASES = [
    ("(integers)", 6, 16),
    ("(powersplusindex)", 10, 30),
    ("(reciprocals)", 1, 10),
    ("(ap 0 0.5)", 6, 14),
    ("(scale (integers) 2)", 6, 14),
    ("(power (integers) 2)", 4, 10),
    ("(product (integers) (powersplusindex))", 4, 10),
    ("(cantor 0.333333333333 8)", 1, 6),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=argparse.FileType("w"), default=sys.stdout)
    args = ap.parse_args(argv)
    w = csv.writer(args.out, lineterminator="\n")
    w.writerow(["generator", "radii", "slope_ols", "slope_tail"])
    for expr, a, b in CASES:
        gen = parse_generator(expr)
        est = dimension_estimate(gen, dyadic_radii(a, b), with_cover=gen.ambient_dim == 1)
        w.writerow([expr, f"2^{a}..2^{b}", f"{est.slope_ols:.6f}", f"{est.slope_tail:.6f}"])


if __name__ == "__main__":
    main()
