"""Max gap on [0, 1] of x + sqrt(2) y over two dense-image constructions.

For D = {2^n, 2^n + n} the gap of S(D^4) is tabulated against the truncation
n <= N; for the integer lattice it is tabulated against the box half-width.
"""
import argparse
import math

from coarsedim import setgen as sg
from coarsedim.wedge import max_gap

ALPHA = math.sqrt(2)


def d_gap(n_max):
    D = sg.PowersPlusIndex().enumerate(2.0**n_max + n_max + 1)
    img = sg.image_of_power(sg.LinearMap((1.0, -1.0, ALPHA, -ALPHA)), D, 1.0)
    return max_gap(img.values, 0.0, 1.0)[0]


def lattice_gap(half_width):
    E = sg.Integers().enumerate(half_width + 0.5)
    img = sg.image_of_power(sg.LinearMap((1.0, ALPHA)), E, 1.0)
    return max_gap(img.values, 0.0, 1.0)[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[5, 10, 20, 30, 40])
    ap.add_argument("--widths", type=int, nargs="+", default=[10, 100, 1000])
    args = ap.parse_args(argv)
    print("set,size,max_gap")
    for n in args.n:
        print(f"S(D^4),{n},{d_gap(n):.6f}")
    for h in args.widths:
        print(f"Z^2,{h},{lattice_gap(h):.6f}")


if __name__ == "__main__":
    main()
