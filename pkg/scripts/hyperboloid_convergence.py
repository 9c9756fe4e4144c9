"""Stencil error of sigma_2 on hyperboloids over a sequence of grids."""
import argparse

import numpy as np

from sigma2graph import barriers, dirichlet
from sigma2graph.grid import GridFunction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=1.0, help="pinching constant")
    ap.add_argument("--R", type=float, default=2.0)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()
    hyp = barriers.hyperboloid_for_pinching(args.h, 2)
    prev = None
    print("spacing,sup_error,ratio")
    for j in range(args.levels):
        h = 2.0 ** -(3 + j)
        g = GridFunction.box(args.R, h, 2, fill=hyp)
        err = float(np.max(np.abs(dirichlet.h2_grid(g) - args.h)))
        ratio = prev / err if prev else float("nan")
        print(f"{h:.6g},{err:.6e},{ratio:.4f}")
        prev = err


if __name__ == "__main__":
    main()
