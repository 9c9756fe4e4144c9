"""PDE solve against the radial shooting oracle for H = 1 + amp exp(-|x|^2)."""
import argparse

import numpy as np

from sigma2graph import barriers, curvature, dirichlet, verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--amp", type=float, default=0.1)
    ap.add_argument("--R", type=float, default=3.0)
    ap.add_argument("--spacings", default="0.125,0.0625,0.03125")
    args = ap.parse_args()
    H = curvature.radial_bump(args.amp)
    bp = barriers.hyperboloid_barriers(max(1.0, 1.0 + args.amp), min(1.0, 1.0 + args.amp))
    corner = args.R * np.sqrt(2.0)
    Hr = lambda r, z: float(H.of_radius(r, z, 2))  # noqa: E731
    prof = verify.radial_shoot(Hr, 2, corner * (1 + 1e-9), float(bp.lower(np.array([corner, 0.0]))))
    print("spacing,sup_difference,newton_iterations")
    for h in (float(s) for s in args.spacings.split(",")):
        u, rep = dirichlet.solve_dirichlet(H, bp, args.R, h, boundary=prof)
        print(f"{h:g},{np.max(np.abs(u.values - prof(u.points()))):.4e},{rep.iterations}")


if __name__ == "__main__":
    main()
