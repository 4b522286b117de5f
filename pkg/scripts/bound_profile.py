"""Sweep the normalised determinant along a ray in the lower half-plane.

Prints beta(r) = |Delta| |Im lam|**rho_sum exp(-pi |Im lam|) for y1(0) = y2(pi) = 0
with constant potentials, and the ratio of the top-decade minimum to the overall minimum.
"""

import argparse
import math

import numpy as np

from diracspec import BoundaryMatrix, PotentialSpec, SpectralProblem
from diracspec.determinant import Sector, bound_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p0", type=complex, default=1.0)
    ap.add_argument("--q0", type=complex, default=1.0)
    ap.add_argument("--angle", type=float, default=-math.pi / 2)
    ap.add_argument("--rmax", type=int, default=30)
    args = ap.parse_args()

    problem = SpectralProblem(PotentialSpec(args.p0, args.q0), BoundaryMatrix.left_right_degenerate())
    prof = bound_profile(problem, Sector(0.2, "lower"), args.angle, np.arange(5, args.rmax + 1))
    print("r,beta,log_abs_delta")
    for r, b, lm in zip(prof.radii, prof.beta, prof.logmag):
        print(f"{r:g},{b:.10g},{lm:.10g}")
    top = float(np.min(prof.beta[-10:]))
    print(f"# rho_sum={prof.rho_sum:g} min_beta={prof.min_beta:.6g} "
          f"top_decade_ratio={top / prof.min_beta:.4f}")


if __name__ == "__main__":
    main()
