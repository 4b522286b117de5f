"""Projection residuals of four test vectors onto root-function spans of growing radius.

Runs the same boundary conditions with and without a potential so the contrast
(empty spectrum versus a growing root system) is visible side by side.
"""

import argparse
import time

from diracspec import BoundaryMatrix, PotentialSpec, SpectralProblem
from diracspec.spectrum import completeness_experiment


def run(label, problem, radii):
    t0 = time.perf_counter()
    rep = completeness_experiment(problem, radii)
    names = sorted(rep.results[0].residuals)
    print(f"# {label}: {time.perf_counter() - t0:.1f} s")
    print("radius,eigenvalues,gram_condition," + ",".join(names))
    for r in rep.results:
        vals = ",".join(f"{r.residuals[n]:.6g}" for n in names)
        print(f"{r.radius:g},{r.eigenvalue_count},{r.gram_condition:.4g},{vals}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radii", default="5,10,20")
    ap.add_argument("--value", type=complex, default=1.0, help="constant value of P and Q")
    args = ap.parse_args()
    radii = tuple(float(r) for r in args.radii.split(","))
    bc = BoundaryMatrix.left_right_degenerate()
    run("no potential", SpectralProblem(PotentialSpec(0.0, 0.0), bc), radii)
    run(f"P = Q = {args.value}", SpectralProblem(PotentialSpec(args.value, args.value), bc), radii)


if __name__ == "__main__":
    main()
