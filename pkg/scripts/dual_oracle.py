"""Compare the ODE and iterated-integral evaluations of the determinant on random problems."""

import argparse
import math
import time

import numpy as np

from diracspec import BoundaryMatrix, PotentialSpec, SpectralProblem, model
from diracspec.config import random_lambdas
from diracspec.determinant import delta_many


def random_problem(rng):
    def poly():
        deg = rng.integers(0, 4)
        c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        return model.polynomial(list(c / math.pi ** np.arange(deg + 1)))

    u, v = rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(size=2) + 1j * rng.normal(size=2)
    s, t = rng.normal(size=2) + 1j * rng.normal(size=2)
    bc = BoundaryMatrix(np.column_stack([u, v, s * u, t * v]))
    return SpectralProblem(PotentialSpec(poly(), poly()), bc)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problems", type=int, default=20)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    print("problem,max_abs_diff,max_scaled_diff")
    worst = 0.0
    for k in range(args.problems):
        prob = random_problem(rng)
        lams = random_lambdas(int(rng.integers(1 << 31)), args.samples)
        ode = delta_many(prob, lams, "ode")
        ser = delta_many(prob, lams, "series", allow_ode=False)
        diff = np.abs(ode.value - ser.value)
        scaled = float(np.max(diff / np.maximum(1.0, ode.scale)))
        worst = max(worst, scaled)
        print(f"{k},{np.max(diff):.3e},{scaled:.3e}")
    print(f"# worst={worst:.3e} elapsed={time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
