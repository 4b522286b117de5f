import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from diracspec import model
from diracspec.model import BoundaryMatrix, PotentialSpec, SpectralProblem

settings.register_profile("numeric", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("numeric")


def make_problem(P=0.0, Q=0.0, bc=None):
    return SpectralProblem(PotentialSpec(P, Q), bc or BoundaryMatrix.left_right_degenerate())


def random_smooth_problem(rng, bc=None):
    """Polynomial potentials of degree <= 3 whose terms are O(1) on [0, pi]."""
    def coeffs():
        deg = rng.integers(0, 4)
        c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        return list(c / math.pi ** np.arange(deg + 1))
    if bc is None:
        a = rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4))
        bc = BoundaryMatrix(a)
    return SpectralProblem(PotentialSpec(model.polynomial(coeffs()), model.polynomial(coeffs())), bc)


def random_lams(rng, n, max_abs=15.0, max_im=6.0):
    out = []
    while len(out) < n:
        z = complex(rng.uniform(-max_abs, max_abs), rng.uniform(-max_im, max_im))
        if abs(z) <= max_abs:
            out.append(z)
    return np.array(out)


@pytest.fixture
def free_periodic():
    return make_problem(0.0, 0.0, BoundaryMatrix.periodic())


@pytest.fixture
def free_degenerate():
    return make_problem(0.0, 0.0)


@pytest.fixture
def unit_degenerate():
    return make_problem(1.0, 1.0)


def e22_closed_form(lam):
    """``cos(pi w) - i lam sin(pi w)/w`` with ``w**2 = lam**2 - 1``."""
    w = np.sqrt(lam * lam - 1.0 + 0j)
    return np.cos(math.pi * w) - 1j * lam * math.pi * np.sinc(w)
