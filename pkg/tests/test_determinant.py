import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diracspec import model
from diracspec.determinant import (Sector, bound_profile, delta, delta0, delta0_normalised,
                                   delta_many, delta_scaled)
from diracspec.errors import MethodUnavailable, SectorViolation
from diracspec.model import BoundaryMatrix, compute_minors

from conftest import e22_closed_form, make_problem, random_lams, random_smooth_problem

entry = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
bcs = (st.lists(entry, min_size=8, max_size=8).map(lambda v: np.array(v).reshape(2, 4))
       .filter(lambda a: np.linalg.svd(a, compute_uv=False)[-1] > 1e-2).map(BoundaryMatrix))
invertible = (st.lists(entry, min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2))
              .filter(lambda m: abs(np.linalg.det(m)) > 0.1))


def test_delta0_periodic_real_axis():
    A = compute_minors(BoundaryMatrix.periodic())
    for lam in np.linspace(-5, 5, 23):
        assert abs(delta0(A, lam) - (2 - 2 * math.cos(math.pi * lam))) < 1e-12
    assert abs(delta0(A, 2.0)) < 1e-12


def test_delta0_single_minor_and_constant():
    A = compute_minors(BoundaryMatrix.left_right_degenerate())
    for lam in (0.3, -4.1, 7.0):
        assert abs(abs(delta0(A, lam)) - 1) < 1e-12
    assert delta0(A, 1.5 - 2j) == pytest.approx(cmath.exp(-1j * math.pi * (1.5 - 2j)))
    only_a12 = compute_minors(BoundaryMatrix.from_rows([1, 0, 0, 0], [0, 1, 0, 0]))
    assert delta0(only_a12, 3 + 4j) == pytest.approx(1.0)


@given(bcs)
def test_free_delta_is_delta0(bc):
    prob = make_problem(0.0, 0.0, bc)
    lams = random_lams(np.random.default_rng(0), 12, 40, 10)
    got = delta_many(prob, lams).value
    ref = delta0_normalised(prob.minors, lams)
    assert np.max(np.abs(got - ref)) < 1e-10 * max(1.0, prob.minors.max_abs)


def test_unit_potentials_single_minor_closed_form():
    prob = make_problem(1.0, 1.0)
    for lam in (0.3 + 0.2j, 4.5 - 2j, -7.2 + 1j, 1.0):
        assert delta(prob, lam) == pytest.approx(e22_closed_form(lam), rel=1e-9, abs=1e-12)


def test_methods_cross_check():
    rng = np.random.default_rng(3)
    for _ in range(4):
        prob = random_smooth_problem(rng)
        lams = random_lams(rng, 10)
        ode = delta_many(prob, lams, "ode").value
        ser = delta_many(prob, lams, "series").value
        assert np.max(np.abs(ode - ser)) < 1e-6


def test_series_path_needs_ode_for_off_diagonal_minors():
    needs_e12 = make_problem(1.0, 1.0, BoundaryMatrix.from_rows([1, 0, 0, 0], [0, 0, 1, 0]))
    with pytest.raises(MethodUnavailable):
        delta_many(needs_e12, [1.0], "series", allow_ode=False)
    for bc in (BoundaryMatrix.periodic(), BoundaryMatrix.left_right_degenerate()):
        prob = make_problem(1.0, 1.0, bc)
        series_only = delta_many(prob, [1.0 + 0.5j], "series", allow_ode=False).value
        assert abs(series_only[0] - delta_many(prob, [1.0 + 0.5j]).value[0]) < 1e-9


def test_scaled_and_plain_agree():
    prob = make_problem(model.polynomial([1, 0.5j]), 2.0, BoundaryMatrix.periodic())
    for lam in (3 + 10j, -2 - 50j, 5 + 60j):
        s = delta_scaled(prob, lam)
        plain = delta(prob, lam)
        assert abs(cmath.rect(math.exp(s.logmag), s.phase) - plain) <= 1e-9 * abs(plain)


@given(invertible)
def test_row_operations_scale_delta_by_a_constant(m):
    prob = make_problem(model.polynomial([0.3, 1j]), 1.5, BoundaryMatrix.periodic())
    other = prob.with_bc(prob.bc.left_multiplied(m))
    lams = random_lams(np.random.default_rng(1), 10, 10, 3)
    ratio = delta_many(other, lams).value / delta_many(prob, lams).value
    assert np.max(np.abs(ratio - np.linalg.det(m))) < 1e-8 * abs(np.linalg.det(m))


def test_sector_validation():
    with pytest.raises(ValueError):
        Sector(0.5)
    with pytest.raises(ValueError):
        Sector(0.2, "left")
    s = Sector(0.2, "lower")
    assert s.strictly_contains(-math.pi / 2) and not s.strictly_contains(-0.1)


def test_branch53_profile_is_bounded_below():
    prof = bound_profile(make_problem(1.0, 1.0), Sector(0.2, "lower"), -math.pi / 2,
                         np.arange(5, 31))
    assert prof.rho_sum == pytest.approx(2.0)
    assert np.all(prof.beta > 0) and prof.min_beta == pytest.approx(prof.beta.min())
    assert prof.min_beta > 0.2


def test_free_profile_is_one_on_the_growing_ray():
    prob = make_problem()
    prof = bound_profile(prob, Sector(0.2, "upper"), math.pi / 2, np.arange(5, 31), rho_sum=0.0)
    assert np.allclose(prof.beta, 1.0, atol=1e-12)


def test_upper_ray_for_branch53_stays_order_one():
    prof = bound_profile(make_problem(1.0, 1.0), Sector(0.2, "upper"), math.pi / 2,
                         np.arange(5, 31), rho_sum=0.0)
    assert prof.min_beta > 0.5


def test_ray_outside_sector_rejected():
    with pytest.raises(SectorViolation):
        bound_profile(make_problem(1.0, 1.0), Sector(0.2, "lower"), -0.1)
    with pytest.raises(SectorViolation):
        bound_profile(make_problem(1.0, 1.0), Sector(0.2, "lower"), math.pi / 2)


def test_radii_must_reach_away_from_axis():
    with pytest.raises(ValueError):
        bound_profile(make_problem(1.0, 1.0), Sector(0.2, "lower"), -math.pi / 2, [1.0, 5.0])
