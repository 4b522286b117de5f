import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diracspec import model, series
from diracspec.errors import TruncationCapReached
from diracspec.fundamental import constant_E, endpoint_values
from diracspec.series import build_tables, diagonal_normalised, e11_series, e22_series

from conftest import make_problem, random_smooth_problem

lams = st.builds(complex, st.floats(-20, 20), st.floats(-8, 8)).filter(lambda z: abs(z) <= 20)


def test_first_level_closed_form():
    table = build_tables(make_problem(1.0, 1.0), 0.5)
    assert abs(table.g[1][-1] - (2 - 1j * math.pi)) < 1e-9


@given(st.builds(complex, st.floats(0.2, 10), st.floats(-3, 3)))
def test_first_level_closed_form_any_lambda(lam):
    table = build_tables(make_problem(1.0, 1.0), lam)
    t = table.grid
    expect = (t - (1 - np.exp(-2j * lam * t)) / (2j * lam)) / (2j * lam)
    scale = np.exp(2 * abs(lam.imag) * t)
    assert np.max(np.abs(table.g[1] - expect) / scale) < 1e-10


def test_free_levels_vanish():
    lam = 1.3 - 0.7j
    table = build_tables(make_problem(), lam)
    assert all(np.all(level == 0) for level in table.g[1:] + table.h[1:])
    assert abs(e11_series(table).to_complex() - cmath.exp(1j * lam * math.pi)) < 1e-14
    assert all(v == 0 for _, v in series.scaled_partial_sums(table)[1:])


def test_zeroth_level_and_origin_values():
    table = build_tables(make_problem(1.0, 2.0), 2.0 + 1.0j)
    assert np.all(table.g[0] == 1) and np.all(table.h[0] == 1)
    assert all(level[0] == 0 for level in table.g[1:] + table.h[1:])


def test_matches_closed_form_at_two_plus_i():
    lam = 2 + 1j
    table = build_tables(make_problem(1.0, 1.0), lam)
    ref = constant_E(1, 1, lam, math.pi)
    got = sum(level[-1] for level in table.g)
    assert abs(got - cmath.exp(-1j * lam * math.pi) * ref[0, 0]) < 1e-7


def test_matches_closed_form_at_three():
    table = build_tables(make_problem(1.0, 1.0), 3.0)
    assert abs(e11_series(table).to_complex() - constant_E(1, 1, 3.0, math.pi)[0, 0]) < 1e-8


def test_random_polynomial_matches_ode():
    rng = np.random.default_rng(5)
    for _ in range(5):
        prob = random_smooth_problem(rng)
        lam = 1 + 2j
        e11, e22 = diagonal_normalised(build_tables(prob, lam))
        ev = endpoint_values(prob, [lam]).e[0]
        assert abs(e11 - ev[0, 0]) < 1e-6 * max(1, abs(ev[0, 0]))
        assert abs(e22 - ev[1, 1]) < 1e-6 * max(1, abs(ev[1, 1]))


@given(lams)
def test_oracle_agreement(lam):
    prob = make_problem(model.polynomial([0.5, -0.3j, 0.1]), model.polynomial([1.0, 0.2]))
    e11, e22 = diagonal_normalised(build_tables(prob, lam))
    ev = endpoint_values(prob, [lam]).e[0]
    assert abs(e11 - ev[0, 0]) < 1e-6 and abs(e22 - ev[1, 1]) < 1e-6


@given(lams)
def test_swap_symmetry(lam):
    P = model.polynomial([0.4, 1.0, -0.2j])
    Q = model.power(1.5, 0.5)
    t = build_tables(make_problem(P, Q), lam)
    s = build_tables(make_problem(Q, P), -lam)
    assert abs(e22_series(t).mantissa(math.pi * abs(lam.imag))
               - e11_series(s).mantissa(math.pi * abs(lam.imag))) < 1e-8


def test_levels_decay_superexponentially():
    table = build_tables(make_problem(1.0, 1.0), 1.0, tol=1e-15)
    levels = np.array([v for _, v in series.scaled_partial_sums(table)])
    tail = levels[5:]
    assert tail.size >= 3
    ratios = tail[1:] / tail[:-1]
    assert np.all(np.diff(ratios) < 0) and ratios[-1] < 0.1
    for n, v in enumerate(levels):
        assert v <= series.level_bound(n, 2 * math.pi) * (1 + 1e-9)


def test_doubling_potential_scales_levels_at_most_geometrically():
    lam = 1.5 - 0.5j
    base = build_tables(make_problem(1.0, 1.0), lam)
    doubled = build_tables(make_problem(2.0, 1.0), lam)
    n = min(base.n_max, doubled.n_max)
    for k in range(1, n + 1):
        assert doubled.g_levels[k] <= 2 ** k * base.g_levels[k] * (1 + 1e-9)


def test_tail_below_tolerance():
    table = build_tables(make_problem(1.0, 1.0), 2.0)
    assert table.tail_bound < 1e-12 or table.g_levels[-1] < 1e-12 * table.g_levels.sum()


def test_grid_resolution_floor():
    with pytest.raises(ValueError):
        build_tables(make_problem(1.0, 1.0), 1.0, grid_resolution=32)


def test_oversized_potential_hits_cap():
    with pytest.raises(TruncationCapReached):
        build_tables(make_problem(40.0, 40.0), 1.0)


def test_singular_potentials():
    prob = make_problem(model.power(1.0, -0.5), model.reflected_power(2.0, -0.5))
    lam = 2.5 - 1.0j
    e11, e22 = diagonal_normalised(build_tables(prob, lam))
    ev = endpoint_values(prob, [lam], rtol=1e-12).e[0]
    assert abs(e11 - ev[0, 0]) < 1e-8 and abs(e22 - ev[1, 1]) < 1e-8
