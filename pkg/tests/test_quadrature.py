import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diracspec.quadrature import PanelGrid, graded_points


def test_polynomial_exactness():
    grid = PanelGrid.uniform(0.0, math.pi, 3, order=8)
    for k in range(15):
        assert abs(grid.integrate(grid.x ** k) - math.pi ** (k + 1) / (k + 1)) < 1e-12 * math.pi ** (k + 1)


@given(st.integers(1, 12), st.floats(0.1, 5.0))
def test_cumulative_matches_antiderivative(n_panels, freq):
    grid = PanelGrid.uniform(0.0, math.pi, n_panels * 4, order=16)
    nodes, bps = grid.cumulative(np.cos(freq * grid.x))
    assert np.allclose(nodes, np.sin(freq * grid.x) / freq, atol=1e-12)
    assert np.allclose(bps, np.sin(freq * grid.breakpoints) / freq, atol=1e-12)


def test_derivative_of_smooth_function():
    grid = PanelGrid.uniform(0.0, math.pi, 8)
    assert np.allclose(grid.derivative(np.exp(1j * 3 * grid.x)), 3j * np.exp(3j * grid.x), atol=1e-9)


def test_graded_mesh_integrates_inverse_sqrt():
    grid = PanelGrid.uniform(0.0, math.pi, 8, grade_left=True, levels=24)
    assert abs(grid.integrate(grid.x ** -0.5) - 2 * math.sqrt(math.pi)) < 1e-6


def test_graded_points_resolve_both_ends():
    x, d = graded_points(0.0, math.pi, 4, grade_left=True, grade_right=True)
    assert x[0] == 0.0 and d[-1] == 0.0
    assert np.all(np.diff(x) >= 0) and np.all(np.diff(d) <= 0)
    # near the right end x collapses onto pi but the distances stay exact
    assert np.all(np.diff(d[-10:]) < 0) and d[-2] == pytest.approx(math.pi / 4 * 4.0 ** -30)


def test_right_singularity_integrated_from_distances():
    grid = PanelGrid.uniform(0.0, math.pi, 8, grade_right=True)
    assert abs(grid.integrate(grid.d ** -0.5) - 2 * math.sqrt(math.pi)) < 1e-9
