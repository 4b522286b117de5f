"""Iterated-integral series for the diagonal entries of the fundamental matrix.

With ``a(t) = exp(-2i lam t) P(t)`` and ``b(t) = exp(2i lam t) Q(t)``:

    g_0 = 1,   g_n(t) = int_0^t a(t1) int_0^t1 b(t2) g_{n-1}(t2) dt2 dt1,
    h_0 = 1,   h_n(t) = int_0^t b(t1) int_0^t1 a(t2) h_{n-1}(t2) dt2 dt1,

and ``e11(t) = exp(i lam t) sum g_n(t)``, ``e22(t) = exp(-i lam t) sum h_n(t)``.
Each level is two cumulative quadrature passes over a shared Gauss-Legendre panel
grid, so building ``n`` levels costs O(n * nodes). This path never touches the ODE
solver and serves as its independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationCapReached
from .quadrature import PanelGrid
from .scaled import ScaledComplex

HARD_CAP = 60
DEFAULT_TOL = 1e-12
PANEL_ORDER = 16


@dataclass(frozen=True)
class IteratedIntegralTable:
    """Levels ``g_n``, ``h_n`` sampled on ``grid`` (first point 0, last point pi)."""

    lam: complex
    grid: np.ndarray
    g: list
    h: list
    n_max: int
    tail_bound: float
    g_levels: np.ndarray  # scaled sup-norms per level
    h_levels: np.ndarray


def level_bound(n: int, norm_sum: float) -> float:
    """Bound on ``sup_t exp(-2|Im lam| t) |g_n(t)|``: ``(|P|_1 + |Q|_1)**(2n) / (2n)!``."""
    return math.exp(2 * n * math.log(norm_sum) - math.lgamma(2 * n + 1)) if norm_sum > 0 else 0.0


def _cap_for(norm_sum: float, tol: float) -> int:
    n = 1
    while n <= HARD_CAP and level_bound(n, norm_sum) >= tol:
        n += 1
    return n


def series_grid(potential, lam: complex, grid_resolution: int = 256) -> PanelGrid:
    lam = complex(lam)
    n_panels = max(int(math.ceil(grid_resolution / PANEL_ORDER)),
                   int(math.ceil(math.pi * (abs(lam.real) + abs(lam.imag)))) + 4)
    return PanelGrid.uniform(0.0, math.pi, n_panels, order=PANEL_ORDER,
                             grade_left=potential.singular_left,
                             grade_right=potential.singular_right)


def build_tables(problem, lam: complex, grid_resolution: int = 256,
                 tol: float = DEFAULT_TOL) -> IteratedIntegralTable:
    if grid_resolution < 64:
        raise ValueError("grid_resolution must be at least 64")
    lam = complex(lam)
    pot = problem.potential if hasattr(problem, "potential") else problem
    grid = series_grid(pot, lam, grid_resolution)
    t = grid.x
    full_t = np.concatenate([[0.0], t, [math.pi]])
    damp = np.exp(-2.0 * abs(lam.imag) * full_t)

    Pt, Qt = pot.P.at(t, grid.d), pot.Q.at(t, grid.d)
    a = np.exp(-2j * lam * t) * Pt
    b = np.exp(2j * lam * t) * Qt

    norm_sum = float(grid.integrate(np.abs(Pt)) + grid.integrate(np.abs(Qt)))
    cap = _cap_for(norm_sum, tol)

    def level(prev_nodes, outer, inner):
        inner_nodes, _ = grid.cumulative(inner * prev_nodes)
        out_nodes, out_bp = grid.cumulative(outer * inner_nodes)
        return out_nodes, out_bp[-1]

    ones = np.ones(full_t.size, dtype=complex)
    g, h = [ones], [ones.copy()]
    g_lv, h_lv = [1.0], [1.0]
    g_prev = h_prev = np.ones(t.size, dtype=complex)
    converged = False
    n = 0
    while n < min(cap, HARD_CAP):
        n += 1
        g_nodes, g_end = level(g_prev, a, b)
        h_nodes, h_end = level(h_prev, b, a)
        g.append(np.concatenate([[0.0], g_nodes, [g_end]]))
        h.append(np.concatenate([[0.0], h_nodes, [h_end]]))
        g_lv.append(float(np.max(np.abs(g[-1]) * damp)))
        h_lv.append(float(np.max(np.abs(h[-1]) * damp)))
        g_prev, h_prev = g_nodes, h_nodes
        if g_lv[-1] < tol * sum(g_lv[:-1]) and h_lv[-1] < tol * sum(h_lv[:-1]):
            converged = True
            break
    if not converged:
        rigorous_ok = level_bound(n + 1, norm_sum) < tol
        if not rigorous_ok:
            raise TruncationCapReached(f"series not converged after {n} levels (lam={lam})")
    tail = sum(level_bound(k, norm_sum) for k in range(n + 1, n + 40))
    return IteratedIntegralTable(lam, full_t, g, h, n, tail, np.array(g_lv), np.array(h_lv))


def _diag_scaled(table: IteratedIntegralTable, which: str, k: int = -1) -> ScaledComplex:
    levels = table.g if which == "g" else table.h
    total = complex(sum(lv[k] for lv in levels))
    sign = 1.0 if which == "g" else -1.0
    return ScaledComplex.exp(sign * 1j * table.lam * table.grid[k]) * total


def e11_series(table: IteratedIntegralTable) -> ScaledComplex:
    """``e11(pi, lam)`` from the g-series."""
    return _diag_scaled(table, "g")


def e22_series(table: IteratedIntegralTable) -> ScaledComplex:
    """``e22(pi, lam)`` from the h-series."""
    return _diag_scaled(table, "h")


def diagonal_normalised(table: IteratedIntegralTable) -> tuple[complex, complex]:
    """``(e11, e22)`` at pi times ``exp(-pi |Im lam|)``."""
    off = math.pi * abs(table.lam.imag)
    return e11_series(table).mantissa(off), e22_series(table).mantissa(off)


def scaled_partial_sums(table: IteratedIntegralTable, which: str = "g") -> list:
    """``[(n, sup_t exp(-2|Im lam| t) |level_n(t)|), ...]`` for convergence reporting."""
    levels = table.g_levels if which == "g" else table.h_levels
    return [(n, float(v)) for n, v in enumerate(levels)]
