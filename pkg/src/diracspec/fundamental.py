"""Fundamental matrix ``E(x, lam)`` with ``E(0, lam) = I``.

The first-order form of the system is ``y' = M y`` with
``M = [[i lam, -i P], [i Q, -i lam]]``. Writing ``y = D(x) z`` with
``D = diag(exp(i lam x), exp(-i lam x))`` removes the spectral oscillation:

    z' = [[0, -i P exp(-2 i lam x)], [i Q exp(2 i lam x), 0]] z,

whose right-hand side is bounded by ``|P| + |Q|`` for real ``lam``. That system is
integrated with an adaptive Dormand-Prince 5(4) pair, vectorised over a batch of
spectral parameters that share one step-size controller. ``dz/dlam`` is
co-integrated on request.

Columns of ``z`` evolve independently, so each column carries its own log-scale
offset and is renormalised when it grows large; reconstructions of ``E`` go
through these offsets, which keeps everything finite well beyond the range where
``exp(pi |Im lam|)`` overflows.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import OverflowGuard, StepSizeUnderflow
from .scaled import ScaledComplex

RTOL = 1e-10
ATOL = 1e-12
PLAIN_LIMIT = 300.0  # |Im lam| * pi above which plain E is refused
KERNEL_LIMIT = 700.0  # 2 |Im lam| * pi must stay below this (kernel exp overflow)
RESCALE_AT = 1e100
MAX_STEPS = 2_000_000

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class GradedMap:
    """Map ``s in [0, 1] -> x = pi * w(s)`` flattening integrable endpoint singularities.

    ``w'`` vanishes to third order at each graded end, so ``P(x(s)) x'(s)`` stays
    bounded for power singularities ``x**alpha`` with ``alpha > -3/4``.
    """

    S_EPS = 1e-9

    def __init__(self, left: bool = False, right: bool = False):
        self.left, self.right = left, right

    def w(self, s):
        if self.left and self.right:
            return s ** 4 * (35 - 84 * s + 70 * s ** 2 - 20 * s ** 3)
        if self.left:
            return s ** 4
        if self.right:
            return 1 - (1 - s) ** 4
        return s

    def dw(self, s):
        if self.left and self.right:
            return 140 * s ** 3 * (1 - s) ** 3
        if self.left:
            return 4 * s ** 3
        if self.right:
            return 4 * (1 - s) ** 3
        return 1.0 + 0 * s

    def w_comp(self, s):
        """``1 - w(s)`` without cancellation near ``s = 1``."""
        if self.left and self.right:
            return self.w(1 - s)
        if self.right:
            return (1 - s) ** 4
        return 1 - self.w(s)

    def inverse(self, x):
        u = np.clip(np.asarray(x, dtype=float) / math.pi, 0.0, 1.0)
        if self.left and self.right:
            lo, hi = np.zeros_like(u), np.ones_like(u)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                below = self.w(mid) < u
                lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)
            s = 0.5 * (lo + hi)
            return np.where(u == 0, 0.0, np.where(u == 1, 1.0, s))
        if self.left:
            return u ** 0.25
        if self.right:
            return 1 - (1 - u) ** 0.25
        return u

    def clamp(self, s: float) -> float:
        if self.left and s < self.S_EPS:
            return self.S_EPS
        if self.right and s > 1 - self.S_EPS:
            return 1 - self.S_EPS
        return s


@dataclass
class _Raw:
    """Solver output at the requested stops: z mantissas, column log offsets, dz."""

    Z: np.ndarray  # (B, n, 2, 2)
    off: np.ndarray  # (B, n, 2)
    dZ: Optional[np.ndarray]
    steps: int


def _check_lams(lams):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    worst = float(np.max(np.abs(lams.imag))) if lams.size else 0.0
    if 2 * worst * math.pi > KERNEL_LIMIT:
        raise OverflowGuard(f"|Im lam| = {worst:.4g} exceeds the log-scale budget "
                            f"(2 pi |Im lam| <= {KERNEL_LIMIT})")
    return lams


def _solve(potential, lams, x_stops, want_derivative=False, rtol=RTOL, atol=ATOL) -> _Raw:
    lams = _check_lams(lams)
    B = lams.size
    gmap = GradedMap(potential.singular_left, potential.singular_right)
    P, Q = potential.P, potential.Q
    s_stops = gmap.inverse(np.asarray(x_stops, dtype=float))
    if np.any(np.diff(s_stops) < 0) or s_stops[0] < 0:
        raise ValueError("output grid must be increasing inside [0, pi]")
    width = 8 if want_derivative else 4

    def rhs(s, Y):
        s = gmap.clamp(s)
        x = math.pi * gmap.w(s)
        d = math.pi * gmap.w_comp(s)
        dx = math.pi * gmap.dw(s)
        p = complex(P.at(x, d)) * dx
        q = complex(Q.at(x, d)) * dx
        em = np.exp(-2j * lams * x)
        ep = np.exp(2j * lams * x)
        k12 = -1j * p * em
        k21 = 1j * q * ep
        F = np.empty_like(Y)
        # z rows: indices (0,1) = row 1, (2,3) = row 2; dz/dlam in 4:8
        F[:, 0:2] = k12[:, None] * Y[:, 2:4]
        F[:, 2:4] = k21[:, None] * Y[:, 0:2]
        if width == 8:
            l12 = -2.0 * x * p * em
            l21 = -2.0 * x * q * ep
            F[:, 4:6] = k12[:, None] * Y[:, 6:8] + l12[:, None] * Y[:, 2:4]
            F[:, 6:8] = k21[:, None] * Y[:, 4:6] + l21[:, None] * Y[:, 0:2]
        return F

    # columns: entries (0, 2) form column 1 of z, (1, 3) column 2
    col_idx = [np.array([0, 2]), np.array([1, 3])]
    if want_derivative:
        col_idx = [np.concatenate([c, c + 4]) for c in col_idx]
    Y = np.zeros((B, width), dtype=complex)
    Y[:, 0] = 1.0
    Y[:, 3] = 1.0
    off = np.zeros((B, 2))

    n_out = s_stops.size
    Z_out = np.empty((B, n_out, 2, 2), dtype=complex)
    off_out = np.empty((B, n_out, 2))
    dZ_out = np.empty((B, n_out, 2, 2), dtype=complex) if want_derivative else None

    def record(k):
        Z_out[:, k] = Y[:, 0:4].reshape(B, 2, 2)
        off_out[:, k] = off
        if want_derivative:
            dZ_out[:, k] = Y[:, 4:8].reshape(B, 2, 2)

    s = 0.0
    k_next = 0
    while k_next < n_out and s_stops[k_next] <= 0.0:
        record(k_next)
        k_next += 1

    h = 1e-2
    steps = 0
    K = np.empty((7, B, width), dtype=complex)
    K[0] = rhs(s, Y)
    while k_next < n_out:
        target = s_stops[k_next]
        h_try = min(h, target - s)
        hit = h_try >= target - s
        for i in range(1, 7):
            Yi = Y + h_try * np.tensordot(_A[i], K[:i], axes=1)
            K[i] = rhs(s + _C[i] * h_try, Yi)
        Y_new = Yi  # seventh stage is the 5th-order solution (FSAL)
        err = h_try * np.tensordot(_E, K, axes=1)
        scale_y = np.maximum(np.abs(Y), np.abs(Y_new))
        # absolute tolerance is in true units; convert via column offsets
        atol_eff = np.empty((B, width))
        for c in (0, 1):
            atol_eff[:, col_idx[c]] = atol * np.exp(-off[:, c])[:, None]
        ratio = np.abs(err) / (atol_eff + rtol * scale_y)
        e = float(np.max(ratio)) if ratio.size else 0.0
        steps += 1
        if steps > MAX_STEPS:
            raise StepSizeUnderflow("step budget exhausted")
        if not math.isfinite(e):
            h = 0.25 * h_try
            if h < 1e-14:
                raise StepSizeUnderflow("non-finite error estimate at tiny step")
            continue
        if e <= 1.0:
            s = target if hit else s + h_try
            Y = Y_new
            K[0] = K[6]
            big = False
            for c in (0, 1):
                cols = col_idx[c]
                m = np.max(np.abs(Y[:, cols]), axis=1)
                grow = m > RESCALE_AT
                if np.any(grow):
                    big = True
                    Y[np.ix_(grow, cols)] /= m[grow, None]
                    off[grow, c] += np.log(m[grow])
            if big:
                K[0] = rhs(s, Y)
            if hit:
                record(k_next)
                k_next += 1
                while k_next < n_out and s_stops[k_next] <= s:
                    record(k_next)
                    k_next += 1
            fac = 5.0 if e == 0 else min(5.0, max(0.2, 0.9 * e ** -0.2))
            if not hit or fac < 1.0:
                h = h_try * fac
            else:
                h = max(h, h_try * fac)
        else:
            h = h_try * max(0.2, 0.9 * e ** -0.2)
            if h < 1e-14:
                raise StepSizeUnderflow(f"step size underflow at x = {math.pi * gmap.w(s):.6g}")
    return _Raw(Z_out, off_out, dZ_out, steps)


@dataclass(frozen=True)
class FundamentalMatrix:
    """Samples of ``E(x, lam)`` (and optionally ``dE/dlam``) on a grid.

    Stored as oscillation-removed mantissas ``Z`` with one log offset per column:
    ``E[:, j] = D(x) Z[:, j] * exp(off[j])``.
    """

    lam: complex
    grid: np.ndarray
    Z: np.ndarray
    off: np.ndarray
    dZ: Optional[np.ndarray] = None

    @property
    def plain_ok(self) -> bool:
        return abs(self.lam.imag) * math.pi <= PLAIN_LIMIT and float(np.max(self.off)) < 600

    def _D(self):
        ph = np.exp(1j * self.lam * self.grid)
        return np.stack([ph, 1.0 / ph], axis=-1)  # (n, 2) row factors

    @property
    def E(self) -> np.ndarray:
        if not self.plain_ok:
            raise OverflowGuard("E too large for plain arithmetic; use scaled_entry")
        return self._D()[:, :, None] * self.Z * np.exp(self.off)[:, None, :]

    @property
    def dE_dlam(self) -> np.ndarray:
        if self.dZ is None:
            raise ValueError("derivative not computed; pass want_derivative=True")
        if not self.plain_ok:
            raise OverflowGuard("dE/dlam too large for plain arithmetic")
        D = self._D()
        dD = D * (1j * self.grid[:, None] * np.array([1.0, -1.0]))
        scale = np.exp(self.off)[:, None, :]
        return (dD[:, :, None] * self.Z + D[:, :, None] * self.dZ) * scale

    @property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.Z) * np.exp(self.off.sum(axis=-1))

    def scaled_entry(self, i: int, j: int, k: int = -1) -> ScaledComplex:
        """Entry ``e_{i+1, j+1}`` at sample ``k`` as a :class:`ScaledComplex`."""
        sign = 1.0 if i == 0 else -1.0
        return (ScaledComplex.exp(sign * 1j * self.lam * self.grid[k])
                * ScaledComplex.from_complex(self.Z[k, i, j], self.off[k, j]))


def _grid(grid_resolution):
    if np.ndim(grid_resolution) == 0:
        n = int(grid_resolution)
        if n < 16:
            raise ValueError("grid_resolution must be at least 16")
        return np.linspace(0.0, math.pi, n + 1)
    g = np.asarray(grid_resolution, dtype=float)
    if g.ndim != 1 or g.size == 0 or g[0] < 0 or g[-1] > math.pi + 1e-14 or np.any(np.diff(g) <= 0):
        raise ValueError("explicit grid must be strictly increasing inside [0, pi]")
    return np.minimum(g, math.pi)


def propagate(problem, lam: complex, grid_resolution=64, want_derivative: bool = False,
              rtol: float = RTOL, atol: float = ATOL) -> FundamentalMatrix:
    """``E(x, lam)`` on a uniform grid (int) or an explicit increasing grid."""
    return propagate_many(problem, [lam], grid_resolution, want_derivative, rtol, atol)[0]


def propagate_many(problem, lams, grid_resolution=64, want_derivative=False,
                   rtol=RTOL, atol=ATOL) -> list:
    """Batched :func:`propagate` sharing one step controller."""
    grid = _grid(grid_resolution)
    raw = _solve(problem.potential, lams, grid, want_derivative, rtol, atol)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    return [FundamentalMatrix(complex(lam), grid, raw.Z[b], raw.off[b],
                              None if raw.dZ is None else raw.dZ[b])
            for b, lam in enumerate(lams)]


@dataclass(frozen=True)
class EndpointValues:
    """``E(pi, lam)`` for a batch of ``lam``, normalised by ``exp(-pi |Im lam|)``.

    ``e[b]`` is the 2x2 matrix ``E(pi, lam_b) * exp(-pi |Im lam_b|)``; ``de`` the same
    for ``dE/dlam``.
    """

    lams: np.ndarray
    e: np.ndarray
    de: Optional[np.ndarray]

    @property
    def log_scale(self) -> np.ndarray:
        return math.pi * np.abs(self.lams.imag)


def _normalise(lams, Z, off, dZ):
    sig = lams.imag
    row_exp = np.stack([1j * lams * math.pi, -1j * lams * math.pi], axis=-1)  # (B, 2)
    expo = row_exp[:, :, None] + off[:, None, :] - (math.pi * np.abs(sig))[:, None, None]
    with np.errstate(divide="ignore"):
        logz = np.log(np.where(Z == 0, 1.0, Z)) + np.where(Z == 0, -np.inf, 0.0)
    e = np.exp(logz + expo)
    de = None
    if dZ is not None:
        rowd = np.stack([1j * math.pi * np.ones_like(lams), -1j * math.pi * np.ones_like(lams)], axis=-1)
        G = rowd[:, :, None] * Z + dZ
        with np.errstate(divide="ignore"):
            logg = np.log(np.where(G == 0, 1.0, G)) + np.where(G == 0, -np.inf, 0.0)
        de = np.exp(logg + expo)
    return e, de


def endpoint_values(problem, lams, want_derivative=False, rtol=RTOL, atol=ATOL,
                    chunk: int = 4096) -> EndpointValues:
    """Normalised ``E(pi, lam)`` for many ``lam``; batches are grouped by ``|lam|``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    order = np.argsort(np.abs(lams), kind="stable")
    e = np.empty((lams.size, 2, 2), dtype=complex)
    de = np.empty((lams.size, 2, 2), dtype=complex) if want_derivative else None
    for start in range(0, lams.size, chunk):
        idx = order[start:start + chunk]
        raw = _solve(problem.potential, lams[idx], np.array([0.0, math.pi]), want_derivative,
                     rtol, atol)
        ei, dei = _normalise(lams[idx], raw.Z[:, -1], raw.off[:, -1],
                             None if raw.dZ is None else raw.dZ[:, -1])
        e[idx] = ei
        if want_derivative:
            de[idx] = dei
    return EndpointValues(lams, e, de)


def _sinc_times_x(w2: complex, x: float) -> complex:
    """``sin(x w) / w`` as an even function of ``w`` (depends on ``w**2`` only)."""
    z2 = w2 * x * x
    if abs(z2) < 0.25:
        term, total, k = x, x, 0
        while abs(term) > 1e-18 * abs(total) and k < 30:
            k += 1
            term *= -z2 / ((2 * k) * (2 * k + 1))
            total += term
        return total
    w = cmath.sqrt(w2)
    return cmath.sin(x * w) / w


def constant_E(P0: complex, Q0: complex, lam: complex, x: float) -> np.ndarray:
    """Closed form of ``exp(x M)`` for constant potentials ``P0``, ``Q0``."""
    lam = complex(lam)
    w2 = lam * lam - complex(P0) * complex(Q0)
    C = cmath.cos(x * cmath.sqrt(w2))  # even in the root, branch-free
    S = _sinc_times_x(w2, x)
    return np.array([[C + 1j * lam * S, -1j * P0 * S],
                     [1j * Q0 * S, C - 1j * lam * S]], dtype=complex)


@dataclass(frozen=True)
class AsymptoticTable:
    angle: float
    radii: np.ndarray
    lams: np.ndarray
    d11: np.ndarray
    d22: np.ndarray


def asymptotic_profile(problem, angle: float, radii, rtol=RTOL, atol=ATOL) -> AsymptoticTable:
    """Deviation of ``e11``, ``e22`` at ``x = pi`` from the free exponentials along a ray.

    ``d11 = |e11(pi) - exp(i lam pi)| exp(-pi |Im lam|)`` and likewise ``d22`` with
    ``exp(-i lam pi)``; on the real axis this is ``|exp(-i lam pi) e11 - 1|``.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be increasing")
    lams = radii * np.exp(1j * angle)
    ev = endpoint_values(problem, lams, rtol=rtol, atol=atol)
    norm = np.exp(-math.pi * np.abs(lams.imag))
    d11 = np.abs(ev.e[:, 0, 0] - np.exp(1j * lams * math.pi) * norm)
    d22 = np.abs(ev.e[:, 1, 1] - np.exp(-1j * lams * math.pi) * norm)
    return AsymptoticTable(angle, radii, lams, d11, d22)
