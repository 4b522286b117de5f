"""Endpoint power laws of window integrals, and the elementary decay estimates.

The completeness hypotheses are phrased through limits such as

    lim_{h -> 0} int_0^h Q(x) dx / h**rho = nu != 0,

which this module estimates from a ladder of shrinking windows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DegenerateFit, DomainError, QuadratureFailure
from .quadrature import PanelGrid

QUAD_ABS_TOL = 1e-12
DEFAULT_LADDER = tuple(math.pi * 2.0 ** -k for k in range(3, 15))


@dataclass(frozen=True)
class EndpointFit:
    endpoint: str
    which: str
    rho: float
    nu: complex
    residual: float


def _quad_real(g, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(g, a, b, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=500, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3 and err > 1e3 * QUAD_ABS_TOL + 1e-9 * abs(value):
        raise QuadratureFailure(f"adaptive quadrature did not converge on [{a}, {b}]: {out[3]}")
    return value


def window_integral(f, endpoint: str, h: float) -> complex:
    """``int_0^h f`` (``endpoint='left'``) or ``int_{pi-h}^pi f`` (``'right'``)."""
    if not 0 < h <= math.pi:
        raise DomainError(f"window width must lie in (0, pi], got {h}")
    if endpoint == "left":
        a, b = 0.0, h
    elif endpoint == "right":
        a, b = math.pi - h, math.pi
    else:
        raise ValueError(f"endpoint must be 'left' or 'right', got {endpoint!r}")

    def re(x):
        return float(np.real(f(x)))

    def im(x):
        return float(np.imag(f(x)))

    return complex(_quad_real(re, a, b), _quad_real(im, a, b))


def estimate_endpoint(f, endpoint: str, ladder=DEFAULT_LADDER, which: str = "?") -> EndpointFit:
    """Fit ``H(h) ~ nu * h**rho`` over a decreasing ladder of window widths."""
    h = np.asarray(ladder, dtype=float)
    if h.ndim != 1 or h.size < 4:
        raise ValueError("ladder needs at least 4 window widths")
    if np.any(np.diff(h) >= 0) or h[0] > math.pi or h[-1] <= 0:
        raise ValueError("ladder must be strictly decreasing inside (0, pi]")

    H = np.array([window_integral(f, endpoint, hk) for hk in h])
    mag = np.abs(H)
    alive = mag > 1e-300
    if np.count_nonzero(~alive) * 2 >= h.size:
        raise DegenerateFit(f"window integrals vanish at the {endpoint} endpoint")

    slope, intercept = np.polyfit(np.log(h[alive]), np.log(mag[alive]), 1)
    rho = float(slope)
    if not rho > 0:
        raise DegenerateFit(f"fitted exponent {rho:.3g} is not positive")
    finest = np.flatnonzero(alive)[-3:]
    nu = complex(np.mean(H[finest] / h[finest] ** rho))
    if nu == 0:
        raise DegenerateFit("fitted coefficient vanishes")
    residual = float(np.max(np.abs(H[alive] / (nu * h[alive] ** rho) - 1.0)))
    return EndpointFit(endpoint, which, rho, nu, residual)


def peak_value(rho: float, lam: float) -> float:
    """``max_{0<=x<=pi} x**rho * exp(-lam*x)`` for ``0 < rho <= pi*lam``."""
    if not (rho > 0 and lam > 0):
        raise DomainError("peak_value needs rho > 0 and lam > 0")
    if rho > math.pi * lam:
        raise DomainError(f"maximiser rho/lam = {rho / lam:.4g} lies beyond pi")
    return (rho / lam) ** rho * math.exp(-rho)


def _weighted_grid(n_panels=96):
    return PanelGrid.uniform(0.0, math.pi, n_panels, grade_left=True, levels=24)


def bounded_profile(rho: float, tau, sigmas) -> np.ndarray:
    """``sigma**(rho+1) * sup_b |int_0^b x**rho exp(-2 sigma x) tau(x) dx|`` per sigma.

    Stays bounded for continuous ``tau``.
    """
    grid = _weighted_grid()
    x = grid.x
    t = np.asarray(tau(x), dtype=complex)
    out = []
    for s in np.asarray(sigmas, dtype=float):
        running, at_bp = grid.cumulative(x ** rho * np.exp(-2.0 * s * x) * t)
        sup = max(np.max(np.abs(running)), np.max(np.abs(at_bp)))
        out.append(sup * s ** (rho + 1.0))
    return np.array(out)


def vanishing_profile(rho: float, tau, sigmas) -> np.ndarray:
    """``sigma**rho * |int_0^pi x**rho exp(-2 sigma x) tau(x) dx|`` per sigma.

    Tends to zero for summable ``tau``.
    """
    grid = _weighted_grid()
    x = grid.x
    t = np.asarray(tau(x), dtype=complex)
    return np.array([abs(grid.integrate(x ** rho * np.exp(-2.0 * s * x) * t)) * s ** rho
                     for s in np.asarray(sigmas, dtype=float)])
