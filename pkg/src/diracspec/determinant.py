"""Characteristic determinant and sector lower-bound profiles.

With ``E(pi, lam) = [[e11, e12], [e21, e22]]`` the determinant is

    Delta(lam) = A12 + A34 + A32 e11 + A14 e22 + A13 e12 + A42 e21,

and for ``V = 0`` it reduces to ``Delta0 = A12 + A34 - A23 exp(i pi lam) + A14 exp(-i pi lam)``.
Values grow like ``exp(pi |Im lam|)``, so the working quantity throughout is the
normalised determinant ``Delta(lam) * exp(-pi |Im lam|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fundamental, series
from .errors import MethodUnavailable, SectorViolation
from .model import BcTag, Minors, SpectralProblem, check_theorem1, endpoint_law
from .scaled import ScaledComplex

DEFAULT_EPS = 0.2


def _coefficients(minors: Minors):
    A = minors
    return A(1, 2) + A(3, 4), A(3, 2), A(1, 4), A(1, 3), A(4, 2)


def delta0_normalised(minors: Minors, lams) -> np.ndarray:
    lams = np.asarray(lams, dtype=complex)
    A = minors
    damp = -math.pi * np.abs(lams.imag)
    return ((A(1, 2) + A(3, 4)) * np.exp(damp)
            - A(2, 3) * np.exp(1j * math.pi * lams + damp)
            + A(1, 4) * np.exp(-1j * math.pi * lams + damp))


def delta0(minors: Minors, lam: complex) -> complex:
    return delta0_scaled(minors, lam).to_complex()


def delta0_scaled(minors: Minors, lam: complex) -> ScaledComplex:
    lam = complex(lam)
    return ScaledComplex.from_complex(complex(delta0_normalised(minors, lam)),
                                      math.pi * abs(lam.imag))


@dataclass(frozen=True)
class DeltaValues:
    """Normalised ``Delta`` (and optionally ``dDelta/dlam``) for a batch of ``lam``."""

    lams: np.ndarray
    value: np.ndarray
    derivative: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None  # sum of the moduli of the individual terms

    def scaled(self, k: int) -> ScaledComplex:
        return ScaledComplex.from_complex(self.value[k], math.pi * abs(self.lams[k].imag))


def _combine(minors: Minors, lams, e, de=None):
    const, c11, c22, c12, c21 = _coefficients(minors)
    damp = np.exp(-math.pi * np.abs(lams.imag))
    val = const * damp + c11 * e[:, 0, 0] + c22 * e[:, 1, 1] + c12 * e[:, 0, 1] + c21 * e[:, 1, 0]
    scale = (abs(const) * damp + abs(c11) * np.abs(e[:, 0, 0]) + abs(c22) * np.abs(e[:, 1, 1])
             + abs(c12) * np.abs(e[:, 0, 1]) + abs(c21) * np.abs(e[:, 1, 0]))
    der = None
    if de is not None:
        der = c11 * de[:, 0, 0] + c22 * de[:, 1, 1] + c12 * de[:, 0, 1] + c21 * de[:, 1, 0]
    return val, der, scale


def _needs_offdiagonal(minors: Minors) -> bool:
    return not (minors.is_zero(minors(1, 3)) and minors.is_zero(minors(4, 2)))


def delta_many(problem: SpectralProblem, lams, method: str = "ode", want_derivative: bool = False,
               rtol: float = fundamental.RTOL, atol: float = fundamental.ATOL,
               allow_ode: bool = True, grid_resolution: int = 256) -> DeltaValues:
    """Normalised determinant ``Delta(lam) exp(-pi |Im lam|)`` for many ``lam``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    minors = problem.minors
    if method == "ode":
        if not allow_ode:
            raise MethodUnavailable("ODE evaluation disabled")
        ev = fundamental.endpoint_values(problem, lams, want_derivative, rtol, atol)
        val, der, scale = _combine(minors, lams, ev.e, ev.de)
        return DeltaValues(lams, val, der, scale)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    if want_derivative:
        raise MethodUnavailable("the series path does not provide dDelta/dlam")
    e = np.zeros((lams.size, 2, 2), dtype=complex)
    if _needs_offdiagonal(minors):
        if not allow_ode:
            raise MethodUnavailable("boundary conditions need e12/e21, which only the ODE path gives")
        e[:] = fundamental.endpoint_values(problem, lams, False, rtol, atol).e
    for k, lam in enumerate(lams):
        table = series.build_tables(problem, lam, grid_resolution)
        e[k, 0, 0], e[k, 1, 1] = series.diagonal_normalised(table)
    val, _, scale = _combine(minors, lams, e)
    return DeltaValues(lams, val, None, scale)


def delta_scaled(problem: SpectralProblem, lam: complex, method: str = "ode", **kw) -> ScaledComplex:
    return delta_many(problem, [lam], method, **kw).scaled(0)


def delta(problem: SpectralProblem, lam: complex, method: str = "ode", **kw) -> complex:
    return delta_scaled(problem, lam, method, **kw).to_complex()


@dataclass(frozen=True)
class Sector:
    """``eps <= arg lam <= pi - eps`` (upper) or ``-pi + eps <= arg lam <= -eps`` (lower)."""

    eps: float = DEFAULT_EPS
    half: str = "lower"

    def __post_init__(self):
        if not 0 < self.eps < math.pi / 10:
            raise ValueError("sector opening eps must lie in (0, pi/10)")
        if self.half not in ("upper", "lower"):
            raise ValueError("half must be 'upper' or 'lower'")

    @property
    def bisector(self) -> float:
        return math.pi / 2 if self.half == "upper" else -math.pi / 2

    def strictly_contains(self, angle: float) -> bool:
        a = math.remainder(angle, 2 * math.pi)
        if self.half == "upper":
            return self.eps < a < math.pi - self.eps
        return -math.pi + self.eps < a < -self.eps


@dataclass(frozen=True)
class BoundProfile:
    ray_angle: float
    radii: np.ndarray
    lams: np.ndarray
    beta: np.ndarray
    rho_sum: float
    min_beta: float
    logmag: np.ndarray
    phase: np.ndarray


def branch_rho_sum(problem: SpectralProblem) -> float:
    """Exponent sum of the applicable completeness branch."""
    report = check_theorem1(problem)
    if not report.applicable:
        raise ValueError("no completeness branch applies; pass rho_sum explicitly")
    keys = ("P_left", "Q_right") if report.branch is BcTag.THEOREM1_BRANCH53 else ("P_right", "Q_left")
    return sum(report.laws.get(k, endpoint_law(problem, k)).rho for k in keys)


def bound_profile(problem: SpectralProblem, sector: Sector, ray_angle: Optional[float] = None,
                  radii=None, rho_sum: Optional[float] = None, method: str = "ode",
                  rtol: float = fundamental.RTOL) -> BoundProfile:
    """``beta(r) = |Delta(lam)| |Im lam|**rho_sum exp(-pi |Im lam|)`` along a ray."""
    angle = sector.bisector if ray_angle is None else float(ray_angle)
    if not sector.strictly_contains(angle):
        raise SectorViolation(f"ray angle {angle:.4g} is not strictly inside the {sector.half} sector")
    radii = np.asarray(np.arange(5, 31) if radii is None else radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be increasing")
    lams = radii * np.exp(1j * angle)
    if abs(lams[0].imag) < 2:
        raise ValueError("smallest radius must give |Im lam| >= 2")
    if rho_sum is None:
        rho_sum = branch_rho_sum(problem)
    vals = delta_many(problem, lams, method, rtol=rtol)
    sig = np.abs(lams.imag)
    beta = np.abs(vals.value) * sig ** rho_sum
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(vals.value)) + math.pi * sig
    return BoundProfile(angle, radii, lams, beta, float(rho_sum), float(np.min(beta)),
                        logmag, np.angle(vals.value))
