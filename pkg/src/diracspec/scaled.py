"""Overflow-safe complex numbers stored as (log-magnitude, phase)."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScaledComplex:
    """A complex number ``exp(logmag) * exp(1j * phase)``.

    Zero is represented by ``logmag == -inf`` (phase 0).
    """

    logmag: float
    phase: float = 0.0

    def __post_init__(self):
        if math.isnan(self.logmag) or math.isnan(self.phase):
            raise ValueError("ScaledComplex fields must not be NaN")
        if self.logmag == math.inf:
            raise ValueError("logmag must be finite or -inf")
        if self.logmag == -math.inf:
            object.__setattr__(self, "phase", 0.0)
        else:
            object.__setattr__(self, "phase", _wrap(self.phase))

    @classmethod
    def zero(cls) -> "ScaledComplex":
        return cls(-math.inf, 0.0)

    @classmethod
    def from_complex(cls, z: complex, log_offset: float = 0.0) -> "ScaledComplex":
        """Represent ``z * exp(log_offset)``."""
        z = complex(z)
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)) + log_offset, cmath.phase(z))

    @classmethod
    def exp(cls, w: complex) -> "ScaledComplex":
        """Represent ``exp(w)`` without evaluating it."""
        w = complex(w)
        return cls(w.real, w.imag)

    @property
    def is_zero(self) -> bool:
        return self.logmag == -math.inf

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        if self.logmag > 709.0:
            raise OverflowError(f"|z| = exp({self.logmag:.3g}) overflows double precision")
        return cmath.rect(math.exp(self.logmag), self.phase)

    def mantissa(self, log_offset: float) -> complex:
        """Return ``z * exp(-log_offset)`` as a plain complex number."""
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.logmag - log_offset), self.phase)

    def __mul__(self, other):
        other = _coerce(other)
        if self.is_zero or other.is_zero:
            return ScaledComplex.zero()
        return ScaledComplex(self.logmag + other.logmag, self.phase + other.phase)

    __rmul__ = __mul__

    def __add__(self, other):
        other = _coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        ref = max(self.logmag, other.logmag)
        return ScaledComplex.from_complex(self.mantissa(ref) + other.mantissa(ref), ref)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero:
            return self
        return ScaledComplex(self.logmag, self.phase + math.pi)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __abs__(self):
        return math.exp(self.logmag) if not self.is_zero else 0.0


def _wrap(phase: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(phase, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def _coerce(value) -> ScaledComplex:
    if isinstance(value, ScaledComplex):
        return value
    return ScaledComplex.from_complex(complex(value))


def scaled_sum(logmags: np.ndarray, mantissas: np.ndarray) -> ScaledComplex:
    """Sum of ``mantissas[k] * exp(logmags[k])`` as a :class:`ScaledComplex`."""
    logmags = np.asarray(logmags, dtype=float)
    mantissas = np.asarray(mantissas, dtype=complex)
    live = (mantissas != 0) & np.isfinite(logmags)
    if not live.any():
        return ScaledComplex.zero()
    ref = float(np.max(logmags[live] + np.log(np.abs(mantissas[live]))))
    total = np.sum(mantissas[live] * np.exp(logmags[live] - ref))
    return ScaledComplex.from_complex(complex(total), ref)
