"""Problem definition: potentials, boundary matrix, minors and their classification.

The system is ``B y' + V y = lam * y`` on ``[0, pi]`` with ``B = diag(-i, i)`` and
off-diagonal ``V = [[0, P], [Q, 0]]``, together with two boundary forms

    U_j(y) = a_j1 y1(0) + a_j2 y2(0) + a_j3 y1(pi) + a_j4 y2(pi),   j = 1, 2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import AllMinorsZero, DegenerateFit, EndpointDataUnavailable, ModelError, NumericalError

ZERO_TOL = 1e-12

# endpoint windows: which potential, which end of [0, pi]
ENDPOINT_KEYS = ("P_left", "P_right", "Q_left", "Q_right")


@dataclass(frozen=True)
class EndpointLaw:
    """Power law ``int_window f ~ nu * h**rho`` as the window width ``h -> 0``."""

    rho: float
    nu: complex

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ModelError(f"endpoint exponent must be positive, got {self.rho}")
        if complex(self.nu) == 0:
            raise ModelError("endpoint coefficient must be nonzero")
        object.__setattr__(self, "nu", complex(self.nu))


@dataclass(frozen=True)
class Potential:
    """A complex potential on ``[0, pi]`` with optional closed-form endpoint laws.

    ``left`` describes ``int_0^h f`` and ``right`` describes ``int_{pi-h}^pi f``.
    ``singular_left``/``singular_right`` flag integrable singularities, which makes
    the integrators avoid sampling that endpoint and grade their meshes toward it.
    """

    func: Callable
    family: str = "custom"
    params: tuple = ()
    left: Optional[EndpointLaw] = None
    right: Optional[EndpointLaw] = None
    singular_left: bool = False
    singular_right: bool = False
    from_right: Optional[Callable] = None  # f as a function of d = pi - x

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.func(x), dtype=complex), x.shape).copy()

    def at(self, x, d):
        """Evaluate at ``x`` given the accurate distance ``d = pi - x`` as well.

        Near the right end ``x`` cannot resolve ``pi - x``; potentials that supply
        ``from_right`` are evaluated from ``d`` there.
        """
        if self.from_right is None:
            return self(x)
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        out = self(x)
        near = d < x
        if np.any(near):
            vals = np.broadcast_to(np.asarray(self.from_right(d), dtype=complex), d.shape)
            out[near] = vals[near]
        return out

    def shifted(self, offset: float) -> "Potential":
        """``x -> f(x + offset)``; endpoint laws are dropped."""
        f = self.func
        return Potential(lambda x: f(np.asarray(x) + offset), family=f"{self.family}+shift",
                         params=self.params + (offset,))

    def scaled(self, factor: complex) -> "Potential":
        f = self.func
        left = EndpointLaw(self.left.rho, self.left.nu * factor) if self.left and factor else None
        right = EndpointLaw(self.right.rho, self.right.nu * factor) if self.right and factor else None
        g = self.from_right
        return Potential(lambda x: factor * np.asarray(f(x)), self.family, self.params + (factor,),
                         left, right, self.singular_left, self.singular_right,
                         None if g is None else (lambda d: factor * np.asarray(g(d))))


def _law(rho, nu):
    return EndpointLaw(rho, nu) if nu != 0 else None


def constant(value: complex) -> Potential:
    value = complex(value)
    return Potential(lambda x: np.full(np.shape(x), value, dtype=complex), "constant", (value,),
                     _law(1.0, value), _law(1.0, value))


def zero() -> Potential:
    return constant(0.0)


def power(coef: complex, alpha: float) -> Potential:
    """``coef * x**alpha`` with ``alpha > -1``."""
    coef, alpha = complex(coef), float(alpha)
    if alpha <= -1:
        raise ModelError("power-law exponent must exceed -1 for integrability")

    def f(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return coef * np.power(np.asarray(x, dtype=float), alpha)

    return Potential(f, "power", (coef, alpha), _law(alpha + 1.0, coef / (alpha + 1.0)),
                     _law(1.0, coef * math.pi ** alpha), singular_left=alpha < 0)


def reflected_power(coef: complex, alpha: float) -> Potential:
    """``coef * (pi - x)**alpha`` with ``alpha > -1``."""
    coef, alpha = complex(coef), float(alpha)
    if alpha <= -1:
        raise ModelError("power-law exponent must exceed -1 for integrability")

    def g(d):
        with np.errstate(divide="ignore", invalid="ignore"):
            return coef * np.power(np.maximum(np.asarray(d, dtype=float), 0.0), alpha)

    return Potential(lambda x: g(math.pi - np.asarray(x, dtype=float)), "reflected_power",
                     (coef, alpha), _law(1.0, coef * math.pi ** alpha),
                     _law(alpha + 1.0, coef / (alpha + 1.0)), singular_right=alpha < 0,
                     from_right=g)


def _lowest_law(coeffs):
    nz = np.flatnonzero(np.abs(coeffs) > 0)
    if nz.size == 0:
        return None
    k = int(nz[0])
    return EndpointLaw(k + 1.0, coeffs[k] / (k + 1.0))


def polynomial(coeffs) -> Potential:
    """``sum_k coeffs[k] * x**k``."""
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size == 0:
        raise ModelError("polynomial needs at least one coefficient")
    poly = np.polynomial.Polynomial(c)
    # p(pi - s) as a polynomial in s
    reflected = np.polynomial.Polynomial(c)(np.polynomial.Polynomial([math.pi, -1.0])).coef
    return Potential(lambda x: poly(np.asarray(x, dtype=float)), "polynomial", tuple(c),
                     _lowest_law(c), _lowest_law(np.asarray(reflected, dtype=complex)))


FAMILIES = {"constant": constant, "zero": zero, "power": power,
            "reflected_power": reflected_power, "polynomial": polynomial}


def _as_potential(f) -> Potential:
    if isinstance(f, Potential):
        return f
    if callable(f):
        return Potential(f)
    return constant(f)


@dataclass(frozen=True)
class PotentialSpec:
    """The pair ``(P, Q)`` plus optional declared endpoint laws.

    ``endpoint_data`` maps keys of :data:`ENDPOINT_KEYS` to :class:`EndpointLaw` and
    overrides whatever the potential families declare.
    """

    P: Potential
    Q: Potential
    endpoint_data: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "P", _as_potential(self.P))
        object.__setattr__(self, "Q", _as_potential(self.Q))
        data = dict(self.endpoint_data or {})
        for key, law in data.items():
            if key not in ENDPOINT_KEYS:
                raise ModelError(f"unknown endpoint key {key!r}")
            if law is not None and not isinstance(law, EndpointLaw):
                data[key] = EndpointLaw(*law)
        object.__setattr__(self, "endpoint_data", data)

    def function(self, which: str) -> Potential:
        return {"P": self.P, "Q": self.Q}[which]

    def declared_law(self, key: str) -> Optional[EndpointLaw]:
        if key in self.endpoint_data:
            return self.endpoint_data[key]
        which, end = key.split("_")
        pot = self.function(which)
        return pot.left if end == "left" else pot.right

    @property
    def singular_left(self) -> bool:
        return self.P.singular_left or self.Q.singular_left

    @property
    def singular_right(self) -> bool:
        return self.P.singular_right or self.Q.singular_right

    def swapped(self) -> "PotentialSpec":
        return PotentialSpec(self.Q, self.P)

    def l1_norms(self, n_panels: int = 64) -> tuple[float, float]:
        from .quadrature import PanelGrid

        grid = PanelGrid.uniform(0.0, math.pi, n_panels, grade_left=self.singular_left,
                                 grade_right=self.singular_right)
        return (float(grid.integrate(np.abs(self.P.at(grid.x, grid.d)))),
                float(grid.integrate(np.abs(self.Q.at(grid.x, grid.d)))))

    def validate(self) -> None:
        norms = self.l1_norms(16)
        if not all(math.isfinite(n) for n in norms):
            raise ModelError("potentials must be finite on the quadrature grid and summable")


@dataclass(frozen=True)
class BoundaryMatrix:
    """The 2x4 coefficient matrix of the boundary forms."""

    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=complex)
        if a.shape != (2, 4):
            raise ModelError(f"boundary matrix must be 2x4, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ModelError("boundary matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @classmethod
    def from_rows(cls, row1, row2) -> "BoundaryMatrix":
        return cls(np.array([row1, row2], dtype=complex))

    @classmethod
    def periodic(cls) -> "BoundaryMatrix":
        return cls.from_rows([1, 0, -1, 0], [0, 1, 0, -1])

    @classmethod
    def antiperiodic(cls) -> "BoundaryMatrix":
        return cls.from_rows([1, 0, 1, 0], [0, 1, 0, 1])

    @classmethod
    def left_right_degenerate(cls) -> "BoundaryMatrix":
        """``y1(0) = y2(pi) = 0``."""
        return cls.from_rows([1, 0, 0, 0], [0, 0, 0, 1])

    @classmethod
    def right_left_degenerate(cls) -> "BoundaryMatrix":
        """``y2(0) = y1(pi) = 0``."""
        return cls.from_rows([0, 1, 0, 0], [0, 0, 1, 0])

    def left_multiplied(self, m) -> "BoundaryMatrix":
        return BoundaryMatrix(np.asarray(m, dtype=complex) @ self.a)

    def forms(self, y0, ypi):
        """Evaluate ``(U_1, U_2)`` given ``y(0)`` and ``y(pi)``; trailing axis of length 2."""
        ends = np.concatenate([np.asarray(y0), np.asarray(ypi)], axis=-1)
        return ends @ self.a.T


@dataclass(frozen=True)
class Minors:
    """All 2x2 minors ``A_jk`` of the boundary matrix (1-based columns)."""

    values: dict

    def __call__(self, j: int, k: int) -> complex:
        if j == k:
            return 0j
        if j < k:
            return self.values[(j, k)]
        return -self.values[(k, j)]

    @property
    def max_abs(self) -> float:
        return max(abs(v) for v in self.values.values())

    def plucker_defect(self) -> complex:
        A = self
        return A(1, 2) * A(3, 4) - A(1, 3) * A(2, 4) + A(1, 4) * A(2, 3)

    def is_zero(self, value: complex, tol: float = ZERO_TOL, degree: int = 1) -> bool:
        """Zero test relative to ``max|A_jk|**degree``."""
        return abs(value) <= tol * self.max_abs ** degree


def compute_minors(bc: BoundaryMatrix) -> Minors:
    a = bc.a
    values = {}
    for j in range(4):
        for k in range(j + 1, 4):
            values[(j + 1, k + 1)] = complex(a[0, j] * a[1, k] - a[0, k] * a[1, j])
    if all(v == 0 for v in values.values()):
        raise AllMinorsZero("rows of the boundary matrix are linearly dependent")
    return Minors(values)


class BcTag(enum.Enum):
    REGULAR = "Regular"
    THEOREM1_BRANCH53 = "Theorem1Branch53"
    THEOREM1_BRANCH54 = "Theorem1Branch54"
    THEOREM1_BOTH = "Theorem1BothBranches"
    OTHER_NON_REGULAR = "OtherNonRegular"


PATTERN_NOTE = ("degeneracy pattern tested as A14*A32 = A13 = A24 = 0; the two-minor form "
                "A13 = A42 = 0 alone omits the product condition")


@dataclass(frozen=True)
class BcClass:
    tag: BcTag
    notes: str = ""

    @property
    def is_theorem1(self) -> bool:
        return self.tag in (BcTag.THEOREM1_BRANCH53, BcTag.THEOREM1_BRANCH54, BcTag.THEOREM1_BOTH)


def degeneracy_pattern(minors: Minors, tol: float = ZERO_TOL) -> bool:
    A = minors
    return (A.is_zero(A(1, 4) * A(3, 2), tol, degree=2) and A.is_zero(A(1, 3), tol)
            and A.is_zero(A(2, 4), tol))


def classify_bc(minors: Minors, tol: float = ZERO_TOL) -> BcClass:
    A = minors
    if not A.is_zero(A(1, 4) * A(2, 3), tol, degree=2):
        return BcClass(BcTag.REGULAR, "A14*A23 != 0")
    if not degeneracy_pattern(A, tol):
        return BcClass(BcTag.OTHER_NON_REGULAR, "A14*A23 = 0 but the degeneracy pattern fails; "
                       + PATTERN_NOTE)
    a14 = not A.is_zero(A(1, 4), tol)
    a32 = not A.is_zero(A(3, 2), tol)
    if a14 and a32:
        return BcClass(BcTag.THEOREM1_BOTH, "A14 and A32 both above tolerance; " + PATTERN_NOTE)
    if a14:
        return BcClass(BcTag.THEOREM1_BRANCH53, "A14 != 0; " + PATTERN_NOTE)
    if a32:
        return BcClass(BcTag.THEOREM1_BRANCH54, "A32 != 0; " + PATTERN_NOTE)
    return BcClass(BcTag.OTHER_NON_REGULAR, "A14 = A32 = 0; " + PATTERN_NOTE)


@dataclass(frozen=True)
class SpectralProblem:
    potential: PotentialSpec
    bc: BoundaryMatrix

    def __post_init__(self):
        if not isinstance(self.potential, PotentialSpec):
            raise ModelError("potential must be a PotentialSpec")
        self.potential.validate()
        compute_minors(self.bc)

    @cached_property
    def minors(self) -> Minors:
        return compute_minors(self.bc)

    @property
    def P(self) -> Potential:
        return self.potential.P

    @property
    def Q(self) -> Potential:
        return self.potential.Q

    def with_bc(self, bc: BoundaryMatrix) -> "SpectralProblem":
        return SpectralProblem(self.potential, bc)

    def swapped(self) -> "SpectralProblem":
        return SpectralProblem(self.potential.swapped(), self.bc)


# endpoint laws each branch needs, with the clause label reported when missing
BRANCH_LAWS = {
    BcTag.THEOREM1_BRANCH53: (("P_left", "nu5 != 0"), ("Q_right", "nu7 != 0")),
    BcTag.THEOREM1_BRANCH54: (("P_right", "nu4 != 0"), ("Q_left", "nu6 != 0")),
}


@dataclass(frozen=True)
class Theorem1Report:
    applicable: bool
    branch: Optional[BcTag]
    missing: list = field(default_factory=list)
    laws: dict = field(default_factory=dict)
    bc_class: Optional[BcClass] = None


def endpoint_law(problem: SpectralProblem, key: str, estimate: bool = True) -> Optional[EndpointLaw]:
    """Declared law for ``key`` or, failing that, one estimated from samples.

    Returns None when the window integrals vanish (coefficient zero behaviour).
    """
    law = problem.potential.declared_law(key)
    if law is not None or not estimate:
        return law
    from .endpoints import estimate_endpoint

    which, end = key.split("_")
    try:
        fit = estimate_endpoint(problem.potential.function(which), end)
    except DegenerateFit:
        return None
    except NumericalError as exc:
        raise EndpointDataUnavailable(f"cannot estimate {key}: {exc}") from exc
    return EndpointLaw(fit.rho, fit.nu)


def check_theorem1(problem: SpectralProblem, tol: float = ZERO_TOL) -> Theorem1Report:
    cls = classify_bc(problem.minors, tol)
    if not cls.is_theorem1:
        missing = []
        if not degeneracy_pattern(problem.minors, tol):
            missing.append("A14*A32 = A13 = A24 = 0 pattern")
        else:
            missing.append("A14 != 0 or A32 != 0")
        return Theorem1Report(False, None, missing, {}, cls)

    branches = ([BcTag.THEOREM1_BRANCH53, BcTag.THEOREM1_BRANCH54]
                if cls.tag is BcTag.THEOREM1_BOTH else [cls.tag])
    laws, missing_by_branch = {}, {}
    for branch in branches:
        missing_by_branch[branch] = []
        for key, label in BRANCH_LAWS[branch]:
            law = endpoint_law(problem, key)
            laws[key] = law
            if law is None:
                missing_by_branch[branch].append(label)
    for branch in branches:
        if not missing_by_branch[branch]:
            return Theorem1Report(True, branch, [], laws, cls)
    branch = branches[0]
    missing = [m for b in branches for m in missing_by_branch[b]]
    return Theorem1Report(False, branch, missing, laws, cls)
