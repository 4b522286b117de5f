"""Run configuration: INI files with ``[problem]``, ``[P]``, ``[Q]``, ``[endpoints]`` and ``[run]``.

Example::

    [problem]
    bc = 1 0 0 0 ; 0 0 0 1      # two rows of four entries, or a preset name

    [P]
    family = constant
    value = 1

    [Q]
    family = power
    coef = 1
    alpha = -0.5

    [run]
    radii = 5, 10, 20
    tol = 1e-10
    seed = 0
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import model
from .errors import ConfigError, ModelError
from .model import BoundaryMatrix, EndpointLaw, PotentialSpec, SpectralProblem

BC_PRESETS = {
    "periodic": BoundaryMatrix.periodic,
    "antiperiodic": BoundaryMatrix.antiperiodic,
    "left_right_degenerate": BoundaryMatrix.left_right_degenerate,
    "right_left_degenerate": BoundaryMatrix.right_left_degenerate,
}

FAMILY_PARAMS = {
    "zero": (),
    "constant": ("value",),
    "power": ("coef", "alpha"),
    "reflected_power": ("coef", "alpha"),
    "polynomial": ("coeffs",),
}

RUN_KEYS = ("radii", "radius", "ray", "eps", "half", "tol", "grid", "seed", "lambdas", "samples",
            "rho_sum")


@dataclass(frozen=True)
class RunConfig:
    problem: SpectralProblem
    radii: Optional[tuple] = None
    radius: Optional[float] = None
    ray: Optional[float] = None
    eps: float = 0.2
    half: str = "lower"
    tol: float = 1e-10
    grid: int = 256
    seed: int = 0
    lambdas: Optional[tuple] = None
    samples: int = 50
    rho_sum: Optional[float] = None
    source: str = "<string>"

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"run.tol: must be positive, got {self.tol}")
        if self.grid < 16:
            raise ConfigError(f"run.grid: must be at least 16, got {self.grid}")
        if self.samples < 1:
            raise ConfigError(f"run.samples: must be positive, got {self.samples}")
        if self.radii is not None and (not self.radii or any(r <= 0 for r in self.radii)):
            raise ConfigError("run.radii: radii must be positive")
        if self.radius is not None and not self.radius > 0:
            raise ConfigError("run.radius: must be positive")
        if self.half not in ("upper", "lower"):
            raise ConfigError("run.half: must be 'upper' or 'lower'")

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def parse_complex(text: str, where: str) -> complex:
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text.strip()!r} as a number") from None


def parse_list(text: str, where: str, kind=float) -> list:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ConfigError(f"{where}: empty list")
    if kind is complex:
        return [parse_complex(p, where) for p in parts]
    try:
        return [kind(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text.strip()!r}") from None


def _line_of(raw: str, section: str, key: str) -> Optional[int]:
    current = None
    for n, line in enumerate(raw.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def _where(raw, section, key):
    line = _line_of(raw, section, key)
    return f"{section}.{key}" + (f" (line {line})" if line else "")


def parse_bc(text: str, where: str) -> BoundaryMatrix:
    name = text.strip().lower()
    if name in BC_PRESETS:
        return BC_PRESETS[name]()
    entries = [p for p in re.split(r"[;,\s]+", text.strip()) if p]
    if len(entries) != 8:
        raise ConfigError(f"{where}: expected 8 boundary entries (two rows of four), got {len(entries)}")
    vals = [parse_complex(e, where) for e in entries]
    try:
        return BoundaryMatrix.from_rows(vals[:4], vals[4:])
    except ModelError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_potential(sec, raw: str, name: str):
    if sec is None:
        raise ConfigError(f"missing section [{name}]")
    family = sec.get("family", "").strip()
    if family not in FAMILY_PARAMS:
        raise ConfigError(f"{_where(raw, name, 'family')}: unknown family {family!r}; "
                          f"choose from {', '.join(FAMILY_PARAMS)}")
    allowed = FAMILY_PARAMS[family]
    for key in sec:
        if key != "family" and key not in allowed:
            raise ConfigError(f"{_where(raw, name, key)}: unexpected parameter for family {family!r}")
    args = []
    for key in allowed:
        if key not in sec:
            raise ConfigError(f"[{name}]: family {family!r} needs parameter {key!r}")
        where = _where(raw, name, key)
        if key == "coeffs":
            args.append(parse_list(sec[key], where, complex))
        elif key == "alpha":
            args.append(float(parse_complex(sec[key], where).real))
        else:
            args.append(parse_complex(sec[key], where))
    try:
        return model.FAMILIES[family](*args)
    except (ValueError, ModelError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from None


def parse_endpoints(sec, raw: str) -> dict:
    out = {}
    if sec is None:
        return out
    for key in sec:
        canonical = {k.lower(): k for k in model.ENDPOINT_KEYS}.get(key.lower())
        where = _where(raw, "endpoints", key)
        if canonical is None:
            raise ConfigError(f"{where}: unknown endpoint key; use one of {', '.join(model.ENDPOINT_KEYS)}")
        vals = parse_list(sec[key], where, complex)
        if len(vals) != 2:
            raise ConfigError(f"{where}: expected 'rho, nu', got {len(vals)} entries")
        try:
            out[canonical] = EndpointLaw(vals[0].real, vals[1])
        except (ValueError, ModelError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return out


def loads(raw: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(raw, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not cp.has_section("problem") or "bc" not in cp["problem"]:
        raise ConfigError(f"{source}: missing [problem] bc")
    bc = parse_bc(cp["problem"]["bc"], _where(raw, "problem", "bc"))
    P = parse_potential(cp["P"] if cp.has_section("P") else None, raw, "P")
    Q = parse_potential(cp["Q"] if cp.has_section("Q") else None, raw, "Q")
    endpoints = parse_endpoints(cp["endpoints"] if cp.has_section("endpoints") else None, raw)
    try:
        problem = SpectralProblem(PotentialSpec(P, Q, endpoints), bc)
    except ModelError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    kw = {}
    if cp.has_section("run"):
        run = cp["run"]
        for key in run:
            if key not in RUN_KEYS:
                raise ConfigError(f"{_where(raw, 'run', key)}: unknown key")
        w = lambda k: _where(raw, "run", k)  # noqa: E731
        if "radii" in run:
            kw["radii"] = tuple(parse_list(run["radii"], w("radii")))
        if "radius" in run:
            kw["radius"] = float(parse_list(run["radius"], w("radius"))[0])
        if "ray" in run:
            kw["ray"] = parse_angle(run["ray"], w("ray"))
        if "eps" in run:
            kw["eps"] = float(parse_list(run["eps"], w("eps"))[0])
        if "rho_sum" in run:
            kw["rho_sum"] = float(parse_list(run["rho_sum"], w("rho_sum"))[0])
        if "half" in run:
            kw["half"] = run["half"].strip()
        if "tol" in run:
            kw["tol"] = float(parse_list(run["tol"], w("tol"))[0])
        for key in ("grid", "seed", "samples"):
            if key in run:
                kw[key] = int(parse_list(run[key], w(key), int)[0])
        if "lambdas" in run:
            kw["lambdas"] = tuple(parse_list(run["lambdas"], w("lambdas"), complex))
    return RunConfig(problem, source=source, **kw)


def parse_angle(text: str, where: str) -> float:
    """Angle in radians; ``pi`` may be used, e.g. ``-pi/2``."""
    s = text.strip().replace(" ", "")
    m = re.fullmatch(r"([+-]?[0-9.eE+-]*)\*?pi(?:/([0-9.]+))?", s)
    try:
        if m:
            coef = m.group(1)
            c = -1.0 if coef == "-" else (1.0 if coef in ("", "+") else float(coef))
            return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
        return float(s)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse angle {text.strip()!r}") from None


def load(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(raw, str(path))


def random_lambdas(seed: int, n: int, max_abs: float = 15.0, max_im: float = 6.0) -> np.ndarray:
    """Reproducible sample with ``|lam| <= max_abs`` and ``|Im lam| <= max_im``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        z = complex(rng.uniform(-max_abs, max_abs), rng.uniform(-max_im, max_im))
        if abs(z) <= max_abs:
            out.append(z)
    return np.array(out)
