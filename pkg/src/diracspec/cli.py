"""Command-line front end.

Every command reads an INI problem file and writes a CSV table whose first line is
``# tool=diracspec version=... command=...`` followed by a header row. Complex values
take two columns (``_re``, ``_im``). Determinant values are normalised by
``exp(-pi |Im lam|)``; the ``log_scale`` column restores them.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from . import __version__, config, determinant, endpoints, model, series, spectrum
from .errors import BudgetExceeded, ConfigError, ModelError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BUDGET = 0, 2, 3, 4
DEFAULT_BOUND_RADII = tuple(float(r) for r in range(5, 31))
DEFAULT_LADDER = (5.0, 10.0, 20.0)
DEFAULT_RADIUS = 10.0


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v) + 0.0)
    return str(v)


def cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


class Table:
    def __init__(self, command: str, header):
        self.command = command
        self.header = list(header)
        self.rows = []

    def add(self, *values):
        flat = []
        for v in values:
            flat.extend(v if isinstance(v, list) else [v])
        if len(flat) != len(self.header):
            raise AssertionError(f"row has {len(flat)} fields, header {len(self.header)}")
        self.rows.append([fmt(v) for v in flat])

    def render(self) -> str:
        buf = io.StringIO()
        buf.write(f"# tool=diracspec version={__version__} command={self.command}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


def _lambdas(cfg: config.RunConfig) -> np.ndarray:
    if cfg.lambdas:
        return np.array(cfg.lambdas, dtype=complex)
    return config.random_lambdas(cfg.seed, cfg.samples)


def cmd_classify(cfg: config.RunConfig, log) -> Table:
    problem = cfg.problem
    A = problem.minors
    cls = model.classify_bc(A)
    report = model.check_theorem1(problem)
    t = Table("classify", ["field", "re", "im", "text"])
    for (j, k), v in sorted(A.values.items()):
        t.add(f"A{j}{k}", cx(v), "")
    t.add("bc_class", "", "", cls.tag.value)
    status = "applicable" if report.applicable else "not applicable: " + "; ".join(report.missing)
    label = (report.branch or cls.tag).value
    t.add("theorem1", "", "", f"{label}: {status}")
    for key, law in sorted(report.laws.items()):
        if law is None:
            t.add(f"{key}_nu", "", "", "vanishing")
        else:
            t.add(f"{key}_rho", law.rho, "", "")
            t.add(f"{key}_nu", cx(law.nu), "")
    log(f"class: {cls.tag.value} ({cls.notes})")
    log(f"{label}: {status}")
    return t


def cmd_det(cfg, log) -> Table:
    problem = cfg.problem
    lams = _lambdas(cfg)
    d = determinant.delta_many(problem, lams, "ode", rtol=cfg.tol)
    d0 = determinant.delta0_normalised(problem.minors, lams)
    t = Table("det", ["lam_re", "lam_im", "delta_re", "delta_im", "delta0_re", "delta0_im",
                      "log_scale"])
    for lam, v, v0 in zip(lams, d.value, d0):
        t.add(cx(lam), cx(v), cx(v0), math.pi * abs(lam.imag))
    return t


def cmd_bounds(cfg, log) -> Table:
    problem = cfg.problem
    sector = determinant.Sector(cfg.eps, cfg.half)
    radii = np.array(cfg.radii or DEFAULT_BOUND_RADII)
    rho_sum = cfg.rho_sum
    if rho_sum is None:
        try:
            rho_sum = determinant.branch_rho_sum(problem)
        except ValueError as exc:
            raise ConfigError(f"{exc}; set run.rho_sum") from None
    prof = determinant.bound_profile(problem, sector, cfg.ray, radii, rho_sum, rtol=cfg.tol)
    t = Table("bounds", ["r", "lam_re", "lam_im", "beta", "log_abs_delta", "phase", "rho_sum"])
    for r, lam, b, lm, ph in zip(prof.radii, prof.lams, prof.beta, prof.logmag, prof.phase):
        t.add(float(r), cx(lam), float(b), float(lm), float(ph), prof.rho_sum)
    log(f"min beta = {prof.min_beta!r}")
    return t


def _eig_table(records, command="eigs") -> Table:
    t = Table(command, ["re", "im", "multiplicity", "residual", "box_re0", "box_re1", "box_im0",
                        "box_im1", "flag"])
    for r in records:
        b = r.box
        t.add(r.lam.real, r.lam.imag, r.multiplicity, r.residual, b.re0, b.re1, b.im0, b.im1,
              r.flag)
    return t


def _radius(cfg, default):
    if cfg.radius is not None:
        return cfg.radius
    if cfg.radii:
        return max(cfg.radii)
    return default


def cmd_eigs(cfg, log) -> Table:
    R = _radius(cfg, DEFAULT_RADIUS)
    records = spectrum.locate_eigenvalues(cfg.problem, R)
    log(f"{len(records)} eigenvalues in |lam| <= {R}")
    return _eig_table(records)


def cmd_series_check(cfg, log) -> Table:
    problem = cfg.problem
    lams = _lambdas(cfg)
    ode = determinant.delta_many(problem, lams, "ode", rtol=cfg.tol)
    ser = determinant.delta_many(problem, lams, "series", grid_resolution=max(64, cfg.grid))
    t = Table("series-check", ["lam_re", "lam_im", "ode_re", "ode_im", "series_re", "series_im",
                               "abs_diff", "levels", "log_scale"])
    worst = 0.0
    for k, lam in enumerate(lams):
        levels = series.build_tables(problem, lam, max(64, cfg.grid)).n_max
        diff = abs(ode.value[k] - ser.value[k])
        worst = max(worst, diff)
        t.add(cx(lam), cx(ode.value[k]), cx(ser.value[k]), diff, levels, math.pi * abs(lam.imag))
    log(f"max |ode - series| = {worst!r}")
    return t


def cmd_complete(cfg, log) -> Table:
    radii = tuple(cfg.radii or DEFAULT_LADDER)
    rep = spectrum.completeness_experiment(cfg.problem, radii)
    names = sorted(rep.results[0].residuals) if rep.results else []
    t = Table("complete", ["radius", "eigenvalues", "functions", "gram_condition",
                           "min_gram_eigenvalue", "smallest_kept_singular"]
              + [f"residual_{n}" for n in names])
    for r in rep.results:
        t.add(r.radius, r.eigenvalue_count, r.function_count, r.gram_condition,
              r.min_gram_eigenvalue, r.smallest_kept_singular, *[r.residuals[n] for n in names])
    return t


def cmd_analyze_endpoints(cfg, log) -> Table:
    pot = cfg.problem.potential
    t = Table("analyze-endpoints", ["key", "source", "rho", "nu_re", "nu_im", "fit_residual"])
    for key in model.ENDPOINT_KEYS:
        which, end = key.split("_")
        declared = pot.declared_law(key)
        try:
            fit = endpoints.estimate_endpoint(pot.function(which), end, which=which)
            t.add(key, "estimated", fit.rho, cx(fit.nu), fit.residual)
        except NumericalError as exc:
            t.add(key, "estimated", math.nan, math.nan, math.nan, math.nan)
            log(f"{key}: {exc}")
        if declared is not None:
            t.add(key, "declared", declared.rho, cx(declared.nu), 0.0)
    return t


COMMANDS = {
    "classify": cmd_classify,
    "det": cmd_det,
    "bounds": cmd_bounds,
    "eigs": cmd_eigs,
    "series-check": cmd_series_check,
    "complete": cmd_complete,
    "analyze-endpoints": cmd_analyze_endpoints,
}


def parse_radii(text: str):
    return tuple(config.parse_list(text, "--radii"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diracspec", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"diracspec {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI problem file")
    ap.add_argument("--out", help="output CSV path (default: stdout)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float, help="relative tolerance of the propagator")
    ap.add_argument("--grid", type=int, help="series grid resolution")
    ap.add_argument("--radii", help="comma-separated radii")
    ap.add_argument("--ray", help="ray angle in radians, e.g. -pi/2")
    ap.add_argument("--quiet", action="store_true")
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)

    def log(msg):
        if not args.quiet:
            print(msg, file=stderr)

    try:
        cfg = config.load(args.config)
        cfg = cfg.with_overrides(
            seed=args.seed, tol=args.tol, grid=args.grid,
            radii=parse_radii(args.radii) if args.radii else None,
            ray=config.parse_angle(args.ray, "--ray") if args.ray else None)
        table = COMMANDS[args.command](cfg, log)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        partial = exc.partial or []
        print(f"budget exceeded: {exc} ({len(partial)} partial results)", file=stderr)
        if args.command == "eigs" and partial:
            _write(_eig_table(partial).render(), args.out, stdout)
        return EXIT_BUDGET
    except (NumericalError, ValueError) as exc:
        print(f"numerical failure in {args.command}: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC
    _write(table.render(), args.out, stdout)
    return EXIT_OK


def _write(text, path, stdout):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
