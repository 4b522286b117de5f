"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
import scipy.linalg

from diracspec import endpoints, fundamental, model, series, spectrum
from diracspec.determinant import Sector, bound_profile, delta_many
from diracspec.model import BoundaryMatrix, PotentialSpec, SpectralProblem

from conftest import make_problem, random_lams, random_smooth_problem


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, f"criterion {number} failed: {detail}"
    return emit


def diagonal_bc(rng):
    # third column a multiple of the first, fourth of the second: the determinant needs only e11, e22
    u, v = rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(size=2) + 1j * rng.normal(size=2)
    s, t = rng.normal(size=2) + 1j * rng.normal(size=2)
    return BoundaryMatrix(np.column_stack([u, v, s * u, t * v]))


def test_1_dual_oracle_determinant(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        prob = random_smooth_problem(rng, diagonal_bc(rng))
        assert prob.minors.is_zero(prob.minors(1, 3)) and prob.minors.is_zero(prob.minors(4, 2))
        lams = random_lams(rng, 50)
        ode = delta_many(prob, lams, "ode")
        ser = delta_many(prob, lams, "series", allow_ode=False)
        err = np.abs(ode.value - ser.value) / np.maximum(1.0, ode.scale)
        worst = max(worst, float(np.max(err)))
    elapsed = time.perf_counter() - t0
    report(1, "ODE vs series determinant", worst <= 1e-6 and elapsed <= 120,
           f"max scaled difference {worst:.2e} (tol 1e-6), {elapsed:.1f} s (limit 120 s)")


def test_2_constant_potential_closed_form(report):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst_expm = worst = 0.0
    for _ in range(100):
        P0, Q0 = rng.normal(size=2) * 1.5 + 1j * rng.normal(size=2) * 1.5
        lam = random_lams(rng, 1)[0]
        x = rng.uniform(0.05, math.pi)
        ref = constant_reference = fundamental.constant_E(P0, Q0, lam, x)
        M = np.array([[1j * lam, -1j * P0], [1j * Q0, -1j * lam]])
        size = max(1.0, float(np.max(np.abs(ref))))
        worst_expm = max(worst_expm, float(np.max(np.abs(scipy.linalg.expm(x * M) - ref))) / size)
        E = fundamental.propagate(make_problem(P0, Q0), lam, np.array([0.0, x])).E[-1]
        worst = max(worst, float(np.max(np.abs(E - constant_reference))) / size)
    elapsed = time.perf_counter() - t0
    report(2, "propagation vs closed form", worst <= 1e-8 and worst_expm <= 1e-8 and elapsed <= 30,
           f"max rel. error {worst:.2e}, closed form vs expm {worst_expm:.2e} (tol 1e-8), "
           f"{elapsed:.1f} s (limit 30 s)")


def test_3_unit_determinant(report):
    rng = np.random.default_rng(99)
    problems = [random_smooth_problem(rng) for _ in range(8)]
    problems += [make_problem(1.0, 1.0), make_problem(2 + 1j, -0.5),
                 make_problem(model.power(1.0, -0.5), model.reflected_power(2.0, -0.5))]
    worst, worst_cond, samples = 0.0, 0.0, 0
    for prob in problems:
        # absolute check where det E is representable to 1e-8 in double precision
        lams = random_lams(rng, 20, max_im=2.0)
        for fm in fundamental.propagate_many(prob, lams, 64):
            dev = np.abs(fm.det - 1.0)
            samples += dev.size
            worst = max(worst, float(np.max(dev)))
        # wider strip: the deviation can only be judged against the size of the cancelling products
        for fm in fundamental.propagate_many(prob, random_lams(rng, 10), 64):
            E = fm.E
            cond = np.abs(E[:, 0, 0] * E[:, 1, 1]) + np.abs(E[:, 0, 1] * E[:, 1, 0])
            worst_cond = max(worst_cond, float(np.max(np.abs(fm.det - 1.0) / cond)))
    report(3, "det E(x, lam) = 1", worst <= 1e-8 and worst_cond <= 1e-8,
           f"max |det - 1| = {worst:.2e} over {samples} samples with |Im lam| <= 2 (tol 1e-8); "
           f"relative to |e11 e22| + |e12 e21| for |Im lam| <= 6: {worst_cond:.2e}")


def test_4_unperturbed_spectrum(report):
    t0 = time.perf_counter()
    periodic = spectrum.locate_eigenvalues(make_problem(0.0, 0.0, BoundaryMatrix.periodic()), 7)
    empty = spectrum.locate_eigenvalues(make_problem(0.0, 0.0, BoundaryMatrix.left_right_degenerate()), 50)
    elapsed = time.perf_counter() - t0
    got = [(round(e.lam.real), e.multiplicity) for e in periodic]
    err = max(abs(e.lam - round(e.lam.real)) for e in periodic)
    ok = got == [(k, 2) for k in (-6, -4, -2, 0, 2, 4, 6)] and err < 1e-6 and not empty and elapsed <= 60
    report(4, "free periodic and degenerate spectra", ok,
           f"periodic {got} (max error {err:.1e}), degenerate count {len(empty)}, "
           f"{elapsed:.1f} s (limit 60 s)")


def test_5_first_level_closed_form(report):
    table = series.build_tables(make_problem(1.0, 1.0), 0.5)
    err = abs(table.g[1][-1] - (2 - 1j * math.pi))
    report(5, "g1(pi) = 2 - i pi", err <= 1e-9, f"|error| = {err:.2e} (tol 1e-9)")


def test_6_peak_value(report):
    x = np.linspace(0.0, math.pi, 2_000_001)
    worst = 0.0
    for rho in (0.5, 1.0, 2.0, 3.0):
        for lam in (1.0, 2.0, 5.0, 10.0):
            assert rho <= math.pi * lam
            brute = float(np.max(x ** rho * np.exp(-lam * x)))
            worst = max(worst, abs(endpoints.peak_value(rho, lam) - brute) / brute)
    report(6, "peak value vs brute force", worst <= 1e-6, f"max rel. error {worst:.2e} (tol 1e-6)")


def test_7_bound_profile(report):
    prob = make_problem(1.0, 1.0, BoundaryMatrix.left_right_degenerate())
    assert prob.minors(1, 4) == 1
    t0 = time.perf_counter()
    prof = bound_profile(prob, Sector(0.2, "lower"), -math.pi / 2, np.arange(5, 31), rho_sum=2.0)
    elapsed = time.perf_counter() - t0
    top = float(np.min(prof.beta[-10:]))
    ok = bool(np.all(prof.beta > 0)) and top >= 0.5 * prof.min_beta and elapsed <= 60
    report(7, "lower bound along arg lam = -pi/2", ok,
           f"min beta {prof.min_beta:.4g}, top-decade min {top:.4g} (need >= {0.5 * prof.min_beta:.4g}), "
           f"{elapsed:.1f} s (limit 60 s)")


def test_8_completeness_contrast(report):
    t0 = time.perf_counter()
    free = spectrum.completeness_experiment(make_problem(0.0, 0.0), (5, 10, 20))
    unit = spectrum.completeness_experiment(make_problem(1.0, 1.0), (5, 10, 20))
    elapsed = time.perf_counter() - t0
    free_ok = all(v == 1.0 for r in free.results for v in r.residuals.values())
    names = sorted(unit.results[0].residuals)
    seq = {n: [r.residuals[n] for r in unit.results] for n in names}
    monotone = all(b <= a + 1e-3 for s in seq.values() for a, b in zip(s, s[1:]))
    dropped = sum(s[-1] < s[0] for s in seq.values())
    ok = free_ok and monotone and dropped >= 3 and elapsed <= 300
    trail = "; ".join(f"{n} " + " -> ".join(f"{v:.3g}" for v in s) for n, s in seq.items())
    report(8, "completeness contrast", ok,
           f"empty system residual 1: {free_ok}; {trail}; {dropped}/4 decreased; "
           f"{elapsed:.1f} s (limit 300 s)")


def test_9_swap_symmetry(report):
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(30):
        base = random_smooth_problem(rng)
        P, Q = base.potential.P, base.potential.Q
        lam = random_lams(rng, 1)[0]
        # the two sides come from different evaluation paths so the identity is not an artefact
        _, e22 = series.diagonal_normalised(series.build_tables(make_problem(P, Q), lam))
        e11 = fundamental.endpoint_values(make_problem(Q, P), [-lam], rtol=1e-12).e[0, 0, 0]
        worst = max(worst, abs(e22 - e11) / max(1.0, abs(e22)))
    report(9, "e22(lam; P, Q) = e11(-lam; Q, P)", worst <= 1e-8,
           f"max difference {worst:.2e} (tol 1e-8), series e22 against integrated e11")


def test_10_endpoint_estimation(report):
    cases = [("1", lambda x: np.ones_like(x), 1.0, 1.0, 1e-6),
             ("3x^2", lambda x: 3 * x ** 2, 3.0, 1.0, 1e-4),
             ("x^-1/2", lambda x: x ** -0.5, 0.5, 2.0, 1e-3)]
    lines, ok = [], True
    for name, f, rho, nu, tol in cases:
        fit = endpoints.estimate_endpoint(f, "left")
        err = max(abs(fit.rho - rho), abs(fit.nu - nu))
        ok &= err <= tol
        lines.append(f"{name}: rho {fit.rho:.6g} nu {fit.nu.real:.6g} (err {err:.1e}, tol {tol:g})")
    report(10, "endpoint exponent fits", ok, "; ".join(lines))
