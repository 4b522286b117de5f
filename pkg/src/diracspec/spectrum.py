"""Eigenvalues as zeros of the characteristic determinant, root chains, completeness.

Zeros are isolated with the argument principle: the phase of the normalised
determinant is tracked along box edges, refining until neighbouring samples
differ by less than pi/2. Edge results are cached, so adjacent boxes and
sub-boxes share work. Isolated zeros are polished by Newton's method using the
co-integrated lam-derivative of the fundamental matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fundamental
from .determinant import delta_many
from .errors import (BoundaryZero, BudgetExceeded, ChainConstructionFailure,
                     PhaseTrackingFailure)
from .model import SpectralProblem
from .quadrature import PanelGrid

COUNT_RTOL = 1e-8
NEWTON_RTOL = 1e-11
MAX_REFINE_ROUNDS = 40
# refine where min |Delta|/scale < ALIAS_FACTOR * step; a nearby zero could hide a 2 pi wrap
ALIAS_FACTOR = 3.0
MIN_STEP = 1e-6
BOUNDARY_REL = ALIAS_FACTOR * MIN_STEP
GRID_OFFSET = 0.137
SAMPLES_PER_UNIT = 4


@dataclass(frozen=True)
class Box:
    re0: float
    re1: float
    im0: float
    im1: float

    def __post_init__(self):
        if not (self.re1 > self.re0 and self.im1 > self.im0):
            raise ValueError("box must have positive width and height")

    @classmethod
    def around(cls, center: complex, half: float) -> "Box":
        return cls(center.real - half, center.real + half, center.imag - half, center.imag + half)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))

    @property
    def size(self) -> float:
        return max(self.re1 - self.re0, self.im1 - self.im0)

    @property
    def corners(self):
        return (complex(self.re0, self.im0), complex(self.re1, self.im0),
                complex(self.re1, self.im1), complex(self.re0, self.im1))

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.re0 - pad <= z.real <= self.re1 + pad
                and self.im0 - pad <= z.imag <= self.im1 + pad)

    def split(self, fx: float = 0.5, fy: float = 0.5):
        xm = self.re0 + fx * (self.re1 - self.re0)
        ym = self.im0 + fy * (self.im1 - self.im0)
        return [Box(self.re0, xm, self.im0, ym), Box(xm, self.re1, self.im0, ym),
                Box(self.re0, xm, ym, self.im1), Box(xm, self.re1, ym, self.im1)]

    def grown(self, d: float) -> "Box":
        return Box(self.re0 - d, self.re1 + d, self.im0 - d, self.im1 + d)

    def distance_to_origin(self) -> float:
        dx = max(self.re0, 0.0, -self.re1)
        dy = max(self.im0, 0.0, -self.im1)
        return math.hypot(dx, dy)


def _key(z: complex):
    return (round(z.real, 11), round(z.imag, 11))


class PhaseTracker:
    """Cached phase increments of the normalised determinant along straight segments."""

    def __init__(self, problem: SpectralProblem, rtol: float = COUNT_RTOL,
                 max_points: int = 2_000_000):
        self.problem = problem
        self.rtol = rtol
        self.cache = {}
        self.min_ratio = {}
        self.evaluations = 0
        self.max_points = max_points

    def _eval(self, pts):
        self.evaluations += pts.size
        if self.evaluations > self.max_points:
            raise BudgetExceeded("phase tracking evaluation budget exhausted")
        d = delta_many(self.problem, pts, "ode", rtol=self.rtol)
        return d.value, d.scale

    def changes(self, segments):
        """Phase change along each ``(a, b)`` segment (same order as given)."""
        todo = []
        for a, b in segments:
            k, kr = (_key(a), _key(b)), (_key(b), _key(a))
            if k not in self.cache and kr not in self.cache:
                todo.append((a, b))
        todo = list({(_key(a), _key(b)): (a, b) for a, b in todo}.values())
        if todo:
            self._compute(todo)
        out = []
        for a, b in segments:
            k, kr = (_key(a), _key(b)), (_key(b), _key(a))
            out.append(self.cache[k] if k in self.cache else -self.cache[kr])
        return out

    def _compute(self, segments):
        ts, vals, ratios, rel = [], [], [], []
        for a, b in segments:
            n = max(4, int(math.ceil(SAMPLES_PER_UNIT * abs(b - a))))
            ts.append(np.linspace(0.0, 1.0, n + 1))
        lengths = [abs(b - a) for a, b in segments]
        pts = np.concatenate([a + t * (b - a) for (a, b), t in zip(segments, ts)])
        flat, fscale = self._eval(pts)
        pos = 0
        for t in ts:
            vals.append(flat[pos:pos + t.size])
            rel.append(np.abs(vals[-1]) / fscale[pos:pos + t.size])
            ratios.append(float(np.min(rel[-1])))
            pos += t.size

        active = list(range(len(segments)))
        for _ in range(MAX_REFINE_ROUNDS):
            new_pts, plan = [], []
            for i in active:
                v = vals[i]
                inc = np.angle(v[1:] / np.where(v[:-1] == 0, 1e-300, v[:-1]))
                r = rel[i]
                step = np.diff(ts[i]) * lengths[i]
                near = (np.minimum(r[1:], r[:-1]) < ALIAS_FACTOR * step) & (step >= MIN_STEP)
                bad = np.flatnonzero((np.abs(inc) >= 0.5 * math.pi) | near | (v[1:] == 0) | (v[:-1] == 0))
                if bad.size:
                    mids = 0.5 * (ts[i][bad] + ts[i][bad + 1])
                    a, b = segments[i]
                    plan.append((i, bad, mids))
                    new_pts.append(a + mids * (b - a))
            if not plan:
                break
            flat, fscale = self._eval(np.concatenate(new_pts))
            pos = 0
            for i, bad, mids in plan:
                got = flat[pos:pos + mids.size]
                got_rel = np.abs(got) / fscale[pos:pos + mids.size]
                ratios[i] = min(ratios[i], float(np.min(got_rel)))
                rel[i] = np.insert(rel[i], bad + 1, got_rel)
                pos += mids.size
                ts[i] = np.insert(ts[i], bad + 1, mids)
                vals[i] = np.insert(vals[i], bad + 1, got)
            active = [i for i, _, _ in plan]
        else:
            if min(ratios[i] for i in active) <= BOUNDARY_REL:
                raise BoundaryZero("determinant vanishes on a contour edge")
            raise PhaseTrackingFailure("phase refinement budget exceeded")

        for (a, b), v, r in zip(segments, vals, ratios):
            k = (_key(a), _key(b))
            self.cache[k] = float(np.sum(np.angle(v[1:] / v[:-1])))
            self.min_ratio[k] = r

    def edges(self, box: Box, unit: bool = False):
        """Counter-clockwise boundary segments; ``unit`` splits lattice edges into unit pieces."""
        c = box.corners
        segs = []
        for a, b in zip(c, c[1:] + c[:1]):
            n = max(1, int(round(abs(b - a)))) if unit else 1
            pts = [a + (b - a) * k / n for k in range(n + 1)]
            segs.extend(zip(pts[:-1], pts[1:]))
        return segs

    def winding_raw(self, boxes, unit: bool = False):
        all_segs, sizes = [], []
        for box in boxes:
            s = self.edges(box, unit)
            all_segs.extend(s)
            sizes.append(len(s))
        ch = self.changes(all_segs)
        out, pos = [], 0
        for box, n in zip(boxes, sizes):
            segs = all_segs[pos:pos + n]
            total = sum(ch[pos:pos + n])
            pos += n
            lo = min(self.min_ratio.get((_key(a), _key(b)), self.min_ratio.get((_key(b), _key(a)), 1.0))
                     for a, b in segs)
            if lo <= BOUNDARY_REL:
                raise BoundaryZero(f"|Delta| nearly vanishes on the boundary of {box}")
            out.append(total / (2 * math.pi))
        return out


def _rounded(raw: float) -> int:
    n = int(round(raw))
    if abs(raw - n) > 1e-6:
        raise PhaseTrackingFailure(f"non-integer winding {raw}")
    return n


def count_zeros(problem: SpectralProblem, box: Box, rtol: float = COUNT_RTOL,
                tracker: Optional[PhaseTracker] = None) -> int:
    """Number of zeros of Delta inside ``box`` (with multiplicity)."""
    tracker = tracker or PhaseTracker(problem, rtol)
    for attempt in range(4):
        trial = box if attempt == 0 else box.grown(1e-3 * box.size * attempt * 1.37)
        try:
            return _rounded(tracker.winding_raw([trial])[0])
        except BoundaryZero:
            if attempt == 3:
                raise
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class EigenvalueRecord:
    lam: complex
    multiplicity: int
    residual: float
    box: Box
    flag: str = ""


def newton_refine(problem: SpectralProblem, starts, mults, rtol: float = NEWTON_RTOL,
                  max_iter: int = 50):
    """Modified Newton ``lam -= m Delta/Delta'`` on a batch; returns (lams, residuals, ok)."""
    lam = np.asarray(starts, dtype=complex).copy()
    m = np.asarray(mults, dtype=float)
    ok = np.zeros(lam.size, dtype=bool)
    live = np.ones(lam.size, dtype=bool)
    last = np.full(lam.size, np.inf)
    for _ in range(max_iter):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        d = delta_many(problem, lam[idx], "ode", want_derivative=True, rtol=rtol)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = m[idx] * d.value / d.derivative
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        lam[idx] -= step
        size = np.abs(step)
        floor = 10 * rtol * np.maximum(1.0, np.abs(lam[idx]))
        # converged: tiny step, or the step stopped shrinking once it is near the noise floor
        done = (size <= floor) | ((size >= 0.5 * last[idx]) & (size <= 1e3 * floor)) | (d.value == 0)
        last[idx] = size
        ok[idx[done & ~bad]] = True
        live[idx[done | bad]] = False
    res = np.abs(delta_many(problem, lam, "ode", rtol=rtol).value) if lam.size else np.zeros(0)
    return lam, res, ok


def _lattice_blocks(R: float, block: int, offset: float):
    lo = math.floor((-R - offset) / block) * block
    hi = math.ceil((R - offset) / block) * block
    out = []
    for bx in range(lo, hi, block):
        for by in range(lo, hi, block):
            box = Box(offset + bx, offset + bx + block, offset + by, offset + by + block)
            if box.distance_to_origin() <= R:
                out.append(box)
    return out


def locate_eigenvalues(problem: SpectralProblem, R: float, block: int = 8, min_size: float = 1e-3,
                       newton_size: float = 0.5, max_boxes: int = 200_000,
                       rtol: float = COUNT_RTOL, offset: float = GRID_OFFSET) -> list:
    """All zeros of Delta in ``|lam| <= R`` sorted by real part."""
    if R <= 0:
        raise ValueError("R must be positive")
    tracker = PhaseTracker(problem, rtol)
    pending = [(b, True) for b in _lattice_blocks(R, block, offset)]
    records, clusters, processed = [], [], 0

    def _isolated(lam, box, n):
        # a converged multiple-root iterate must carry the whole count of its box
        try:
            return count_zeros(problem, Box.around(lam, min(0.05, box.size / 2)), tracker=tracker) == n
        except (BoundaryZero, PhaseTrackingFailure):
            return False

    def _push(nxt, box, n, kids):
        if kids is not None:
            nxt.extend(kids)
            return
        c = box.center
        r0 = float(np.abs(delta_many(problem, [c], "ode").value[0]))
        clusters.append(EigenvalueRecord(c, n, r0, box, flag="cluster-center"))

    def split(box, lattice):
        if lattice and box.size > 1.5:
            return [(c, True) for c in box.split()]
        for f in (0.5, 0.5 + 0.0713, 0.5 - 0.0527):
            kids = box.split(f, f)
            try:
                tracker.winding_raw(kids)
            except BoundaryZero:
                continue
            return [(c, False) for c in kids]
        return None

    try:
        while pending:
            processed += len(pending)
            if processed > max_boxes:
                raise BudgetExceeded("box budget exhausted", partial=records)
            boxes = [b for b, _ in pending]
            flags = [f for _, f in pending]
            raws = []
            for b, lat in pending:
                raws.append(None)
            # batch by lattice flag so lattice edges are shared in unit pieces
            for lat in (True, False):
                sel = [i for i, f in enumerate(flags) if f is lat]
                if sel:
                    got = tracker.winding_raw([boxes[i] for i in sel], unit=lat)
                    for i, g in zip(sel, got):
                        raws[i] = g
            nxt, newton_boxes = [], []
            for box, lat, raw in zip(boxes, flags, raws):
                n = _rounded(raw)
                if n == 0:
                    continue
                if n < 0:
                    raise PhaseTrackingFailure(f"negative winding {n} in {box}")
                if box.size <= newton_size:
                    newton_boxes.append((box, n))
                else:
                    _push(nxt, box, n, split(box, lat))
            if newton_boxes:
                lams, res, ok = newton_refine(problem, [b.center for b, _ in newton_boxes],
                                              [n for _, n in newton_boxes])
                for (box, n), lam, r, good in zip(newton_boxes, lams, res, ok):
                    inside = good and box.contains(lam, pad=1e-9 * max(1.0, abs(lam)))
                    if inside and (n == 1 or _isolated(lam, box, n)):
                        records.append(EigenvalueRecord(complex(lam), n, float(r), box))
                    elif box.size > min_size:
                        _push(nxt, box, n, split(box, False))
                    else:
                        _push(nxt, box, n, None)
            pending = nxt
            records.extend(clusters)
            clusters.clear()
    except BudgetExceeded as exc:
        exc.partial = _finish(records, R)
        raise
    return _finish(records, R)


def _finish(records, R):
    kept = [r for r in records if abs(r.lam) <= R]
    return sorted(kept, key=lambda r: (round(r.lam.real, 9), r.lam.imag))


def save_eigenvalues(records, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "multiplicity", "residual"])
        for r in records:
            w.writerow([repr(r.lam.real), repr(r.lam.imag), r.multiplicity, repr(r.residual)])


def load_eigenvalues(path) -> list:
    import csv

    out = []
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    header = rows[0]
    col = {name: i for i, name in enumerate(header)}
    for row in rows[1:]:
        lam = complex(float(row[col["re"]]), float(row[col["im"]]))
        out.append(EigenvalueRecord(lam, int(row[col["multiplicity"]]),
                                    float(row[col["residual"]]), Box.around(lam, 1e-6)))
    return out


# ---------------------------------------------------------------------------
# root functions

CHAIN_TOL = 1e-6
KERNEL_TOL = 1e-6


@dataclass(frozen=True)
class RootChain:
    """Eigenfunctions and associated functions at one eigenvalue.

    ``functions[k]`` has shape (2, len(grid.x)) with samples at the panel nodes;
    ``ends[k]`` holds ``(y(0), y(pi))``.
    """

    eigenvalue: EigenvalueRecord
    functions: list
    ends: list
    norms: list
    kinds: list  # "eigen" or "associated"
    grid: PanelGrid
    residuals: list = field(default_factory=list)
    flag: str = ""


def function_grid(R: float) -> PanelGrid:
    n_panels = max(24, int(math.ceil(R * math.pi / 1.5)) + 8)
    return PanelGrid.uniform(0.0, math.pi, n_panels, order=16)


def h_norm(grid: PanelGrid, y) -> float:
    return float(np.sqrt(grid.integrate(np.abs(y[0]) ** 2 + np.abs(y[1]) ** 2)))


def _ode_residual(problem, grid, lam, y, rhs=None):
    """``B y' + V y - lam y - rhs`` at the nodes."""
    x = grid.x
    dy = grid.derivative(y)
    P, Q = problem.P.at(x, grid.d), problem.Q.at(x, grid.d)
    r1 = -1j * dy[0] + P * y[1] - lam * y[0]
    r2 = 1j * dy[1] + Q * y[0] - lam * y[1]
    r = np.stack([r1, r2])
    if rhs is not None:
        r = r - rhs
    return r


def _chain_samples(problem, lams, grid, want_derivative):
    x = np.concatenate([[0.0], grid.x, [math.pi]])
    return fundamental.propagate_many(problem, lams, x, want_derivative, rtol=1e-11, atol=1e-13)


def root_chains(problem: SpectralProblem, records, grid: Optional[PanelGrid] = None) -> list:
    """Root chains for many eigenvalues (batched propagation)."""
    if not records:
        return []
    if grid is None:
        grid = function_grid(max(abs(r.lam) for r in records) + 1)
    need_d = any(r.multiplicity >= 2 for r in records)
    fms = _chain_samples(problem, [r.lam for r in records], grid, need_d)
    return [_build_chain(problem, r, fm, grid) for r, fm in zip(records, fms)]


def root_chain(problem: SpectralProblem, ev: EigenvalueRecord,
               grid: Optional[PanelGrid] = None) -> RootChain:
    return root_chains(problem, [ev], grid)[0]


def _build_chain(problem, ev, fm, grid) -> RootChain:
    a = problem.bc.a
    lam = ev.lam
    E = fm.E
    Epi = E[-1]
    W = a[:, :2] + a[:, 2:] @ Epi
    scale = max(np.linalg.norm(a[:, :2], 2), np.linalg.norm(a[:, 2:] @ Epi, 2))
    _, s, vh = np.linalg.svd(W)
    kdim = int(np.sum(s <= KERNEL_TOL * scale))
    if kdim == 0:
        raise ChainConstructionFailure(
            f"no numerical kernel at lam={lam}: smallest singular value {s[-1] / scale:.3g}")
    if kdim == 2:
        cs = [np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)]
    else:
        cs = [vh[-1].conj()]

    funcs, ends, kinds, res, norms = [], [], [], [], []
    flag = ""

    def sample(mat, c):
        vals = mat @ c  # (n, 2)
        return vals[1:-1].T.copy(), (vals[0], vals[-1])

    for c in cs:
        y, yend = sample(E, c)
        nrm = h_norm(grid, y)
        c = c / nrm
        y, yend = sample(E, c)
        funcs.append(y)
        ends.append(yend)
        kinds.append("eigen")

    if kdim == 1 and ev.multiplicity >= 2:
        if ev.multiplicity > 2:
            flag = "multiplicity>2: eigenfunction only"
        else:
            c = cs[0] / h_norm(grid, sample(E, cs[0])[0])
            dE = fm.dE_dlam
            Wd = a[:, 2:] @ dE[-1]
            c1, *_ = np.linalg.lstsq(W, -Wd @ c, rcond=KERNEL_TOL)
            y1 = (dE @ c + E @ c1)
            y1_nodes, y1_end = y1[1:-1].T.copy(), (y1[0], y1[-1])
            y0 = funcs[0]
            alpha = grid.integrate(np.sum(y1_nodes * y0.conj(), axis=0))
            y1_nodes = y1_nodes - alpha * y0
            y1_end = (y1_end[0] - alpha * ends[0][0], y1_end[1] - alpha * ends[0][1])
            funcs.append(y1_nodes)
            ends.append(y1_end)
            kinds.append("associated")

    for k, (y, yend, kind) in enumerate(zip(funcs, ends, kinds)):
        nrm = h_norm(grid, y)
        norms.append(nrm)
        rhs = funcs[k - 1] if kind == "associated" else None
        r = _ode_residual(problem, grid, lam, y, rhs)
        ode_rel = h_norm(grid, r) / (nrm + (norms[k - 1] if rhs is not None else 0.0))
        bc = problem.bc.forms(yend[0], yend[1])
        bc_rel = float(np.sum(np.abs(bc))) / nrm
        res.append((ode_rel, bc_rel))
        if ode_rel > CHAIN_TOL or bc_rel > CHAIN_TOL:
            raise ChainConstructionFailure(
                f"{kind} function at lam={lam}: ODE residual {ode_rel:.3g}, BC residual {bc_rel:.3g}")
    return RootChain(ev, funcs, ends, norms, kinds, grid, res, flag)


# ---------------------------------------------------------------------------
# completeness experiment

def standard_test_vectors(grid: PanelGrid) -> dict:
    x = grid.x
    bump = np.exp(-4.0 * (x - math.pi / 2) ** 2)
    raw = {
        "const_first": np.stack([np.ones_like(x), np.zeros_like(x)]).astype(complex),
        "const_second": np.stack([np.zeros_like(x), np.ones_like(x)]).astype(complex),
        "linear_pair": np.stack([x, math.pi - x]).astype(complex),
        "bump_pair": np.stack([bump, 1j * bump]),
    }
    return {k: v / h_norm(grid, v) for k, v in raw.items()}


@dataclass(frozen=True)
class RadiusResult:
    radius: float
    eigenvalue_count: int
    function_count: int
    gram_condition: float
    min_gram_eigenvalue: float
    smallest_kept_singular: float
    residuals: dict


@dataclass(frozen=True)
class CompletenessReport:
    radii: list
    results: list
    eigenvalues: list = field(default_factory=list)


GRAM_CUTOFF = 1e-10


def projection_residuals(grid: PanelGrid, functions, tests: dict):
    """Relative residual of the best H-approximation of each test vector."""
    sw = np.sqrt(grid.w)
    out = {}
    if not functions:
        return {k: 1.0 for k in tests}, math.nan, math.nan, math.nan
    Phi = np.stack([np.concatenate([sw * f[0], sw * f[1]]) for f in functions], axis=1)
    Phi = Phi / np.linalg.norm(Phi, axis=0)
    U, s, _ = np.linalg.svd(Phi, full_matrices=False)
    keep = s > GRAM_CUTOFF * s[0]
    Uk = U[:, keep]
    for name, f in tests.items():
        fv = np.concatenate([sw * f[0], sw * f[1]])
        r = fv - Uk @ (Uk.conj().T @ fv)
        out[name] = float(np.linalg.norm(r) / np.linalg.norm(fv))
    cond = float((s[0] / s[keep][-1]) ** 2)
    return out, cond, float(s[-1] ** 2), float(s[keep][-1])


def completeness_experiment(problem: SpectralProblem, radii=(5.0, 10.0, 20.0), tests=None,
                            eigenvalues=None, grid: Optional[PanelGrid] = None) -> CompletenessReport:
    radii = sorted(float(r) for r in radii)
    if eigenvalues is None:
        eigenvalues = locate_eigenvalues(problem, radii[-1])
    grid = grid or function_grid(radii[-1] + 1)
    tests = tests if tests is not None else standard_test_vectors(grid)
    chains = root_chains(problem, eigenvalues, grid)
    results = []
    for R in radii:
        sel = [c for c in chains if abs(c.eigenvalue.lam) <= R]
        funcs = [f for c in sel for f in c.functions]
        resid, cond, mineig, kept = projection_residuals(grid, funcs, tests)
        results.append(RadiusResult(R, len(sel), len(funcs), cond, mineig, kept, resid))
    return CompletenessReport(radii, results, list(eigenvalues))
