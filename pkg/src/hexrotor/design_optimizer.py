"""Tilt-angle and spin-pattern optimization for the equally spaced hexrotor.

Worst-direction force and torque capacities are ``1/sqrt(p)`` and
``1/sqrt(q)`` with ``p = max_i ||b_i||^2`` and ``q = max_i ||c_i||^2`` (rows
of the inverse actuation matrix, K1-normalized).  Both are minimized in
epigraph form, first separately (the shadow minima) and then jointly along
the normal of the segment joining them (Normal Boundary Intersection).

The discrete spin signs are enumerated modulo cyclic rotation, and each
orbit is searched with a derivative-free local solver from uniformly drawn
tilt vectors.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import AllStartsFailed, NoConvergence
from .wrench_model import DesignConfig

log = logging.getLogger(__name__)

# Relative tolerance under which two recomputed costs count as equal.
TIE_TOL = 1e-9
# Constraint violation accepted from the local solver.
FEAS_TOL = 1e-6
DEFAULT_LAMBDA_GRID = tuple(round(0.01 * i, 2) for i in range(101))
FRONT_CSV_HEADER = (
    ["lambda", "p", "q", "f_max", "m_max"]
    + [f"phi{i}_deg" for i in range(1, 7)]
    + [f"w{i}" for i in range(1, 7)]
    + ["converged"]
)


def default_workers() -> int:
    cap = os.environ.get("HEXCTL_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


@dataclass(frozen=True)
class OptimizerSettings:
    phi_max: float = math.pi / 3
    d: float = 0.16
    k_ratio: float = 0.01
    n_starts: int = 1000
    seed: int = 0
    tol: float = 1e-8
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    max_evals: int = 5000
    backend: str = "nlopt"
    workers: int | None = None
    # two-phase multistart: every start runs COBYLA to ``coarse_tol``; those within
    # ``screen`` (relative) of the best coarse cost are then polished to ``tol`` by
    # SQP.  COBYLA's LP step can stall for tens of seconds once many constraints
    # are active together, which is exactly the situation near the optimum.
    coarse_tol: float = 1e-4
    screen: float = 2e-3

    def __post_init__(self):
        if not 0 < self.phi_max < math.pi / 2:
            raise ValueError("phi_max must lie in (0, pi/2)")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        grid = tuple(float(x) for x in self.lambda_grid)
        if any(not 0.0 <= x <= 1.0 for x in grid) or list(grid) != sorted(grid):
            raise ValueError("lambda_grid must be sorted and within [0, 1]")
        object.__setattr__(self, "lambda_grid", grid)
        if self.backend not in ("nlopt", "scipy"):
            raise ValueError(f"unknown backend {self.backend!r}")


# --------------------------------------------------------------------------
# spin orbits

def canonical_spin(w: Sequence[int]) -> tuple[int, ...]:
    """Lexicographically smallest cyclic rotation of a sign vector."""
    w = tuple(int(x) for x in w)
    return min(w[i:] + w[:i] for i in range(len(w)))


def spin_orbits(n: int = 6) -> list[tuple[int, ...]]:
    """One representative per rotation class of the ``2**n`` sign vectors."""
    return sorted({canonical_spin(w) for w in itertools.product((-1, 1), repeat=n)})


_ORBITS = tuple(spin_orbits())


# --------------------------------------------------------------------------
# design points

def block_sqnorms(phi, w, d: float, k_ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """``(||b_i||^2, ||c_i||^2)`` for an equally spaced, K1-normalized design."""
    out = np.empty(12)
    _kernels.block_sqnorms(np.asarray(phi, dtype=float), np.asarray(w, dtype=float), d, k_ratio, out)
    return out[:6], out[6:]


@dataclass(frozen=True, eq=False)
class DesignPoint:
    phi: np.ndarray
    w: tuple[int, ...]
    p: float
    q: float

    @property
    def F_max(self) -> float:
        return 1.0 / math.sqrt(self.p)

    @property
    def M_max(self) -> float:
        return 1.0 / math.sqrt(self.q)

    @classmethod
    def evaluate(cls, phi, w, d: float, k_ratio: float) -> "DesignPoint":
        b2, c2 = block_sqnorms(phi, w, d, k_ratio)
        return cls(np.array(phi, dtype=float), tuple(int(x) for x in w), float(b2.max()), float(c2.max()))

    def to_config(self, d: float, k_ratio: float, k1: float = 1.0) -> DesignConfig:
        return DesignConfig.equally_spaced(self.phi, self.w, d=d, k1=k1, k2=k_ratio * k1)

    def rounded(self, d: float, k_ratio: float) -> "DesignPoint":
        """Same design with tilt angles rounded to whole degrees."""
        phi = np.radians(np.round(np.degrees(self.phi)))
        return DesignPoint.evaluate(phi, self.w, d, k_ratio)


@dataclass(frozen=True, eq=False)
class ShadowMinima:
    p_star: float
    q0: float
    p0: float
    q_star: float
    psi_p: DesignPoint
    psi_q: DesignPoint

    def __post_init__(self):
        if self.p_star > self.p0 * (1 + TIE_TOL) or self.q_star > self.q0 * (1 + TIE_TOL):
            raise ValueError("shadow minima are inconsistent: p* > p0 or q* > q0")


# --------------------------------------------------------------------------
# local solver

class LocalResult(NamedTuple):
    x: np.ndarray
    fun: float
    nfev: int
    max_violation: float


def local_solve(objective: Callable, constraints: Callable, x0, tol: float = 1e-8,
                lower=None, upper=None, max_evals: int = 5000, initial_step=None,
                backend: str = "nlopt") -> LocalResult:
    """Derivative-free constrained minimization (COBYLA).

    ``constraints(x)`` returns an array that must be non-negative at a
    feasible point.  Raises :class:`NoConvergence` when the evaluation cap is
    hit or the final point violates the constraints by more than ``FEAS_TOL``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if backend == "nlopt":
        res = _solve_nlopt(objective, constraints, x0, tol, lower, upper, max_evals, initial_step)
    elif backend == "scipy":
        res = _solve_scipy(objective, constraints, x0, tol, lower, upper, max_evals, initial_step)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if res.max_violation > FEAS_TOL:
        raise NoConvergence(f"constraint violation {res.max_violation:.3g} after {res.nfev} evaluations", res)
    return res


def _violation(g, x, lower, upper) -> float:
    viol = max(0.0, -float(np.min(g))) if np.size(g) else 0.0
    return max(viol, float(np.max(lower - x, initial=0.0)), float(np.max(x - upper, initial=0.0)))


def _solve_nlopt(objective, constraints, x0, tol, lower, upper, max_evals, initial_step):
    import nlopt

    n = x0.size
    m = np.size(constraints(x0))
    best = {"f": math.inf, "x": None}
    nfev = [0]

    def f(x, grad):
        nfev[0] += 1
        return float(objective(x))

    def c(result, x, grad):
        g = constraints(x)
        np.negative(g, out=result)
        # keep the best feasible point; COBYLA may stop on roundoff without returning it
        if -result.max() >= -FEAS_TOL:
            fx = objective(x)
            if fx < best["f"]:
                best["f"] = fx
                best["x"] = x.copy()

    opt = nlopt.opt(nlopt.LN_COBYLA, n)
    opt.set_min_objective(f)
    opt.add_inequality_mconstraint(c, np.zeros(m))
    opt.set_lower_bounds(lower)
    opt.set_upper_bounds(upper)
    opt.set_xtol_rel(tol)
    # relative steps alone never terminate for a variable converging to zero
    opt.set_xtol_abs(np.full(n, tol * 1e-3))
    opt.set_maxeval(max_evals)
    if initial_step is not None:
        opt.set_initial_step(np.asarray(initial_step, dtype=float))
    try:
        x = opt.optimize(x0.copy())
        code = opt.last_optimize_result()
    except nlopt.RoundoffLimited:
        if best["x"] is None:
            raise NoConvergence("roundoff limited before any feasible point")
        x, code = best["x"], nlopt.SUCCESS
    except (RuntimeError, ValueError) as exc:
        raise NoConvergence(f"nlopt failure: {exc}") from exc
    x = np.clip(x, lower, upper)
    g = constraints(x)
    res = LocalResult(x, float(objective(x)), nfev[0], _violation(g, x, lower, upper))
    if code == nlopt.MAXEVAL_REACHED:
        raise NoConvergence(f"evaluation cap {max_evals} reached", res)
    return res


def _solve_scipy(objective, constraints, x0, tol, lower, upper, max_evals, initial_step):
    from scipy.optimize import minimize

    cons = [{"type": "ineq", "fun": constraints}]
    finite_lo = np.isfinite(lower)
    finite_hi = np.isfinite(upper)
    if finite_lo.any() or finite_hi.any():
        cons.append({"type": "ineq", "fun": lambda x: np.concatenate([(x - lower)[finite_lo],
                                                                         (upper - x)[finite_hi]])})
    options = {"maxiter": max_evals, "tol": tol}
    if initial_step is not None:
        options["rhobeg"] = float(np.max(initial_step))
    r = minimize(objective, x0, method="COBYLA", constraints=cons, options=options)
    x = np.clip(r.x, lower, upper)
    g = constraints(x)
    res = LocalResult(x, float(objective(x)), int(r.nfev), _violation(g, x, lower, upper))
    if r.status == 2:
        raise NoConvergence(f"evaluation cap {max_evals} reached", res)
    return res


# --------------------------------------------------------------------------
# epigraph problems

@dataclass(frozen=True)
class _Problem:
    """One epigraph problem: 'force', 'torque' or 'nbi' (with its line data)."""

    kind: str
    lam: float = 0.0
    anchors: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)  # p*, q0, p0, q*

    def tight_bound(self, b2: np.ndarray, c2: np.ndarray) -> float:
        """Smallest epigraph variable satisfying every constraint."""
        if self.kind == "force":
            return float(b2.max())
        if self.kind == "torque":
            return float(c2.max())
        ps, q0, p0, qs = self.anchors
        tp = (b2.max() - ((1 - self.lam) * ps + self.lam * p0)) / (q0 - qs)
        tq = (c2.max() - (self.lam * qs + (1 - self.lam) * q0)) / (p0 - ps)
        return float(max(tp, tq))

    def cost_scale(self) -> float:
        """Magnitude of a meaningful cost difference; NBI offsets can sit near zero."""
        if self.kind != "nbi":
            return 0.0
        ps, q0, p0, qs = self.anchors
        return min(ps / (q0 - qs), qs / (p0 - ps))

    def _coeffs(self):
        # (slope_p, offset_p, slope_q, offset_q, use_p, use_q)
        if self.kind == "force":
            return (1.0, 0.0, 0.0, 0.0, True, False)
        if self.kind == "torque":
            return (0.0, 0.0, 1.0, 0.0, False, True)
        ps, q0, p0, qs = self.anchors
        lam = self.lam
        return (q0 - qs, (1 - lam) * ps + lam * p0, p0 - ps, lam * qs + (1 - lam) * q0, True, True)

    def constraint_jac(self, w, d, k_ratio):
        """Callable returning ``(g, dg/dz)`` for the gradient-based polish."""
        wf = np.asarray(w, dtype=float)
        sp, op, sq, oq, use_p, use_q = self._coeffs()
        rows = ([0] if use_p else []) + ([6] if use_q else [])
        slopes = np.concatenate([np.full(6, sp if r == 0 else sq) for r in rows])
        offsets = np.concatenate([np.full(6, op if r == 0 else oq) for r in rows])
        idx = np.concatenate([np.arange(r, r + 6) for r in rows])

        def gj(z):
            vals = np.empty(12)
            jac = np.empty((12, 6))
            _kernels.block_sqnorms_grad(z[1:], wf, d, k_ratio, vals, jac)
            g = slopes * z[0] + offsets - vals[idx]
            G = np.empty((idx.size, 7))
            G[:, 0] = slopes
            G[:, 1:] = -jac[idx]
            return g, G
        return gj

    def constraint_fn(self, w, d, k_ratio):
        """Callable ``g(z, out=None)`` with ``z = (epigraph variable, phi)``."""
        wf = np.asarray(w, dtype=float)
        buf = np.empty(12)
        coeffs = self._coeffs()
        m = 12 if self.kind == "nbi" else 6
        kernel = _kernels.epigraph_constraints

        def g(z, out=None):
            if out is None:
                out = np.empty(m)
            kernel(z, wf, d, k_ratio, *coeffs, buf, out)
            return out
        return g


class _Candidate(NamedTuple):
    orbit: int
    start: int
    phi: np.ndarray
    cost: float
    p: float
    q: float
    epigraph: float


def _start_rng(seed: int, orbit: int, start: int) -> np.random.Generator:
    return np.random.default_rng([seed, orbit, start])


def _bounds(settings: OptimizerSettings):
    pm = settings.phi_max
    return np.r_[-np.inf, np.full(6, -pm)], np.r_[np.inf, np.full(6, pm)]


def _candidate(problem: _Problem, orbit: int, start: int, z: np.ndarray,
               settings: OptimizerSettings) -> _Candidate | None:
    phi = np.clip(z[1:], -settings.phi_max, settings.phi_max)
    b2, c2 = block_sqnorms(phi, _ORBITS[orbit], settings.d, settings.k_ratio)
    if not (np.all(np.isfinite(b2)) and b2.max() < 1e11):
        return None
    return _Candidate(orbit, start, phi, problem.tight_bound(b2, c2),
                      float(b2.max()), float(c2.max()), float(z[0]))


def _run(problem, g, orbit, start, z0, step, tol, settings, backend):
    lower, upper = _bounds(settings)
    try:
        res = local_solve(lambda z: z[0], g, z0, tol=tol, lower=lower, upper=upper,
                          max_evals=settings.max_evals, initial_step=step, backend=backend)
    except NoConvergence:
        return None
    return _candidate(problem, orbit, start, res.x, settings)


def _solve_orbit(problem: _Problem, orbit: int, settings: OptimizerSettings) -> list[_Candidate]:
    """Every start of one orbit, solved to the coarse tolerance (or to ``tol`` if looser)."""
    w = _ORBITS[orbit]
    g = problem.constraint_fn(w, settings.d, settings.k_ratio)
    pm = settings.phi_max
    tol = max(settings.tol, settings.coarse_tol)
    out = []
    for start in range(settings.n_starts):
        phi0 = _start_rng(settings.seed, orbit, start).uniform(-pm, pm, 6)
        b2, c2 = block_sqnorms(phi0, w, settings.d, settings.k_ratio)
        e0 = problem.tight_bound(b2, c2)
        step = np.r_[0.25 * abs(e0) + 1e-3, np.full(6, 0.25)]
        c = _run(problem, g, orbit, start, np.r_[e0, phi0], step, tol, settings, settings.backend)
        if c is not None:
            out.append(c)
    return out


def polish(gj: Callable, z0, tol: float, lower, upper, max_iter: int = 200) -> LocalResult:
    """SQP refinement of ``min z[0] s.t. g(z) >= 0`` from a nearly optimal point.

    ``gj(z)`` returns the constraint values and their Jacobian.
    """
    from scipy.optimize import minimize

    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    cache = {}

    def eval_at(z):
        key = z.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = gj(z)
        return cache[key]

    e0 = np.zeros(len(z0))
    e0[0] = 1.0
    bounds = [(None if not np.isfinite(a) else a, None if not np.isfinite(b) else b)
              for a, b in zip(lower, upper)]
    r = minimize(lambda z: z[0], np.asarray(z0, dtype=float), jac=lambda z: e0, method="SLSQP",
                 bounds=bounds,
                 constraints=[{"type": "ineq", "fun": lambda z: eval_at(z)[0],
                               "jac": lambda z: eval_at(z)[1]}],
                 options={"ftol": tol * tol, "maxiter": max_iter})
    x = np.clip(r.x, lower, upper)
    g, _ = gj(x)
    res = LocalResult(x, float(x[0]), int(r.nfev), _violation(g, x, lower, upper))
    # mode 8 (no descent along the search direction) means roundoff-limited;
    # the iterate is still usable if feasible
    if r.status not in (0, 8) or res.max_violation > FEAS_TOL:
        raise NoConvergence(f"polish failed: {r.message}", res)
    return res


def _polish_orbit(problem: _Problem, orbit: int, cands: list[_Candidate],
                  settings: OptimizerSettings) -> list[_Candidate]:
    gj = problem.constraint_jac(_ORBITS[orbit], settings.d, settings.k_ratio)
    lower, upper = _bounds(settings)
    out = []
    for c in cands:
        p = None
        try:
            res = polish(gj, np.r_[c.cost, c.phi], settings.tol, lower, upper)
            p = _candidate(problem, orbit, c.start, res.x, settings)
        except NoConvergence:
            pass
        # a polish that fails or ends worse keeps the coarse answer
        out.append(c if p is None or p.cost > c.cost else p)
    return out


def _multistart(problem: _Problem, settings: OptimizerSettings,
                executor: ProcessPoolExecutor | None = None) -> list[_Candidate]:
    orbits = list(range(len(_ORBITS)))
    n = len(orbits)
    if executor is None:
        per_orbit = [_solve_orbit(problem, k, settings) for k in orbits]
    else:
        per_orbit = list(executor.map(_solve_orbit, [problem] * n, orbits, [settings] * n))
    cands = [c for chunk in per_orbit for c in chunk]
    if not cands or settings.tol >= settings.coarse_tol:
        return cands
    best = min(c.cost for c in cands)
    cut = best + settings.screen * max(abs(best), problem.cost_scale())
    keep = [[c for c in chunk if c.cost <= cut] for chunk in per_orbit]
    if executor is None:
        polished = [_polish_orbit(problem, k, keep[k], settings) for k in orbits]
    else:
        polished = list(executor.map(_polish_orbit, [problem] * n, orbits, keep, [settings] * n))
    return [c for chunk in polished for c in chunk]


def _ties(cands: list[_Candidate]) -> list[_Candidate]:
    best = min(c.cost for c in cands)
    return [c for c in cands if c.cost <= best + TIE_TOL * max(1.0, abs(best))]


def _point(c: _Candidate) -> DesignPoint:
    return DesignPoint(c.phi, _ORBITS[c.orbit], c.p, c.q)


def _executor(settings: OptimizerSettings):
    n = settings.workers if settings.workers is not None else default_workers()
    return ProcessPoolExecutor(max_workers=n) if n > 1 else None


def solve_shadow(kind: str, settings: OptimizerSettings,
                 executor: ProcessPoolExecutor | None = None) -> tuple[DesignPoint, float]:
    """Minimize ``p`` (kind='force') or ``q`` (kind='torque') over all orbits and starts.

    Among minimizers tied on cost the lowest orbit index wins, then the
    smaller companion cost, then the lower start index.
    """
    if kind not in ("force", "torque"):
        raise ValueError(f"kind must be 'force' or 'torque', got {kind!r}")
    own = executor is None and (executor := _executor(settings)) is not None
    try:
        cands = _multistart(_Problem(kind), settings, executor)
    finally:
        if own:
            executor.shutdown()
    if not cands:
        raise AllStartsFailed(f"no {kind} start converged")
    companion = (lambda c: c.q) if kind == "force" else (lambda c: c.p)
    best = min(_ties(cands), key=lambda c: (c.orbit, companion(c), c.start))
    log.info("%s shadow: cost %.6g on orbit %s", kind, best.cost, _ORBITS[best.orbit])
    return _point(best), best.cost


def shadow_minima(settings: OptimizerSettings, executor=None) -> ShadowMinima:
    psi_p, p_star = solve_shadow("force", settings, executor)
    psi_q, q_star = solve_shadow("torque", settings, executor)
    return ShadowMinima(p_star, psi_p.q, psi_q.p, q_star, psi_p, psi_q)


def nbi_subproblem(lam: float, shadow: ShadowMinima, settings: OptimizerSettings,
                   executor: ProcessPoolExecutor | None = None) -> tuple[DesignPoint, float]:
    """Point where the normal through the anchor segment at ``lam`` meets the front.

    Returns the design and its NBI offset ``t``.  When several minimizers
    share the optimal ``t`` (the segment ends, where one constraint family
    goes slack), the one closest to the utopia corner is kept.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    dp = shadow.p0 - shadow.p_star
    dq = shadow.q0 - shadow.q_star
    if dp <= 0 or dq <= 0:
        raise ValueError("degenerate shadow minima: anchors do not span a segment")
    problem = _Problem("nbi", float(lam), (shadow.p_star, shadow.q0, shadow.p0, shadow.q_star))
    own = executor is None and (executor := _executor(settings)) is not None
    try:
        cands = _multistart(problem, settings, executor)
    finally:
        if own:
            executor.shutdown()
    if not cands:
        raise AllStartsFailed(f"no NBI start converged at lambda={lam}")

    def utopia_distance(c):
        return (c.p - shadow.p_star) / dp + (c.q - shadow.q_star) / dq

    best = min(_ties(cands), key=lambda c: (utopia_distance(c), c.orbit, c.start))
    return _point(best), best.cost


@dataclass(frozen=True, eq=False)
class FrontPoint:
    lam: float
    point: DesignPoint | None
    t: float = math.nan
    dominated: bool = False

    @property
    def converged(self) -> bool:
        return self.point is not None


@dataclass(frozen=True, eq=False)
class ParetoFront:
    points: tuple[FrontPoint, ...]
    shadow: ShadowMinima
    settings: OptimizerSettings = field(repr=False)

    def rows(self) -> list[list]:
        out = []
        for fp in self.points:
            if fp.point is None:
                out.append([fp.lam] + [math.nan] * 16 + [0])
                continue
            pt = fp.point
            out.append([fp.lam, pt.p, pt.q, pt.F_max, pt.M_max]
                       + list(np.degrees(pt.phi)) + list(pt.w) + [1])
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FRONT_CSV_HEADER)
            for row in self.rows():
                writer.writerow([_fmt(v) for v in row])

    def converged_points(self) -> list[FrontPoint]:
        return [fp for fp in self.points if fp.converged]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def flag_dominated(points: Sequence[FrontPoint], tol: float = 1e-6) -> list[FrontPoint]:
    ok = [fp for fp in points if fp.converged]
    out = []
    for fp in points:
        dom = False
        if fp.converged:
            a = fp.point
            dom = any(o.point.p <= a.p + tol and o.point.q <= a.q + tol
                      and (o.point.p < a.p - tol or o.point.q < a.q - tol) for o in ok)
        out.append(FrontPoint(fp.lam, fp.point, fp.t, dom))
    return out


def pareto_front(settings: OptimizerSettings, shadow: ShadowMinima | None = None) -> ParetoFront:
    """Shadow minima followed by one NBI subproblem per ``lambda`` in the grid.

    A lambda whose starts all fail is kept as an unconverged row.
    """
    executor = _executor(settings)
    try:
        if shadow is None:
            shadow = shadow_minima(settings, executor)
        pts = []
        for lam in settings.lambda_grid:
            try:
                point, t = nbi_subproblem(lam, shadow, settings, executor)
                pts.append(FrontPoint(lam, point, t))
            except AllStartsFailed as exc:
                log.warning("%s", exc)
                pts.append(FrontPoint(lam, None))
    finally:
        if executor is not None:
            executor.shutdown()
    return ParetoFront(tuple(flag_dominated(pts)), shadow, settings)


def select_design(front: ParetoFront, rel_tol: float = 1e-4) -> DesignPoint:
    """Force-preferring pick: the lowest-lambda point within ``rel_tol`` of the best ``F_max``,
    with angles rounded to whole degrees."""
    pts = front.converged_points()
    if not pts:
        raise AllStartsFailed("front has no converged point")
    f_best = max(fp.point.F_max for fp in pts)
    chosen = min((fp for fp in pts if fp.point.F_max >= f_best * (1 - rel_tol)), key=lambda fp: fp.lam)
    return chosen.point.rounded(front.settings.d, front.settings.k_ratio)
