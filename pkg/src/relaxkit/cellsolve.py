"""Cell problems: minimize the energy of xi plus an oscillation over a cube.

The solver is a multi-start projected descent on the interior nodal values of
a zero-boundary piecewise affine field.  Gradients of the objective come from
central finite differences of the integrand in the gradient variable (one
sided at the domain boundary), assembled through the fixed P1 gradient
operator.  A backtracking line search rejects any step whose simplex
gradients leave the effective domain, so iterates stay feasible and the best
value can never exceed the zero start.  The line search works on normalized
directions with geometric step lengths, which keeps the optimizer path
invariant when the integrand is rescaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainEscapeError, RelaxkitError, ShapeError
from .integrand import Integrand
from .mesh import CubeMesh, CubeSpec, GridFunction, cube_at, kuhn_mesh, point_eval


@dataclass
class OptimizerConfig:
    """Options for the projected descent solver.

    `tolerance` is the documented per-solve bias allowance at default
    resolutions; downstream comparisons use it for slack accounting, the
    solver itself never reads it.
    """

    max_iters: int = 250
    max_backtracks: int = 30
    step_tol: float = 1e-9
    armijo: float = 1e-4
    init_step: float = 0.25
    fd_step: float = 1e-6
    n_random: int = 2
    n_random_warm: int = 0
    zero_descent_when_warm: bool = False
    seed: int = 0
    coarse_start: bool = True
    oscillation_starts: Optional[bool] = None
    screen_keep: int = 3
    tolerance: float = 1e-2


@dataclass
class CellStatus:
    """Per-solve diagnostics: start values, finals, spread, feasibility."""

    start_values: list = field(default_factory=list)
    final_values: list = field(default_factory=list)
    best: float = math.inf
    phi0_value: float = math.inf
    iters: int = 0
    dispersion: float = 0.0
    feasible: bool = True
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "start_values": list(self.start_values),
            "final_values": list(self.final_values),
            "best": self.best,
            "phi0_value": self.phi0_value,
            "iters": self.iters,
            "dispersion": self.dispersion,
            "feasible": self.feasible,
            "message": self.message,
        }


class _GradientEnergy:
    """Integral of f(x_T, base_T + grad phi_T) over a mesh, phi zero-boundary."""

    def __init__(self, f: Integrand, mesh: CubeMesh, base: np.ndarray, cfg: OptimizerConfig):
        self.f = f
        self.mesh = mesh
        self.cfg = cfg
        m, d = f.shape.m, f.shape.d
        if base.shape != (mesh.nsimp, m, d):
            raise ShapeError("base gradients must be (nsimp, m, d)")
        self.base = base
        self.X = mesh.barycenters if f.depends_on_x else None
        self.w = mesh.volumes
        self.m = m
        self.d = d
        self.simp = mesh.simplices
        self.interior = np.flatnonzero(mesh.interior)

    @property
    def n_dof(self) -> int:
        return self.interior.size * self.m

    def full(self, phi_int: np.ndarray) -> np.ndarray:
        out = np.zeros((self.mesh.nnodes, self.m))
        out[self.interior] = phi_int
        return out

    def gradients(self, phi_int: np.ndarray) -> np.ndarray:
        full = self.full(phi_int)
        diffs = full[self.simp[:, 1:]] - full[self.simp[:, :1]]
        return self.base + np.einsum("sem,sed->smd", diffs, self.mesh.edge_inv)

    def value(self, phi_int: np.ndarray) -> float:
        Xi = self.gradients(phi_int)
        vals = self.f.eval_batch(self.X, Xi)
        if np.any(np.isinf(vals)):
            return math.inf
        return float(self.w @ vals)

    def grad(self, phi_int: np.ndarray) -> np.ndarray:
        Xi = self.gradients(phi_int)
        vals0 = self.f.eval_batch(self.X, Xi)
        h = self.cfg.fd_step * (1.0 + np.abs(Xi).max(axis=(1, 2)))
        D = np.zeros_like(Xi)
        for a in range(self.m):
            for c in range(self.d):
                Xp = Xi.copy()
                Xp[:, a, c] += h
                Xm = Xi.copy()
                Xm[:, a, c] -= h
                vp = self.f.eval_batch(self.X, Xp)
                vm = self.f.eval_batch(self.X, Xm)
                fp, fm = np.isfinite(vp), np.isfinite(vm)
                col = np.zeros(Xi.shape[0])
                both = fp & fm
                col[both] = (vp[both] - vm[both]) / (2.0 * h[both])
                only_p = fp & ~fm
                col[only_p] = (vp[only_p] - vals0[only_p]) / h[only_p]
                only_m = fm & ~fp
                col[only_m] = (vals0[only_m] - vm[only_m]) / h[only_m]
                D[:, a, c] = col
        P = self.w[:, None, None] * D
        R = np.einsum("smc,sec->sme", P, self.mesh.edge_inv)
        gfull = np.zeros((self.mesh.nnodes, self.m))
        np.add.at(gfull, self.simp[:, 1:], R.transpose(0, 2, 1))
        np.add.at(gfull, self.simp[:, 0], -R.sum(axis=2))
        return gfull[self.interior]


def _descend(obj: _GradientEnergy, phi0: np.ndarray, cfg: OptimizerConfig, phi_scale: float):
    val = obj.value(phi0)
    if math.isinf(val):
        return val, phi0, 0
    phi = phi0.copy()
    lam = cfg.init_step * phi_scale
    floor = cfg.step_tol * phi_scale
    iters = 0
    for it in range(cfg.max_iters):
        g = obj.grad(phi)
        gmax = float(np.abs(g).max(initial=0.0))
        if gmax == 0.0 or not math.isfinite(gmax):
            break
        dirn = -g / gmax
        dd = float((g * g).sum()) / gmax
        t, accepted, improve = lam, False, 0.0
        for _ in range(cfg.max_backtracks):
            if t < floor:
                break
            cand = phi + t * dirn
            vt = obj.value(cand)
            if vt <= val - cfg.armijo * t * dd:
                phi, improve, val = cand, val - vt, vt
                lam = min(2.0 * t, 16.0 * phi_scale)
                accepted = True
                break
            t *= 0.5
        iters = it + 1
        if not accepted or improve <= 1e-15 * (1.0 + abs(val)):
            break
    return val, phi, iters


def _oscillation_starts(mesh: CubeMesh, m: int, scale: float):
    """Sawtooth-under-cone candidate fields, one active component each.

    Uniform oscillation in a single coordinate, clipped by the slope-one
    distance cone so the trace vanishes on the whole boundary.  These break
    the component symmetry that defeats white-noise restarts on vector
    problems whose zero field sits at a stationary saddle.
    """
    t = (mesh.nodes - mesh.cube.corner[None, :]) / mesh.cube.side
    cone = mesh.cube.side * np.minimum(t, 1.0 - t).min(axis=1)
    freqs = sorted({max(1, mesh.n // 4), max(1, mesh.n // 2)})
    starts = []
    for j in range(mesh.d):
        for k in freqs:
            s = k * t[:, j]
            saw = (mesh.cube.side / (2.0 * k)) * (
                1.0 - np.abs(2.0 * (s - np.floor(s)) - 1.0)
            )
            profile = scale * np.minimum(saw, cone)
            for i in range(m):
                cand = np.zeros((mesh.nnodes, m))
                cand[:, i] = profile
                starts.append((f"saw{j}f{k}c{i}", cand))
    return starts


def minimize_gradient_energy(
    f: Integrand,
    mesh: CubeMesh,
    base: np.ndarray,
    cfg: OptimizerConfig,
    warm=None,
    cold: Optional[bool] = None,
):
    """Multi-start descent over zero-boundary oscillations.

    Returns (integral value, phi as full nodal array, CellStatus).  Cold
    solves descend from the zero field, any warm starts (a single array or a
    list), and a screened pool of cheap candidates: seeded random interior
    perturbations plus, on vector problems, single-coordinate sawtooth
    oscillations (see `_oscillation_starts`).  Pool members are shrunk until
    feasible, ranked by start value and only the best `screen_keep` descend.
    Warm continuation solves skip the redundant zero descent and use
    n_random_warm restarts, but the zero field always stays a candidate, so
    the best value can never exceed the phi = 0 energy.  `cold` forces the
    full start battery even when warm starts are present; it defaults to
    "no warm start given".
    """
    obj = _GradientEnergy(f, mesh, base, cfg)
    nint = obj.interior.size
    zeros = np.zeros((nint, obj.m))
    v0 = obj.value(zeros)
    status = CellStatus(phi0_value=v0)
    if math.isinf(v0):
        status.feasible = False
        status.message = "infeasible-datum"
        status.best = math.inf
        return math.inf, obj.full(zeros), status

    if warm is None:
        warms = []
    elif isinstance(warm, np.ndarray):
        warms = [warm]
    else:
        warms = [w for w in warm if w is not None]
    if cold is None:
        cold = not warms

    starts = []
    if cold or cfg.zero_descent_when_warm:
        starts.append(("zero", zeros))
    for k, w in enumerate(warms):
        w = np.asarray(w, dtype=float)
        if w.shape == (mesh.nnodes, obj.m):
            w = w[obj.interior]
        if w.shape != (nint, obj.m):
            raise ShapeError("warm start has incompatible shape")
        starts.append((f"warm{k}", w.copy()))

    n_random = cfg.n_random if cold else cfg.n_random_warm
    amp0 = 0.5 * (1.0 + float(np.abs(base).max())) * mesh.cell_width
    rng = np.random.default_rng(cfg.seed)
    pool = []
    for k in range(n_random):
        pool.append((f"random{k}", amp0 * rng.standard_normal((nint, obj.m))))
    osc = cfg.oscillation_starts
    if osc is None:
        osc = obj.m >= 2
    if cold and osc:
        amp1 = 0.75 * (1.0 + float(np.abs(base).max()))
        for label, cand in _oscillation_starts(mesh, obj.m, amp1):
            pool.append((label, cand[obj.interior]))
    # screen the cheap candidates by start value; zero/warm always descend
    screened = []
    for label, cand in pool:
        for _ in range(30):
            if math.isfinite(obj.value(cand)):
                break
            cand = 0.5 * cand
        else:
            continue
        screened.append((obj.value(cand), label, cand))
    screened.sort(key=lambda rec: rec[0])
    starts.extend((label, cand) for _, label, cand in screened[: cfg.screen_keep])

    phi_scale = (1.0 + float(np.abs(base).max())) * mesh.cell_width
    best_val, best_phi, total_iters = v0, zeros, 0
    for label, p0 in starts:
        val, phi, iters = _descend(obj, p0, cfg, phi_scale)
        status.start_values.append(obj.value(p0))
        status.final_values.append(val)
        total_iters += iters
        if val < best_val:
            best_val, best_phi = val, phi
    status.best = best_val
    status.iters = total_iters
    finals = [v for v in status.final_values if math.isfinite(v)]
    status.dispersion = float(max(finals) - min(finals)) if finals else 0.0
    if best_val > v0 + 1e-9 * (1.0 + abs(v0)):
        raise RelaxkitError("descent returned a value above the zero start")
    return best_val, obj.full(best_phi), status


@dataclass
class CellProblem:
    """Datum xi on the cube of side eps around x, meshed at resolution n.

    force_cold runs the full cold-start battery (coarse continuation, zero
    descent, random restarts) even when a warm start is attached, keeping
    the warm field as one more candidate.
    """

    f: Integrand
    x: np.ndarray
    xi: np.ndarray
    eps: float
    n: int
    cfg: OptimizerConfig = field(default_factory=OptimizerConfig)
    warm: Optional[np.ndarray] = None
    force_cold: bool = False


def cell_inf(problem: CellProblem):
    """Best found mean of f(y, xi + grad phi(y)) over the cell.

    Returns (value, status, phi_full).  The datum outside the effective
    domain is infeasible and yields +inf.  By construction the value never
    exceeds the phi = 0 start.
    """
    f = problem.f
    xi = f.shape.as_matrix(problem.xi)
    if not f.domain.contains(xi):
        status = CellStatus(feasible=False, message="infeasible-datum")
        return math.inf, status, None
    cube = cube_at(problem.x, problem.eps)
    mesh = kuhn_mesh(cube, problem.n)
    base = np.broadcast_to(xi, (mesh.nsimp,) + xi.shape).copy()

    cold = problem.warm is None or problem.force_cold
    warms = [] if problem.warm is None else [problem.warm]
    if cold and problem.cfg.coarse_start and problem.n >= 4 and problem.n % 2 == 0:
        sub = CellProblem(f, problem.x, xi, problem.eps, problem.n // 2, problem.cfg)
        _, _, phi_coarse = cell_inf(sub)
        if phi_coarse is not None:
            prolonged = point_eval(phi_coarse, mesh.nodes)
            prolonged[mesh.boundary] = 0.0
            warms.append(prolonged)

    total, phi_full, status = minimize_gradient_energy(
        f, mesh, base, problem.cfg, warms or None, cold=cold)
    value = total / cube.volume
    status.best = value
    status.phi0_value = status.phi0_value / cube.volume
    status.start_values = [v / cube.volume for v in status.start_values]
    status.final_values = [v / cube.volume for v in status.final_values]
    status.dispersion = status.dispersion / cube.volume if math.isfinite(status.dispersion) else status.dispersion
    return value, status, GridFunction(mesh, phi_full)


@dataclass
class ZlRecord:
    """Warm-started cell values along a shrinking eps sequence."""

    eps: list
    values: list
    tail_spread: float
    converged: bool
    statuses: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "eps": list(self.eps),
            "values": list(self.values),
            "tail_spread": self.tail_spread,
            "converged": self.converged,
        }


def default_eps_seq(eps0: float, levels: int = 5):
    return [eps0 * 2.0 ** (-k) for k in range(levels)]


def zl(
    f: Integrand,
    x,
    xi,
    eps_seq: Sequence[float],
    n: int,
    cfg: Optional[OptimizerConfig] = None,
    warm0: Optional[np.ndarray] = None,
    tail_tol: float = 1e-3,
    cold_first: bool = False,
):
    """Localized envelope value at (x, xi): cell values over shrinking cubes.

    Returns (value, record, phi_last).  The value is the last cell mean; the
    record carries the spread over the final three scales as the convergence
    diagnostic.  The largest cube must sit inside the working box.
    cold_first additionally runs the cold-start battery on the first cube
    even when warm0 is attached, which keeps chained calls from inheriting
    a stale oscillation pattern.
    """
    cfg = cfg or OptimizerConfig()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eps_seq = sorted(eps_seq, reverse=True)
    if not f.omega.contains_cube(cube_at(x, eps_seq[0])):
        raise DomainEscapeError("largest cell cube leaves the working box")
    values, statuses = [], []
    warm = warm0
    prev_eps = None
    phi = None
    for eps in eps_seq:
        if warm is not None and prev_eps is not None:
            warm = warm * (eps / prev_eps)
        prob = CellProblem(f, x, xi, eps, n, cfg, warm=warm,
                           force_cold=cold_first and prev_eps is None)
        val, status, phi = cell_inf(prob)
        values.append(val)
        statuses.append(status)
        if phi is None:
            break
        warm = phi.values
        prev_eps = eps
    tail = [v for v in values[-3:] if math.isfinite(v)]
    if len(tail) == len(values[-3:]) and tail:
        spread = float(max(tail) - min(tail))
    else:
        spread = math.inf
    last = values[-1]
    scale = 1.0 + (abs(last) if math.isfinite(last) else 0.0)
    record = ZlRecord(list(eps_seq), values, spread, bool(spread <= tail_tol * scale), statuses)
    return last, record, phi


@dataclass
class ZhatRecord:
    """Radial regularization along t -> 1: zl values at t xi."""

    t_seq: list
    values: list
    diffs: list
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "t_seq": list(self.t_seq),
            "values": list(self.values),
            "diffs": list(self.diffs),
            "reason": self.reason,
        }


def default_t_seq(levels: int = 8):
    return [1.0 - 2.0 ** (-j) for j in range(1, levels + 1)]


def zl_hat(
    f: Integrand,
    x,
    xi,
    eps_seq: Sequence[float],
    n: int,
    t_seq: Optional[Sequence[float]] = None,
    cfg: Optional[OptimizerConfig] = None,
):
    """Radial limit of zl along t xi, t -> 1 from below.

    Points strictly outside the closed effective domain return +inf without
    any solve; otherwise the last t value is reported, never an extrapolation.
    """
    cfg = cfg or OptimizerConfig()
    xi = f.shape.as_matrix(xi)
    t_seq = sorted(t_seq or default_t_seq())
    if not f.domain.contains(xi):
        return math.inf, ZhatRecord(list(t_seq), [], [], reason="outside-closure")
    values = []
    warm = None
    # zl hands back the minimizer on the smallest cube; rescale its nodal
    # values to the first cube of the chain before reusing it.  The final t
    # carries the reported value, so it reruns the cold battery as well:
    # threading must accelerate the chain, not steer its answer.
    carry = float(eps_seq[0]) / float(eps_seq[-1])
    for j, t in enumerate(t_seq):
        val, rec, phi = zl(f, x, t * xi, eps_seq, n, cfg, warm0=warm,
                           cold_first=j == len(t_seq) - 1)
        values.append(val)
        warm = None if phi is None else phi.values * carry
    diffs = [values[k + 1] - values[k] for k in range(len(values) - 1)]
    return values[-1], ZhatRecord(list(t_seq), values, diffs)


def omega_delta(
    f: Integrand,
    xi,
    delta: float,
    n: int,
    cfg: Optional[OptimizerConfig] = None,
    n_positions: int = 8,
    seed: int = 0,
):
    """Sup of cell means with datum xi over sampled cubes of diameter < delta.

    Cube centers are the inset corners of the working box, its center, and a
    seeded low-discrepancy fill; every cube stays inside the box.
    """
    from scipy.stats import qmc

    cfg = cfg or OptimizerConfig()
    d = f.shape.d
    side = delta / math.sqrt(d) * (1.0 - 1e-9)
    hw = side / 2.0
    lo = f.omega.lo + hw
    hi = f.omega.hi - hw
    if np.any(hi < lo):
        raise DomainEscapeError("delta too large: no admissible cube fits the box")
    corners = np.stack(np.meshgrid(*[(lo[i], hi[i]) for i in range(d)], indexing="ij"), -1).reshape(-1, d)
    center = ((lo + hi) / 2.0)[None, :]
    extra = qmc.Halton(d=d, scramble=True, seed=seed).random(n_positions)
    fill = lo[None, :] + extra * (hi - lo)[None, :]
    centers = np.unique(np.round(np.concatenate([corners, center, fill]), 12), axis=0)
    best, per_cube = -math.inf, []
    for c in centers:
        val, status, _ = cell_inf(CellProblem(f, c, xi, side, n, cfg))
        per_cube.append({"center": c.tolist(), "value": val})
        best = max(best, val)
    return best, per_cube
