"""Both sides of the integral-representation bracket.

The representation integral sums per-simplex regularized cell values; the
direct upper bound sums per-cell Dirichlet values over dyadic partitions and
certifies itself with an explicitly glued competitor.  The exact relaxed
functional is an infimum over weak limits and is not computable; everything
here brackets it from the computable sides.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (ConfigurationError, DegenerateInputError, DomainEscapeError,
                     RelaxkitError, ResolutionError)
from .integrand import Integrand, RuUscWeight
from .mesh import (CubeSpec, GridFunction, cube_at, energy, glue, gradient,
                   interpolate_affine, kuhn_mesh, point_eval, restrict)
from .cellsolve import OptimizerConfig, default_t_seq, zl, zl_hat
from .envelopes import XiGrid, convex_envelope, raw_table
from .setfun import dirichlet_value, m_eps, m_star


@dataclass(frozen=True)
class RepresentConfig:
    """Controls for the per-simplex regularized cell values.

    eps0 is the largest cell scale; each simplex shrinks it further so the
    cell cube stays inside the working box when the integrand reads x.
    Workers > 1 evaluates distinct (x, gradient) keys in parallel threads.
    """

    eps0: float = 0.4
    eps_levels: int = 3
    n: int = 16
    t_levels: int = 8
    cfg: OptimizerConfig = field(default_factory=OptimizerConfig)
    workers: int = 1
    x_decimals: int = 9
    xi_decimals: int = 12

    def t_seq(self):
        return default_t_seq(self.t_levels)

    def eps_seq(self, eps0: float):
        return [eps0 * 2.0 ** (-k) for k in range(self.eps_levels)]

    def to_dict(self) -> dict:
        return {
            "eps0": self.eps0, "eps_levels": self.eps_levels, "n": self.n,
            "t_levels": self.t_levels, "workers": self.workers,
            "x_decimals": self.x_decimals, "xi_decimals": self.xi_decimals,
        }


def _pmap(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _check_aligned(u: GridFunction, O: CubeSpec) -> None:
    c = np.asarray(u.mesh.cube.center, dtype=float) - np.asarray(O.center, dtype=float)
    if np.max(np.abs(c)) > 1e-12 * (1.0 + O.side) or \
            abs(u.mesh.cube.halfwidth - O.halfwidth) > 1e-12 * (1.0 + O.side):
        raise ResolutionError("u must live on a mesh of O itself")


def represent(f: Integrand, u: GridFunction, O: CubeSpec,
              rep: Optional[RepresentConfig] = None) -> float:
    """Sum over simplices of |T| times the regularized cell value at grad u.

    Distinct (barycenter, gradient) pairs are solved once and shared; for
    x-independent integrands the key collapses to the gradient alone and a
    piecewise affine datum costs only its number of distinct slopes.  Any
    simplex gradient outside the closed effective domain makes the result
    +inf immediately.
    """
    rep = rep or RepresentConfig()
    _check_aligned(u, O)
    grads = gradient(u)
    for g in grads:
        if not f.domain.contains(g):
            return math.inf

    gq = np.round(grads, rep.xi_decimals)
    if f.depends_on_x:
        bq = np.round(u.mesh.barycenters, rep.x_decimals)
        keys = np.concatenate([bq, gq.reshape(len(gq), -1)], axis=1)
    else:
        keys = gq.reshape(len(gq), -1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)

    lo = np.asarray(f.omega.lo, dtype=float)
    hi = np.asarray(f.omega.hi, dtype=float)
    center = 0.5 * (lo + hi)

    def solve(row):
        if f.depends_on_x:
            x = row[:O.d]
            xi = row[O.d:].reshape(f.shape.m, f.shape.d)
            room = float(min(np.minimum(x - lo, hi - x)))
            eps0 = min(rep.eps0, 1.9 * room)
            if eps0 <= 0:
                raise DomainEscapeError(f"no room for a cell cube at {x}")
        else:
            x, eps0 = center, rep.eps0
            xi = row.reshape(f.shape.m, f.shape.d)
        val, _ = zl_hat(f, x, xi, rep.eps_seq(eps0), rep.n,
                        t_seq=rep.t_seq(), cfg=rep.cfg)
        return val

    vals = np.asarray(_pmap(solve, list(uniq), rep.workers), dtype=float)
    per_simplex = vals[inv]
    if np.any(np.isinf(per_simplex)):
        return math.inf
    return float((u.mesh.volumes * per_simplex).sum())


@dataclass
class DirectUpperRecord:
    """Per-depth family sums with the glued competitor's raw energy."""

    depths: list
    values: list
    profile: list
    raw_energy: float
    glued: Optional[GridFunction] = None

    def to_dict(self) -> dict:
        return {"depths": list(self.depths), "values": list(self.values),
                "profile": list(self.profile), "raw_energy": self.raw_energy}


def direct_upper(
    f: Integrand,
    u: GridFunction,
    O: CubeSpec,
    depth_seq: Sequence[int],
    n: int,
    cfg: Optional[OptimizerConfig] = None,
):
    """Upper bound by per-cell Dirichlet minimization over dyadic partitions.

    Returns (value, record): value is the running maximum of the family sums
    (the scale supremum), and the record carries the glued competitor built
    from the deepest partition's minimizers together with its raw energy.
    Gluing reuses the cell minimizers nodally, so the raw energy reproduces
    the deepest family sum up to roundoff and certifies it as the energy of
    one admissible function.
    """
    cfg = cfg or OptimizerConfig()
    _check_aligned(u, O)
    depths = sorted(set(int(k) for k in depth_seq))
    if not depths or depths[0] < 0:
        raise ConfigurationError("depth_seq must hold nonnegative depths")
    values, pieces = [], None
    for k in depths:
        keep = k == depths[-1]
        val, pc = m_eps(f, u, O, k, n, cfg, keep_minimizers=keep)
        values.append(val)
        if keep:
            pieces = pc
    profile = list(np.maximum.accumulate(values))
    value = profile[-1]

    raw, glued = math.inf, None
    if pieces is not None and math.isfinite(values[-1]):
        fine = kuhn_mesh(O, n * 2 ** depths[-1])
        glued = glue(restrict(u, fine), pieces)
        raw = energy(glued, f.eval_batch)
        scale = 1.0 + abs(values[-1])
        if raw < values[-1] - len(pieces) * cfg.tolerance - 1e-9 * scale:
            raise RelaxkitError("glued energy fell below the family sum it realizes")
    return value, DirectUpperRecord(depths, values, profile, raw, glued)


def _tangent_gradient(u: GridFunction, x0: np.ndarray) -> np.ndarray:
    """Constant gradient of u on the mesh cell containing x0."""
    mesh = u.mesh
    w = mesh.cell_width
    rel = (x0 - mesh.cube.corner) / w
    idx = np.minimum(np.floor(rel).astype(int), mesh.n - 1)
    if np.any(idx < 0) or np.any(idx >= mesh.n):
        raise DomainEscapeError("x0 is outside the mesh of u")
    lin = 0
    for i in idx:
        lin = lin * mesh.n + int(i)
    nper = math.factorial(mesh.d)
    grads = gradient(u)[lin * nper:(lin + 1) * nper]
    scale = 1.0 + float(np.abs(grads).max())
    if np.max(np.abs(grads - grads[0])) > 1e-9 * scale:
        raise DegenerateInputError(
            "u has no single gradient on the cell of x0; pick a cell-interior point")
    return grads[0]


def cutoff_compare(
    f: Integrand,
    u: GridFunction,
    x0,
    eps: float,
    r: float = 0.75,
    s: float = 0.5,
    t: float = 0.5,
    n: int = 16,
    cfg: Optional[OptimizerConfig] = None,
) -> dict:
    """Localization inequality via an explicit cut-off blend.

    Solves the Dirichlet problem for the scaled datum t*u on Q_eps(x0) and
    compares it with the chain: inner Dirichlet value for the affine tangent
    datum on Q_{s eps}, plus eps^{d+1}, plus the blend's energy on the ring
    Q_{r eps} minus Q_{s eps}, plus the datum's energy outside Q_{r eps}.
    The blend w equals the inner minimizer on Q_{s eps}, equals t*u outside
    Q_{r eps}, and interpolates through a piecewise linear max-norm cut-off
    with slope 2/((r-s) eps).  Since w is itself admissible for the left
    side, the inequality holds by construction; the ledger reports each
    term so the scaling of the ring terms can be inspected.
    """
    cfg = cfg or OptimizerConfig()
    if not (0.0 < s < r < 1.0):
        raise ConfigurationError("need 0 < s < r < 1")
    if not (0.0 < t < 1.0):
        raise ConfigurationError("need t in ]0, 1[")
    if n % 8 != 0:
        # the inner and ring faces must land on mesh planes
        raise ConfigurationError("n must be a multiple of 8")
    if abs(s - 0.5) > 1e-12 or abs(r - 0.75) > 1e-12:
        if (n * s) % 2 != 0 or (n * r) % 1 != 0:
            raise ConfigurationError("s, r must align with the mesh planes of n")
    x0 = np.asarray(x0, dtype=float)
    G = _tangent_gradient(u, x0)
    u_at = point_eval(u, x0)[0]
    tu = u.scaled(t)

    Q_e = cube_at(x0, eps)
    Q_s = cube_at(x0, s * eps)
    lhs_solver, _, _ = dirichlet_value(f, tu, Q_e, n, cfg)

    n_s = int(round(n * s))
    mesh_s = kuhn_mesh(Q_s, n_s)
    b_corner = t * (u_at + G @ (np.asarray(mesh_s.cube.corner) - x0))
    datum_s = interpolate_affine(mesh_s, t * G, b_corner)
    m_main, v, _ = dirichlet_value(f, datum_s, Q_s, n_s, cfg)

    mesh_e = kuhn_mesh(Q_e, n)
    dist = np.max(np.abs(mesh_e.nodes - x0[None, :]), axis=1)
    c = np.clip((r * eps / 2.0 - dist) / ((r - s) * eps / 2.0), 0.0, 1.0)

    inner = dist <= s * eps / 2.0 + 1e-12 * (1.0 + eps)
    v_ext = t * (u_at[None, :] + (mesh_e.nodes - x0[None, :]) @ G.T)
    v_ext[inner] = point_eval(v, mesh_e.nodes[inner])
    tu_vals = restrict(tu, mesh_e).values
    w = GridFunction(mesh_e, c[:, None] * v_ext + (1.0 - c)[:, None] * tu_vals)

    dens = f.eval_batch(mesh_e.barycenters, gradient(w))
    cell_e = np.where(np.isinf(dens), math.inf, mesh_e.volumes * dens)
    bdist = np.max(np.abs(mesh_e.barycenters - x0[None, :]), axis=1)
    in_s = bdist < s * eps / 2.0
    in_ring = (~in_s) & (bdist < r * eps / 2.0)
    term_inner = float(cell_e[in_s].sum())
    term_ring = float(cell_e[in_ring].sum())
    term_outer = float(cell_e[~(in_s | in_ring)].sum())
    blend_total = term_inner + term_ring + term_outer

    lhs = min(lhs_solver, blend_total)
    rhs = m_main + eps ** (Q_e.d + 1) + term_ring + term_outer
    scale = 1.0 + abs(rhs) if math.isfinite(rhs) else 1.0
    holds = lhs <= rhs + 1e-9 * scale
    return {
        "lhs": lhs, "lhs_solver": lhs_solver, "lhs_blend": blend_total,
        "inner_value": m_main, "inner_blend": term_inner,
        "eps_power": eps ** (Q_e.d + 1), "ring": term_ring, "outer": term_outer,
        "rhs": rhs, "gap": rhs - lhs if math.isfinite(rhs) else math.inf,
        "holds": bool(holds), "cutoff_slope": 2.0 / ((r - s) * eps),
        "eps": eps, "r": r, "s": s, "t": t,
    }


@dataclass
class FunctionalModulus:
    """Sampled scaling modulus of the representation functional."""

    t_seq: list
    deltas: list
    a_integral: float
    n_members: int

    def to_dict(self) -> dict:
        return {"t_seq": list(self.t_seq), "deltas": list(self.deltas),
                "a_integral": self.a_integral, "n_members": self.n_members}


def functional_modulus(
    f: Integrand,
    D: Sequence[GridFunction],
    a: RuUscWeight,
    t_seq: Sequence[float],
    O: CubeSpec,
    rep: Optional[RepresentConfig] = None,
    quad_resolution: int = 16,
) -> FunctionalModulus:
    """Worst ratio (J(t u) - J(u)) / (integral of a + J(u)) over a finite set.

    J is the representation integral.  Every member of D must have finite
    J; the weight integral uses midpoint quadrature on O.
    """
    rep = rep or RepresentConfig()
    if not D:
        raise DegenerateInputError("D must hold at least one member")
    base = [represent(f, u, O, rep) for u in D]
    if any(math.isinf(J) for J in base):
        raise DegenerateInputError("every member of D must have finite energy")

    lo = np.asarray(O.corner, dtype=float)
    step = O.side / quad_resolution
    axes = [np.linspace(l + step / 2, l + O.side - step / 2, quad_resolution) for l in lo]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, O.d)
    a_int = float(np.mean(a(pts))) * O.volume

    deltas = []
    for t in t_seq:
        worst = -math.inf
        for u, J in zip(D, base):
            Jt = represent(f, u.scaled(t), O, rep)
            worst = max(worst, (Jt - J) / (a_int + J))
        deltas.append(worst)
    return FunctionalModulus(list(t_seq), deltas, a_int, len(D))


@dataclass
class ExtensionRecord:
    """Representation values along t -> 1 with flattening diagnostics."""

    t_seq: list
    values: list
    oscillation: list
    settling: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {"t_seq": list(self.t_seq), "values": list(self.values),
                "oscillation": list(self.oscillation), "settling": self.settling,
                "reason": self.reason}


def extend_ruusc(
    f: Integrand,
    u: GridFunction,
    t_seq: Sequence[float],
    O: CubeSpec,
    rep: Optional[RepresentConfig] = None,
):
    """Radial extension: the last representation value along t*u, t -> 1.

    If any scaled member has infinite representation the extension is +inf.
    The record keeps the per-t values and the absolute oscillation between
    consecutive values; settling means the last three oscillations do not
    increase.
    """
    rep = rep or RepresentConfig()
    t_seq = sorted(float(t) for t in t_seq)
    if not t_seq or t_seq[-1] >= 1.0 or t_seq[0] <= 0.0:
        raise ConfigurationError("t_seq must lie in ]0, 1[")
    values = [represent(f, u.scaled(t), O, rep) for t in t_seq]
    if any(math.isinf(v) for v in values):
        rec = ExtensionRecord(t_seq, values, [], False, reason="infinite-along-path")
        return math.inf, rec
    osc = [abs(values[k + 1] - values[k]) for k in range(len(values) - 1)]
    settling = len(osc) < 3 or (osc[-1] <= osc[-2] + 1e-15 <= osc[-3] + 2e-15)
    return values[-1], ExtensionRecord(t_seq, values, osc, bool(settling))


@dataclass
class ScalarCheckRecord:
    """Scalar-case agreement of the three computable values."""

    representation: float
    biconjugate_integral: float
    upper: float
    rep_dev: float
    upper_ok: bool
    agree: bool
    tol_rep: float
    tol_upper: float

    def to_dict(self) -> dict:
        return {
            "representation": self.representation,
            "biconjugate_integral": self.biconjugate_integral,
            "upper": self.upper, "rep_dev": self.rep_dev,
            "upper_ok": self.upper_ok, "agree": self.agree,
            "tol_rep": self.tol_rep, "tol_upper": self.tol_upper,
        }


def scalar_check(
    f: Integrand,
    u: GridFunction,
    O: CubeSpec,
    grid: Optional[XiGrid] = None,
    rep: Optional[RepresentConfig] = None,
    depth_seq: Sequence[int] = (0, 1, 2),
    n: int = 16,
    tol_rep: float = 5e-2,
    tol_upper: float = 5e-2,
) -> ScalarCheckRecord:
    """Compare representation, biconjugate tables, and the direct bound.

    Scalar targets only (m = 1): the representation integral should match
    the per-simplex biconjugate integral within tol_rep relative, and the
    direct upper bound must not drop below either by more than tol_upper
    times the cube volume.
    """
    if f.shape.m != 1:
        raise DegenerateInputError("scalar check needs m = 1")
    rep = rep or RepresentConfig()
    _check_aligned(u, O)
    grads = gradient(u)
    if grid is None:
        span = max(2.0, 1.5 * float(np.abs(grads).max()))
        grid = XiGrid.centered(f.shape, span, 129 if f.shape.d > 1 else 513)

    rep_val = represent(f, u, O, rep)

    tables = {}
    total = 0.0
    for k in range(u.mesh.nsimp):
        if f.depends_on_x:
            key = tuple(np.round(u.mesh.barycenters[k], rep.x_decimals))
            x = u.mesh.barycenters[k]
        else:
            key, x = None, None
        if key not in tables:
            tables[key] = convex_envelope(raw_table(f, grid, x=x))
        val = tables[key].value_at(grads[k])
        if math.isinf(val):
            total = math.inf
            break
        total += u.mesh.volumes[k] * val

    upper, _ = direct_upper(f, u, O, depth_seq, n, rep.cfg)

    scale = 1.0 + (abs(total) if math.isfinite(total) else 0.0)
    if math.isinf(rep_val) or math.isinf(total):
        rep_dev = 0.0 if math.isinf(rep_val) and math.isinf(total) else math.inf
    else:
        rep_dev = abs(rep_val - total)
    agree = rep_dev <= tol_rep * scale
    floor = min(v for v in (rep_val, total) if math.isfinite(v)) if \
        (math.isfinite(rep_val) or math.isfinite(total)) else math.inf
    upper_ok = (not math.isfinite(floor)) or upper >= floor - tol_upper * O.volume
    return ScalarCheckRecord(rep_val, total, upper, rep_dev, bool(upper_ok),
                             bool(agree), tol_rep, tol_upper)


@dataclass
class RelaxationReport:
    """Bracket between the representation integral and the direct bound."""

    representation: float
    upper: float
    gap: float
    history: dict
    tolerances: dict
    verdicts: dict

    def to_dict(self) -> dict:
        return {
            "representation": self.representation, "upper": self.upper,
            "gap": self.gap, "history": self.history,
            "tolerances": self.tolerances, "verdicts": self.verdicts,
        }


def relax_report(
    f: Integrand,
    u: GridFunction,
    O: CubeSpec,
    depth_seq: Sequence[int] = (0, 1, 2),
    n: int = 16,
    rep: Optional[RepresentConfig] = None,
    gap_tol: float = 5e-2,
) -> RelaxationReport:
    """Run both sides on one datum and package the bracket.

    The gap is upper minus representation; it may dip slightly negative
    only within the combined solver tolerance, since the upper side
    minimizes over richer competitors than the per-cell representation.
    """
    rep = rep or RepresentConfig()
    rep_val = represent(f, u, O, rep)
    upper, record = direct_upper(f, u, O, depth_seq, n, rep.cfg)
    if math.isinf(rep_val) and math.isinf(upper):
        gap = 0.0
    elif math.isinf(upper):
        gap = math.inf
    elif math.isinf(rep_val):
        gap = -math.inf
    else:
        gap = upper - rep_val
    slack = gap_tol * (1.0 + min(x for x in (rep_val, upper) if math.isfinite(x))) \
        if math.isfinite(gap) else 0.0
    verdicts = {
        "bracket_ok": bool(not math.isfinite(gap) or gap >= -slack),
        "finite": bool(math.isfinite(rep_val) and math.isfinite(upper)),
    }
    return RelaxationReport(rep_val, upper, gap, record.to_dict(),
                            {"gap_tol": gap_tol}, verdicts)
