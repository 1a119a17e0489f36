"""Envelope tables on gradient-variable lattices.

A table holds extended-real values of an integrand (or one of its envelopes)
on a uniform lattice in the flattened gradient variable.  The convex envelope
is the discrete Legendre double transform with dual slopes harvested from the
finite differences of the input; the lamination envelope iterates exact
lattice splits along rank-one directions.  Both keep +inf entries intact and
restore +inf off the effective domain.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cellsolve import (  # noqa: F401  (re-exported cell operations)
    CellProblem,
    CellStatus,
    OptimizerConfig,
    ZhatRecord,
    ZlRecord,
    cell_inf,
    default_eps_seq,
    default_t_seq,
    minimize_gradient_energy,
    omega_delta,
    zl,
    zl_hat,
)
from .errors import ConfigurationError, DegenerateInputError, ShapeError
from .integrand import Integrand, MatrixShape

__all__ = [
    "XiGrid",
    "EnvelopeTable",
    "CellProblem",
    "CellStatus",
    "OptimizerConfig",
    "raw_table",
    "convex_envelope",
    "lamination_envelope",
    "zl_table",
    "zl_hat_table",
    "cell_inf",
    "zl",
    "zl_hat",
    "omega_delta",
    "rank_one_directions",
    "midpoint_violation",
    "ordering_defect",
]


@dataclass(frozen=True)
class XiGrid:
    """Uniform lattice over a box in the flattened gradient variable."""

    shape: MatrixShape
    lo: np.ndarray
    hi: np.ndarray
    npts: tuple

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        npts = tuple(int(k) for k in np.atleast_1d(self.npts))
        if lo.size != self.shape.size or hi.size != self.shape.size or len(npts) != self.shape.size:
            raise ShapeError("grid bounds must match the flattened matrix size")
        if np.any(hi <= lo) or any(k < 2 for k in npts):
            raise ShapeError("grid needs hi > lo and at least 2 points per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "npts", npts)

    @staticmethod
    def centered(shape: MatrixShape, halfwidth: float, n: int) -> "XiGrid":
        md = shape.size
        return XiGrid(shape, -halfwidth * np.ones(md), halfwidth * np.ones(md), (n,) * md)

    @property
    def ndim_grid(self) -> int:
        return self.shape.size

    @property
    def grid_shape(self) -> tuple:
        return self.npts

    @property
    def steps(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.array(self.npts) - 1)

    def axes(self):
        return [np.linspace(self.lo[k], self.hi[k], self.npts[k]) for k in range(self.ndim_grid)]

    def points(self) -> np.ndarray:
        """All lattice points, shape (N, md), lexicographic."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.ndim_grid)

    def matrices(self) -> np.ndarray:
        return self.points().reshape((-1, self.shape.m, self.shape.d))

    def point(self, idx) -> np.ndarray:
        idx = tuple(int(i) for i in np.atleast_1d(idx))
        return np.array([ax[i] for ax, i in zip(self.axes(), idx)])

    def nearest_index(self, xi_flat) -> tuple:
        xi_flat = np.asarray(xi_flat, dtype=float).reshape(self.ndim_grid)
        rel = (xi_flat - self.lo) / self.steps
        idx = np.clip(np.rint(rel).astype(int), 0, np.array(self.npts) - 1)
        return tuple(idx.tolist())

    def uniform_step(self, rtol: float = 1e-9) -> float:
        s = self.steps
        if np.max(s) - np.min(s) > rtol * np.max(s):
            raise ConfigurationError("operation needs a grid with one common step")
        return float(s[0])

    def to_dict(self) -> dict:
        return {
            "m": self.shape.m,
            "d": self.shape.d,
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "npts": list(self.npts),
        }


@dataclass
class EnvelopeTable:
    """Extended-real values on a XiGrid; kind tags the construction."""

    grid: XiGrid
    values: np.ndarray
    kind: str = "raw"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.grid_shape:
            v = v.reshape(self.grid.grid_shape)
        if np.any(np.isnan(v)) or np.any(v < 0):
            raise ShapeError("table values must lie in [0, +inf]")
        self.values = v

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def finite_scale(self) -> float:
        fin = self.flat[np.isfinite(self.flat)]
        return float(np.max(fin)) if fin.size else 0.0

    def value_at(self, xi, mode: str = "linear") -> float:
        """Table lookup at an arbitrary matrix; linear interpolation keeps
        +inf whenever a surrounding corner is infinite."""
        flatxi = np.asarray(xi, dtype=float).reshape(self.grid.ndim_grid)
        if mode == "nearest":
            return float(self.values[self.grid.nearest_index(flatxi)])
        rel = (flatxi - self.grid.lo) / self.grid.steps
        n = np.array(self.grid.npts)
        if np.any(rel < -1e-9) or np.any(rel > n - 1 + 1e-9):
            return math.inf
        base = np.clip(np.floor(rel).astype(int), 0, n - 2)
        loc = np.clip(rel - base, 0.0, 1.0)
        total = 0.0
        for corner in itertools.product((0, 1), repeat=self.grid.ndim_grid):
            w = 1.0
            for k, c in enumerate(corner):
                w *= loc[k] if c else (1.0 - loc[k])
            if w == 0.0:
                continue
            v = self.values[tuple(base + np.array(corner))]
            if math.isinf(v):
                return math.inf
            total += w * v
        return float(total)

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "kind": self.kind, "meta": self.meta}


def raw_table(f: Integrand, grid: XiGrid, x=None) -> EnvelopeTable:
    """Evaluate f(x, .) on the lattice; x defaults to the box center."""
    if grid.shape != f.shape:
        raise ShapeError("grid and integrand shapes disagree")
    Xi = grid.matrices()
    if f.depends_on_x:
        x = (f.omega.lo + f.omega.hi) / 2.0 if x is None else np.atleast_1d(np.asarray(x, float))
        X = np.broadcast_to(x, (Xi.shape[0], f.shape.d)).copy()
    else:
        X = None
    vals = f.eval_batch(X, Xi).reshape(grid.grid_shape)
    return EnvelopeTable(grid, vals, kind="raw", meta={"x": None if X is None else x.tolist()})


def _conj_axis(W: np.ndarray, xs: np.ndarray, ss: np.ndarray, axis: int) -> np.ndarray:
    """sup over the axis coordinate of s * x - W, batched over the rest."""
    Wm = np.moveaxis(W, axis, -1)
    lead = Wm.shape[:-1]
    N = Wm.shape[-1]
    Wf = Wm.reshape(-1, N)
    K = ss.size
    sx = ss[:, None] * xs[None, :]
    out = np.empty((Wf.shape[0], K))
    rows = max(1, (1 << 22) // max(1, K * N))
    for start in range(0, Wf.shape[0], rows):
        blk = Wf[start : start + rows]
        out[start : start + rows] = np.max(sx[None, :, :] - blk[:, None, :], axis=-1)
    return np.moveaxis(out.reshape(lead + (K,)), -1, axis)


def _transform(V: np.ndarray, primal_axes, dual_axes) -> np.ndarray:
    """Full Legendre transform factored into per-axis passes."""
    W = V
    nd = V.ndim
    for j, axis in enumerate(reversed(range(nd))):
        W = _conj_axis(W, primal_axes[axis], dual_axes[axis], axis)
        if j < nd - 1:
            W = -W
    return W


def _axis_slopes(V: np.ndarray, axes, axis: int, cap: int) -> np.ndarray:
    """Deduplicated finite-difference slopes of V along one axis, plus 0."""
    xs = axes[axis]
    Vm = np.moveaxis(V, axis, -1)
    with np.errstate(invalid="ignore"):
        diffs = (Vm[..., 1:] - Vm[..., :-1]) / (xs[1:] - xs[:-1])
    vals = diffs[np.isfinite(diffs)]
    if vals.size == 0:
        return np.array([0.0])
    slopes = np.unique(np.round(vals, 12))
    if slopes.size > cap:
        pick = np.unique(np.linspace(0, slopes.size - 1, cap).astype(int))
        slopes = slopes[pick]
    return np.union1d(slopes, [0.0])


def convex_envelope(table: EnvelopeTable, max_slopes: int = 512) -> EnvelopeTable:
    """Discrete convex envelope by the Legendre double transform.

    Dual slopes per axis are the deduplicated finite-difference slopes of the
    input (capped and always containing 0), so every affine minorant built
    from the conjugate supports the data and the result is a pointwise lower
    bound, discretely convex, and +inf exactly where the input is +inf (the
    lattice trace of the domain's convex hull).
    """
    V = table.values
    finite = np.isfinite(V)
    if not np.any(finite):
        raise DegenerateInputError("cannot convexify an all-infinite table")
    axes = table.grid.axes()
    slopes = [_axis_slopes(V, axes, k, max_slopes) for k in range(V.ndim)]
    conj = _transform(V, axes, slopes)
    out = _transform(conj, slopes, axes)
    out = np.where(finite, out, np.inf)
    out = np.maximum(out, 0.0)
    meta = {
        "n_slopes": [int(s.size) for s in slopes],
        "max_midpoint_violation": midpoint_violation(table.grid, out),
    }
    return EnvelopeTable(table.grid, out, kind="convex", meta=meta)


def midpoint_violation(grid: XiGrid, values: np.ndarray, dirs=None) -> float:
    """Max of V_mid - (V_minus + V_plus)/2 over lattice segments.

    Nonpositive (up to round-off) for discretely convex data; segments with
    an infinite endpoint are vacuous.
    """
    V = values
    worst = -math.inf
    if dirs is None:
        dirs = [tuple(int(k == a) for k in range(V.ndim)) for a in range(V.ndim)]
    for dn in dirs:
        plus = _shift_inf(V, tuple(dn))
        minus = _shift_inf(V, tuple(-k for k in dn))
        ok = np.isfinite(plus) & np.isfinite(minus) & np.isfinite(V)
        if np.any(ok):
            gap = V[ok] - 0.5 * (plus[ok] + minus[ok])
            worst = max(worst, float(gap.max()))
        broken = np.isinf(V) & np.isfinite(plus) & np.isfinite(minus)
        if np.any(broken):
            worst = math.inf
    return worst


def _shift_inf(V: np.ndarray, disp) -> np.ndarray:
    """V sampled at index + disp, padded with +inf off the lattice."""
    out = np.full_like(V, np.inf)
    src, dst = [], []
    for ax, k in enumerate(disp):
        n = V.shape[ax]
        if abs(k) >= n:
            return out
        if k >= 0:
            dst.append(slice(0, n - k))
            src.append(slice(k, n))
        else:
            dst.append(slice(-k, n))
            src.append(slice(0, n + k))
    out[tuple(dst)] = V[tuple(src)]
    return out


def rank_one_directions(shape: MatrixShape, height: int = 2):
    """Primitive rank-one lattice directions a x b with entries up to height.

    Directions are deduplicated up to sign with a canonical orientation
    (first nonzero entry positive).
    """
    dirs = set()
    rng_a = range(-height, height + 1)
    for a in itertools.product(rng_a, repeat=shape.m):
        if not any(a):
            continue
        for b in itertools.product(rng_a, repeat=shape.d):
            if not any(b):
                continue
            eta = np.outer(a, b).reshape(-1)
            g = np.gcd.reduce(np.abs(eta[eta != 0]))
            eta = eta // g
            first = eta[np.flatnonzero(eta)[0]]
            if first < 0:
                eta = -eta
            dirs.add(tuple(int(v) for v in eta))
    return sorted(dirs)


def lamination_envelope(
    table: EnvelopeTable,
    levels: Optional[int] = None,
    max_span: int = 4,
    height: int = 2,
    fix_tol: float = 1e-12,
) -> EnvelopeTable:
    """Iterated lattice lamination along rank-one directions.

    Each level replaces the value at a lattice point by the best convex split
    (l2 V[xi - l1 eta] + l1 V[xi + l2 eta]) / (l1 + l2) over the direction set
    and a span set: all splits up to max_span plus dyadic long spans.  Splits
    land exactly on lattice points, so there is no interpolation error.  The
    level sequence is nonincreasing and runs to a fixpoint.
    """
    table.grid.uniform_step()  # displacements act on indices; needs one common step
    width = max(table.grid.npts)
    if levels is None:
        levels = 8 * max(1, int(math.ceil(math.log2(width)))) + 16
    dirs = rank_one_directions(table.grid.shape, height)

    # short spans carry the fine t-grid; dyadic long spans (with endpoint and
    # midpoint splits only) let chords cross the lattice in O(log N) levels
    splits = [(l1, s - l1) for s in range(2, max_span + 1) for l1 in range(1, s)]
    s = 2 * max_span
    while s <= width:
        for l1 in {1, s // 2, s - 1}:
            splits.append((l1, s - l1))
        s *= 2

    V = table.values.copy()
    scale = 1.0 + (table.finite_scale() or 0.0)
    profile = []
    used = 0
    for _ in range(levels):
        Vnew = V.copy()
        for eta in dirs:
            for l1, l2 in splits:
                span = l1 + l2
                lo_v = _shift_inf(V, tuple(-l1 * e for e in eta))
                hi_v = _shift_inf(V, tuple(l2 * e for e in eta))
                cand = (l2 * lo_v + l1 * hi_v) / span
                np.minimum(Vnew, cand, out=Vnew)
        with np.errstate(invalid="ignore"):
            drop = V - Vnew
        drop = drop[np.isfinite(drop)]
        newly_finite = int(np.sum(np.isinf(V) & np.isfinite(Vnew)))
        change = float(drop.max()) if drop.size else 0.0
        profile.append(change)
        V = Vnew
        used += 1
        if newly_finite == 0 and change <= fix_tol * scale:
            break
    meta = {
        "levels_used": used,
        "profile": profile,
        "n_directions": len(dirs),
        "max_span": max_span,
    }
    return EnvelopeTable(table.grid, V, kind="lamination", meta=meta)


def zl_table(
    f: Integrand,
    grid: XiGrid,
    x,
    eps_seq: Sequence[float],
    n: int,
    cfg: Optional[OptimizerConfig] = None,
    workers: int = 1,
) -> EnvelopeTable:
    """Tabulated zl values on the lattice (quasiconvex side of the chain)."""
    cfg = cfg or OptimizerConfig()
    mats = grid.matrices()
    keep = f.domain.contains_batch(mats)

    def solve(k):
        if not keep[k]:
            return math.inf
        val, _, _ = zl(f, x, mats[k], eps_seq, n, cfg)
        return val

    vals = _pmap(solve, range(mats.shape[0]), workers)
    values = np.array(vals).reshape(grid.grid_shape)
    return EnvelopeTable(grid, values, kind="quasiconvex", meta={"eps_seq": list(eps_seq), "n": n})


def zl_hat_table(
    f: Integrand,
    grid: XiGrid,
    x,
    eps_seq: Sequence[float],
    n: int,
    t_seq: Optional[Sequence[float]] = None,
    cfg: Optional[OptimizerConfig] = None,
    workers: int = 1,
) -> EnvelopeTable:
    """Tabulated radial-limit values on the lattice."""
    cfg = cfg or OptimizerConfig()
    mats = grid.matrices()

    def solve(k):
        val, _ = zl_hat(f, x, mats[k], eps_seq, n, t_seq=t_seq, cfg=cfg)
        return val

    vals = _pmap(solve, range(mats.shape[0]), workers)
    values = np.array(vals).reshape(grid.grid_shape)
    return EnvelopeTable(grid, values, kind="zhat", meta={"eps_seq": list(eps_seq), "n": n})


def _pmap(fn, items, workers: int):
    items = list(items)
    if workers <= 1:
        return [fn(k) for k in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def ordering_defect(chain: Sequence[EnvelopeTable]) -> float:
    """Max violation of lower <= upper along a chain of tables.

    The chain is ordered from the smallest envelope to the raw table; the
    defect is max(lower - upper) over finite pairs, -inf when every pair is
    ordered, +inf when a lower entry is finite where an upper entry is not.
    """
    worst = -math.inf
    for lo_t, hi_t in zip(chain[:-1], chain[1:]):
        lo_v, hi_v = lo_t.values, hi_t.values
        both = np.isfinite(lo_v) & np.isfinite(hi_v)
        if np.any(both):
            worst = max(worst, float((lo_v[both] - hi_v[both]).max()))
        if np.any(np.isinf(lo_v) & np.isfinite(hi_v)):
            worst = math.inf
    return worst
