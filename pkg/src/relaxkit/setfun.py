"""Set-function calculus over cubes.

Local Dirichlet values, their sums over dyadic families, the scale-supremum
constructions, and density ratios.  All set functions here map cubes to
extended reals in [0, inf] and are deterministic; sums propagate +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, DomainEscapeError, RelaxkitError
from .integrand import Integrand
from .mesh import CubeSpec, GridFunction, cube_at, gradient, kuhn_mesh, restrict
from .cellsolve import OptimizerConfig, minimize_gradient_energy


@dataclass(frozen=True)
class SetFunction:
    """A nonnegative function of cubes, m(empty) = 0 by convention.

    Parameters
    ----------
    evaluator : callable
        CubeSpec -> float in [0, inf].  Must be pure: repeated calls with
        the same cube return the same value.
    tag : str
        One of "dirichlet", "closed-form", "composite".
    name : str
        Display name for reports.
    """

    evaluator: Callable[[CubeSpec], float]
    tag: str
    name: str = ""

    def __post_init__(self):
        if self.tag not in ("dirichlet", "closed-form", "composite"):
            raise ConfigurationError(f"unknown set-function tag {self.tag!r}")

    def __call__(self, cube: CubeSpec) -> float:
        v = float(self.evaluator(cube))
        if math.isnan(v) or v < 0.0:
            raise RelaxkitError(f"set function {self.name!r} returned {v} on {cube}")
        return v


def volume_setfun() -> SetFunction:
    return SetFunction(lambda q: q.volume, "closed-form", "volume")


def power_setfun(alpha: float) -> SetFunction:
    """m(Q) = |Q|^alpha; sublinear alpha makes the density ratio blow up."""
    return SetFunction(lambda q: q.volume ** alpha, "closed-form", f"volume^{alpha}")


def quadratic_setfun(c0: float, c2: float) -> SetFunction:
    """Exact integral of the density c0 + c2 |x|^2 over the cube.

    The cube mean of |x|^2 is |center|^2 + d h^2 / 3 with h the halfwidth,
    so the value is closed form and carries no quadrature error.
    """

    def ev(q: CubeSpec) -> float:
        c = np.asarray(q.center, dtype=float)
        mean_sq = float(c @ c) + q.d * q.halfwidth ** 2 / 3.0
        return q.volume * (c0 + c2 * mean_sq)

    return SetFunction(ev, "closed-form", f"int({c0}+{c2}|x|^2)")


def integral_setfun(g: Callable[[np.ndarray], np.ndarray], resolution: int = 8,
                    name: str = "integral") -> SetFunction:
    """Composite midpoint quadrature of a pointwise density g >= 0.

    g takes an (N, d) array of points and returns (N,) values.  Quadrature
    error is O(h^2) per cube for smooth g.
    """

    def ev(q: CubeSpec) -> float:
        axes = [np.linspace(lo + w / (2 * resolution), hi - w / (2 * resolution), resolution)
                for lo, hi, w in zip(q.corner, q.upper, [q.side] * q.d)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, q.d)
        vals = np.asarray(g(pts), dtype=float)
        return float(vals.mean()) * q.volume

    return SetFunction(ev, "composite", name)


def dirichlet_setfun(f: Integrand, xi, n: int = 16,
                     cfg: Optional[OptimizerConfig] = None) -> SetFunction:
    """Cube -> best found Dirichlet energy with the affine datum l_xi.

    The value is the integral over the cube (not the mean), so ratios
    m(Q_eps)/eps^d recover the cell mean.
    """
    from .cellsolve import CellProblem, cell_inf

    xi = f.shape.as_matrix(xi)
    cfg = cfg or OptimizerConfig()

    def ev(q: CubeSpec) -> float:
        prob = CellProblem(f, np.asarray(q.center, dtype=float), xi, q.side, n, cfg)
        mean, status, _ = cell_inf(prob)
        return mean * q.volume if math.isfinite(mean) else math.inf

    return SetFunction(ev, "dirichlet", f"dirichlet[{f.name}]")


@dataclass(frozen=True)
class DyadicFamily:
    """A disjoint family of dyadic sub-cubes covering the root exactly.

    Cells are (level, index) pairs; index is a d-tuple in {0..2^level-1}^d.
    Mixed levels are allowed as long as the family partitions the root,
    which `validate` checks through the volume identity.
    """

    root: CubeSpec
    cells: tuple

    @staticmethod
    def uniform(root: CubeSpec, depth: int) -> "DyadicFamily":
        if depth < 0:
            raise ConfigurationError("depth must be >= 0")
        idx = product(range(2 ** depth), repeat=root.d)
        return DyadicFamily(root, tuple((depth, i) for i in idx))

    def refined(self, positions: Sequence[int]) -> "DyadicFamily":
        """Split the cells at the given positions one level further."""
        out = []
        split = set(positions)
        for k, (lev, idx) in enumerate(self.cells):
            if k in split:
                for off in product(range(2), repeat=self.root.d):
                    out.append((lev + 1, tuple(2 * i + o for i, o in zip(idx, off))))
            else:
                out.append((lev, idx))
        fam = DyadicFamily(self.root, tuple(out))
        fam.validate()
        return fam

    def cube(self, cell) -> CubeSpec:
        lev, idx = cell
        side = self.root.side / 2 ** lev
        corner = np.asarray(self.root.corner, dtype=float)
        center = corner + (np.asarray(idx, dtype=float) + 0.5) * side
        return CubeSpec(tuple(center), side / 2.0)

    def cubes(self):
        return [self.cube(c) for c in self.cells]

    @property
    def max_diameter(self) -> float:
        lev = min(l for l, _ in self.cells)
        return self.root.diameter / 2 ** lev

    def validate(self, rtol: float = 1e-12) -> None:
        total = sum(self.cube(c).volume for c in self.cells)
        if abs(total - self.root.volume) > rtol * self.root.volume:
            raise ConfigurationError(
                f"family volume {total} does not match root volume {self.root.volume}")


def dirichlet_value(
    f: Integrand,
    u: GridFunction,
    cube: CubeSpec,
    n: int,
    cfg: Optional[OptimizerConfig] = None,
    warm: Optional[np.ndarray] = None,
):
    """Best found integral of f(x, grad(u + phi)) over the cube.

    phi ranges over zero-boundary P1 oscillations at resolution n; the datum
    is u restricted to the cube's mesh.  Returns (value, minimizer, status)
    with minimizer = datum + phi as a GridFunction on the cube mesh.  The
    value never exceeds the phi = 0 energy of the restricted datum.
    """
    cfg = cfg or OptimizerConfig()
    mesh = kuhn_mesh(cube, n)
    datum = restrict(u, mesh)
    base = gradient(datum)
    total, phi_full, status = minimize_gradient_energy(f, mesh, base, cfg, warm)
    v = GridFunction(mesh, datum.values + phi_full)
    return total, v, status


def m_eps(
    f: Integrand,
    u: GridFunction,
    O: CubeSpec,
    depth: int,
    n: int,
    cfg: Optional[OptimizerConfig] = None,
    family: Optional[DyadicFamily] = None,
    keep_minimizers: bool = False,
):
    """Sum of per-cell Dirichlet values over a dyadic partition of O.

    The canonical family is the uniform dyadic partition at `depth`; any
    exact partition can be passed instead.  This realizes one admissible
    member of the scale-constrained family class, so the sum is an upper
    bound for the infimum over all families.  Any infinite cell makes the
    sum infinite.

    Returns (value, pieces) where pieces is the list of per-cell minimizers
    when keep_minimizers is set, else None.
    """
    fam = family or DyadicFamily.uniform(O, depth)
    total = 0.0
    pieces = [] if keep_minimizers else None
    for q in fam.cubes():
        val, v, _ = dirichlet_value(f, u, q, n, cfg)
        if keep_minimizers:
            pieces.append(v)
        if math.isinf(val):
            return math.inf, pieces
        total += val
    return total, pieces


def m_star(
    f: Integrand,
    u: GridFunction,
    O: CubeSpec,
    depth_seq: Sequence[int],
    n: int,
    cfg: Optional[OptimizerConfig] = None,
):
    """Scale supremum of the family sums: max of m_eps over the depths.

    Returns (value, profile) with profile the max-prefix of the raw m_eps
    values, so it is nondecreasing by construction.  As a post check the
    single-cube Dirichlet value must not exceed the supremum beyond the
    combined per-cell optimizer slack.
    """
    cfg = cfg or OptimizerConfig()
    depths = sorted(set(int(k) for k in depth_seq))
    if any(k < 0 for k in depths):
        raise ConfigurationError("depths must be >= 0")
    raw = []
    for k in depths:
        val, _ = m_eps(f, u, O, k, n, cfg)
        raw.append(val)
    profile = list(np.maximum.accumulate(raw))
    value = profile[-1]
    whole, _, _ = dirichlet_value(f, u, O, n, cfg)
    cells = (2 ** max(depths)) ** O.d
    slack = cells * cfg.tolerance
    if math.isfinite(whole) and whole > value + slack:
        raise RelaxkitError(
            f"single-cube value {whole} exceeds the scale supremum {value} + {slack}")
    return value, profile


CubeLike = Union[CubeSpec, Sequence[CubeSpec]]


def m_sharp(m: SetFunction, E: CubeLike, depth_seq: Sequence[int]):
    """Scale supremum of canonical family sums of m over E.

    E may be a cube or a sequence of pairwise disjoint cubes; the family of
    a union is the union of the per-cube families, which makes the value
    additive across separated pieces by construction.  Returns
    (value, profile) with the max-prefix profile.
    """
    cubes = [E] if isinstance(E, CubeSpec) else list(E)
    depths = sorted(set(int(k) for k in depth_seq))
    raw = []
    for k in depths:
        total = 0.0
        for e in cubes:
            for q in DyadicFamily.uniform(e, k).cubes():
                v = m(q)
                if math.isinf(v):
                    total = math.inf
                    break
                total += v
            if math.isinf(total):
                break
        raw.append(total)
    profile = list(np.maximum.accumulate(raw))
    return profile[-1], profile


@dataclass
class DensityRecord:
    """Ratios m(Q_eps(x)) / eps^d along a shrinking scale sequence."""

    x: list
    eps: list
    ratios: list
    m_plus: float
    m_minus: float
    converged: bool
    limit: float

    def to_dict(self) -> dict:
        return {
            "x": list(self.x), "eps": list(self.eps), "ratios": list(self.ratios),
            "m_plus": self.m_plus, "m_minus": self.m_minus,
            "converged": self.converged, "limit": self.limit,
        }


def set_derivative(
    m: SetFunction,
    x,
    eps_seq: Sequence[float],
    tail_tol: float = 1e-3,
    placements: bool = True,
) -> DensityRecord:
    """Density ratios of m at x with sliding-cube accumulation bounds.

    The centered ratios m(Q_eps(x))/eps^d are reported per scale; the upper
    and lower estimates scan 2d+1 cube placements containing x (centered
    plus one shift per face, keeping x just inside) at the two smallest
    scales.  Convergence means the last three centered ratios have spread
    below tail_tol times (1 + |last|).
    """
    x = np.asarray(x, dtype=float)
    eps_seq = sorted(float(e) for e in eps_seq)[::-1]
    if not eps_seq:
        raise ConfigurationError("eps_seq is empty")
    d = x.size
    ratios = [m(cube_at(x, e)) / e ** d for e in eps_seq]

    hi, lo = -math.inf, math.inf
    if placements:
        shift = 0.5 * (1.0 - 1e-9)
        for e in eps_seq[-2:]:
            vals = [m(cube_at(x, e)) / e ** d]
            for i in range(d):
                for sgn in (-1.0, 1.0):
                    c = x.copy()
                    c[i] += sgn * shift * e
                    vals.append(m(cube_at(c, e)) / e ** d)
            hi = max(hi, max(vals))
            lo = min(lo, min(vals))
    else:
        hi, lo = max(ratios[-2:]), min(ratios[-2:])

    tail = ratios[-3:] if len(ratios) >= 3 else ratios
    finite = [r for r in tail if math.isfinite(r)]
    if len(finite) == len(tail):
        spread = max(tail) - min(tail)
        converged = spread <= tail_tol * (1.0 + abs(tail[-1]))
    else:
        converged = False
    return DensityRecord(list(x), list(eps_seq), ratios, hi, lo, converged, ratios[-1])


@dataclass
class OmegaRecord:
    """Per-scale suprema of m(Q)/|Q| over sampled small cubes."""

    value: float
    delta_seq: list
    per_delta: list
    diverging: bool

    def to_dict(self) -> dict:
        return {"value": self.value, "delta_seq": list(self.delta_seq),
                "per_delta": list(self.per_delta), "diverging": self.diverging}


def omega_ratio(
    m: SetFunction,
    delta_seq: Sequence[float],
    root: CubeSpec,
    n_samples: int = 8,
    seed: int = 0,
    extra_cubes: Optional[Sequence[CubeSpec]] = None,
) -> OmegaRecord:
    """Estimate the small-scale supremum of m(Q)/|Q| inside the root cube.

    For each delta the sampled cubes have diameter just under delta: the
    inset corners of root, its center, and a seeded low-discrepancy fill.
    Extra cubes join every scale whose delta exceeds their diameter, which
    lets callers pin the estimate from below with known competitors.  A
    growing tail (last supremum above 1.5x the first) flags divergence and
    the value is +inf.
    """
    from scipy.stats import qmc

    deltas = sorted(float(t) for t in delta_seq)[::-1]
    if not deltas:
        raise ConfigurationError("delta_seq is empty")
    d = root.d
    per_delta = []
    for delta in deltas:
        side = delta / math.sqrt(d) * (1.0 - 1e-9)
        h = side / 2.0
        if side > root.side:
            raise DomainEscapeError(f"delta {delta} exceeds the root cube")
        lo = np.asarray(root.corner, dtype=float) + h
        hi = np.asarray(root.upper, dtype=float) - h
        centers = [lo.copy(), hi.copy(), 0.5 * (lo + hi)]
        if n_samples > len(centers):
            fill = qmc.Halton(d=d, scramble=True, seed=seed).random(n_samples - len(centers))
            centers.extend(lo + (hi - lo) * fill)
        sup = -math.inf
        for c in centers:
            sup = max(sup, m(CubeSpec(tuple(c), h)) / side ** d)
        for q in (extra_cubes or []):
            if q.diameter < delta:
                sup = max(sup, m(q) / q.volume)
        per_delta.append(sup)
    diverging = (
        len(per_delta) >= 2
        and math.isfinite(per_delta[0])
        and per_delta[0] > 0.0
        and per_delta[-1] > 1.5 * per_delta[0]
    ) or any(math.isinf(v) for v in per_delta)
    value = math.inf if diverging else max(per_delta)
    return OmegaRecord(value, deltas, per_delta, diverging)
