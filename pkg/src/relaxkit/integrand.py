"""Extended-real integrands f(x, xi) on Omega x R^(m x d).

An integrand evaluates to a value in [0, +inf]; the effective domain in the
gradient variable is a convex set described explicitly by a DomainSpec, and
evaluation returns +inf exactly on its complement.  +inf is the IEEE infinity,
never a large float stand-in.  All evaluators are batched: they accept
(N, d) sample points and (N, m, d) gradient matrices at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import ConfigurationError, DegenerateInputError, DomainEscapeError, ShapeError
from .mesh import CubeSpec

#: relative tolerance for domain membership at the boundary
MEMBERSHIP_RTOL = 1e-12


@dataclass(frozen=True)
class MatrixShape:
    """Shape (m, d) of the gradient variable; flattening is row-major."""

    m: int
    d: int

    def __post_init__(self):
        if self.m < 1 or self.d < 1:
            raise ShapeError("matrix shape needs m >= 1 and d >= 1")

    @property
    def size(self) -> int:
        return self.m * self.d

    def as_matrix(self, xi) -> np.ndarray:
        a = np.asarray(xi, dtype=float)
        if a.ndim == 1:
            if a.size != self.size:
                raise ShapeError(f"flat xi must have length {self.size}")
            return a.reshape(self.m, self.d)
        if a.shape != (self.m, self.d):
            raise ShapeError(f"xi must have shape {(self.m, self.d)}; got {a.shape}")
        return a

    def flatten(self, xi) -> np.ndarray:
        return self.as_matrix(xi).reshape(self.size)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in R^d (the working domain Omega)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ShapeError("box bounds must be matching flat arrays")
        if np.any(hi <= lo):
            raise ShapeError("box must have positive extent")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        pad = tol * (1.0 + np.abs(self.hi - self.lo).max())
        return bool(np.all(x >= self.lo - pad) and np.all(x <= self.hi + pad))

    def contains_cube(self, cube: CubeSpec, tol: float = 1e-9) -> bool:
        pad = tol * (1.0 + np.abs(self.hi - self.lo).max())
        return bool(
            np.all(cube.corner >= self.lo - pad) and np.all(cube.upper <= self.hi + pad)
        )

    def central_cube(self) -> CubeSpec:
        hw = float((self.hi - self.lo).min()) / 2.0
        return CubeSpec(center=(self.lo + self.hi) / 2.0, halfwidth=hw)


def unit_box(d: int) -> Box:
    return Box(lo=np.zeros(d), hi=np.ones(d))


@dataclass(frozen=True)
class DomainSpec:
    """Convex effective domain in the gradient variable.

    Supported kinds: "full", "box" (centered, given halfwidth), "ball"
    (Frobenius radius), "halfspaces" (intersection n_k : xi <= o_k).  All are
    convex by construction; boundary points count as members up to a relative
    tolerance of MEMBERSHIP_RTOL.
    """

    kind: str
    halfwidth: float = 0.0
    radius: float = 0.0
    normals: Optional[np.ndarray] = None
    offsets: Optional[np.ndarray] = None

    @staticmethod
    def full() -> "DomainSpec":
        return DomainSpec(kind="full")

    @staticmethod
    def box(halfwidth: float) -> "DomainSpec":
        if not halfwidth > 0:
            raise ShapeError("box halfwidth must be positive")
        return DomainSpec(kind="box", halfwidth=float(halfwidth))

    @staticmethod
    def ball(radius: float) -> "DomainSpec":
        if not radius > 0:
            raise ShapeError("ball radius must be positive")
        return DomainSpec(kind="ball", radius=float(radius))

    @staticmethod
    def halfspaces(normals, offsets) -> "DomainSpec":
        nr = np.asarray(normals, dtype=float)
        of = np.atleast_1d(np.asarray(offsets, dtype=float))
        if nr.ndim != 3 or nr.shape[0] != of.size:
            raise ShapeError("normals must be (k, m, d) with k offsets")
        return DomainSpec(kind="halfspaces", normals=nr, offsets=of)

    def contains_batch(self, Xi: np.ndarray) -> np.ndarray:
        """Membership mask for a batch of (N, m, d) matrices."""
        Xi = np.asarray(Xi, dtype=float)
        if self.kind == "full":
            return np.ones(Xi.shape[0], dtype=bool)
        if self.kind == "box":
            bound = self.halfwidth * (1.0 + MEMBERSHIP_RTOL)
            return np.abs(Xi).max(axis=(1, 2)) <= bound
        if self.kind == "ball":
            bound = self.radius * (1.0 + MEMBERSHIP_RTOL)
            return np.sqrt((Xi * Xi).sum(axis=(1, 2))) <= bound
        if self.kind == "halfspaces":
            proj = np.einsum("kmd,nmd->nk", self.normals, Xi)
            slack = MEMBERSHIP_RTOL * (1.0 + np.abs(self.offsets))
            return np.all(proj <= self.offsets[None, :] + slack[None, :], axis=1)
        raise ConfigurationError(f"unknown domain kind {self.kind!r}")

    def contains(self, xi: np.ndarray) -> bool:
        xi = np.asarray(xi, dtype=float)
        return bool(self.contains_batch(xi[None, :, :])[0])

    @property
    def bounded(self) -> bool:
        return self.kind in ("box", "ball")

    def bounding_halfwidth(self) -> Optional[float]:
        """Halfwidth of a componentwise box covering the domain, if bounded."""
        if self.kind == "box":
            return self.halfwidth
        if self.kind == "ball":
            return self.radius
        return None

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "box":
            out["halfwidth"] = self.halfwidth
        elif self.kind == "ball":
            out["radius"] = self.radius
        elif self.kind == "halfspaces":
            out["normals"] = np.asarray(self.normals).tolist()
            out["offsets"] = np.asarray(self.offsets).tolist()
        return out


@dataclass
class GrowthProfile:
    """Declared growth metadata; only what an entry actually satisfies."""

    p: Optional[float] = None
    c: Optional[float] = None
    C: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    px: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "c": self.c,
            "C": self.C,
            "alpha": self.alpha,
            "beta": self.beta,
            "px": None if self.px is None else "callable",
        }


@dataclass
class RuUscWeight:
    """Positive weight a(x) entering modulus denominators; defaults to 1."""

    fn: Callable[[np.ndarray], np.ndarray] = None
    label: str = "one"

    def __post_init__(self):
        if self.fn is None:
            self.fn = lambda X: np.ones(np.asarray(X).shape[0])

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        vals = np.asarray(self.fn(X), dtype=float)
        if np.any(vals <= 0):
            raise ConfigurationError("weight a(x) must be strictly positive")
        return vals


@dataclass
class Integrand:
    """Borel integrand with batched evaluator and explicit effective domain.

    `formula(X, Xi)` must return finite nonnegative values for Xi inside the
    domain; `eval_batch` masks the complement with +inf so the extended-real
    contract (infinite exactly off the domain) holds by construction.
    """

    name: str
    shape: MatrixShape
    domain: DomainSpec
    omega: Box
    formula: Callable[[Optional[np.ndarray], np.ndarray], np.ndarray]
    growth: GrowthProfile = field(default_factory=GrowthProfile)
    depends_on_x: bool = True

    def __post_init__(self):
        if self.growth.p is not None and not self.growth.p > self.shape.d:
            raise ConfigurationError("declared growth exponent needs p > d")

    def eval_batch(self, X: Optional[np.ndarray], Xi: np.ndarray) -> np.ndarray:
        Xi = np.asarray(Xi, dtype=float)
        if Xi.ndim != 3 or Xi.shape[1:] != (self.shape.m, self.shape.d):
            raise ShapeError(
                f"Xi must be (N, {self.shape.m}, {self.shape.d}); got {Xi.shape}"
            )
        if X is not None:
            X = np.atleast_2d(np.asarray(X, dtype=float))
            if X.shape != (Xi.shape[0], self.shape.d):
                raise ShapeError("X must be (N, d) matching Xi")
        mask = self.domain.contains_batch(Xi)
        out = np.full(Xi.shape[0], math.inf)
        if np.any(mask):
            Xs = None if X is None else X[mask]
            vals = np.asarray(self.formula(Xs, Xi[mask]), dtype=float)
            out[mask] = vals
        return out


def eval_ext(f: Integrand, x, xi) -> float:
    """Pointwise extended-real evaluation; +inf iff xi is off the domain."""
    xi = f.shape.as_matrix(xi)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != f.shape.d:
        raise ShapeError(f"x must have dimension {f.shape.d}")
    if not f.omega.contains(x):
        raise DomainEscapeError("sample point x lies outside the working box")
    return float(f.eval_batch(x[None, :], xi[None, :, :])[0])


@dataclass
class SamplingPlan:
    """Deterministic low-discrepancy sampling plan (scrambled Halton)."""

    n: int = 256
    seed: int = 0
    xi_halfwidth: Optional[float] = None
    oversample: int = 8

    def _halton(self, dim: int, count: int, salt: int = 0) -> np.ndarray:
        eng = qmc.Halton(d=dim, scramble=True, seed=self.seed + salt)
        return eng.random(count)

    def xi_box_halfwidth(self, f: Integrand) -> float:
        if self.xi_halfwidth is not None:
            return self.xi_halfwidth
        hw = f.domain.bounding_halfwidth()
        return 2.0 if hw is None else hw

    def draw_x(self, f: Integrand, count: Optional[int] = None, salt: int = 0) -> np.ndarray:
        count = self.n if count is None else count
        u = self._halton(f.shape.d, count, salt=salt)
        return f.omega.lo[None, :] + u * (f.omega.hi - f.omega.lo)[None, :]

    def draw_xi(
        self, f: Integrand, count: Optional[int] = None, salt: int = 1, in_domain: bool = True
    ) -> np.ndarray:
        """Matrices from the sampling box, filtered to the domain if asked."""
        count = self.n if count is None else count
        hw = self.xi_box_halfwidth(f)
        md = f.shape.size
        raw = self._halton(md, count * (self.oversample if in_domain else 1), salt=salt)
        Xi = (2.0 * raw - 1.0).reshape(-1, f.shape.m, f.shape.d) * hw
        if not in_domain:
            return Xi[:count]
        keep = f.domain.contains_batch(Xi)
        Xi = Xi[keep]
        if Xi.shape[0] == 0:
            raise DegenerateInputError("no sample landed in the domain")
        return Xi[:count]


@dataclass
class HypothesisReport:
    """Outcome of a sampled hypothesis check; worst <= 0 means pass."""

    hypothesis: str
    samples: int
    worst: float
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        # residuals are normalized ratios; absorb pure roundoff on
        # entries where the bound is attained with equality
        return self.worst <= 1e-10

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "samples": self.samples,
            "worst": self.worst,
            "passed": self.passed,
            "witness": self.witness,
        }


def check_coercivity(f: Integrand, c: float, p: float, plan: SamplingPlan,
                     px: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> HypothesisReport:
    """Sampled residual of the lower bound c |xi|^p <= f(x, xi).

    The residual is c |xi|^p - f; positive residual is a violation.  Samples
    where f is +inf satisfy the bound trivially and are skipped.  A variable
    exponent px(X) -> (N,) replaces the constant p pointwise when given.
    """
    Xi = plan.draw_xi(f, in_domain=False, salt=1)
    X = plan.draw_x(f, count=Xi.shape[0], salt=0)
    vals = f.eval_batch(X, Xi)
    norms = np.sqrt((Xi * Xi).sum(axis=(1, 2)))
    finite = np.isfinite(vals)
    if not np.any(finite):
        raise DegenerateInputError("all samples evaluated to +inf")
    pows = np.asarray(px(X), dtype=float)[finite] if px is not None else p
    resid = c * norms[finite] ** pows - vals[finite]
    k = int(np.argmax(resid))
    idx = np.flatnonzero(finite)[k]
    witness = {"x": X[idx].tolist(), "xi": Xi[idx].tolist(), "residual": float(resid[k])}
    return HypothesisReport("coercivity", int(finite.sum()), float(resid[k]), witness)


def check_H3(f: Integrand, C: float, plan: SamplingPlan) -> HypothesisReport:
    """Sampled convexity-like transfer bound along segments.

    Residual f(x, t xi + (1-t) zeta) - C (1 + f(x, xi) + f(x, zeta)) over
    seeded triples with both endpoints in the domain; pairs with an infinite
    right-hand side are skipped.
    """
    Xi = plan.draw_xi(f, salt=1)
    Ze = plan.draw_xi(f, salt=2)
    k = min(Xi.shape[0], Ze.shape[0])
    Xi, Ze = Xi[:k], Ze[:k]
    X = plan.draw_x(f, count=k, salt=0)
    t = plan._halton(1, k, salt=3)[:, 0]
    mid = t[:, None, None] * Xi + (1.0 - t[:, None, None]) * Ze
    fx = f.eval_batch(X, Xi)
    fz = f.eval_batch(X, Ze)
    fm = f.eval_batch(X, mid)
    rhs_finite = np.isfinite(fx) & np.isfinite(fz)
    if not np.any(rhs_finite):
        raise DegenerateInputError("no sampled pair had a finite right-hand side")
    resid = fm[rhs_finite] - C * (1.0 + fx[rhs_finite] + fz[rhs_finite])
    j = int(np.argmax(resid))
    idx = np.flatnonzero(rhs_finite)[j]
    witness = {
        "x": X[idx].tolist(),
        "xi": Xi[idx].tolist(),
        "zeta": Ze[idx].tolist(),
        "t": float(t[idx]),
        "residual": float(resid[j]),
    }
    return HypothesisReport("segment-bound", int(rhs_finite.sum()), float(resid[j]), witness)


@dataclass
class ConvergenceRecord:
    """Cube averages of f(., xi) against the pointwise value at x."""

    eps: list
    averages: list
    deviations: list
    target: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "eps": list(self.eps),
            "averages": list(self.averages),
            "deviations": list(self.deviations),
            "target": self.target,
            "converged": self.converged,
        }


def cube_average(f: Integrand, cube: CubeSpec, xi: np.ndarray, resolution: int = 8) -> float:
    """Midpoint-composite average of f(., xi) over a cube inside Omega."""
    if not f.omega.contains_cube(cube):
        raise DomainEscapeError("averaging cube leaves the working box")
    d = cube.d
    w = cube.side / resolution
    axes = [cube.corner[i] + w * (np.arange(resolution) + 0.5) for i in range(d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    Xi = np.broadcast_to(xi, (pts.shape[0],) + xi.shape)
    vals = f.eval_batch(pts, Xi)
    if np.any(np.isinf(vals)):
        return math.inf
    return float(vals.mean())


def check_lebesgue_pts(
    f: Integrand,
    x,
    xi,
    eps_seq: Sequence[float],
    resolution: int = 8,
    tol: float = 1e-3,
) -> ConvergenceRecord:
    """Shrinking cube averages around x against f(x, xi)."""
    xi = f.shape.as_matrix(xi)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    target = eval_ext(f, x, xi)
    eps_seq = sorted(eps_seq, reverse=True)
    averages, deviations = [], []
    for eps in eps_seq:
        avg = cube_average(f, CubeSpec(center=x, halfwidth=eps / 2.0), xi, resolution)
        averages.append(avg)
        deviations.append(abs(avg - target) if math.isfinite(target) else math.inf)
    scale = 1.0 + (abs(target) if math.isfinite(target) else 0.0)
    converged = len(deviations) >= 2 and all(dv <= tol * scale for dv in deviations[-2:])
    return ConvergenceRecord(list(eps_seq), averages, deviations, target, converged)


def sup_on_box(f: Integrand, x, rho: float, resolution: int = 5) -> float:
    """Sample-sup of f(x, .) over the centered box of halfwidth rho.

    The sample set is the box vertices and face centers refined by a uniform
    lattice with `resolution` points per axis; +inf as soon as a sample leaves
    the domain.
    """
    if not rho > 0:
        raise ShapeError("box halfwidth rho must be positive")
    md = f.shape.size
    corners = np.array(list(np.ndindex(*([2] * md)))) * 2.0 - 1.0
    faces = np.concatenate([np.eye(md), -np.eye(md)])
    pts = [corners, faces]
    if resolution >= 2:
        ax = np.linspace(-1.0, 1.0, resolution)
        lattice = np.stack(np.meshgrid(*([ax] * md), indexing="ij"), axis=-1).reshape(-1, md)
        pts.append(lattice)
    P = np.unique(np.concatenate(pts), axis=0) * rho
    Xi = P.reshape(-1, f.shape.m, f.shape.d)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = np.broadcast_to(x, (Xi.shape[0], f.shape.d))
    vals = f.eval_batch(X, Xi)
    return float(vals.max())


@dataclass
class ModulusRecord:
    """Sampled radial upper-continuity modulus along a t sequence."""

    t_seq: list
    estimates: list
    samples: int
    witness: Optional[list] = None  # one argmax record per t

    def to_dict(self) -> dict:
        return {
            "t_seq": list(self.t_seq),
            "estimates": list(self.estimates),
            "samples": self.samples,
            "witness": self.witness,
        }


def ruusc_modulus(
    f: Integrand,
    t_seq: Sequence[float],
    plan: SamplingPlan,
    weight: Optional[RuUscWeight] = None,
    absolute: bool = False,
) -> ModulusRecord:
    """Sampled sup of (f(x, t xi) - f(x, xi)) / (a(x) + f(x, xi)).

    Samples are drawn inside the domain; the estimate for each t is the max
    ratio over the sample set.  With absolute=True the numerator is
    |f(x, t xi) - f(x, xi)|, which measures the decay rate of the scaling
    perturbation even when the signed modulus stays nonpositive.
    """
    weight = weight or RuUscWeight()
    Xi = plan.draw_xi(f, salt=1)
    X = plan.draw_x(f, count=Xi.shape[0], salt=0)
    a = weight(X)
    base = f.eval_batch(X, Xi)
    keep = np.isfinite(base)
    if not np.any(keep):
        raise DegenerateInputError("no finite base evaluation in the plan")
    X, Xi, a, base = X[keep], Xi[keep], a[keep], base[keep]
    estimates, witness = [], []
    for t in t_seq:
        if not 0.0 < t < 1.0:
            raise ConfigurationError("t values must lie strictly between 0 and 1")
        shrunk = f.eval_batch(X, t * Xi)
        diffs = shrunk - base
        if absolute:
            diffs = np.abs(diffs)
        ratios = diffs / (a + base)
        j = int(np.argmax(ratios))
        estimates.append(float(ratios[j]))
        witness.append({"t": float(t), "x": X[j].tolist(), "xi": Xi[j].tolist(), "ratio": float(ratios[j])})
    return ModulusRecord(list(t_seq), estimates, int(base.size), witness)
