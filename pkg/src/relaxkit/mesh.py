"""Cube meshes with Kuhn triangulations and piecewise affine grid functions.

Everything downstream works on axis-aligned cubes.  A cube of halfwidth h
around a center c is split into n^d congruent cells, each cell into d!
simplices along its permutation paths, so piecewise affine functions have one
constant (m x d) gradient per simplex.  Nodal values are stored lexicographic
in the lattice multi-index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError, ShapeError


@dataclass(frozen=True)
class CubeSpec:
    """Axis-aligned cube given by center and halfwidth."""

    center: np.ndarray
    halfwidth: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1:
            raise ShapeError("cube center must be a flat coordinate array")
        if not self.halfwidth > 0:
            raise ShapeError("cube halfwidth must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "halfwidth", float(self.halfwidth))

    @property
    def d(self) -> int:
        return self.center.size

    @property
    def side(self) -> float:
        return 2.0 * self.halfwidth

    @property
    def volume(self) -> float:
        return self.side ** self.d

    @property
    def diameter(self) -> float:
        return self.side * math.sqrt(self.d)

    @property
    def corner(self) -> np.ndarray:
        """Lower corner of the cube."""
        return self.center - self.halfwidth

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.halfwidth

    def contains_cube(self, other: "CubeSpec", tol: float = 1e-12) -> bool:
        pad = tol * (1.0 + self.halfwidth)
        return bool(
            np.all(other.corner >= self.corner - pad)
            and np.all(other.upper <= self.upper + pad)
        )


def unit_cell(d: int) -> CubeSpec:
    """The open unit cube ]0,1[^d as a CubeSpec."""
    return CubeSpec(center=np.full(d, 0.5), halfwidth=0.5)


def cube_at(x, eps: float) -> CubeSpec:
    """Cube of side eps centered at x (volume eps^d)."""
    return CubeSpec(center=np.asarray(x, dtype=float), halfwidth=0.5 * eps)


@dataclass
class CubeMesh:
    """Kuhn triangulation of a cube at resolution n.

    Attributes
    ----------
    cube : CubeSpec
    n : int
        Subdivisions per axis; (n+1)^d nodes, n^d * d! simplices.
    nodes : ndarray, shape ((n+1)^d, d)
        Node coordinates, lexicographic in the lattice multi-index.
    simplices : ndarray, shape (nsimp, d+1)
        Node indices per simplex; vertex 0 is the cell corner.
    boundary : ndarray of bool, shape ((n+1)^d,)
        True for nodes on the cube boundary.
    volumes, barycenters, edge_inv :
        Per-simplex volume, barycenter and inverse edge matrix used for
        gradient extraction.
    """

    cube: CubeSpec
    n: int
    nodes: np.ndarray = field(repr=False)
    simplices: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    volumes: np.ndarray = field(repr=False)
    barycenters: np.ndarray = field(repr=False)
    edge_inv: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.cube.d

    @property
    def nnodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def nsimp(self) -> int:
        return self.simplices.shape[0]

    @property
    def cell_width(self) -> float:
        return self.cube.side / self.n

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary


def kuhn_mesh(cube: CubeSpec, n: int) -> CubeMesh:
    """Build the Kuhn mesh of `cube` with n subdivisions per axis.

    Each cell [0,1]^d is split along its permutation paths: for a permutation
    pi the simplex has vertices v_0 = cell corner and v_{k+1} = v_k + e_{pi(k)}.
    That yields d! simplices per cell, all with volume (side/n)^d / d!.
    """
    if n < 1:
        raise ShapeError("mesh resolution n must be >= 1")
    d = cube.d
    corner = cube.corner
    w = cube.side / n

    axes_idx = [np.arange(n + 1)] * d
    lattice = np.stack(np.meshgrid(*axes_idx, indexing="ij"), axis=-1).reshape(-1, d)
    nodes = corner[None, :] + lattice * w
    boundary = np.any((lattice == 0) | (lattice == n), axis=1)

    cells = np.stack(
        np.meshgrid(*([np.arange(n)] * d), indexing="ij"), axis=-1
    ).reshape(-1, d)
    strides = np.array([(n + 1) ** (d - 1 - k) for k in range(d)])

    perm_offsets = []
    for perm in itertools.permutations(range(d)):
        offs = np.zeros((d + 1, d), dtype=int)
        for k, axis in enumerate(perm):
            offs[k + 1] = offs[k]
            offs[k + 1, axis] += 1
        perm_offsets.append(offs)
    perm_offsets = np.array(perm_offsets)  # (d!, d+1, d)

    # cell-major ordering: all d! simplices of a cell are contiguous
    multi = cells[:, None, None, :] + perm_offsets[None, :, :, :]
    simplices = (multi * strides).sum(axis=-1).reshape(-1, d + 1)

    pts = nodes[simplices]  # (nsimp, d+1, d)
    edges = (pts[:, 1:, :] - pts[:, :1, :]).transpose(0, 2, 1)  # (nsimp, d, d), col e = p_e+1 - p_0
    edge_inv = np.linalg.inv(edges)
    volumes = np.abs(np.linalg.det(edges)) / math.factorial(d)
    barycenters = pts.mean(axis=1)

    return CubeMesh(
        cube=cube,
        n=n,
        nodes=nodes,
        simplices=simplices,
        boundary=boundary,
        volumes=volumes,
        barycenters=barycenters,
        edge_inv=edge_inv,
    )


@dataclass
class GridFunction:
    """Nodal values of a piecewise affine map into R^m on a CubeMesh."""

    mesh: CubeMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.mesh.nnodes:
            raise ShapeError(
                f"values must have shape (nnodes, m); got {v.shape} for "
                f"{self.mesh.nnodes} nodes"
            )
        self.values = v

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def scaled(self, t: float) -> "GridFunction":
        return GridFunction(self.mesh, t * self.values)


def gradient(u: GridFunction) -> np.ndarray:
    """Per-simplex constant gradients, shape (nsimp, m, d)."""
    mesh = u.mesh
    diffs = u.values[mesh.simplices[:, 1:]] - u.values[mesh.simplices[:, :1]]
    # diffs: (nsimp, d, m) with axis 1 enumerating edges
    return np.einsum("sem,sed->smd", diffs, mesh.edge_inv)


def interpolate_affine(mesh: CubeMesh, xi, b=None) -> GridFunction:
    """Nodal interpolant of the affine map x -> b + xi (x - corner)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    m = xi.shape[0]
    if xi.shape[1] != mesh.d:
        raise ShapeError(f"xi must be (m, {mesh.d}); got {xi.shape}")
    if b is None:
        b = np.zeros(m)
    b = np.broadcast_to(np.atleast_1d(np.asarray(b, dtype=float)), (m,))
    rel = mesh.nodes - mesh.cube.corner[None, :]
    vals = b[None, :] + rel @ xi.T
    return GridFunction(mesh, vals)


def seminorm(u: GridFunction, p: float) -> float:
    """Gradient seminorm (sum_T |T| |grad u|_F^p)^(1/p)."""
    if not p >= 1:
        raise ShapeError("p must be >= 1")
    g = gradient(u)
    frob = np.sqrt((g * g).sum(axis=(1, 2)))
    return float((u.mesh.volumes * frob ** p).sum() ** (1.0 / p))


def energy(u: GridFunction, density) -> float:
    """Integral over the cube of density(barycenter, gradient).

    `density` is a batched callable (X (N,d), Xi (N,m,d)) -> (N,) and may
    return +inf; any infinite simplex makes the integral +inf.
    """
    g = gradient(u)
    vals = density(u.mesh.barycenters, g)
    if np.any(np.isinf(vals)):
        return math.inf
    return float((u.mesh.volumes * vals).sum())


def point_eval(u: GridFunction, pts) -> np.ndarray:
    """Evaluate the piecewise affine interpolant at points inside the cube."""
    mesh = u.mesh
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != mesh.d:
        raise ShapeError("points must have shape (npts, d)")
    w = mesh.cell_width
    rel = (pts - mesh.cube.corner[None, :]) / w
    if np.any(rel < -1e-9) or np.any(rel > mesh.n + 1e-9):
        raise ResolutionError("point evaluation outside the mesh cube")
    ci = np.clip(np.floor(rel).astype(int), 0, mesh.n - 1)
    loc = np.clip(rel - ci, 0.0, 1.0)  # (npts, d) in the reference cell

    # Kuhn simplex of the cell: sort local coordinates descending; walking the
    # permutation path accumulates the edge differences weighted by loc.
    order = np.argsort(-loc, axis=1, kind="stable")
    strides = np.array([(mesh.n + 1) ** (mesh.d - 1 - k) for k in range(mesh.d)])
    node = (ci * strides).sum(axis=1)
    out = u.values[node].copy()
    rows = np.arange(pts.shape[0])
    for k in range(mesh.d):
        axis = order[:, k]
        nxt = node + strides[axis]
        out += (u.values[nxt] - u.values[node]) * loc[rows, axis][:, None]
        node = nxt
    return out


def restrict(u: GridFunction, mesh: CubeMesh) -> GridFunction:
    """Restrict u onto another mesh by nodal evaluation.

    Exact whenever u is affine or the target nodes lie on u's mesh skeleton
    (dyadic refinements in particular).
    """
    return GridFunction(mesh, point_eval(u, mesh.nodes))


def glue(background: GridFunction, pieces, tol: float = 1e-9) -> GridFunction:
    """Overwrite the background with per-cube pieces.

    Parameters
    ----------
    background : GridFunction
    pieces : iterable of GridFunction
        Each piece mesh must be node-aligned with the background mesh and its
        boundary trace must match the background values there (the pieces
        carry zero boundary relative to the background).

    Returns
    -------
    GridFunction on the background mesh.
    """
    bg = background.mesh
    out = background.values.copy()
    w = bg.cell_width
    strides = np.array([(bg.n + 1) ** (bg.d - 1 - k) for k in range(bg.d)])
    claimed = np.zeros(bg.nnodes, dtype=bool)
    scale = 1.0 + float(np.max(np.abs(background.values), initial=0.0))

    for piece in pieces:
        pm = piece.mesh
        if pm.d != bg.d or piece.m != background.m:
            raise ShapeError("piece and background shapes disagree")
        rel = (pm.nodes - bg.cube.corner[None, :]) / w
        idx = np.rint(rel).astype(int)
        if np.max(np.abs(rel - idx)) > 1e-7 or np.any(idx < 0) or np.any(idx > bg.n):
            raise ResolutionError(
                "piece nodes are not aligned with the background lattice"
            )
        flat = (idx * strides).sum(axis=1)

        mism = np.abs(piece.values[pm.boundary] - out[flat[pm.boundary]])
        if mism.size and mism.max() > tol * scale:
            raise ValueError(
                "piece boundary trace deviates from the background "
                f"(max {mism.max():.3e})"
            )
        inner = flat[pm.interior]
        if np.any(claimed[inner]):
            raise ValueError("pieces overlap in their interiors")
        claimed[inner] = True
        out[flat] = piece.values
    return GridFunction(bg, out)
