"""Meshes, P1 fields and the glue operation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaxkit.mesh import (
    CubeSpec,
    GridFunction,
    cube_at,
    energy,
    glue,
    gradient,
    interpolate_affine,
    kuhn_mesh,
    point_eval,
    restrict,
    seminorm,
    unit_cell,
)


def test_unit_square_single_cell_counts():
    mesh = kuhn_mesh(unit_cell(2), 1)
    assert mesh.nnodes == 4
    assert mesh.nsimp == 2
    assert mesh.volumes.sum() == pytest.approx(1.0, abs=1e-14)


def test_cube_mesh_counts_and_volume():
    # d! simplices per cell: 2^3 cells x 6 = 48
    mesh = kuhn_mesh(unit_cell(3), 2)
    assert mesh.nnodes == 27
    assert mesh.nsimp == 48
    assert mesh.volumes.sum() == pytest.approx(1.0, abs=1e-13)


def test_interval_hat_gradients_and_seminorm():
    mesh = kuhn_mesh(unit_cell(1), 2)
    order = np.argsort(mesh.nodes[:, 0])
    values = np.zeros((mesh.nnodes, 1))
    values[order, 0] = [0.0, 1.0, 0.0]
    u = GridFunction(mesh, values)
    g = gradient(u).reshape(-1)
    assert sorted(g.tolist()) == pytest.approx([-2.0, 2.0])
    assert seminorm(u, 2.0) == pytest.approx(2.0)


def test_cube_at_geometry():
    Q = cube_at([0.5, 0.5], 0.1)
    assert Q.side == pytest.approx(0.1)
    assert Q.volume == pytest.approx(0.01)
    np.testing.assert_allclose(Q.corner, [0.45, 0.45])
    np.testing.assert_allclose(Q.upper, [0.55, 0.55])
    assert unit_cell(2).contains_cube(Q)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(min_value=1, max_value=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
)
def test_affine_interpolation_reproduces_slope(d, coef):
    """P1 interpolation of an affine map has exactly that constant gradient."""
    xi = np.array(coef[:d], dtype=float).reshape(1, d)
    mesh = kuhn_mesh(unit_cell(d), 2)
    u = interpolate_affine(mesh, xi, b=coef[-1])
    g = gradient(u)
    np.testing.assert_allclose(g, np.broadcast_to(xi, g.shape), atol=1e-12)
    pts = mesh.barycenters
    expect = pts @ xi[0] + coef[-1]
    np.testing.assert_allclose(point_eval(u, pts)[:, 0], expect, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(-4, 4), st.integers(min_value=1, max_value=2))
def test_seminorm_is_absolutely_homogeneous(c, d):
    mesh = kuhn_mesh(unit_cell(d), 2)
    rng = np.random.default_rng(7)
    u = GridFunction(mesh, rng.standard_normal((mesh.nnodes, 1)))
    cu = GridFunction(mesh, c * u.values)
    assert seminorm(cu, 2.0) == pytest.approx(abs(c) * seminorm(u, 2.0), abs=1e-9)


def test_energy_matches_squared_seminorm():
    mesh = kuhn_mesh(unit_cell(2), 3)
    rng = np.random.default_rng(3)
    u = GridFunction(mesh, rng.standard_normal((mesh.nnodes, 1)))

    def dens(X, Xi):
        return (Xi**2).sum(axis=(1, 2))

    assert energy(u, dens) == pytest.approx(seminorm(u, 2.0) ** 2, rel=1e-12)


def test_restrict_preserves_affine_fields():
    big = kuhn_mesh(unit_cell(2), 4)
    xi = np.array([[0.3, -0.7]])
    u = interpolate_affine(big, xi, b=0.2)
    sub = kuhn_mesh(CubeSpec(np.array([0.5, 0.5]), 0.25), 2)
    v = restrict(u, sub)
    g = gradient(v)
    np.testing.assert_allclose(g, np.broadcast_to(xi, g.shape), atol=1e-10)


def test_glue_overrides_inside_and_keeps_boundary():
    big = kuhn_mesh(unit_cell(2), 4)
    base = interpolate_affine(big, np.array([[1.0, 0.0]]))
    piece_mesh = kuhn_mesh(CubeSpec(np.array([0.5, 0.5]), 0.25), 2)
    # boundary trace of the piece must match the background trace
    piece = restrict(base, piece_mesh)
    piece.values[piece_mesh.interior] += 0.05
    glued = glue(base, [piece])
    inside = point_eval(glued, piece_mesh.nodes[piece_mesh.interior])
    expect = point_eval(base, piece_mesh.nodes[piece_mesh.interior]) + 0.05
    np.testing.assert_allclose(inside[:, 0], expect[:, 0], atol=1e-9)
    # nodes of the background away from the piece are untouched
    outside = np.abs(big.nodes - 0.5).max(axis=1) > 0.3
    np.testing.assert_allclose(glued.values[outside], base.values[outside])


def test_glue_rejects_mismatched_trace():
    big = kuhn_mesh(unit_cell(2), 4)
    base = interpolate_affine(big, np.array([[1.0, 0.0]]))
    piece_mesh = kuhn_mesh(CubeSpec(np.array([0.5, 0.5]), 0.25), 2)
    piece = restrict(base, piece_mesh)
    piece.values += 1.0  # shifts the trace too
    with pytest.raises(Exception):
        glue(base, [piece])
