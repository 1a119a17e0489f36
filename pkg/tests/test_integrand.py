"""Integrand evaluation, sampled hypothesis checks and the radial modulus."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import double_well
from relaxkit.corpus import corpus_entry, corpus_ids
from relaxkit.integrand import (
    SamplingPlan,
    check_H3,
    check_coercivity,
    check_lebesgue_pts,
    cube_average,
    eval_ext,
    ruusc_modulus,
    sup_on_box,
)


def _make(eid):
    return corpus_entry(eid).make()


def test_extended_evaluation_inside_and_outside_the_gradient_box():
    f = _make("boxq1")
    assert eval_ext(f, [0.5], [[0.7]]) == pytest.approx(0.49)
    assert eval_ext(f, [0.5], [[1.0]]) == pytest.approx(1.0)
    assert eval_ext(f, [0.5], [[1.2]]) == math.inf


def test_double_well_matches_frozen_profile():
    f = _make("dw1")
    for s in np.linspace(-2, 2, 17):
        assert eval_ext(f, [0.5], [[s]]) == pytest.approx(double_well(s), abs=1e-12)


def test_batched_and_scalar_evaluation_agree():
    rng = np.random.default_rng(5)
    for eid in corpus_ids():
        f = _make(eid)
        m, d = f.shape.m, f.shape.d
        X = f.omega.lo + rng.random((6, d)) * (f.omega.hi - f.omega.lo)
        Xi = rng.uniform(-1.5, 1.5, (6, m, d))
        batch = f.eval_batch(X, Xi)
        single = [eval_ext(f, X[i], Xi[i]) for i in range(6)]
        np.testing.assert_allclose(batch, single, atol=1e-12)


def test_sup_on_box_of_the_double_well():
    # max of (s^2 - 1)^2 over |s| <= 2 sits at the endpoints
    f = _make("dw1")
    assert sup_on_box(f, [0.5], 2.0, resolution=9) == pytest.approx(9.0)


def test_coercivity_reports_pass_where_declared():
    plan = SamplingPlan(n=1024, seed=11, xi_halfwidth=2.0)
    for eid in corpus_ids():
        f = _make(eid)
        g = f.growth
        if g.c is None:
            continue
        rep = check_coercivity(f, g.c, g.p, plan, px=g.px)
        assert rep.passed, f"{eid}: worst margin {rep.worst}"


def test_midpoint_growth_reports_pass_with_entry_constants():
    plan = SamplingPlan(n=1024, seed=13, xi_halfwidth=2.0)
    for eid in corpus_ids():
        f = _make(eid)
        rep = check_H3(f, f.growth.C, plan)
        assert rep.passed, f"{eid}: worst residual {rep.worst}"


def test_midpoint_check_fails_for_an_undersized_constant():
    # near xi = zeta = 0 the double well forces a ratio of about 1/3
    f = _make("dw1")
    plan = SamplingPlan(n=2048, seed=17, xi_halfwidth=2.0)
    assert not check_H3(f, 0.01, plan).passed


def test_cube_average_of_x_dependent_entry_matches_quadrature():
    f = _make("pgrow1")
    from relaxkit.mesh import cube_at

    Q = cube_at([0.3], 0.2)
    xi = np.array([[0.8]])
    avg = cube_average(f, Q, xi, resolution=64)
    xs = 0.2 + 0.2 * (np.arange(4096) + 0.5) / 4096
    direct = np.mean(f.eval_batch(xs[:, None], np.broadcast_to(xi, (4096, 1, 1))))
    assert avg == pytest.approx(direct, rel=1e-4)


def test_lebesgue_averages_settle_for_every_entry():
    for eid in corpus_ids():
        f = _make(eid)
        x = 0.5 * (f.omega.lo + f.omega.hi)
        xi = np.zeros((f.shape.m, f.shape.d))
        xi[0, 0] = 0.5
        rec = check_lebesgue_pts(f, x, xi, [0.2, 0.1, 0.05, 0.025])
        assert rec.converged, f"{eid}: deviations {rec.deviations}"
        assert rec.deviations[-1] <= rec.deviations[0] + 1e-12


def test_radial_modulus_matches_closed_form_at_its_witness():
    """For |xi|^2 the relative radial increment is (t^2-1)|xi|^2/(1+|xi|^2)."""
    f = _make("quad1")
    plan = SamplingPlan(n=512, seed=3, xi_halfwidth=2.0)
    t_seq = [0.5, 0.9, 0.99]
    rec = ruusc_modulus(f, t_seq, plan, absolute=True)
    for i, t in enumerate(t_seq):
        w = np.asarray(rec.witness[i]["xi"])
        r2 = float((w**2).sum())
        expect = (1.0 - t * t) * r2 / (1.0 + r2)
        assert rec.estimates[i] == pytest.approx(expect, rel=1e-10)
        # global bound: the relative increment never exceeds 1 - t^2
        assert rec.estimates[i] <= (1.0 - t * t) + 1e-12


def test_signed_modulus_of_monotone_radial_entries_is_nonpositive():
    plan = SamplingPlan(n=512, seed=29, xi_halfwidth=2.0)
    for eid in ("quad1", "pow41", "pgrow1"):
        rec = ruusc_modulus(_make(eid), [0.9, 0.99], plan)
        assert max(rec.estimates) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-1.8, 1.8))
def test_scaling_toward_zero_never_leaves_the_constraint_box(t, s):
    # radial scaling keeps boxq1 arguments feasible, so values stay finite
    f = _make("boxq1")
    xi = np.clip(s, -1.0, 1.0)
    assert math.isfinite(eval_ext(f, [0.5], [[t * xi]]))
