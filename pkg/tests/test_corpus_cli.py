"""Corpus entries, their frozen reference facts, and the command line."""

import json
import math
import os

import numpy as np
import pytest

from oracles import double_well, lower_hull_1d
from relaxkit.cli import RunConfig, main
from relaxkit.corpus import build_integrand, corpus_entry, corpus_ids, load_integrand
from relaxkit.envelopes import XiGrid, convex_envelope, lamination_envelope, raw_table
from relaxkit.errors import ConfigurationError
from relaxkit.integrand import SamplingPlan, check_H3, check_coercivity, eval_ext, ruusc_modulus


def test_corpus_lists_eight_entries():
    ids = corpus_ids()
    assert len(ids) == 8
    assert len(set(ids)) == 8
    for eid in ids:
        f = corpus_entry(eid).make()
        assert f.name == eid


def test_unknown_corpus_id_raises():
    with pytest.raises(KeyError):
        corpus_entry("nope")


def test_spec_round_trip_through_a_file(tmp_path):
    for eid in corpus_ids():
        entry = corpus_entry(eid)
        path = tmp_path / f"{eid}.json"
        path.write_text(json.dumps(entry.spec))
        g = load_integrand(str(path))
        f = entry.make()
        rng = np.random.default_rng(1)
        X = f.omega.lo + rng.random((5, f.shape.d)) * (f.omega.hi - f.omega.lo)
        Xi = rng.uniform(-1.5, 1.5, (5, f.shape.m, f.shape.d))
        np.testing.assert_allclose(g.eval_batch(X, Xi), f.eval_batch(X, Xi), atol=1e-13)


def test_malformed_spec_is_rejected():
    with pytest.raises(ConfigurationError):
        build_integrand({"formula": "no-such-formula", "shape": [1, 1]})


# --- reference facts -------------------------------------------------------
# every frozen statement on a corpus entry is re-derived here by the kind of
# evidence it names: 'oracle' facts against the independent oracles module,
# 'identity' facts by direct evaluation, 'analysis' facts by a sampled study.


def test_fact_well_profiles_match_the_hull_oracle():
    f1 = corpus_entry("dw1").make()
    xs = np.linspace(-2.2, 2.2, 1601)
    vals = np.array([eval_ext(f1, [0.5], [[s]]) for s in xs])
    hull = lower_hull_1d(xs, vals)
    profile = np.maximum(0.0, xs**2 - 1.0) ** 2
    np.testing.assert_allclose(hull, profile, atol=2e-5)

    # dw2 restricted to a line through 0 reduces to the same scalar profile
    f2 = corpus_entry("dw2").make()
    direction = np.array([[0.6, 0.8]])
    line_vals = np.array([eval_ext(f2, [0.5, 0.5], s * direction) for s in xs])
    hull2 = lower_hull_1d(xs, line_vals)
    np.testing.assert_allclose(hull2, profile, atol=2e-5)


def test_fact_vector_wells_laminate_to_zero_at_the_midpoint():
    entry = corpus_entry("vdw2")
    fact = next(f for f in entry.facts if f.provenance == "oracle")
    f = entry.make()
    grid = XiGrid.centered(f.shape, 1.0, 3)
    lam = lamination_envelope(raw_table(f, grid))
    mid = lam.values[tuple(s // 2 for s in lam.values.shape)]
    assert mid == pytest.approx(fact.data["value"], abs=1e-10)


def test_fact_midpoint_constants_hold_for_every_entry():
    plan = SamplingPlan(n=2048, seed=41, xi_halfwidth=2.0)
    for eid in corpus_ids():
        entry = corpus_entry(eid)
        for fact in entry.facts:
            if "midpoint" not in fact.statement or "C" not in fact.data:
                continue
            rep = check_H3(entry.make(), fact.data["C"], plan)
            assert rep.passed, f"{eid}: {rep.worst}"


def test_fact_box_entry_is_finite_exactly_on_the_closed_box():
    entry = corpus_entry("boxq1")
    hw = next(f.data["halfwidth"] for f in entry.facts if "box" in f.statement)
    f = entry.make()
    for s in np.linspace(-hw, hw, 9):
        assert math.isfinite(eval_ext(f, [0.5], [[s]]))
    for s in (hw + 1e-6, -hw - 1e-6, 2.0):
        assert eval_ext(f, [0.5], [[s]]) == math.inf
    # convex on the box: the sampled hull reproduces the raw values
    xs = np.linspace(-hw, hw, 201)
    vals = xs**2
    np.testing.assert_allclose(lower_hull_1d(xs, vals), vals, atol=1e-12)


def test_fact_box_edge_radial_limit():
    entry = corpus_entry("boxq1")
    fact = next(f for f in entry.facts if "radial" in f.statement)
    f = entry.make()
    ts = np.array([0.9, 0.99, 0.999, 0.9999])
    along = np.array([eval_ext(f, [0.5], [[t * 1.0]]) for t in ts])
    assert np.all(np.isfinite(along))
    assert along[-1] == pytest.approx(fact.data["edge_value"], abs=1e-3)


def test_fact_scaling_modulus_vanishes_for_the_double_well():
    f = corpus_entry("dw1").make()
    plan = SamplingPlan(n=1024, seed=19, xi_halfwidth=2.0)
    rec = ruusc_modulus(f, [0.9, 0.99, 0.999], plan, absolute=True)
    assert rec.estimates == sorted(rec.estimates, reverse=True)
    assert rec.estimates[-1] <= 1e-2


def test_fact_linear_modulus_decay_for_the_variable_exponent_entry():
    f = corpus_entry("pgrow1").make()
    plan = SamplingPlan(n=2048, seed=23, xi_halfwidth=2.0)
    t_seq = [0.9, 0.99, 0.999]
    rec = ruusc_modulus(f, t_seq, plan, absolute=True)
    ratios = [est / (1.0 - t) for est, t in zip(rec.estimates, t_seq)]
    assert max(ratios) <= 4.0  # bounded slope: decay no slower than K (1 - t)


def test_fact_coercivity_constant_of_the_variable_exponent_entry():
    entry = corpus_entry("pgrow1")
    c = next(f.data["c"] for f in entry.facts if "coercive" in f.statement)
    f = entry.make()
    plan = SamplingPlan(n=2048, seed=31, xi_halfwidth=2.0)
    assert check_coercivity(f, c, f.growth.p, plan, px=f.growth.px).passed


def test_fact_sandwich_bounds_for_the_modulated_well():
    entry = corpus_entry("gsand1")
    fact = next(f for f in entry.facts if f.provenance == "oracle")
    alpha, beta = fact.data["alpha"], fact.data["beta"]
    f = entry.make()
    rng = np.random.default_rng(37)
    X = rng.random((512, 1))
    Xi = rng.uniform(-2.5, 2.5, (512, 1, 1))
    vals = f.eval_batch(X, Xi)
    G = double_well(Xi[:, 0, 0])
    assert np.all(vals >= alpha * G - 1e-12)
    assert np.all(vals <= beta * (1.0 + G) + 1e-12)


def test_fact_convex_entries_have_trivial_envelopes():
    for eid in ("quad1", "pow41"):
        f = corpus_entry(eid).make()
        grid = XiGrid.centered(f.shape, 2.0, 41)
        raw = raw_table(f, grid)
        np.testing.assert_allclose(convex_envelope(raw).values, raw.values, atol=1e-10)
        np.testing.assert_allclose(lamination_envelope(raw).values, raw.values, atol=1e-10)


# --- command line ----------------------------------------------------------


def _run(args):
    return main(args)


def test_cli_envelope_of_a_convex_entry_exits_clean(tmp_path):
    out = str(tmp_path / "env")
    assert _run(["envelope", "--integrand", "quad1", "--mesh-n", "8", "--out", out]) == 0
    rows = [r.split(",") for r in open(os.path.join(out, "envelope.csv"))]
    assert rows[0] == "xi_0,raw,convex,laminate,zl,zl_hat\n".split(",")
    body = {r[0]: r for r in rows[1:]}
    for key, row in body.items():
        assert row[1] == row[2], "convex must equal raw on a convex entry"
    assert os.path.getsize(os.path.join(out, "envelope.png")) > 0
    meta = json.load(open(os.path.join(out, "envelope.json")))
    rc = RunConfig.from_dict(meta["config"])  # verbatim round trip
    assert rc.integrand == "quad1" and rc.mesh_n == 8


def test_cli_relax_on_the_double_well_zero_slope(tmp_path):
    out = str(tmp_path / "rx")
    code = _run(["relax", "--integrand", "dw1", "--mesh-n", "8",
                 "--depths", "0,1", "--out", out])
    assert code == 0
    meta = json.load(open(os.path.join(out, "relax.json")))
    assert meta["gap"] < 5e-2
    assert os.path.exists(os.path.join(out, "history.png"))


def test_cli_check_writes_reports_and_figures(tmp_path):
    out = str(tmp_path / "chk")
    assert _run(["check", "--integrand", "pgrow1", "--out", out]) == 0
    header = open(os.path.join(out, "hypotheses.csv")).readline()
    assert header == "hypothesis,samples,worst,passed\n"
    assert os.path.getsize(os.path.join(out, "modulus.png")) > 0


def test_cli_derive_produces_density_tables(tmp_path):
    out = str(tmp_path / "drv")
    code = _run(["derive", "--integrand", "quad1", "--mesh-n", "8",
                 "--eps-seq", "0.2,0.1", "--out", out])
    assert code == 0
    assert open(os.path.join(out, "omega.csv")).readline() == "delta,sup_ratio\n"


def test_cli_replay_is_byte_identical(tmp_path):
    out1 = str(tmp_path / "a")
    out2 = str(tmp_path / "b")
    assert _run(["envelope", "--integrand", "dw1", "--mesh-n", "8", "--npts", "9",
                 "--eps-seq", "0.4", "--seed", "7", "--out", out1]) == 0
    cfg = json.load(open(os.path.join(out1, "envelope.json")))["config"]
    cfg_path = tmp_path / "replay.json"
    cfg_path.write_text(json.dumps(cfg))
    assert _run(["envelope", "--config", str(cfg_path), "--out", out2]) == 0
    a = open(os.path.join(out1, "envelope.csv"), "rb").read()
    b = open(os.path.join(out2, "envelope.csv"), "rb").read()
    assert a == b


def test_cli_exit_codes(tmp_path):
    out = str(tmp_path / "x")
    assert _run(["envelope", "--integrand", "nosuch", "--out", out]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(["check", "--config", str(bad), "--out", out]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"command": "check", "integrand": "dw1",
                                   "integrand_spec": {}, "bogus": 1}))
    assert _run(["check", "--config", str(unknown), "--out", out]) == 2
    # a negative tolerance turns the ordering margin into a violation
    assert _run(["envelope", "--integrand", "quad1", "--mesh-n", "8",
                 "--tol", "-1", "--out", out]) == 3


def test_cli_worker_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("RELAXKIT_WORKERS", "2")
    out = str(tmp_path / "w")
    assert _run(["envelope", "--integrand", "dw1", "--mesh-n", "8", "--npts", "5",
                 "--eps-seq", "0.4", "--out", out]) == 0
    meta = json.load(open(os.path.join(out, "envelope.json")))
    assert meta["config"]["workers"] == 2
