"""Representation, upper-bound constructions and scaling extensions."""

import math

import numpy as np
import pytest

from relaxkit.corpus import corpus_entry
from relaxkit.integrand import RuUscWeight
from relaxkit.mesh import energy, interpolate_affine, kuhn_mesh, unit_cell
from relaxkit.relaxation import (
    RepresentConfig,
    cutoff_compare,
    direct_upper,
    extend_ruusc,
    functional_modulus,
    relax_report,
    represent,
    scalar_check,
)


def _make(eid):
    return corpus_entry(eid).make()


def _affine(O, n, slope):
    return interpolate_affine(kuhn_mesh(O, n), slope)


def test_representation_of_a_convex_entry_is_the_plain_integral():
    f = _make("quad1")
    O = unit_cell(1)
    u = _affine(O, 16, [[0.7]])
    # fine radial ladder so the t -> 1 bias is below the assertion scale
    val = represent(f, u, O, RepresentConfig(eps_levels=2, n=16, t_levels=26))
    assert val == pytest.approx(0.49 * O.volume, abs=1e-6)


def test_representation_relaxes_a_double_well_datum_to_zero():
    f = _make("dw1")
    O = unit_cell(1)
    u = _affine(O, 16, [[0.5]])
    val = represent(f, u, O, RepresentConfig(eps_levels=2, n=16))
    assert 0.0 <= val <= 5e-3


def test_direct_upper_bound_profile_improves_with_depth():
    f = _make("dw1")
    O = unit_cell(1)
    u = _affine(O, 16, [[0.5]])
    val, rec = direct_upper(f, u, O, (0, 1, 2), 16)
    assert val <= min(rec.values) + 1e-9
    assert all(b <= a + 1e-9 for a, b in zip(rec.profile, rec.profile[1:]))
    # the glued competitor realizes the family sum and beats the datum
    assert rec.raw_energy == pytest.approx(rec.values[-1], abs=1e-3)
    datum = energy(u, f.eval_batch)  # f(0.5) = (0.25 - 1)^2
    assert datum == pytest.approx(0.5625 * O.volume, rel=1e-9)
    assert rec.raw_energy <= datum + 1e-9


def test_cutoff_comparison_controls_the_ring_contribution():
    f = _make("dw1")
    O = unit_cell(1)
    u = _affine(O, 16, [[0.5]])
    out = cutoff_compare(f, u, np.array([0.5]), 0.4, n=16)
    assert out["holds"]
    assert out["ring"] >= 0.0
    assert out["lhs"] <= out["rhs"] + 1e-9


def test_extension_is_finite_on_the_constraint_edge_and_infinite_outside():
    f = _make("boxq1")
    O = unit_cell(1)
    rep = RepresentConfig(eps_levels=1, n=16, t_levels=10)
    edge_val, edge = extend_ruusc(f, _affine(O, 16, [[1.0]]), [0.5, 0.9, 0.99], O, rep=rep)
    assert math.isfinite(edge_val)
    assert edge_val == pytest.approx(1.0 * O.volume, abs=5e-2)
    out_val, outside = extend_ruusc(f, _affine(O, 16, [[1.1]]), [0.5, 0.9, 0.99], O, rep=rep)
    assert math.isinf(out_val)
    assert outside.reason


def test_scalar_route_agrees_with_the_biconjugate_integral():
    f = _make("dw1")
    O = unit_cell(1)
    u = _affine(O, 16, [[0.5]])
    rec = scalar_check(f, u, O, n=16)
    assert rec.agree
    assert rec.upper_ok
    assert rec.rep_dev <= rec.tol_rep


def test_functional_modulus_of_a_convex_entry_stays_nonpositive():
    f = _make("quad1")
    O = unit_cell(1)
    D = [_affine(O, 8, [[0.4]]), _affine(O, 8, [[0.9]])]
    fm = functional_modulus(f, D, RuUscWeight(), [0.9, 0.99], O,
                            rep=RepresentConfig(eps_levels=1, n=8, t_levels=6))
    assert fm.n_members == 2
    assert max(fm.deltas) <= 1e-2


def test_relax_report_verdicts_on_a_well_posed_run():
    f = _make("dw1")
    O = unit_cell(1)
    u = _affine(O, 16, [[0.0]])
    report = relax_report(f, u, O, depth_seq=(0, 1, 2), n=16)
    assert report.verdicts["bracket_ok"]
    assert report.verdicts["finite"]
    assert report.gap <= report.tolerances["gap_tol"]
