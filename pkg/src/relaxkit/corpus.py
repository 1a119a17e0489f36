"""Built-in integrand family with reference facts and spec-file loading.

Each entry is a plain data recipe (shape, working box, effective domain,
growth metadata, formula id + parameters) from which the Integrand is
constructed; the same recipe format loads from JSON files, so file-defined
integrands and built-ins go through one code path.  Formulas are drawn from
the registry below; arbitrary expressions are out of scope.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .integrand import (Box, DomainSpec, GrowthProfile, Integrand, MatrixShape,
                        unit_box)
from .envelopes import XiGrid


def _frob_sq(Xi: np.ndarray) -> np.ndarray:
    return (Xi * Xi).sum(axis=(1, 2))


def _double_well(params: dict):
    def fn(X, Xi):
        return (_frob_sq(Xi) - 1.0) ** 2
    return fn, False


def _vector_double_well(params: dict):
    s = float(params.get("s", 1.0))

    def fn(X, Xi):
        A = np.zeros(Xi.shape[1:])
        A[0, 0] = s
        da = ((Xi - A) ** 2).sum(axis=(1, 2))
        db = ((Xi + A) ** 2).sum(axis=(1, 2))
        return da * db
    return fn, False


def _quadratic(params: dict):
    def fn(X, Xi):
        return _frob_sq(Xi)
    return fn, False


def _power(params: dict):
    p = float(params["p"])
    if p < 1:
        raise ConfigurationError("power formula needs p >= 1")

    def fn(X, Xi):
        return _frob_sq(Xi) ** (p / 2.0)
    return fn, False


def px_exponent(p0: float) -> Callable[[np.ndarray], np.ndarray]:
    """The variable exponent p0 + sin^2(pi x_1)."""
    def px(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return p0 + np.sin(math.pi * X[:, 0]) ** 2
    return px


def _px_power(params: dict):
    p0 = float(params.get("p0", 2.0))
    px = px_exponent(p0)

    def fn(X, Xi):
        return _frob_sq(Xi) ** (np.asarray(px(X)) / 2.0)
    return fn, True


def _scaled_well(params: dict):
    amp = float(params.get("amp", 0.5))

    def fn(X, Xi):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        b = 1.0 + amp * np.sin(math.pi * X[:, 0]) ** 2
        return b * (1.0 + (_frob_sq(Xi) - 1.0) ** 2)
    return fn, True


FORMULAS = {
    "double_well": _double_well,
    "vector_double_well": _vector_double_well,
    "quadratic": _quadratic,
    "power": _power,
    "px_power": _px_power,
    "scaled_well": _scaled_well,
}


def build_integrand(spec: dict) -> Integrand:
    """Construct an Integrand from a plain recipe tree.

    Keys: name, shape {m, d}, omega {lo, hi}, domain {kind, ...},
    growth {p, c, C, alpha, beta}, formula {id, params}.
    """
    try:
        shape = MatrixShape(int(spec["shape"]["m"]), int(spec["shape"]["d"]))
        fid = spec["formula"]["id"]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"malformed integrand recipe: {e}") from e
    if fid not in FORMULAS:
        raise ConfigurationError(
            f"unknown formula id {fid!r}; known: {sorted(FORMULAS)}")
    params = dict(spec["formula"].get("params", {}))
    fn, depends_on_x = FORMULAS[fid](params)

    om = spec.get("omega")
    omega = Box(np.asarray(om["lo"], dtype=float), np.asarray(om["hi"], dtype=float)) \
        if om else unit_box(shape.d)

    dom = dict(spec.get("domain", {"kind": "full"}))
    kind = dom.pop("kind")
    if kind == "full":
        domain = DomainSpec.full()
    elif kind == "box":
        domain = DomainSpec.box(float(dom["halfwidth"]))
    elif kind == "ball":
        domain = DomainSpec.ball(float(dom["radius"]))
    else:
        raise ConfigurationError(f"unknown domain kind {kind!r}")

    g = dict(spec.get("growth", {}))
    px = px_exponent(float(params.get("p0", 2.0))) if fid == "px_power" else None
    growth = GrowthProfile(
        p=g.get("p"), c=g.get("c"), C=g.get("C"),
        alpha=g.get("alpha"), beta=g.get("beta"), px=px,
    )
    return Integrand(name=spec.get("name", fid), shape=shape, domain=domain,
                     omega=omega, formula=fn, growth=growth,
                     depends_on_x=depends_on_x)


def load_integrand(path: str) -> Integrand:
    """Load an integrand from a JSON recipe file or a corpus reference.

    A file holding {"corpus": "<id>"} resolves to the built-in entry;
    anything else must be a full recipe tree as for build_integrand.
    """
    with open(path) as fh:
        spec = json.load(fh)
    if set(spec) == {"corpus"}:
        return corpus_entry(spec["corpus"]).make()
    return build_integrand(spec)


@dataclass(frozen=True)
class ReferenceFact:
    """A checkable statement about an entry with its justification route.

    provenance is one of "identity" (holds by definition or a one-line
    argument), "oracle" (re-derived by an independent oracle in the test
    suite), or "analysis" (derived bound whose constants the tests fit).
    """

    statement: str
    provenance: str
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in ("identity", "oracle", "analysis"):
            raise ConfigurationError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class CorpusEntry:
    """One built-in integrand: recipe, reference facts, default scales."""

    id: str
    description: str
    spec: dict
    facts: tuple
    defaults: dict

    def make(self) -> Integrand:
        return build_integrand(self.spec)

    def grid(self, npts: Optional[int] = None, halfwidth: Optional[float] = None) -> XiGrid:
        shape = MatrixShape(self.spec["shape"]["m"], self.spec["shape"]["d"])
        return XiGrid.centered(
            shape,
            halfwidth or self.defaults["grid_halfwidth"],
            npts or self.defaults["grid_npts"],
        )


def _entry(id, description, spec, facts, **defaults) -> CorpusEntry:
    base = {"mesh_n": 32, "grid_halfwidth": 2.0, "grid_npts": 401,
            "eps0": 0.4, "eps_levels": 3, "t_levels": 8, "depths": [0, 1, 2, 3]}
    base.update(defaults)
    spec = dict(spec, name=id)
    return CorpusEntry(id, description, spec, tuple(facts), base)


_ENTRIES = [
    _entry(
        "dw1", "scalar double well (xi^2 - 1)^2 on the line",
        {"shape": {"m": 1, "d": 1},
         "formula": {"id": "double_well"},
         "growth": {"p": 4, "C": 2, "alpha": 1.0, "beta": 1.0}},
        [ReferenceFact("the convex envelope profile is max(0, xi^2 - 1)^2",
                       "oracle", {"profile": "truncated_well"}),
         ReferenceFact("midpoint bound holds with C = 2 and strict margin",
                       "identity", {"C": 2}),
         ReferenceFact("the scaling modulus vanishes as t -> 1", "analysis", {})],
    ),
    _entry(
        "dw2", "scalar double well (|xi|^2 - 1)^2 in the plane",
        {"shape": {"m": 1, "d": 2},
         "formula": {"id": "double_well"},
         "growth": {"p": 4, "C": 2, "alpha": 1.0, "beta": 1.0}},
        [ReferenceFact("restricted to any line through 0 the convex envelope "
                       "is the scalar truncated-well profile", "oracle",
                       {"profile": "truncated_well"}),
         ReferenceFact("midpoint bound holds with C = 2", "identity", {"C": 2})],
        mesh_n=24, grid_npts=41,
    ),
    _entry(
        "vdw2", "vectorial double well |xi - A|^2 |xi + A|^2, A = e1 (x) e1",
        {"shape": {"m": 2, "d": 2},
         "formula": {"id": "vector_double_well", "params": {"s": 1.0}},
         "growth": {"p": 4, "C": 2, "alpha": 1.0, "beta": 1.0}},
        [ReferenceFact("the wells differ by a rank-one matrix, so the "
                       "lamination envelope vanishes at the midpoint 0",
                       "oracle", {"xi": 0.0, "value": 0.0}),
         ReferenceFact("midpoint bound holds with C = 2", "identity", {"C": 2})],
        mesh_n=12, grid_npts=9,
    ),
    _entry(
        "boxq1", "quadratic with box constraint: |xi|^2 plus the indicator of [-1, 1]",
        {"shape": {"m": 1, "d": 1},
         "domain": {"kind": "box", "halfwidth": 1.0},
         "formula": {"id": "quadratic"},
         "growth": {"p": 2, "c": 1.0, "C": 1}},
        [ReferenceFact("finite exactly on the closed box; convex there",
                       "identity", {"halfwidth": 1.0}),
         ReferenceFact("the radial limit at the box edge equals the edge "
                       "value: lim f(t xi) = |xi|^2 at |xi| = 1", "oracle",
                       {"edge_value": 1.0})],
        grid_halfwidth=1.5, grid_npts=301,
    ),
    _entry(
        "pgrow1", "variable-exponent power |xi|^(2 + sin^2(pi x1))",
        {"shape": {"m": 1, "d": 1},
         "formula": {"id": "px_power", "params": {"p0": 2.0}},
         "growth": {"p": 2, "c": 1.0, "C": 1}},
        [ReferenceFact("the scaling modulus decays at most linearly in 1 - t",
                       "analysis", {"model": "K * (1 - t)"}),
         ReferenceFact("coercive with constant 1 against its own exponent",
                       "identity", {"c": 1.0})],
    ),
    _entry(
        "gsand1", "sandwiched well (1 + 0.5 sin^2(pi x1)) (1 + (xi^2 - 1)^2)",
        {"shape": {"m": 1, "d": 1},
         "formula": {"id": "scaled_well", "params": {"amp": 0.5}},
         "growth": {"p": 4, "C": 9, "alpha": 1.0, "beta": 1.5}},
        [ReferenceFact("pointwise between G and 1.5 (1 + G) with G the frozen "
                       "double well", "oracle", {"alpha": 1.0, "beta": 1.5}),
         ReferenceFact("midpoint bound holds with C = 9", "identity", {"C": 9})],
    ),
    _entry(
        "quad1", "convex control |xi|^2",
        {"shape": {"m": 1, "d": 1},
         "formula": {"id": "quadratic"},
         "growth": {"p": 2, "c": 1.0, "C": 1}},
        [ReferenceFact("convex: every envelope table equals the raw table",
                       "identity", {})],
    ),
    _entry(
        "pow41", "convex control |xi|^4",
        {"shape": {"m": 1, "d": 1},
         "formula": {"id": "power", "params": {"p": 4.0}},
         "growth": {"p": 4, "c": 1.0, "C": 1}},
        [ReferenceFact("convex: every envelope table equals the raw table",
                       "identity", {})],
    ),
]

_BY_ID = {e.id: e for e in _ENTRIES}


def corpus() -> list:
    """All built-in entries, in a stable order."""
    return list(_ENTRIES)


def corpus_ids() -> list:
    return [e.id for e in _ENTRIES]


def corpus_entry(id: str) -> CorpusEntry:
    try:
        return _BY_ID[id]
    except KeyError:
        raise KeyError(f"unknown integrand id {id!r}; known: {corpus_ids()}") from None
