"""Command line front end.

Five subcommands drive the toolkit over the built-in corpus or a spec file:

``check``
    sampled hypothesis reports (coercivity, midpoint growth, small-cube
    averages) and the radial modulus of the raw integrand.
``envelope``
    raw / convex / lamination / cell / radial-cell tables on a shared grid.
``relax``
    representation vs glued upper bound report for an affine datum.
``derive``
    set-function density ratios and the small-cube density estimate for the
    Dirichlet set function.
``verify``
    the full numbered acceptance battery.

Every command writes delimited output with a header row plus a JSON metadata
file carrying the verbatim run configuration, and renders matplotlib figures
next to the delimited files.  Reruns with an identical configuration produce
byte-identical CSV bodies; wall-clock stamps only ever appear in the JSON
metadata.

Exit codes: 0 success, 1 crash, 2 usage or config error, 3 a checked
inequality failed by more than its slack.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import traceback
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import acceptance
from .cellsolve import OptimizerConfig, default_t_seq
from .corpus import build_integrand, corpus_entry, corpus_ids
from .envelopes import (
    XiGrid,
    convex_envelope,
    lamination_envelope,
    raw_table,
    zl_hat_table,
    zl_table,
)
from .errors import ConfigurationError, RelaxkitError, ToleranceError
from .integrand import (
    Integrand,
    SamplingPlan,
    check_H3,
    check_coercivity,
    check_lebesgue_pts,
    ruusc_modulus,
)
from .mesh import CubeSpec, interpolate_affine, kuhn_mesh
from .plots import (
    plot_density_ratios,
    plot_depth_history,
    plot_envelope_curves,
    plot_modulus,
)
from .relaxation import RepresentConfig, relax_report
from .setfun import dirichlet_setfun, omega_ratio, set_derivative

__all__ = ["RunConfig", "main"]


@dataclass
class RunConfig:
    """Replayable description of one command invocation.

    The resolved integrand spec is embedded so a saved config reproduces the
    run even if the original spec file moves.  Identical configs produce
    byte-identical CSV bodies on the same build.
    """

    command: str
    integrand: str
    integrand_spec: dict
    out: str = "runs"
    mesh_n: int = 16
    npts: int = 21
    halfwidth: float = 2.0
    slope: Optional[list] = None
    depths: list = field(default_factory=lambda: [0, 1, 2])
    eps_seq: list = field(default_factory=lambda: [0.4, 0.2, 0.1])
    t_seq: list = field(default_factory=lambda: [float(t) for t in default_t_seq(8)])
    seed: int = 0
    tol: Optional[float] = None
    workers: int = 4

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown config fields: {sorted(extra)}")
        missing = {"command", "integrand", "integrand_spec"} - set(d)
        if missing:
            raise ConfigurationError(f"config is missing fields: {sorted(missing)}")
        return cls(**d)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _write_csv(path: str, header: Sequence[str], rows) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _write_json(path: str, payload: dict, rc: RunConfig) -> str:
    body = {"config": rc.to_dict(), "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"), **payload}
    with open(path, "w") as fh:
        json.dump(_jsonable(body), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _resolve_integrand(arg: str):
    """Corpus id or JSON spec path -> (Integrand, spec dict, defaults)."""
    if os.path.exists(arg):
        with open(arg) as fh:
            try:
                spec = json.load(fh)
            except json.JSONDecodeError as ex:
                raise ConfigurationError(f"cannot parse integrand spec {arg}: {ex}") from ex
        if "corpus" in spec:
            entry = corpus_entry(spec["corpus"])
            return entry.make(), entry.spec, dict(entry.defaults)
        return build_integrand(spec), spec, {}
    try:
        entry = corpus_entry(arg)
    except KeyError as ex:
        raise ConfigurationError(
            f"unknown integrand {arg!r}; corpus ids: {', '.join(corpus_ids())}"
        ) from ex
    return entry.make(), entry.spec, dict(entry.defaults)


def _default_npts(f: Integrand) -> int:
    k = f.shape.m * f.shape.d
    return {1: 21, 2: 5}.get(k, 3)


def _domain_cube(f: Integrand) -> CubeSpec:
    lo, hi = f.omega.lo, f.omega.hi
    side = float((hi - lo).max())
    return CubeSpec(0.5 * (lo + hi), 0.5 * side)


def _center(f: Integrand) -> np.ndarray:
    return 0.5 * (f.omega.lo + f.omega.hi)


def _parse_floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as ex:
        raise ConfigurationError(f"cannot parse number list {text!r}") from ex


def _build_config(args) -> RunConfig:
    if args.config is not None:
        with open(args.config) as fh:
            try:
                rc = RunConfig.from_dict(json.load(fh))
            except json.JSONDecodeError as ex:
                raise ConfigurationError(f"cannot parse config {args.config}: {ex}") from ex
        rc.command = args.command
    else:
        name = args.integrand if args.integrand is not None else "dw1"
        f, spec, defaults = _resolve_integrand(name)
        eps0 = defaults.get("eps0", 0.4)
        levels = defaults.get("eps_levels", 3)
        rc = RunConfig(
            command=args.command,
            integrand=name,
            integrand_spec=spec,
            mesh_n=defaults.get("mesh_n", 16),
            npts=_default_npts(f),
            halfwidth=defaults.get("grid_halfwidth", 2.0),
            depths=list(defaults.get("depths", [0, 1, 2])),
            eps_seq=[eps0 * 0.5**j for j in range(levels)],
            t_seq=[float(t) for t in default_t_seq(defaults.get("t_levels", 8))],
        )
    if args.integrand is not None and args.config is not None:
        rc.integrand = args.integrand
        _, rc.integrand_spec, _ = _resolve_integrand(args.integrand)
    for name in ("out", "mesh_n", "seed", "tol", "npts", "halfwidth"):
        val = getattr(args, name)
        if val is not None:
            setattr(rc, name, val)
    if args.depths is not None:
        rc.depths = [int(v) for v in _parse_floats(args.depths)]
    if args.eps_seq is not None:
        rc.eps_seq = _parse_floats(args.eps_seq)
    if args.t_seq is not None:
        rc.t_seq = _parse_floats(args.t_seq)
    if args.slope is not None:
        rc.slope = _parse_floats(args.slope)
    try:
        rc.workers = max(1, int(os.environ.get("RELAXKIT_WORKERS", str(rc.workers))))
    except ValueError:
        pass
    if not rc.eps_seq or not rc.t_seq:
        raise ConfigurationError("eps-seq and t-seq must be nonempty")
    return rc


def _slope_matrix(rc: RunConfig, f: Integrand, fallback: float = 0.0) -> np.ndarray:
    m, d = f.shape.m, f.shape.d
    if rc.slope is None:
        xi = np.zeros((m, d))
        xi[0, 0] = fallback
        return xi
    vals = np.asarray(rc.slope, dtype=float)
    if vals.size != m * d:
        raise ConfigurationError(f"slope needs {m * d} entries for shape {m}x{d}, got {vals.size}")
    return vals.reshape(m, d)


def _cmd_check(rc: RunConfig, f: Integrand) -> None:
    plan = SamplingPlan(n=2048, seed=rc.seed, xi_halfwidth=rc.halfwidth)
    g = f.growth
    reports = []
    if g.c is not None:
        reports.append(check_coercivity(f, g.c, g.p, plan, px=g.px))
    reports.append(check_H3(f, g.C, plan))
    rows = [(r.hypothesis, r.samples, r.worst, r.passed) for r in reports]
    x = _center(f)
    xi = _slope_matrix(rc, f, fallback=0.5)
    leb = check_lebesgue_pts(f, x, xi, rc.eps_seq)
    rows.append(("lebesgue-average", len(rc.eps_seq), float(leb.deviations[-1]), leb.converged))
    mod = ruusc_modulus(f, rc.t_seq, plan)
    _write_csv(
        os.path.join(rc.out, "hypotheses.csv"),
        ["hypothesis", "samples", "worst", "passed"],
        rows,
    )
    _write_csv(
        os.path.join(rc.out, "modulus.csv"),
        ["t", "delta"],
        zip(mod.t_seq, mod.estimates),
    )
    png = plot_modulus(
        os.path.join(rc.out, "modulus.png"),
        mod.t_seq,
        mod.estimates,
        f"radial modulus of {f.name}",
    )
    _write_json(
        os.path.join(rc.out, "check.json"),
        {
            "reports": [
                {"hypothesis": r.hypothesis, "samples": r.samples, "worst": r.worst, "passed": r.passed, "witness": r.witness}
                for r in reports
            ],
            "lebesgue": {"deviations": list(leb.deviations), "converged": leb.converged},
            "modulus": {"t_seq": list(mod.t_seq), "estimates": list(mod.estimates)},
            "figures": [png],
        },
        rc,
    )
    bad = [r.hypothesis for r in reports if not r.passed]
    if bad:
        raise ToleranceError(f"hypothesis checks failed: {', '.join(bad)}")


def _cmd_envelope(rc: RunConfig, f: Integrand) -> None:
    grid = XiGrid.centered(f.shape, rc.halfwidth, rc.npts)
    x = _center(f)
    cfg = OptimizerConfig(seed=rc.seed)
    raw = raw_table(f, grid, x=x if f.depends_on_x else None)
    conv = convex_envelope(raw)
    lam = lamination_envelope(raw)
    zl = zl_table(f, grid, x, rc.eps_seq, rc.mesh_n, cfg=cfg, workers=rc.workers)
    zhat = zl_hat_table(f, grid, x, rc.eps_seq, rc.mesh_n, t_seq=rc.t_seq, cfg=cfg, workers=rc.workers)
    pts = grid.points()
    k = pts.shape[1]
    tables = [("raw", raw), ("convex", conv), ("laminate", lam), ("zl", zl), ("zl_hat", zhat)]
    header = [f"xi_{j}" for j in range(k)] + [name for name, _ in tables]
    flat = [tab.values.reshape(-1) for _, tab in tables]
    rows = (tuple(pts[i]) + tuple(col[i] for col in flat) for i in range(pts.shape[0]))
    _write_csv(os.path.join(rc.out, "envelope.csv"), header, rows)

    # center slice along the first grid axis for the figure
    axis = grid.axes()[0]
    mid = tuple(s // 2 for s in raw.values.shape[1:])
    curves = {name: np.array([tab.values[(i,) + mid] for i in range(axis.size)]) for name, tab in tables}
    png = plot_envelope_curves(
        os.path.join(rc.out, "envelope.png"), axis, curves, "xi_0", f"envelopes of {f.name}"
    )

    scale = 1.0 + np.where(np.isfinite(raw.values), raw.values, 0.0)
    tol = rc.tol if rc.tol is not None else 5e-2
    worst = -math.inf
    chain = [conv.values, zl.values, lam.values, raw.values]
    for lo, hi in zip(chain, chain[1:]):
        ok = np.isfinite(hi)
        if np.any(ok & ~np.isfinite(lo)):
            worst = math.inf
            break
        if np.any(ok):
            worst = max(worst, float(((lo[ok] - hi[ok]) / scale[ok]).max()))
    _write_json(
        os.path.join(rc.out, "envelope.json"),
        {
            "grid": {"halfwidth": rc.halfwidth, "npts": rc.npts, "points": int(pts.shape[0])},
            "ordering_defect": worst,
            "ordering_tol": tol,
            "figures": [png],
        },
        rc,
    )
    if worst > tol:
        raise ToleranceError(f"envelope ordering violated by {worst:.3g} (tol {tol:.3g})")


def _cmd_relax(rc: RunConfig, f: Integrand) -> None:
    O = _domain_cube(f)
    mesh = kuhn_mesh(O, rc.mesh_n)
    u = interpolate_affine(mesh, _slope_matrix(rc, f))
    rep = RepresentConfig(
        eps0=rc.eps_seq[0],
        eps_levels=len(rc.eps_seq),
        n=rc.mesh_n,
        t_levels=len(rc.t_seq),
        cfg=OptimizerConfig(seed=rc.seed),
        workers=rc.workers,
    )
    gap_tol = rc.tol if rc.tol is not None else 5e-2
    report = relax_report(f, u, O, depth_seq=rc.depths, n=rc.mesh_n, rep=rep, gap_tol=gap_tol)
    hist = report.history
    _write_csv(
        os.path.join(rc.out, "history.csv"),
        ["depth", "value", "profile"],
        zip(hist["depths"], hist["values"], hist["profile"]),
    )
    png = plot_depth_history(
        os.path.join(rc.out, "history.png"),
        hist["depths"],
        hist["values"],
        hist["profile"],
        f"depth refinement for {f.name}",
    )
    _write_json(
        os.path.join(rc.out, "relax.json"),
        {
            "representation": report.representation,
            "upper": report.upper,
            "gap": report.gap,
            "history": hist,
            "tolerances": report.tolerances,
            "verdicts": report.verdicts,
            "figures": [png],
        },
        rc,
    )
    bad = [k for k, ok in report.verdicts.items() if not ok]
    if bad:
        raise ToleranceError(f"relaxation report failed: {', '.join(bad)}")


def _cmd_derive(rc: RunConfig, f: Integrand) -> None:
    xi = _slope_matrix(rc, f, fallback=0.5)
    cfg = OptimizerConfig(seed=rc.seed)
    md = dirichlet_setfun(f, xi, n=rc.mesh_n, cfg=cfg)
    O = _domain_cube(f)
    rng = np.random.default_rng(rc.seed)
    margin = 0.25 * O.side
    pts = [np.asarray(O.center, dtype=float)]
    for _ in range(2):
        pts.append(O.corner + margin + rng.random(O.d) * (O.side - 2 * margin))
    recs = [set_derivative(md, x, rc.eps_seq) for x in pts]
    rows = []
    for rec in recs:
        for j, eps in enumerate(rec.eps):
            rows.append(tuple(rec.x) + (eps, rec.ratios[j], rec.m_minus, rec.m_plus))
    _write_csv(
        os.path.join(rc.out, "density.csv"),
        [f"x_{j}" for j in range(O.d)] + ["eps", "ratio", "m_minus", "m_plus"],
        rows,
    )
    deltas = [e for e in rc.eps_seq]
    om = omega_ratio(md, deltas, O, seed=rc.seed)
    _write_csv(
        os.path.join(rc.out, "omega.csv"),
        ["delta", "sup_ratio"],
        zip(om.delta_seq, om.per_delta),
    )
    png = plot_density_ratios(
        os.path.join(rc.out, "density.png"), recs, f"density ratios for {f.name}"
    )
    _write_json(
        os.path.join(rc.out, "derive.json"),
        {
            "records": [rec.to_dict() for rec in recs],
            "omega": {"value": om.value, "per_delta": list(om.per_delta), "diverging": om.diverging},
            "figures": [png],
        },
        rc,
    )
    slack = rc.tol if rc.tol is not None else OptimizerConfig().tolerance
    for rec in recs:
        last = rec.ratios[-1]
        lo, hi = rec.m_minus, rec.m_plus
        if last < lo - slack * (1 + abs(last)) or last > hi + slack * (1 + abs(last)):
            raise ToleranceError(
                f"density ratio {last:.6g} escapes its placement bracket [{lo:.6g}, {hi:.6g}]"
            )


def _cmd_verify(rc: RunConfig, ids: Optional[Sequence[int]] = None) -> None:
    results = acceptance.run_all(ids=ids, workers=rc.workers)
    for r in results:
        print(r.line())
    _write_csv(
        os.path.join(rc.out, "verify.csv"),
        ["criterion", "title", "passed", "metric", "tol", "seconds"],
        ((r.cid, r.title, r.passed, r.metric, r.tol, round(r.seconds, 2)) for r in results),
    )
    _write_json(
        os.path.join(rc.out, "verify.json"),
        {"results": [{"cid": r.cid, "title": r.title, "passed": r.passed, "metric": r.metric, "tol": r.tol, "seconds": r.seconds, "details": r.details} for r in results]},
        rc,
    )
    failed = [r.cid for r in results if not r.passed]
    if failed:
        raise ToleranceError(f"acceptance criteria failed: {failed}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="relaxkit",
        description="numerical relaxation toolkit for extended-real variational integrands",
    )
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "check": "sampled hypothesis reports for an integrand",
        "envelope": "raw/convex/lamination/cell envelope tables",
        "relax": "representation vs glued upper bound report",
        "derive": "set-function density ratios",
        "verify": "run the numbered acceptance battery",
    }
    for name, txt in helps.items():
        q = sub.add_parser(name, help=txt)
        q.add_argument("--integrand", help="corpus id or JSON spec path")
        q.add_argument("--config", help="saved RunConfig JSON; flags override")
        q.add_argument("--out", help="output directory (default runs/<command>)")
        q.add_argument("--mesh-n", dest="mesh_n", type=int, help="cells per cube axis")
        q.add_argument("--depths", help="comma list of refinement depths")
        q.add_argument("--eps-seq", dest="eps_seq", help="comma list of cube scales")
        q.add_argument("--t-seq", dest="t_seq", help="comma list of radial factors in (0,1)")
        q.add_argument("--seed", type=int, help="seed for all sampling")
        q.add_argument("--tol", type=float, help="tolerance override for asserted inequalities")
        q.add_argument("--slope", help="comma list, row-major m x d affine slope")
        q.add_argument("--npts", type=int, help="grid points per axis")
        q.add_argument("--halfwidth", type=float, help="grid halfwidth")
        if name == "verify":
            q.add_argument("--criteria", help="comma list of criterion numbers (default all)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = _build_config(args)
        if args.out is None:
            rc.out = os.path.join("runs", rc.command)
        os.makedirs(rc.out, exist_ok=True)
        if rc.command == "verify":
            ids = None
            if getattr(args, "criteria", None):
                ids = [int(v) for v in _parse_floats(args.criteria)]
            _cmd_verify(rc, ids)
        else:
            f = build_integrand(rc.integrand_spec)
            {
                "check": _cmd_check,
                "envelope": _cmd_envelope,
                "relax": _cmd_relax,
                "derive": _cmd_derive,
            }[rc.command](rc, f)
    except ToleranceError as ex:
        print(f"tolerance violation: {ex}", file=sys.stderr)
        return 3
    except ConfigurationError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 2
    except (RelaxkitError, OSError, ValueError, KeyError) as ex:
        print(f"error: {type(ex).__name__}: {ex}", file=sys.stderr)
        traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
