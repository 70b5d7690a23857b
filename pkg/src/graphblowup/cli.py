"""``graphblowup`` command line: build, check, verify-proof, simulate, sweep.

Exit status is 0 whenever a verdict was computed (including "not-met"),
2 for configuration errors and 1 for failures during execution.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .builders import (ProductSpec, cyclic_power, from_edge_list, lattice, metric_for, product,
                       to_edge_list, vertex_label)
from .config import COMMANDS, ConfigError, RunSpec, apply_overrides, emit_config, parse_config
from .hypothesis import HypothesisQuery, check_hypotheses, edge_mass_bound
from .metrics import NaturalMetric, load_metric_table
from .potential import Potential, SpaceProfile, TimeProfile
from .reports import Results, Table, emit_reports
from .simulator import SimConfig, fujita_sweep, run
from .testfn import TestFnParams, bound_ladder, shell_cover_gaps, transition_band_violations

log = logging.getLogger("graphblowup")


class Setup:
    """Graph, metric, base point and potential built from a RunSpec."""

    def __init__(self, spec: RunSpec):
        self.spec = spec
        gs, ms = spec.graph, spec.metric
        origin = None
        if gs.kind == "lattice":
            lat = lattice(gs.N, gs.radius)
            graph, default = lat.graph, lat.euclidean
            origin = (0,) * gs.N
        elif gs.kind == "cyclic":
            graph, default = cyclic_power(gs.m, gs.K)
        elif gs.kind == "product":
            lat = lattice(gs.N, gs.radius)
            right = cyclic_power(gs.m, gs.K)
            prod = product(ProductSpec((lat.graph, lat.euclidean), right, gs.p, gs.measure_rule))
            graph, default = prod.graph, prod.metric
            origin = ((0,) * gs.N, right[0].ids[0])
        else:
            graph = from_edge_list(gs.path)
            default = NaturalMetric(graph)
        if ms.kind in ("default", "product"):
            metric = default
        elif ms.kind == "table":
            metric = load_metric_table(ms.path, graph, samples=ms.samples, seed=spec.run.seed)
        else:
            metric = metric_for(graph, ms.kind)
        self.graph, self.metric = graph, metric
        self.x0 = self._base_point(spec.model.x0, origin)
        p = spec.potential
        self.potential = Potential(
            TimeProfile(p.time, scale=p.time_scale, beta=p.beta, rate=p.rate),
            SpaceProfile(p.space, scale=p.space_scale, gamma=p.gamma))

    def _base_point(self, label, origin):
        g = self.graph
        if label == "origin":
            return origin if origin is not None else g.ids[0]
        for v in g.ids:
            if vertex_label(v) == label:
                return v
        raise ConfigError(f"model.x0: no vertex labelled {label!r}")

    @property
    def thetas(self):
        m = self.spec.model
        t1 = 2.0 * (1.0 + m.alpha) if m.theta1 is None else m.theta1
        t2 = 2.0 if m.theta2 is None else m.theta2
        return t1, t2

    def sim_config(self, **changes) -> SimConfig:
        s = self.spec.simulate
        if s.initial == "constant":
            initial = np.full(self.graph.n, s.amplitude)
        else:
            d = self.metric.from_vertex(self.x0)
            initial = s.amplitude * (d <= s.support)
        kw = dict(sigma=self.spec.model.sigma, initial=initial, t_max=s.t_max,
                  potential=self.potential, dt=s.dt, scheme=s.scheme,
                  blow_up_threshold=s.blow_up_threshold, decay_threshold=s.decay_threshold,
                  boundary_mass_tolerance=s.boundary_mass_tolerance,
                  reaction_limit=s.reaction_limit, record_every=s.record_every,
                  confirm=s.confirm, metric=self.metric, x0=self.x0)
        kw.update(changes)
        return SimConfig(**kw)


def _graph_summary(setup: Setup) -> dict:
    g = setup.graph
    return {
        "name": g.name,
        "vertices": g.n,
        "edges": g.num_edges,
        "truncated": g.truncated,
        "boundary_vertices": int(g.boundary.sum()),
        "metric": type(setup.metric).__name__,
        "jump": setup.metric.jump,
        "edge_mass_C": edge_mass_bound(g),
    }


def do_build(setup: Setup) -> Results:
    return Results("build", _graph_summary(setup), texts={"graph.edges": to_edge_list(setup.graph)})


def do_check(setup: Setup) -> Results:
    spec = setup.spec
    m, c = spec.model, spec.check
    q = HypothesisQuery(setup.graph, setup.metric, setup.x0, alpha=m.alpha, R0=c.R0,
                        sigma=m.sigma, potential=setup.potential, theta1=m.theta1,
                        theta2=m.theta2, radii=c.radii, times=c.times)
    report = check_hypotheses(q)
    cond = report.condition
    table = Table([cond.label, "quantity", "bound", "margin"], cond.rows())
    summary = report.summary()
    summary["graph"] = _graph_summary(setup)
    summary["sigma"], summary["alpha"] = m.sigma, m.alpha
    summary["theta1"], summary["theta2"] = q.theta1, q.theta2
    return Results("hypothesis", summary, tables={"hypothesis": table})


def do_verify(setup: Setup) -> Results:
    spec = setup.spec
    m, v = spec.model, spec.verify
    t1, t2 = setup.thetas
    base = TestFnParams(t1, t2, v.radii[0], setup.x0, s=v.s, alpha=m.alpha)
    points = v.time_points or None
    ladder = bound_ladder(setup.graph, setup.metric, base, v.radii, points)
    columns = ["R", "Cmax_laplacian", "Cmax_time", "violations"]
    rows = [list(r) for r in ladder["rows"]]
    if v.band_check:
        columns.append("band_violations")
        for row in rows:
            p = TestFnParams(t1, t2, row[0], setup.x0, s=v.s, alpha=m.alpha)
            row.append(transition_band_violations(setup.graph, setup.metric, p, points))
    summary = {
        "graph": _graph_summary(setup),
        "theta1": t1, "theta2": t2, "alpha": m.alpha,
        "laplacian_verdict": ladder["laplacian_verdict"],
        "time_verdict": ladder["time_verdict"],
        "shell_cover_gaps": shell_cover_gaps(base),
        "support_violations": int(sum(r[3] for r in rows)),
    }
    return Results("verify_proof", summary, tables={"verify_proof": Table(columns, rows)})


def do_simulate(setup: Setup) -> Results:
    report = run(setup.graph, setup.sim_config())
    rows = list(zip(report.times, report.max_history, report.mass_history,
                    report.boundary_history))
    summary = report.summary()
    summary["graph"] = _graph_summary(setup)
    summary["sigma"] = setup.spec.model.sigma
    return Results("simulate", summary,
                   tables={"trajectory": Table(["t", "sup_u", "mass", "boundary_max"], rows)})


def do_sweep(setup: Setup) -> Results:
    sw = setup.spec.sweep
    result = fujita_sweep(setup.graph, sw.sigmas, sw.amplitudes, setup.sim_config())
    table = Table(["sigma", "amplitude", "outcome", "blow_up_time"], result.rows)
    summary = dict(result.summary)
    summary["graph"] = _graph_summary(setup)
    return Results("sweep", summary, tables={"sweep": table})


COMMAND_FUNCS = {"build": do_build, "check": do_check, "verify-proof": do_verify,
                 "simulate": do_simulate, "sweep": do_sweep}


def execute(spec: RunSpec) -> Results:
    return COMMAND_FUNCS[spec.command](Setup(spec))


def _graph_flag(text: str) -> list[str]:
    """``lattice:N=2,radius=10`` or a path to an edge-list file."""
    kind, sep, rest = text.partition(":")
    if not sep and Path(text).is_file():
        return ["graph.kind=file", f"graph.path={Path(text).resolve()}"]
    items = [f"graph.kind={kind}"]
    items += [f"graph.{kv.strip()}" for kv in rest.split(",") if kv.strip()]
    return items


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="graphblowup",
        description="Nonexistence checks and blow-up simulations on weighted graphs.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", "-c", type=Path, help="sectioned key = value config file")
        p.add_argument("--graph", help="lattice:N=2,radius=20 | cyclic:m=5,K=1 | "
                                       "product:N=1,radius=50,m=5 | path to an edge list")
        p.add_argument("--out", "-o", help="output directory (run.outdir)")
        p.add_argument("--seed", type=int, help="seed for randomised sampling (run.seed)")
        p.add_argument("--set", "-s", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value; may be repeated")
        p.add_argument("--print-config", action="store_true",
                       help="print the resolved config and exit")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = parse_config(args.config) if args.config else RunSpec()
        overrides = [f"run.command={args.command}"]
        if args.graph:
            overrides += _graph_flag(args.graph)
        if args.out:
            overrides.append(f"run.outdir={args.out}")
        if args.seed is not None:
            overrides.append(f"run.seed={args.seed}")
        spec = apply_overrides(spec, overrides + args.set)
    except (ConfigError, OSError) as exc:
        print(f"graphblowup: config error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        sys.stdout.write(emit_config(spec))
        return 0
    try:
        results = execute(spec)
        results.texts.setdefault("run.cfg", emit_config(spec))
        written = emit_reports(results, spec.outdir)
    except ConfigError as exc:
        print(f"graphblowup: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface any execution failure as exit 1
        log.debug("execution failed", exc_info=True)
        print(f"graphblowup: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    verdict = results.summary.get("verdict") or results.summary.get("outcome")
    for path in written:
        print(path)
    if verdict:
        print(f"verdict: {verdict}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
