"""Command-line interface: ``asyncons {analyze,simulate,montecarlo,reproduce}``.

Output files (agent numbers are 1-based, floats are written with 17
significant digits):

``analysis.json``
    :meth:`ConvergenceReport.to_dict` plus ``topology``.
``trajectory.csv``
    ``step,norm,x1,...,xn`` for ``simulate``; ``sync_trajectory.csv`` for
    the synchronous reference of an ensemble.
``norms.csv``
    ``step,norm,sample_id`` for every ensemble member.
``consensus.csv``
    ``sample_id,seed,consensus_step,consensus_value`` (``-1``/``nan`` when a
    sample never reached consensus).
``summary.json``
    ``config``, ``ensemble``, ``sync`` and ``discrepancy`` sections.

With ``--format json`` the tables are written as JSON lists of records
instead of CSV.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import analyze, discrepancy_report
from .exceptions import TopologyError
from .sim import CONSENSUS_TOL, DELAY_KINDS, DelayModel, monte_carlo, run_async, run_sync
from .topology import load_topology, read_topology, row_normalize

OUT_ENV = "ASYNCONS_OUT"
EXAMPLES = {
    "example1": dict(x0=[3.0, 2.0, 1.0, 3.0, 5.0], tau_d=5, samples=300),
    "example2": dict(x0=[3.0, 2.0, 1.0, 3.0, 5.0], tau_d=5, samples=300),
}
DEFAULT_STEPS = 1000

TRAJECTORY_HEADER = ["step", "norm"]
NORMS_HEADER = ["step", "norm", "sample_id"]
CONSENSUS_HEADER = ["sample_id", "seed", "consensus_step", "consensus_value"]


class CLIError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def example_topology_text(name: str) -> str:
    return resources.files("asyncons").joinpath(f"data/{name}.csv").read_text()


def _write_table(path: Path, header, rows, form):
    if form == "json":
        records = [dict(zip(header, r)) for r in rows]
        path = path.with_suffix(".json")
        path.write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")
        return path
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _trajectory_rows(t):
    for k, (x, nrm) in enumerate(zip(t.states, t.norm_track)):
        yield [k, nrm, *x]


def _consensus_dict(c):
    if c is None:
        return None
    return {"step": c.step, "value": c.value, "spread": c.spread}


def _parse_x0(text):
    if text is None:
        return None
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise CLIError(f"--x0 must be a comma-separated list of numbers, got {text!r}")


def _load_F(args):
    if getattr(args, "example", None):
        topo = load_topology(example_topology_text(args.example))
        return row_normalize(topo), f"builtin:{args.example}"
    if not args.topology:
        raise CLIError("--topology is required")
    path = Path(args.topology)
    if not path.is_file():
        raise CLIError(f"topology file not found: {path}")
    try:
        topo = read_topology(path)
    except TopologyError as exc:
        raise CLIError(f"{path}: {exc}")
    return row_normalize(topo), str(args.topology)


def _out_dir(args, sub=None) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    if sub:
        out = out / sub
    out.mkdir(parents=True, exist_ok=True)
    return out


def _x0_for(F, args):
    x0 = args.x0
    if x0 is None:
        raise CLIError("--x0 is required")
    if len(x0) != F.shape[0]:
        raise CLIError(f"--x0 has {len(x0)} entries but the topology has {F.shape[0]} agents")
    return x0


def cmd_analyze(args):
    F, source = _load_F(args)
    x0 = _parse_x0(args.x0) if isinstance(args.x0, str) else args.x0
    if x0 is not None and len(x0) != F.shape[0]:
        raise CLIError(f"--x0 has {len(x0)} entries but the topology has {F.shape[0]} agents")
    report = analyze(F, x0)
    out = _out_dir(args)
    data = {"topology": source, **report.to_dict()}
    path = _write_json(out / "analysis.json", data)
    leaders = ", ".join(str(i) for i in data["leaders"]) or "none"
    print(f"agents: {F.shape[0]}  leaders: {leaders}")
    print(f"spanning tree: {report.has_spanning_tree}  "
          f"leader form: {report.is_m_rooted_leader_form}")
    if report.rho_margin is not None:
        print(f"rho(|F - F*|) = {report.rho_margin:.6f}  "
              f"async reachable: {report.async_reachable}")
    print(f"sync/async limits coincide (leader condition): {report.theorem1_applies}")
    if report.predicted_sync_value is not None:
        print(f"predicted consensus value: {report.predicted_sync_value:.12g}")
    for note in report.notes:
        print(f"note: {note}")
    print(f"wrote {path}")
    return 0


def cmd_simulate(args):
    F, _ = _load_F(args)
    x0 = _x0_for(F, args)
    if args.delay_kind == "none":
        t = run_sync(F, x0, args.steps, args.ctol)
    else:
        dm = DelayModel(args.delay_kind, args.tau_d, args.seed)
        t = run_async(F, x0, dm, args.steps, args.ctol)
    out = _out_dir(args)
    header = TRAJECTORY_HEADER + [f"x{i + 1}" for i in range(F.shape[0])]
    path = _write_table(out / "trajectory.csv", header, _trajectory_rows(t), args.format)
    c = t.consensus
    print(f"consensus: step {c.step}, value {c.value:.12g}" if c else "no consensus reached")
    print(f"wrote {path}")
    return 0


def _ensemble(args, F, x0, out, source):
    dm = DelayModel(args.delay_kind, args.tau_d, args.seed)
    ens = monte_carlo(F, x0, dm, args.samples, args.steps, args.ctol, workers=args.workers)
    sync = run_sync(F, x0, args.steps, args.ctol)
    header = TRAJECTORY_HEADER + [f"x{i + 1}" for i in range(F.shape[0])]
    _write_table(out / "sync_trajectory.csv", header, _trajectory_rows(sync), args.format)

    def norm_rows():
        for s, track in enumerate(ens.norm_tracks):
            for k, v in enumerate(track):
                yield [k, v, s]

    _write_table(out / "norms.csv", NORMS_HEADER, norm_rows(), args.format)
    rows = [[s, sd, int(k), v] for s, (sd, k, v)
            in enumerate(zip(ens.seeds, ens.consensus_steps, ens.values))]
    _write_table(out / "consensus.csv", CONSENSUS_HEADER, rows, args.format)

    sync_c = sync.consensus
    summary = {
        "config": {
            "topology": source,
            "x0": list(x0),
            "tau_d": args.tau_d,
            "delay_kind": args.delay_kind,
            "seed": args.seed,
            "samples": args.samples,
            "steps": args.steps,
            "ctol": args.ctol,
        },
        "ensemble": ens.to_dict(),
        "sync": _consensus_dict(sync_c),
        "discrepancy": discrepancy_report(sync_c.value, ens) if sync_c else None,
    }
    _write_json(out / "summary.json", summary)
    print(f"{ens.samples} samples, {ens.non_converged} without consensus")
    print(f"async consensus values: mean {ens.mean:.12g}  std {ens.std:.3g}  "
          f"range [{ens.min:.12g}, {ens.max:.12g}]")
    if sync_c:
        d = summary["discrepancy"]
        print(f"sync value {sync_c.value:.12g}; max |async - sync| = "
              f"{d['max_abs_deviation']:.3g}; fraction within {d['within_tol']:g}: "
              f"{d['fraction_within']:.3f}")
    print(f"wrote {out}")
    return 0


def cmd_montecarlo(args):
    F, source = _load_F(args)
    x0 = _x0_for(F, args)
    return _ensemble(args, F, x0, _out_dir(args), source)


def cmd_reproduce(args):
    preset = EXAMPLES[args.example]
    for key, value in preset.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    F, source = _load_F(args)
    return _ensemble(args, F, args.x0, _out_dir(args, args.example), source)


def _common(p, need_topology=True):
    if need_topology:
        p.add_argument("--topology", metavar="PATH", help="topology file (CSV/whitespace or JSON)")
    p.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--config", metavar="PATH", help="JSON file whose keys mirror the flags")


def _sim_flags(p, defaults=True):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--x0", type=_parse_x0, default=None, help="initial state, e.g. 3,2,1,3,5")
    p.add_argument("--tau-d", type=int, default=d(0), help="maximum delay")
    p.add_argument("--delay-kind", choices=("none", "uniform", "fixed", "shared"),
                   default="uniform")
    p.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--ctol", type=float, default=CONSENSUS_TOL)
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="asyncons",
        description="Synchronous vs. asynchronous consensus on directed topologies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structural and spectral convergence report")
    _common(p)
    p.add_argument("--x0", default=None, help="optional initial state for predictions")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="one synchronous or asynchronous run")
    _common(p)
    _sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="ensemble of asynchronous runs")
    _common(p)
    _sim_flags(p)
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("reproduce", help="rerun a bundled example ensemble")
    p.add_argument("example", choices=sorted(EXAMPLES))
    _common(p, need_topology=False)
    _sim_flags(p, defaults=False)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_reproduce)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    path = Path(known.config)
    if not path.is_file():
        raise CLIError(f"config file not found: {path}")
    cfg = json.loads(path.read_text(encoding="utf-8"))
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    if isinstance(cfg.get("x0"), str):
        cfg["x0"] = _parse_x0(cfg["x0"])
    args = parser.parse_args(argv)
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    for k, v in cfg.items():
        if k not in explicit:
            setattr(args, k, v)
    return args


def _validate(args):
    if getattr(args, "samples", None) is not None and args.samples < 1:
        raise CLIError("--samples must be at least 1")
    if getattr(args, "steps", None) is not None and args.steps < 1:
        raise CLIError("--steps must be at least 1")
    if getattr(args, "tau_d", None) is not None and args.tau_d < 0:
        raise CLIError("--tau-d must be nonnegative")
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        raise CLIError("--seed must be an unsigned 64-bit integer")
    kind = getattr(args, "delay_kind", None)
    if kind is not None and kind not in DELAY_KINDS:
        raise CLIError(f"unknown delay kind {kind!r}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        _validate(args)
        return args.func(args)
    except (CLIError, TopologyError, OSError, json.JSONDecodeError) as exc:
        print(f"asyncons: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
