"""Command-line entry point: ``skillgov <subcommand> [flags]``.

Exit codes: 0 success, 1 replay reference mismatch, 2 usage error,
3 fixture/schema error, 4 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bdist
from .fixtures import FixtureError, load_fixture
from .probes import (
    FixtureRunner,
    SimRunner,
    column_means,
    paired_swap_matrix,
    subset_swap_analysis,
    write_csv,
)
from .replay import replay
from .selectors import (
    PARETO_FIELDS,
    FixtureTruth,
    SelectorError,
    SimTruth,
    benchmark,
    default_specs,
    pareto_export,
)
from .simworld import PRESETS, WorldConfig, generate_trajectory, scenario_preset
from .skilllib import LibraryError, update_events

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_FIXTURE, EXIT_INVARIANT = 0, 1, 2, 3, 4

TRACE_FIELDS = ("event_id", "selector", "branch", "verdict", "oracle_verdict", "cost")


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


def _margins(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--m expects a comma-separated list of numbers, got {text!r}") from None
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("margins must be >= 0")
    return vals


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fixture", help="fixture file or shipped name (t6, t1)")
    common.add_argument("--scenario", help=f"simulator preset: {', '.join(PRESETS)}")
    common.add_argument("--world", help="WorldConfig JSON file (instead of --scenario)")
    common.add_argument("--n", type=_positive, default=30, help="episodes per cell (default 30)")
    common.add_argument("--b", type=_positive, default=5000, help="resamples for bootstrap/permutation (default 5000)")
    common.add_argument("--tau", type=float, default=5.0, help="oracle/selector tolerance in pp (default 5)")
    common.add_argument("--m", type=_margins, default=[10.0, 20.0, 30.0], help="Hybrid margins, comma-separated (default 10,20,30)")
    common.add_argument("--seed", type=int, default=0, help="base seed")
    common.add_argument("--out", default="skillgov-out", help="output directory")

    p = argparse.ArgumentParser(prog="skillgov", description="Skill-update governance laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("probe-atomic", parents=[common], help="atomic-quality probe of every ECM")

    sm = sub.add_parser("swap-matrix", parents=[common], help="paired single-phase swap matrix")
    sm.add_argument("--phase", default="reach", help="phase name, or 'all'")

    ss = sub.add_parser("subset-swap", parents=[common], help="all 2^K swap-sets for one version pair")
    ss.add_argument("--primary", required=True)
    ss.add_argument("--alt", required=True)
    ss.add_argument("--focal", default="reach")

    bm = sub.add_parser("benchmark", parents=[common], help="selector oracle-match benchmark")
    bm.add_argument("--oracle-mode", choices=("success", "reward"), default="success")
    bm.add_argument("--shared-revalidation", action="store_true", help="FullReval reuses the study episode pool instead of fresh draws")

    bd = sub.add_parser("bdist", parents=[common], help="behavioral-distance and mechanism metrics")
    bd.add_argument("--phase", default="reach")
    bd.add_argument("--episodes", type=_positive, default=30)
    bd.add_argument("--logs", nargs="*", default=[], metavar="VERSION=PATH", help="read trajectory logs instead of simulating")
    bd.add_argument("--dump-logs", action="store_true", help="write simulated logs as trajectory CSV files")

    sub.add_parser("replay", parents=[common], help="re-run the analysis over a published fixture")

    rp = sub.add_parser("report", parents=[common], help="aggregate benchmark outputs into a Pareto table")
    rp.add_argument("inputs", nargs="+", help="directories holding benchmark_report.json")
    return p


# -- helpers ---------------------------------------------------------------

def _world(args) -> WorldConfig:
    if args.world:
        return WorldConfig.load(args.world).with_seed(args.seed) if args.seed else WorldConfig.load(args.world)
    name = args.scenario or "dominant"
    if name not in PRESETS:
        raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(PRESETS)}")
    return scenario_preset(name, base_seed=args.seed)


def _runner(args):
    if args.fixture and (args.scenario or args.world):
        raise UsageError("give either --fixture or --scenario/--world, not both")
    if args.fixture:
        fx = load_fixture(args.fixture)
        if args.n != fx.n:
            raise UsageError(f"fixture holds N={fx.n}; pass --n {fx.n}")
        return FixtureRunner(fx), FixtureTruth(fx)
    cfg = _world(args)
    return SimRunner(cfg), cfg


def _out(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _table(header: Sequence[str], rows: Sequence[Sequence], out=None) -> None:
    out = out or sys.stdout
    cells = [[str(h) for h in header]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for k, r in enumerate(cells):
        print("  ".join(c.rjust(w) for c, w in zip(r, widths)), file=out)
        if k == 0:
            print("  ".join("-" * w for w in widths), file=out)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False, default=str) + "\n")


# -- subcommands -------------------------------------------------------------

def cmd_probe_atomic(args) -> int:
    runner, _ = _runner(args)
    lib = runner.library
    rows = []
    for ph in lib.phases:
        for v in lib.versions:
            r = runner.atomic(lib.ecm(ph, v), args.n)
            rows.append({"phase": ph.name, "version": v, "successes": r.successes, "n": r.n, "rate": f"{r.pct:.1f}"})
    write_csv(_out(args) / "atomic.csv", rows, ("phase", "version", "successes", "n", "rate"))
    _table(["phase", *lib.versions], [
        [ph.name, *(f"{r['successes']}/{r['n']} ({r['rate']}%)" for r in rows if r["phase"] == ph.name)]
        for ph in lib.phases
    ])
    return EXIT_OK


def cmd_swap_matrix(args) -> int:
    runner, _ = _runner(args)
    phases = runner.library.phases if args.phase == "all" else [runner.phase(args.phase)]
    out = _out(args)
    for ph in phases:
        m = paired_swap_matrix(runner, ph, None, args.n)
        write_csv(out / f"swap_matrix_{ph.name}.csv", m.rows())
        cs = column_means(m)
        print(f"{ph.name} paired swap matrix (success %, rows = primary, columns = swapped-in)")
        grid = m.pct_grid()
        _table(["primary", *(f"swap={v}" for v in m.versions)],
               [[p, *(f"{x:.1f}" for x in row)] for p, row in zip(m.versions, grid)]
               + [["col. mean", *(f"{x:.1f}" for x in cs.means)]])
        print(f"column spread {cs.spread:.1f} pp\n")
    return EXIT_OK


def cmd_subset_swap(args) -> int:
    runner, _ = _runner(args)
    if isinstance(runner, FixtureRunner):
        raise FixtureError("subset-swap needs per-subset composition data; fixtures only hold single-phase swaps")
    part = subset_swap_analysis(runner, args.primary, args.alt, args.focal, args.n)
    write_csv(_out(args) / f"subset_{args.primary}_{args.alt}.csv", part.rows(runner.library.phases))
    print(f"pair ({args.primary}, {args.alt}), focal phase {part.focal.name}")
    _table(["group", "mean %"], [
        [f"{part.focal.name} in swap-set", f"{part.group_in:.1f}"],
        [f"{part.focal.name} not in swap-set", f"{part.group_out:.1f}"],
        ["delta (pp)", f"{part.delta_pp:+.1f}"],
    ])
    return EXIT_OK


def _write_benchmark(out: Path, report, extra: dict | None = None) -> None:
    write_csv(out / "pareto.csv", pareto_export(report), PARETO_FIELDS)
    write_csv(out / "trace.csv", report.trace_rows(), TRACE_FIELDS)
    d = report.to_dict()
    if extra:
        d.update(extra)
    _dump_json(out / "benchmark_report.json", d)


def _print_benchmark(report) -> None:
    _table(["selector", "oracle match", "95% CI", "cost", "fallbacks"], [
        [s.name, f"{s.match_count}/{len(s.matches)} ({s.match_pct:.1f}%)", s.ci.fmt(), f"{s.cost_pct:.1f}%", s.fallbacks]
        for s in report.selectors
    ])
    for pc in report.pairs:
        t = pc.table
        print(f"\n{pc.a} vs {pc.b}: both {t.both_correct}, {pc.a}-only {t.a_only}, {pc.b}-only {t.b_only}, neither {t.neither}")
        print(f"McNemar exact p = {pc.mcnemar_p:.4f}; cluster permutation p = {pc.cluster_p:.4f} "
              f"({len(pc.cluster_diffs)} clusters: {pc.split})")


def _check_report(report) -> None:
    names = {s.name: s for s in report.selectors}
    if "Naive" in names and "Freeze" in names:
        if names["Naive"].match_count + names["Freeze"].match_count != len(report.events):
            raise InvariantError("Naive and Freeze match counts do not sum to the event count")


def cmd_benchmark(args) -> int:
    runner, source = _runner(args)
    if isinstance(runner, SimRunner):
        runner.fresh_revalidation = not args.shared_revalidation
        truth = SimTruth(source, mode=args.oracle_mode)
    else:
        truth = source
    lib = runner.library
    events = update_events(lib.versions, lib.phases)
    report = benchmark(default_specs(args.m, args.tau), events, truth, runner, args.seed, N=args.n, B=args.b, tau=args.tau)
    _check_report(report)
    _write_benchmark(_out(args), report, {"source": args.fixture or args.world or args.scenario or "dominant"})
    print(f"{len(events)} update events, tau = {args.tau:g} pp, N = {args.n}")
    _print_benchmark(report)
    return EXIT_OK


def cmd_bdist(args) -> int:
    out = _out(args)
    cfg = _world(args)
    ph = cfg.library.phase(args.phase)
    thetas = {v: cfg.profile(cfg.library.ecm(ph, v)).theta for v in cfg.versions}
    if args.logs:
        logs = {}
        for spec in args.logs:
            v, _, path = spec.partition("=")
            if not path:
                raise UsageError(f"--logs expects VERSION=PATH, got {spec!r}")
            logs[v] = bdist.read_trajectories(path)
    else:
        logs = {v: [generate_trajectory(cfg, cfg.library.ecm(ph, v), i) for i in range(args.episodes)] for v in cfg.versions}
        if args.dump_logs:
            for v, ls in logs.items():
                bdist.write_trajectories(out / f"traj_{ph.name}_{v}.csv", ls)
    dm = bdist.pairwise_distances(logs)
    mean_l2 = dm.mean_offdiag()
    hand = bdist.handoff_stats({v: np.stack([t.end_state for t in ls]) for v, ls in logs.items()})
    smooth = {v: float(np.mean([bdist.smoothness(t) for t in ls])) for v, ls in logs.items()}
    plen = {v: float(np.mean([bdist.path_length(t) for t in ls])) for v, ls in logs.items()}
    rows = [
        {"ecm": f"{v}-{ph.name}", "theta": f"{thetas.get(v, float('nan')):.3f}", "mean_l2": f"{mean_l2[v]:.4f}",
         "smoothness": f"{smooth[v]:.4f}", "path_length": f"{plen[v]:.4f}",
         "width": f"{hand[v].width:.4f}", "shift": f"{hand[v].shift:.4f}"}
        for v in logs
    ]
    fields = ("ecm", "theta", "mean_l2", "smoothness", "path_length", "width", "shift")
    write_csv(out / f"bdist_{ph.name}.csv", rows, fields)
    _table(fields, [[r[f] for f in fields] for r in rows])
    dominant = max((v for v in logs if v in thetas), key=lambda v: thetas[v])
    r_l2, tie = bdist.dominance_rank(mean_l2, dominant, "descending")
    r_sm, _ = bdist.dominance_rank(smooth, dominant, "ascending")
    print(f"\nhighest-theta ECM {dominant}-{ph.name}: rank {r_l2} of {len(logs)} by mean pairwise L2"
          f"{' (tied)' if tie else ''}; rank {r_sm} by smoothness")
    return EXIT_OK


def cmd_replay(args) -> int:
    fx = load_fixture(args.fixture or "t6")
    if args.n != fx.n:
        raise UsageError(f"fixture holds N={fx.n}; pass --n {fx.n}")
    res = replay(fx, default_specs(args.m, args.tau), args.tau, B=args.b, seed=args.seed)
    _check_report(res.report)
    out = _out(args)
    for ph, m in res.matrices.items():
        write_csv(out / f"swap_matrix_{ph}.csv", m.rows())
    _write_benchmark(out, res.report, {"source": fx.task})
    write_csv(out / "replay_comparison.csv", [
        {"name": c.name, "computed": c.computed, "reference": c.reference, "tolerance": c.tolerance, "status": c.status}
        for c in res.comparisons
    ], ("name", "computed", "reference", "tolerance", "status"))
    _dump_json(out / "replay_analysis.json", res.analysis)

    print(f"replay of {fx.task} (N = {fx.n}, tau = {args.tau:g} pp)\n")
    for ph, m in res.matrices.items():
        cs = column_means(m)
        print(f"{ph:>6} column means: " + ", ".join(f"{x:.1f}" for x in cs.means) + f"  (spread {cs.spread:.1f} pp)")
    print()
    _print_benchmark(res.report)
    print()
    _table(["check", "computed", "reference", "tolerance", "status"],
           [[c.name, c.computed, c.reference, c.tolerance, c.status] for c in res.comparisons])
    for d in res.analysis.get("match_diffs", []):
        print(f"diff: {d['selector']} matched {d['computed']} events, reference {d['reference']} ({d['events_differ']} events differ)")
    if not res.ok:
        bad = [c.name for c in res.comparisons if c.failed]
        print(f"\nreplay: {len(bad)} reference mismatch(es): {', '.join(bad)}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for d in args.inputs:
        path = Path(d) / "benchmark_report.json"
        if not path.exists():
            raise UsageError(f"{path} not found")
        rep = json.loads(path.read_text())
        src = rep.get("source", d)
        n_ev = rep["n_events"]
        for s in rep["selectors"]:
            rows.append({"source": src, "selector": s["selector"], "cost_pct": f"{s['cost_pct']:.1f}",
                         "match_pct": f"{s['match_pct']:.1f}", "match_count": s["match_count"], "n_events": n_ev,
                         "cost_episodes": s["cost_episodes"]})
    fields = ("source", "selector", "cost_pct", "match_pct", "match_count", "n_events", "cost_episodes")
    write_csv(_out(args) / "pareto_summary.csv", rows, fields)
    _table(fields, [[r[f] for f in fields] for r in rows])
    return EXIT_OK


COMMANDS = {
    "probe-atomic": cmd_probe_atomic,
    "swap-matrix": cmd_swap_matrix,
    "subset-swap": cmd_subset_swap,
    "benchmark": cmd_benchmark,
    "bdist": cmd_bdist,
    "replay": cmd_replay,
    "report": cmd_report,
}


def run_command(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"skillgov {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FixtureError as exc:
        print(f"skillgov {args.command}: fixture error: {exc}", file=sys.stderr)
        return EXIT_FIXTURE
    except SelectorError as exc:
        code = EXIT_FIXTURE if isinstance(exc.__cause__, FixtureError) else EXIT_INVARIANT
        print(f"skillgov {args.command}: {exc}", file=sys.stderr)
        return code
    except (LibraryError, ValueError) as exc:
        print(f"skillgov {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"skillgov {args.command}: invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
