"""Command-line interface.

Exit codes: 0 success, 1 bad input or usage, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .annealer import AnnealConfig, morph
from .errors import MetricUndefinedError, MorphInputError
from .experiment import (ExperimentPlan, FrameSequence, GraphSource, load_target_spec,
                         run_experiment, run_sequence, target_label)
from .graph import Drawing, force_layout, random_layout, read_drawing, shortest_paths, write_points
from .metrics import METRIC_ORDER, combo_label, evaluate, parse_metric_ids
from .render import render, render_matrix
from .shapes import LABELS, emit

log = logging.getLogger("metricmorph")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--config", help="JSON config with 'anneal' and/or 'experiment' sections")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--quiet", action="store_true", help="only print results and errors")
    return p


def _graph_args(p, coords_required=False):
    p.add_argument("--graph", required=True, help="edge-list file or built-in (bar-albert, grid-RxC)")
    p.add_argument("--coords", required=coords_required, help="start coordinates CSV (x,y)")


def _anneal_args(p):
    p.add_argument("--qm", action="append", required=True,
                   help="constrained metrics, e.g. ELD or ST-CN (repeatable)")
    p.add_argument("--iterations", type=int, help="annealing iterations (n_max)")
    p.add_argument("--similarity", choices=["greedy", "mse", "procrustes"])
    p.add_argument("--trace-every", type=int, help="keep every k-th trace record in JSON")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="metricmorph", parents=[common],
                     description="Morph graph drawings toward target shapes under metric constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("layout", parents=[common], help="compute a start layout for a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=["force", "random"], default="force")
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("-o", "--output", help="coordinate CSV to write")

    p = sub.add_parser("metrics", parents=[common], help="report all four quality metrics")
    _graph_args(p, coords_required=True)
    p.add_argument("--json", action="store_true", help="print JSON instead of text")
    p.add_argument("--raw", action="store_true", help="do not normalize the drawing first")

    p = sub.add_parser("shapes", parents=[common], help="target shape utilities")
    ssub = p.add_subparsers(dest="shapes_command", required=True, parser_class=_Parser)
    e = ssub.add_parser("emit", parents=[common], help="write a built-in target as CSV")
    e.add_argument("label", choices=LABELS + tuple(l.lower() for l in LABELS), metavar="LABEL")
    e.add_argument("n", type=int)
    e.add_argument("-o", "--output")

    p = sub.add_parser("morph", parents=[common], help="run one fooling morph")
    _graph_args(p)
    p.add_argument("--target", required=True, help=f"one of {', '.join(LABELS)} or a CSV file")
    _anneal_args(p)
    p.add_argument("--png", action="store_true", help="also write a PNG")

    p = sub.add_parser("experiment", parents=[common], help="run a graph x target x combo x seed grid")
    p.add_argument("--graphs", nargs="+")
    p.add_argument("--targets", nargs="+")
    p.add_argument("--combos", nargs="+", help="metric combinations, e.g. ELD ST-CN")
    p.add_argument("--seeds", type=int, help="number of seeds per cell, starting at --seed")
    p.add_argument("--iterations", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--force", action="store_true", help="recompute existing cells")
    p.add_argument("--no-render", action="store_true")

    p = sub.add_parser("sequence", parents=[common], help="morph through a sequence of frames")
    _graph_args(p)
    p.add_argument("--frames", nargs="+", required=True, help="frame CSVs or a directory of them")
    _anneal_args(p)
    p.add_argument("--no-chain", action="store_true", help="start every frame from the original drawing")
    p.add_argument("--rebaseline", action="store_true", help="hold each frame to its own start metrics")

    p = sub.add_parser("analyze", parents=[common], help="significance matrices from results")
    p.add_argument("--results", required=True, help="results directory or results.csv")
    p.add_argument("--axis", choices=["metric", "combo", "target", "graph", "all"], default="metric")
    p.add_argument("--alpha", type=float, default=0.05)

    p = sub.add_parser("render", parents=[common], help="render a drawing or result JSON")
    p.add_argument("--graph")
    p.add_argument("--coords")
    p.add_argument("--result", help="result JSON (renders its final drawing)")
    p.add_argument("--which", choices=["final", "start"], default="final")
    p.add_argument("--size", type=int, default=400)
    p.add_argument("-o", "--output", required=True, help=".svg or .png path")
    return parser


# --- helpers --------------------------------------------------------------

def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MorphInputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict) or set(cfg) - {"anneal", "experiment"}:
        raise MorphInputError(f"{path}: expected an object with 'anneal' and/or 'experiment' keys")
    return cfg


def _anneal_config(args, cfg: dict) -> AnnealConfig:
    d = dict(cfg.get("anneal", {}))
    if hasattr(args, "seed"):
        d["seed"] = args.seed
    if getattr(args, "iterations", None) is not None:
        d["n_max"] = args.iterations
    if getattr(args, "similarity", None):
        d["similarity_kind"] = args.similarity
    if getattr(args, "trace_every", None):
        d["trace_every"] = args.trace_every
    return AnnealConfig.from_dict(d)


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_drawing(args, normalize_it=True):
    g, d = GraphSource(args.graph, getattr(args, "coords", None)).load(getattr(args, "seed", 0))
    if args.coords and not normalize_it:
        d = read_drawing(g, args.coords)
    return g, d


def _constraints(args):
    ids = []
    for item in args.qm:
        ids += [m for m in parse_metric_ids(item) if m not in ids]
    return tuple(ids)


# --- commands -------------------------------------------------------------

def cmd_layout(args, cfg):
    src = GraphSource(args.graph)
    g, _ = src.load()
    seed = getattr(args, "seed", 0)
    d = force_layout(g, args.iterations, seed) if args.method == "force" else random_layout(g, seed)
    path = Path(args.output) if args.output else _out_dir(args) / f"{src.label()}_layout.csv"
    write_points(d.coords, path)
    log.info("wrote %s", path)
    return EXIT_OK


def cmd_metrics(args, cfg):
    g, d = _load_drawing(args, normalize_it=not args.raw)
    dist = shortest_paths(g)
    values = {}
    for m in METRIC_ORDER:
        try:
            v = evaluate([m], d, dist)[0]
            values[m.value] = int(v) if m.value == "CN" else v
        except MetricUndefinedError:
            values[m.value] = None
    if args.json:
        print(json.dumps(values))
    else:
        for k, v in values.items():
            print(f"{k}: {'undefined' if v is None else repr(v)}")
    return EXIT_OK


def cmd_shapes(args, cfg):
    label = args.label.upper()
    path = Path(args.output) if args.output else _out_dir(args) / f"{label}_{args.n}.csv"
    emit(label, args.n, path)
    log.info("wrote %s", path)
    return EXIT_OK


def cmd_morph(args, cfg):
    g, start = _load_drawing(args)
    acfg = _anneal_config(args, cfg)
    constraints = _constraints(args)
    target = load_target_spec(args.target, g.n)
    meta = {"graph": g.name, "target": target.label, "combo": combo_label(constraints), "seed": acfg.seed}
    result = morph(start, shortest_paths(g), target, constraints, acfg, meta=meta)
    out = _out_dir(args)
    stem = f"morph_{g.name}__{target.label}__{combo_label(constraints)}__s{acfg.seed}"
    result.to_json(out / f"{stem}.json")
    render(result.final, out / f"{stem}.svg")
    if args.png:
        render(result.final, out / f"{stem}.png")
    print(f"final percent: {result.final_percent:.2f}")
    for k, v in result.final_metrics.items():
        print(f"{k}: {result.baseline[k]!r} -> {v!r} (eps {result.epsilons[k]!r})")
    log.info("wrote %s.json and %s.svg in %s", stem, stem, out)
    return EXIT_OK


def cmd_experiment(args, cfg):
    d = dict(cfg.get("experiment", {}))
    anneal = dict(d.get("anneal", {}))
    anneal.update(cfg.get("anneal", {}))
    if args.iterations is not None:
        anneal["n_max"] = args.iterations
    d["anneal"] = anneal
    for key in ("graphs", "targets", "combos", "workers"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    if args.seeds is not None or hasattr(args, "seed"):
        count = args.seeds if args.seeds is not None else len(d.get("seeds", range(5)))
        first = getattr(args, "seed", 0)
        d["seeds"] = list(range(first, first + count))
    if hasattr(args, "out"):
        d["out_dir"] = args.out
    if args.force:
        d["force"] = True
    if args.no_render:
        d["render"] = False
    plan = ExperimentPlan.from_dict(d)
    grid = run_experiment(plan)
    failed = len(grid.failures)
    print(f"{len(grid)} of {plan.cell_count()} cells complete, {failed} failed; "
          f"results in {Path(plan.out_dir) / 'results.csv'}")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_sequence(args, cfg):
    g, start = _load_drawing(args)
    frames = []
    for f in args.frames:
        p = Path(f)
        frames += sorted(p.glob("*.csv")) if p.is_dir() else [p]
    seq = FrameSequence([str(f) for f in frames], chaining=not args.no_chain, rebaseline=args.rebaseline)
    acfg = _anneal_config(args, cfg)
    results = run_sequence(start, shortest_paths(g), seq, _constraints(args), acfg, out_dir=_out_dir(args))
    for k, r in enumerate(results):
        print(f"frame {k}: {target_label(str(frames[k]))} {r.final_percent:.2f}%")
    return EXIT_OK


def cmd_analyze(args, cfg):
    grid = analysis.ExperimentGrid.load(args.results)
    out = _out_dir(args)
    axes = ["metric", "target", "graph"] if args.axis == "all" else [args.axis]
    written = 0
    for axis in axes:
        col = analysis.AXES[axis]
        if len(grid.levels(col)) < 2:
            if args.axis == "all":
                continue
            raise MorphInputError(f"axis {axis!r} has fewer than 2 levels in {args.results}")
        m = analysis.significance_matrix(grid, axis, args.alpha)
        m.to_csv(out / f"significance_{axis}.csv")
        render_matrix(m, out / f"significance_{axis}.svg")
        written += 1
        print(f"[{axis}] {m.test}, bonferroni over {len(m.levels) * (len(m.levels) - 1)} cells, alpha {m.alpha}")
        if col != "graph" and len(m.levels) >= 3:
            try:
                chi2, p = analysis.omnibus(grid, axis)
                print(f"  friedman chi2 = {chi2:.3f}, p = {p:.3g}")
            except MorphInputError as exc:
                print(f"  friedman skipped: {exc}")
        for level, s in analysis.summarize(grid, axis).items():
            wins = [c for c in m.levels if c != level and m.cell(level, c)]
            print(f"  {level}: median {s['median']:.2f} (n={s['n']}) > {', '.join(wins) or '-'}")
    if not written:
        raise MorphInputError("no axis with at least 2 levels to analyze")
    return EXIT_OK


def cmd_render(args, cfg):
    if args.result:
        doc = json.loads(Path(args.result).read_text())
        if not args.graph:
            raise MorphInputError("--graph is required to render a result (edges are not stored)")
        g, _ = GraphSource(args.graph).load()
        d = Drawing(g, np.asarray(doc[f"{args.which}_coords"], dtype=float))
    elif args.graph and args.coords:
        g, d = _load_drawing(args)
    else:
        raise MorphInputError("render needs --graph with --coords or --result")
    path = render(d, args.output, size=args.size)
    log.info("wrote %s", path)
    return EXIT_OK


COMMANDS = {
    "layout": cmd_layout, "metrics": cmd_metrics, "shapes": cmd_shapes, "morph": cmd_morph,
    "experiment": cmd_experiment, "sequence": cmd_sequence, "analyze": cmd_analyze,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(message)s")
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (MorphInputError, ValueError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RuntimeError, MemoryError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
