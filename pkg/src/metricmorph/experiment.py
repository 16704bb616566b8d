"""Experiment grids (graphs x targets x metric combinations x seeds) and frame sequences."""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ExperimentGrid, Record
from .annealer import AnnealConfig, MorphResult, morph
from .errors import MorphInputError, SizeMismatchError
from .graph import (Drawing, Graph, dual_barabasi_albert, force_layout, grid_graph, normalize,
                    read_drawing, read_edgelist, shortest_paths)
from .metrics import METRIC_ORDER, combo_label, evaluate, parse_metric_ids
from .render import render
from .shapes import LABELS, TargetShape, generate, load_target
from .similarity import KINDS
from . import _kernels as K

log = logging.getLogger(__name__)

# Tree-like dual-BA graph: seed 11 gives 142 nodes and 175 edges (mean degree 2.46).
BAR_ALBERT = {"n": 142, "m1": 1, "m2": 2, "p": 0.755, "seed": 11}


def all_combos() -> list[str]:
    """The 15 nonempty metric subsets: singletons, pairs, triples, then all four."""
    out = []
    for k in range(1, len(METRIC_ORDER) + 1):
        out += [combo_label(c) for c in itertools.combinations(METRIC_ORDER, k)]
    return out


@dataclass
class GraphSource:
    """A graph plus its start drawing.

    ``spec`` is an edge-list path or a built-in name: ``bar-albert``,
    ``grid-RxC`` or ``dual-ba-N``. ``coords`` is an optional start-layout CSV;
    without one a force layout with ``layout_seed`` is used.
    """

    spec: str
    coords: str | None = None
    name: str | None = None

    @classmethod
    def parse(cls, item) -> "GraphSource":
        if isinstance(item, GraphSource):
            return item
        if isinstance(item, dict):
            return cls(**item)
        return cls(str(item))

    def label(self) -> str:
        if self.name:
            return self.name
        p = Path(self.spec)
        return p.stem if p.suffix else self.spec

    def load(self, layout_seed: int = 0) -> tuple[Graph, Drawing]:
        g = builtin_graph(self.spec)
        if g is None:
            g = read_edgelist(self.spec)
        g = Graph(g.n, g.edges, self.label())
        if self.coords:
            return g, normalize(read_drawing(g, self.coords))
        return g, force_layout(g, seed=layout_seed)


def builtin_graph(spec: str) -> Graph | None:
    if spec == "bar-albert":
        return dual_barabasi_albert(**BAR_ALBERT)
    m = re.fullmatch(r"grid-(\d+)x(\d+)", spec)
    if m:
        return grid_graph(int(m[1]), int(m[2]))
    m = re.fullmatch(r"dual-ba-(\d+)", spec)
    if m:
        return dual_barabasi_albert(int(m[1]), seed=0)
    return None


def target_label(spec: str) -> str:
    return spec.upper() if spec.upper() in LABELS else Path(spec).stem


def load_target_spec(spec: str, n: int) -> TargetShape:
    if spec.upper() in LABELS:
        return generate(spec, n)
    t = load_target(spec, n)
    return TargetShape(t.points, Path(spec).stem)


@dataclass
class ExperimentPlan:
    graphs: list = field(default_factory=lambda: ["bar-albert"])
    targets: list = field(default_factory=lambda: list(LABELS))
    combos: list = field(default_factory=all_combos)
    seeds: list = field(default_factory=lambda: list(range(5)))
    anneal: dict = field(default_factory=dict)  # AnnealConfig overrides
    out_dir: str = "results"
    layout_seed: int = 0
    trace_every: int = 100
    workers: int = 0  # 0 means one per CPU core
    render: bool = True
    force: bool = False

    def __post_init__(self):
        if not (self.graphs and self.targets and self.combos and self.seeds):
            raise MorphInputError("experiment plan axes must be nonempty")
        labels = [combo_label(parse_metric_ids(c)) for c in self.combos]
        if len(set(labels)) != len(labels):
            raise MorphInputError(f"duplicate metric combinations in plan: {labels}")
        self.combos = labels
        AnnealConfig.from_dict(self.anneal)  # validate early

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["graphs"] = [g if isinstance(g, str) else dataclasses.asdict(GraphSource.parse(g))
                       for g in self.graphs]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown experiment plan keys: {sorted(unknown)}")
        return cls(**d)

    def cell_count(self) -> int:
        return len(self.graphs) * len(self.targets) * len(self.combos) * len(self.seeds)


def cell_stem(graph: str, target: str, combo: str, seed: int) -> str:
    return f"{graph}__{target}__{combo}__s{seed}"


def _run_cell(job):
    """Worker: run one cell and write its JSON (and SVGs). Returns (stem, error)."""
    (stem, out_dir, start, dist, target, combo, cfg, meta, trace_every, do_render) = job
    out = Path(out_dir)
    try:
        result = morph(start, dist, target, combo, cfg, meta=meta)
        if do_render:
            render(result.start, out / f"{stem}__start.svg", title=f"{stem} start")
            render(result.final, out / f"{stem}__final.svg", title=f"{stem} final")
        tmp = out / f"{stem}.json.part"
        result.to_json(tmp, trace_every=trace_every)
        os.replace(tmp, out / f"{stem}.json")
        return stem, None
    except Exception as exc:  # recorded per cell, never aborts the grid
        return stem, f"{type(exc).__name__}: {exc}"


def run_experiment(plan: ExperimentPlan) -> ExperimentGrid:
    """Run every (graph, target, combo, seed) cell of ``plan``.

    Each finished cell leaves ``<stem>.json`` plus start/final SVGs in
    ``plan.out_dir``; cells whose JSON already exists are skipped unless
    ``plan.force``. Failures go to ``failures.csv`` and do not stop the grid.
    ``results.csv`` is rebuilt from all completed cells at the end.
    """
    out = Path(plan.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = AnnealConfig.from_dict(plan.anneal)
    (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=1))

    jobs, expected = [], []
    for src in map(GraphSource.parse, plan.graphs):
        g, start = src.load(plan.layout_seed)
        dist = shortest_paths(g)
        for tspec in plan.targets:
            target = load_target_spec(tspec, g.n)
            for combo in plan.combos:
                for seed in plan.seeds:
                    stem = cell_stem(g.name, target.label, combo, seed)
                    expected.append(stem)
                    if not plan.force and (out / f"{stem}.json").exists():
                        continue
                    meta = {"graph": g.name, "target": target.label, "combo": combo, "seed": seed}
                    jobs.append((stem, str(out), start, dist, target, combo,
                                 base.replace(seed=seed), meta, plan.trace_every, plan.render))
    log.info("%d cells planned, %d to run", len(expected), len(jobs))

    failures = []
    workers = plan.workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, jobs))
    else:
        outcomes = [_run_cell(j) for j in jobs]
    for stem, err in outcomes:
        if err is not None:
            log.warning("cell %s failed: %s", stem, err)
            failures.append((stem, err))
        else:
            log.info("cell %s done", stem)

    with open(out / "failures.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "error"])
        w.writerows(failures)

    records = []
    for stem in expected:
        path = out / f"{stem}.json"
        if not path.exists():
            continue
        doc = json.loads(path.read_text())
        m = doc["meta"]
        records.append(Record(m["graph"], m["target"], m["combo"], int(m["seed"]),
                              float(doc["summary"]["final_percent"])))
    grid = ExperimentGrid(records)
    grid.to_csv(out / "results.csv")
    grid.failures = failures
    return grid


# --- frame sequences ------------------------------------------------------

@dataclass
class FrameSequence:
    """Ordered target frames of equal size.

    With ``chaining`` each frame starts from the previous frame's result;
    ``rebaseline`` measures each frame's epsilon band against its own start
    instead of the original drawing.
    """

    frames: list
    chaining: bool = True
    rebaseline: bool = False

    def __post_init__(self):
        if not self.frames:
            raise MorphInputError("a frame sequence needs at least one frame")

    def load(self, n: int) -> list[TargetShape]:
        shapes = []
        for k, f in enumerate(self.frames):
            if isinstance(f, TargetShape):
                t = f
            elif isinstance(f, (str, os.PathLike)):
                t = load_target_spec(str(f), n)
            else:
                t = TargetShape(np.asarray(f, dtype=float), f"frame{k}")
            if len(t) != n:
                raise SizeMismatchError(f"frame {k} has {len(t)} points but the graph has {n} nodes")
            shapes.append(t)
        return shapes


def run_sequence(start: Drawing, dist, frames: FrameSequence, constraints,
                 cfg: AnnealConfig | None = None, out_dir=None) -> list[MorphResult]:
    """Morph through ``frames`` in order, one annealing run per frame.

    Frame ``k`` uses seed ``cfg.seed + k``. Percent is measured against the
    similarity of the original start drawing to that frame's target, so
    chained frames report overall progress. All frames are size-checked
    before anything runs. With ``out_dir`` set, writes ``frame_NNN.svg`` and
    ``frame_NNN.json`` per frame.
    """
    cfg = cfg or AnnealConfig()
    constraints = parse_metric_ids(constraints)
    targets = frames.load(start.graph.n)
    original = dict(zip((m.value for m in constraints), evaluate(constraints, start, dist)))
    kind = KINDS[cfg.similarity_kind]
    X0 = np.ascontiguousarray(start.coords, dtype=np.float64)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    current = start
    for k, target in enumerate(targets):
        begin = current if frames.chaining else start
        baseline = None if frames.rebaseline else original
        ref = float(K.similarity(X0, np.ascontiguousarray(target.points, dtype=np.float64), kind))
        r = morph(begin, dist, target, constraints, cfg.replace(seed=cfg.seed + k),
                  baseline=baseline, baseline_loss=ref, meta={"frame": k})
        results.append(r)
        current = r.final
        if out_dir is not None:
            render(r.final, out_dir / f"frame_{k:03d}.svg", title=f"frame {k}")
            r.to_json(out_dir / f"frame_{k:03d}.json")
    return results
