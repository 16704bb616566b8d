"""Metric-constrained simulated annealing that pulls a drawing toward a target.

Each iteration asks :func:`jitter` for a proposal (a few nodes nudged, kept
if it matches the target better or if a temperature draw lets it escape) and
accepts it only when every constrained metric is still within its epsilon of
the starting value.

Randomness: one ``numpy.random.Generator`` per run. Jitter draws its numbers
in blocks (uniforms first, then normals; block sizes 16, 32, 64, ... within
one call) and unused draws of the last block are discarded, so a run is a
pure function of its inputs and seed.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from .errors import DegenerateDrawingError, JitterExhaustedError, MorphInputError, SizeMismatchError
from .graph import Drawing
from .metrics import (FullState, MetricId, MetricState, combo_label, evaluate, make_state,
                      parse_metric_ids)
from .shapes import TargetShape
from .similarity import KINDS

SCHEMA_ID = "metricmorph/morph-result/v1"
MAX_ATTEMPTS = 1_000_000
# incremental values this close to an epsilon boundary are re-checked from scratch
BOUNDARY_GUARD = 1e-9


@dataclass
class AnnealConfig:
    n_max: int = 30000
    t_init: float = 0.4
    t_final: float = 0.001
    subset_divisor: int = 15
    step_scale: float = 1 / 25
    step_clip: float = 0.5
    eps: float = 0.0025
    cn_eps_fraction: float = 0.05
    epsilons: dict = field(default_factory=dict)  # per-metric overrides, e.g. {"ELD": 0.01}
    seed: int = 0
    similarity_kind: str = "greedy"
    clamp_to_unit_box: bool = True
    incremental: bool = True
    trace_every: int = 1

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if not 0 < self.t_final <= self.t_init < 1:
            raise ValueError("need 0 < t_final <= t_init < 1")
        if self.subset_divisor < 1:
            raise ValueError("subset_divisor must be >= 1")
        if self.similarity_kind not in KINDS:
            raise ValueError(f"unknown similarity kind {self.similarity_kind!r}")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")
        self.epsilons = {parse_metric_ids([k])[0].value: float(v) for k, v in self.epsilons.items()}
        if self.eps < 0 or self.cn_eps_fraction < 0 or any(v < 0 for v in self.epsilons.values()):
            raise ValueError("epsilons must be >= 0")

    def replace(self, **changes) -> "AnnealConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AnnealConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown anneal config keys: {sorted(unknown)}")
        return cls(**d)

    def resolve_epsilons(self, metrics, baseline: dict) -> dict:
        out = {}
        for mid in metrics:
            key = mid.value
            if key in self.epsilons:
                out[key] = self.epsilons[key]
            elif mid is MetricId.CN:
                out[key] = float(math.floor(self.cn_eps_fraction * baseline[key] + 1e-9))
            else:
                out[key] = self.eps
        return out


def temperature(i: int, cfg: AnnealConfig) -> float:
    """Quadratic cooling from ``t_init`` at 0 to ``t_final`` at ``n_max``, flat at the end."""
    if cfg.n_max == 0:
        return cfg.t_final
    frac = 1.0 - i / cfg.n_max
    return (cfg.t_init - cfg.t_final) * frac * frac + cfg.t_final


def subset_limit(n: int, subset_divisor: int) -> int:
    return max(1, n // subset_divisor)


class _Scratch:
    """Per-run buffers for the jitter kernel."""

    def __init__(self, n):
        self.out = np.empty((n, 2))
        self.perm = np.empty(n, dtype=np.int64)
        self.record = K.new_record(n)
        self.stale = True


def _jitter(X, Y, T, diff, rng, cfg, scratch):
    n = len(X)
    kmax = subset_limit(n, cfg.subset_divisor)
    kind = KINDS[cfg.similarity_kind]
    used = 0
    block = 16
    while used < MAX_ATTEMPTS:
        b = min(block, MAX_ATTEMPTS - used)
        unif = rng.random((b, kmax + 2))
        norm = rng.standard_normal((b, kmax, 2))
        at, s, size, escaped = K.jitter_block(
            X, Y, T, diff, kmax, cfg.step_scale, cfg.step_clip, cfg.clamp_to_unit_box, kind,
            unif, norm, scratch.out, scratch.perm, scratch.record, scratch.stale)
        scratch.stale = False
        if at >= 0:
            return s, scratch.perm[:size].copy(), escaped, used + at + 1
        used += b
        block = min(block * 2, 4096)
    raise JitterExhaustedError(
        f"no proposal after {MAX_ATTEMPTS} attempts (T={T}, DIFF={diff}): "
        "nothing improves the similarity and the temperature allows no escape")


def jitter(X, T: float, diff: float, Y, rng: np.random.Generator, cfg: AnnealConfig | None = None):
    """Propose a jittered copy of ``X``; returns ``(coords, similarity)``.

    A random subset of 1..max(1, n // subset_divisor) nodes gets clipped
    Gaussian steps. The proposal is returned once it is strictly more similar
    to ``Y`` than ``diff`` or once ``T`` beats a fresh uniform draw.
    """
    cfg = cfg or AnnealConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(getattr(Y, "points", Y), dtype=np.float64)
    if X.shape != Y.shape:
        raise SizeMismatchError(f"point sets differ in size: {len(X)} vs {len(Y)}")
    scratch = _Scratch(len(X))
    s, _, _, _ = _jitter(X, Y, T, diff, rng, cfg, scratch)
    return scratch.out, s


@dataclass
class Trace:
    iteration: np.ndarray
    loss: np.ndarray
    percent: np.ndarray
    metrics: np.ndarray      # (iterations, n_constraints); NaN where undefined
    accepted: np.ndarray
    escaped: np.ndarray
    temperature: np.ndarray
    attempts: np.ndarray

    def __len__(self):
        return len(self.iteration)

    @classmethod
    def empty(cls, size, k):
        return cls(np.arange(1, size + 1), np.zeros(size), np.zeros(size), np.full((size, k), np.nan),
                   np.zeros(size, bool), np.zeros(size, bool), np.zeros(size), np.zeros(size, np.int64))


@dataclass
class MorphResult:
    final: Drawing
    start: Drawing
    target: TargetShape
    constraints: tuple
    baseline: dict
    epsilons: dict
    final_metrics: dict
    baseline_loss: float
    final_loss: float
    final_percent: float
    trace: Trace
    config: AnnealConfig
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def record(self, k: int) -> dict:
        t = self.trace
        return {
            "iteration": int(t.iteration[k]),
            "loss": float(t.loss[k]),
            "percent": float(t.percent[k]),
            "metrics": {m.value: _json_float(t.metrics[k, j]) for j, m in enumerate(self.constraints)},
            "accepted": bool(t.accepted[k]),
            "escaped": bool(t.escaped[k]),
            "temperature": float(t.temperature[k]),
            "attempts": int(t.attempts[k]),
        }

    def to_dict(self, trace_every: int | None = None) -> dict:
        step = trace_every or self.config.trace_every
        n = len(self.trace)
        keep = list(range(step - 1, n, step))
        if n and (not keep or keep[-1] != n - 1):
            keep.append(n - 1)
        cfg = self.config.to_dict()
        cfg["epsilons"] = {k: _json_float(v) for k, v in cfg["epsilons"].items()}
        return {
            "schema": SCHEMA_ID,
            "meta": dict(self.meta),
            "config": cfg,
            "constraints": [m.value for m in self.constraints],
            "combo": combo_label(self.constraints),
            "target": self.target.label,
            "baseline_metrics": dict(self.baseline),
            "epsilons": {k: _json_float(v) for k, v in self.epsilons.items()},
            "final_metrics": dict(self.final_metrics),
            "summary": {
                "seed": self.config.seed,
                "iterations": n,
                "accepted": int(self.trace.accepted.sum()),
                "escapes": int((self.trace.accepted & self.trace.escaped).sum()),
                "baseline_loss": self.baseline_loss,
                "final_loss": self.final_loss,
                "final_percent": self.final_percent,
            },
            "trace": [self.record(k) for k in keep],
            "start_coords": self.start.coords.tolist(),
            "target_coords": np.asarray(self.target.points).tolist(),
            "final_coords": self.final.coords.tolist(),
        }

    def to_json(self, path=None, trace_every: int | None = None) -> str:
        text = json.dumps(self.to_dict(trace_every), indent=1, allow_nan=False)
        if path is not None:
            Path(path).write_text(text)
        return text


def _json_float(v):
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _within(value, base, eps):
    return abs(value - base) <= eps


def _check(state: MetricState, coords, moved, base, eps, incremental):
    """Value of the proposal and the pending update; ``None`` pending means
    the metric is undefined on the proposal."""
    try:
        value, pending = state.trial(coords, moved)
    except DegenerateDrawingError:
        return math.nan, None, False
    if incremental and abs(abs(value - base) - eps) <= BOUNDARY_GUARD:
        exact = state.full_value(coords)
        if exact != value:
            value = exact
    return value, pending, _within(value, base, eps)


def morph(start: Drawing, dist, target, constraints, cfg: AnnealConfig | None = None,
          *, baseline: dict | None = None, baseline_loss: float | None = None,
          meta: dict | None = None) -> MorphResult:
    """Morph ``start`` toward ``target`` while keeping ``constraints`` within epsilon.

    ``baseline`` (metric values) and ``baseline_loss`` default to those of
    ``start``; frame sequences pass the original drawing's values so every
    frame is held to the same reference.
    """
    cfg = cfg or AnnealConfig()
    constraints = parse_metric_ids(constraints)
    if not isinstance(target, TargetShape):
        target = TargetShape(np.asarray(target, dtype=np.float64), "CUSTOM")
    g = start.graph
    Y = np.ascontiguousarray(target.points, dtype=np.float64)
    if len(Y) != g.n:
        raise SizeMismatchError(f"target has {len(Y)} points but the drawing has {g.n} nodes")
    if cfg.similarity_kind == "procrustes" and np.ptp(Y, axis=0).max() == 0:
        raise DegenerateDrawingError("procrustes similarity needs a non-degenerate target")

    t0 = time.perf_counter()
    X = np.array(start.coords, dtype=np.float64)
    if baseline is None:
        baseline = dict(zip((m.value for m in constraints), evaluate(constraints, start, dist)))
    else:
        baseline = {m.value: float(baseline[m.value]) for m in constraints}
    eps = cfg.resolve_epsilons(constraints, baseline)
    diff = float(K.similarity(X, Y, KINDS[cfg.similarity_kind]))
    ref_loss = diff if baseline_loss is None else float(baseline_loss)

    def pct(loss):
        if loss == 0:
            return 100.0
        if ref_loss <= 0:
            raise MorphInputError("baseline similarity loss is 0")
        return 100.0 - loss / ref_loss * 100.0

    trace = Trace.empty(cfg.n_max, len(constraints))
    if diff == 0.0:
        # start already coincides with the target: nothing to do
        trace = Trace.empty(0, len(constraints))
        cfg_iters = 0
    else:
        cfg_iters = cfg.n_max
    if cfg.incremental:
        states = [make_state(m, start, dist) for m in constraints]
    else:
        states = [FullState(m, g, X, dist) for m in constraints]
    keys = [m.value for m in constraints]

    rng = np.random.default_rng(cfg.seed)
    scratch = _Scratch(g.n)
    out = scratch.out
    for it in range(cfg_iters):
        T = temperature(it + 1, cfg)
        s, moved, escaped, attempts = _jitter(X, Y, T, diff, rng, cfg, scratch)
        ok = True
        pendings = []
        for j, (state, key) in enumerate(zip(states, keys)):
            value, pending, within = _check(state, out, moved, baseline[key], eps[key], cfg.incremental)
            trace.metrics[it, j] = value
            pendings.append(pending)
            ok = ok and within
        if ok:
            X[moved] = out[moved]
            scratch.stale = True
            for state, pending in zip(states, pendings):
                state.commit(out, moved, pending)
            diff = s
        trace.loss[it] = diff
        trace.percent[it] = pct(diff)
        trace.accepted[it] = ok
        trace.escaped[it] = escaped
        trace.temperature[it] = T
        trace.attempts[it] = attempts

    final = start.with_coords(X)
    final_metrics = dict(zip(keys, evaluate(constraints, final, dist)))
    return MorphResult(
        final=final, start=start, target=target, constraints=constraints,
        baseline=baseline, epsilons=eps, final_metrics=final_metrics,
        baseline_loss=ref_loss, final_loss=diff,
        final_percent=pct(diff),
        trace=trace, config=cfg, wall_time=time.perf_counter() - t0, meta=dict(meta or {}),
    )


def load_result(path) -> dict:
    return json.loads(Path(path).read_text())
