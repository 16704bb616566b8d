"""Nonparametric statistics over experiment grids.

Paired comparisons (metric combinations, targets) use the Wilcoxon
signed-rank test, independent ones (graphs) the Mann-Whitney U test, both
one-sided, with Bonferroni correction over every off-diagonal cell. Small
samples (at most ``EXACT_MAX`` observations per side) get exact permutation
p-values that handle ties; larger ones use scipy's normal approximations
with tie and continuity correction.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import MorphInputError

EXACT_MAX = 10
ALTERNATIVES = ("greater", "less", "two-sided")
AXES = {"metric": "combo", "combo": "combo", "target": "target", "graph": "graph"}
CSV_COLUMNS = ("graph", "target", "combo", "seed", "percent")


def _check_alternative(alternative):
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")


def _tail(null_values, null_counts, observed, alternative):
    """P-value of ``observed`` under a discrete null given as (values, counts)."""
    total = null_counts.sum()
    tol = 1e-9
    upper = null_counts[null_values >= observed - tol].sum() / total
    lower = null_counts[null_values <= observed + tol].sum() / total
    if alternative == "greater":
        return float(upper)
    if alternative == "less":
        return float(lower)
    return float(min(1.0, 2.0 * min(upper, lower)))


# --- Friedman -------------------------------------------------------------

def friedman(*groups) -> tuple[float, float]:
    """Friedman rank test for ``k >= 3`` treatments measured on the same blocks.

    Pass one sequence per treatment (or a single 2-D array of shape (k, n)).
    Ties within a block get average ranks and the statistic is tie-corrected.
    Returns ``(chi2, p)`` with p from the chi-square distribution on ``k - 1``
    degrees of freedom. If every block is fully tied, returns ``(0.0, 1.0)``.
    """
    if len(groups) == 1:
        groups = tuple(np.asarray(groups[0], dtype=float))
    lengths = {len(g) for g in groups}
    if len(lengths) != 1:
        raise ValueError(f"friedman needs equal-length samples, got lengths {sorted(lengths)}")
    k = len(groups)
    if k < 3:
        raise ValueError("friedman needs at least 3 treatments; use wilcoxon_signed_rank for 2")
    n = lengths.pop()
    if n < 2:
        raise ValueError("friedman needs at least 2 blocks")
    data = np.column_stack([np.asarray(g, dtype=float) for g in groups])
    ranks = stats.rankdata(data, axis=1)
    ties = 0.0
    for row in data:
        _, t = np.unique(row, return_counts=True)
        ties += float((t ** 3 - t).sum())
    c = 1.0 - ties / (n * k * (k * k - 1))
    if c <= 0:
        return 0.0, 1.0
    r = ranks.sum(axis=0)
    chi2 = (12.0 / (n * k * (k + 1)) * float((r ** 2).sum()) - 3.0 * n * (k + 1)) / c
    chi2 = max(chi2, 0.0)
    return chi2, float(stats.chi2.sf(chi2, k - 1))


# --- Wilcoxon signed-rank -------------------------------------------------

def _signed_rank_null(ranks):
    """Distribution of W+ when each rank's sign is a fair coin flip.

    Ranks may be half-integers (ties), so the DP runs on doubled ranks.
    """
    doubled = np.rint(2 * np.asarray(ranks)).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:len(counts) - r]
        counts = counts + shifted
    values = np.arange(len(counts)) / 2.0
    keep = counts > 0
    return values[keep], counts[keep]


def wilcoxon_signed_rank(a, b, alternative: str = "greater", method: str = "auto") -> float:
    """One-sided (by default) Wilcoxon signed-rank p-value for paired samples.

    Tests whether ``a - b`` is shifted above zero. Zero differences are
    dropped. ``method="auto"`` uses the exact permutation distribution when at
    most ``EXACT_MAX`` nonzero differences remain and the normal
    approximation (tie and continuity corrected) otherwise.
    """
    _check_alternative(alternative)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must be 1-D and equal length, got {a.shape} and {b.shape}")
    diff = a - b
    diff = diff[diff != 0]
    if len(diff) == 0:
        raise ValueError("all paired differences are zero; the test is undefined")
    if method == "auto":
        method = "exact" if len(diff) <= EXACT_MAX else "normal"
    if method == "exact":
        ranks = stats.rankdata(np.abs(diff))
        w_plus = float(ranks[diff > 0].sum())
        values, counts = _signed_rank_null(ranks)
        return _tail(values, counts, w_plus, alternative)
    if method == "normal":
        res = stats.wilcoxon(diff, zero_method="wilcox", correction=True,
                             alternative=alternative, method="approx")
        return float(res.pvalue)
    raise ValueError(f"unknown method {method!r}")


# --- Mann-Whitney U -------------------------------------------------------

def _rank_sum_null(ranks, size):
    """Distribution of the rank sum of a random ``size``-subset of ``ranks``."""
    doubled = np.rint(2 * np.asarray(ranks)).astype(np.int64)
    top = int(doubled.sum())
    # table[j, s]: number of j-subsets with doubled rank sum s
    table = np.zeros((size + 1, top + 1))
    table[0, 0] = 1.0
    for r in doubled:
        for j in range(size, 0, -1):
            table[j, r:] += table[j - 1, :top + 1 - r]
    counts = table[size]
    values = np.arange(top + 1) / 2.0
    keep = counts > 0
    return values[keep], counts[keep]


def mann_whitney_u(a, b, alternative: str = "greater", method: str = "auto") -> float:
    """One-sided (by default) Mann-Whitney U p-value for independent samples.

    Tests whether ``a`` tends to be larger than ``b``. The statistic is
    ``U_a`` (pairs with a > b, ties counted half). ``method="auto"`` uses the
    exact permutation distribution of the pooled (average) ranks when both
    samples have at most ``EXACT_MAX`` values, else the tie-corrected normal
    approximation with continuity correction.
    """
    _check_alternative(alternative)
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) == 0 or len(b) == 0:
        raise ValueError("mann_whitney_u needs two nonempty samples")
    if method == "auto":
        method = "exact" if max(len(a), len(b)) <= EXACT_MAX else "normal"
    if method == "exact":
        ranks = stats.rankdata(np.concatenate([a, b]))
        shift = len(a) * (len(a) + 1) / 2.0
        u = float(ranks[:len(a)].sum()) - shift
        values, counts = _rank_sum_null(ranks, len(a))
        return _tail(values - shift, counts, u, alternative)
    if method == "normal":
        res = stats.mannwhitneyu(a, b, use_continuity=True, alternative=alternative,
                                 method="asymptotic")
        return float(res.pvalue)
    raise ValueError(f"unknown method {method!r}")


def u_statistic(a, b) -> float:
    """U_a: number of pairs with a > b, ties counting one half."""
    a = np.asarray(a, dtype=float).ravel()[:, None]
    b = np.asarray(b, dtype=float).ravel()[None, :]
    return float((a > b).sum() + 0.5 * (a == b).sum())


# --- Bonferroni -----------------------------------------------------------

def bonferroni(pvals, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Adjusted p-values ``min(1, p * k)`` and reject flags ``adjusted < alpha``."""
    p = np.asarray(pvals, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    adjusted = np.minimum(1.0, p * p.size)
    return adjusted, adjusted < alpha


# --- experiment grids -----------------------------------------------------

@dataclass(frozen=True)
class Record:
    graph: str
    target: str
    combo: str
    seed: int
    percent: float


@dataclass
class ExperimentGrid:
    """Final similarity percents indexed by (graph, target, combo, seed)."""

    records: list[Record] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for r in self.records:
            key = (r.graph, r.target, r.combo, r.seed)
            if key in seen:
                raise MorphInputError(f"duplicate record for {key}")
            if not math.isfinite(r.percent):
                raise MorphInputError(f"non-finite percent for {key}")
            seen.add(key)

    def __len__(self):
        return len(self.records)

    def levels(self, axis: str) -> list[str]:
        col = _column(axis)
        out = []
        for r in self.records:
            v = getattr(r, col)
            if v not in out:
                out.append(v)
        return out

    def values(self, **where) -> np.ndarray:
        return np.array([r.percent for r in self.records
                         if all(getattr(r, k) == v for k, v in where.items())])

    @classmethod
    def from_csv(cls, path) -> "ExperimentGrid":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise MorphInputError(f"{path}: missing columns {sorted(missing)}")
            records = [Record(row["graph"], row["target"], row["combo"], int(row["seed"]),
                              float(row["percent"])) for row in reader]
        return cls(records)

    @classmethod
    def from_results(cls, paths) -> "ExperimentGrid":
        """Build a grid from result JSON files (uses their ``meta`` block)."""
        records = []
        for p in paths:
            doc = json.loads(Path(p).read_text())
            meta = doc.get("meta", {})
            records.append(Record(
                str(meta.get("graph", "graph")),
                str(meta.get("target", doc["target"])),
                doc["combo"],
                int(doc["summary"]["seed"]),
                float(doc["summary"]["final_percent"]),
            ))
        return cls(records)

    @classmethod
    def load(cls, path) -> "ExperimentGrid":
        """A results CSV, or a directory holding ``results.csv`` or result JSONs."""
        path = Path(path)
        if path.is_dir():
            if (path / "results.csv").exists():
                return cls.from_csv(path / "results.csv")
            files = sorted(path.glob("**/*.json"))
            if not files:
                raise MorphInputError(f"{path}: no results.csv or result JSON files found")
            return cls.from_results(files)
        return cls.from_csv(path)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.records:
                w.writerow([r.graph, r.target, r.combo, r.seed, repr(float(r.percent))])


def _column(axis: str) -> str:
    try:
        return AXES[axis]
    except KeyError:
        raise ValueError(f"unknown axis {axis!r}; choose from {sorted(AXES)}") from None


def _blocks(grid: ExperimentGrid, col: str) -> dict:
    """level -> {pairing key -> percent}, keyed by the other three columns."""
    others = [c for c in ("graph", "target", "combo", "seed") if c != col]
    out = defaultdict(dict)
    for r in grid.records:
        out[getattr(r, col)][tuple(getattr(r, c) for c in others)] = r.percent
    return out


@dataclass
class SignificanceMatrix:
    """One-sided pairwise tests over the levels of one axis.

    Cell ``(r, c)`` asks whether level ``r`` is significantly greater (easier
    to fool) than level ``c``. ``pvalues`` are raw, ``adjusted`` Bonferroni
    corrected over all off-diagonal cells; the diagonal is never significant.
    """

    axis: str
    levels: list[str]
    pvalues: np.ndarray
    adjusted: np.ndarray
    significant: np.ndarray
    alpha: float
    test: str
    correction: str = "bonferroni"

    def cell(self, row: str, col: str) -> bool:
        return bool(self.significant[self.levels.index(row), self.levels.index(col)])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "test", "p", "p_adjusted", "significant"])
            for i, r in enumerate(self.levels):
                for j, c in enumerate(self.levels):
                    if i != j:
                        w.writerow([r, c, self.test, repr(float(self.pvalues[i, j])),
                                    repr(float(self.adjusted[i, j])), int(self.significant[i, j])])


def significance_matrix(grid: ExperimentGrid, axis: str = "metric", alpha: float = 0.05,
                        levels: list[str] | None = None) -> SignificanceMatrix:
    """Pairwise one-sided "greater" tests between the levels of ``axis``.

    Combos and targets are paired on the remaining (graph, target/combo, seed)
    keys and use the Wilcoxon signed-rank test; graphs are independent samples
    and use Mann-Whitney U. A pair whose shared differences are all zero gets
    p = 1.
    """
    col = _column(axis)
    levels = list(levels) if levels is not None else grid.levels(col)
    k = len(levels)
    if k < 2:
        raise MorphInputError(f"axis {axis!r} needs at least 2 levels, found {k}")
    p = np.ones((k, k))
    paired = col != "graph"
    blocks = _blocks(grid, col)
    for i, a in enumerate(levels):
        for j, b in enumerate(levels):
            if i == j:
                continue
            if paired:
                shared = sorted(set(blocks[a]) & set(blocks[b]))
                if not shared:
                    raise MorphInputError(f"levels {a!r} and {b!r} share no pairing blocks")
                x = np.array([blocks[a][key] for key in shared])
                y = np.array([blocks[b][key] for key in shared])
                if np.all(x == y):
                    continue
                p[i, j] = wilcoxon_signed_rank(x, y, "greater")
            else:
                x = np.array(list(blocks[a].values()))
                y = np.array(list(blocks[b].values()))
                if len(x) == 0 or len(y) == 0:
                    raise MorphInputError(f"graph {a!r} or {b!r} has no results")
                p[i, j] = mann_whitney_u(x, y, "greater")
    off = ~np.eye(k, dtype=bool)
    adjusted = np.ones((k, k))
    significant = np.zeros((k, k), dtype=bool)
    adjusted[off], significant[off] = bonferroni(p[off], alpha)
    test = "wilcoxon" if paired else "mann-whitney"
    return SignificanceMatrix(col, levels, p, adjusted, significant, alpha, test)


def omnibus(grid: ExperimentGrid, axis: str = "metric") -> tuple[float, float]:
    """Friedman test across the levels of a paired axis, on complete blocks only."""
    col = _column(axis)
    if col == "graph":
        raise ValueError("the graph axis holds independent samples; Friedman does not apply")
    levels = grid.levels(col)
    blocks = _blocks(grid, col)
    shared = set.intersection(*(set(blocks[l]) for l in levels))
    if len(shared) < 2:
        raise MorphInputError(f"axis {axis!r} has fewer than 2 complete blocks")
    keys = sorted(shared)
    return friedman(*[[blocks[l][key] for key in keys] for l in levels])


def summarize(grid: ExperimentGrid, axis: str) -> dict[str, dict[str, float]]:
    """Median, mean and count of percents per level of ``axis``."""
    col = _column(axis)
    out = {}
    for level in grid.levels(col):
        v = grid.values(**{col: level})
        out[level] = {"n": int(len(v)), "median": float(np.median(v)), "mean": float(np.mean(v))}
    return out
