import json

import jsonschema
import numpy as np
import pytest

import metricmorph
from metricmorph.annealer import AnnealConfig, morph
from metricmorph import experiment
from metricmorph.errors import DegenerateDrawingError, MorphInputError, SizeMismatchError
from metricmorph.experiment import (ExperimentPlan, FrameSequence, GraphSource, all_combos, run_experiment,
                                    run_sequence)
from metricmorph.graph import dual_barabasi_albert, force_layout, shortest_paths, write_edgelist, write_points
from metricmorph.metrics import evaluate
from metricmorph.shapes import generate

SCHEMA = json.loads(metricmorph.SCHEMA_PATH.read_text())


def test_fifteen_combos():
    combos = all_combos()
    assert len(combos) == len(set(combos)) == 15
    assert combos[:4] == ["ST", "ELD", "CN", "AR"] and combos[-1] == "ST-ELD-CN-AR"


def test_default_plan_cell_count():
    plan = ExperimentPlan(graphs=["a", "b", "c", "d", "e"], seeds=[0])
    assert plan.cell_count() == 5 * 6 * 15 == 450


def test_plan_validation():
    with pytest.raises(MorphInputError):
        ExperimentPlan(graphs=[])
    with pytest.raises(MorphInputError):
        ExperimentPlan(combos=["ST-CN", "CN-ST"])
    with pytest.raises(ValueError):
        ExperimentPlan(anneal={"bogus": 1})


def test_graph_sources(tmp_path):
    g, d = GraphSource("bar-albert").load()
    assert (g.n, g.m, g.name) == (142, 175, "bar-albert")
    g, _ = GraphSource("grid-3x4").load()
    assert g.n == 12
    small = dual_barabasi_albert(20, seed=1)
    write_edgelist(small, tmp_path / "tiny.txt")
    write_points(np.random.default_rng(0).random((20, 2)) * 50, tmp_path / "tiny.csv")
    g, d = GraphSource(str(tmp_path / "tiny.txt"), str(tmp_path / "tiny.csv")).load()
    assert g.name == "tiny" and d.coords.max() <= 1


@pytest.fixture
def tiny_plan(tmp_path):
    g = dual_barabasi_albert(30, seed=4)
    write_edgelist(g, tmp_path / "tiny.txt")
    return ExperimentPlan(graphs=[str(tmp_path / "tiny.txt")], targets=["O"], combos=["ELD"], seeds=[0],
                          anneal={"n_max": 200}, out_dir=str(tmp_path / "out"), workers=1)


def test_single_cell_outputs(tiny_plan, tmp_path):
    grid = run_experiment(tiny_plan)
    out = tmp_path / "out"
    assert len(grid) == 1 and grid.failures == []
    assert sorted(p.name for p in out.glob("*.json") if p.name != "plan.json") == ["tiny__O__ELD__s0.json"]
    assert len(list(out.glob("*.svg"))) == 2
    doc = json.loads((out / "tiny__O__ELD__s0.json").read_text())
    jsonschema.validate(doc, SCHEMA)
    rows = (out / "results.csv").read_text().splitlines()
    assert rows[0] == "graph,target,combo,seed,percent" and len(rows) == 2


def test_resume_skips_and_force_recomputes(tiny_plan, tmp_path):
    run_experiment(tiny_plan)
    path = tmp_path / "out" / "tiny__O__ELD__s0.json"
    stamp = path.stat().st_mtime_ns
    grid = run_experiment(tiny_plan)
    assert path.stat().st_mtime_ns == stamp and len(grid) == 1
    tiny_plan.force = True
    run_experiment(tiny_plan)
    assert path.stat().st_mtime_ns != stamp


def test_reproducible_into_clean_dirs(tiny_plan, tmp_path):
    tiny_plan.combos = ["ST", "CN-AR"]
    tiny_plan.seeds = [0, 1]
    run_experiment(tiny_plan)
    first = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*")}
    tiny_plan.out_dir = str(tmp_path / "again")
    run_experiment(tiny_plan)
    second = {p.name: p.read_bytes() for p in (tmp_path / "again").glob("*") if p.name != "plan.json"}
    for name, data in second.items():
        assert first[name] == data, name


def test_failures_recorded_not_fatal(tiny_plan, tmp_path, monkeypatch):
    real = experiment.morph

    def flaky(start, dist, target, combo, cfg, meta=None):
        if combo == "AR":
            raise RuntimeError("boom")
        return real(start, dist, target, combo, cfg, meta=meta)

    monkeypatch.setattr(experiment, "morph", flaky)
    tiny_plan.combos = ["ELD", "AR"]
    grid = run_experiment(tiny_plan)
    assert len(grid) == 1 and grid.failures == [("tiny__O__AR__s0", "RuntimeError: boom")]
    assert (tmp_path / "out" / "failures.csv").read_text().splitlines()[1] == "tiny__O__AR__s0,RuntimeError: boom"
    assert len((tmp_path / "out" / "results.csv").read_text().splitlines()) == 2


def test_bad_target_file_fails_fast(tiny_plan, tmp_path):
    write_points(np.full((30, 2), 0.5), tmp_path / "flat.csv")
    tiny_plan.targets = [str(tmp_path / "flat.csv")]
    with pytest.raises(DegenerateDrawingError):
        run_experiment(tiny_plan)


def test_parallel_matches_serial(tiny_plan, tmp_path):
    tiny_plan.combos = ["ST", "AR"]
    run_experiment(tiny_plan)
    tiny_plan.out_dir = str(tmp_path / "par")
    tiny_plan.workers = 2
    run_experiment(tiny_plan)
    for name in ["tiny__O__ST__s0.json", "tiny__O__AR__s0.json"]:
        assert (tmp_path / "out" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()


@pytest.fixture(scope="module")
def seq_setup():
    g = dual_barabasi_albert(40, seed=6)
    return force_layout(g, seed=0), shortest_paths(g)


class TestSequence:
    def test_single_frame_equals_morph(self, seq_setup):
        d, D = seq_setup
        cfg = AnnealConfig(n_max=300, seed=2)
        Y = generate("O", 40)
        [r] = run_sequence(d, D, FrameSequence([Y]), "ELD", cfg)
        ref = morph(d, D, Y, "ELD", cfg)
        assert np.array_equal(r.final.coords, ref.final.coords)
        assert r.final_percent == ref.final_percent

    def test_chaining_and_baseline(self, seq_setup):
        d, D = seq_setup
        frames = FrameSequence([generate(s, 40) for s in ("O", "X", "GRID")])
        res = run_sequence(d, D, frames, "ST-AR", AnnealConfig(n_max=300, seed=0))
        base = dict(zip(["ST", "AR"], evaluate("ST-AR", d, D)))
        assert np.array_equal(res[1].start.coords, res[0].final.coords)
        assert np.array_equal(res[2].start.coords, res[1].final.coords)
        for r in res:
            assert r.baseline == base
            for k, v in zip(["ST", "AR"], evaluate("ST-AR", r.final, D)):
                assert abs(v - base[k]) <= r.epsilons[k]

    def test_no_chaining(self, seq_setup):
        d, D = seq_setup
        frames = FrameSequence([generate("O", 40), generate("X", 40)], chaining=False)
        for r in run_sequence(d, D, frames, "ELD", AnnealConfig(n_max=100)):
            assert np.array_equal(r.start.coords, d.coords)

    def test_rebaseline(self, seq_setup):
        d, D = seq_setup
        frames = FrameSequence([generate("O", 40), generate("X", 40)], rebaseline=True)
        res = run_sequence(d, D, frames, "ELD", AnnealConfig(n_max=200))
        assert res[1].baseline["ELD"] == evaluate("ELD", res[0].final, D)[0]

    def test_percent_relative_to_original(self, seq_setup):
        d, D = seq_setup
        Y = generate("O", 40)
        res = run_sequence(d, D, FrameSequence([Y, Y]), "ELD", AnnealConfig(n_max=200))
        assert res[1].baseline_loss == res[0].baseline_loss

    def test_identical_frames_nondecreasing(self, seq_setup):
        d, D = seq_setup
        Y = generate("GRID", 40)
        per_frame = []
        for seed in range(5):
            res = run_sequence(d, D, FrameSequence([Y, Y, Y]), "ELD", AnnealConfig(n_max=1500, seed=seed))
            per_frame.append([r.final_percent for r in res])
        med = np.median(per_frame, axis=0)
        assert med[0] <= med[1] <= med[2]

    def test_size_mismatch_before_running(self, seq_setup, tmp_path):
        d, D = seq_setup
        write_points(np.random.default_rng(0).random((39, 2)), tmp_path / "bad.csv")
        frames = FrameSequence([generate("O", 40), str(tmp_path / "bad.csv")])
        with pytest.raises(SizeMismatchError):
            run_sequence(d, D, frames, "ELD", AnnealConfig(n_max=10), out_dir=tmp_path / "seq")
        assert not (tmp_path / "seq").exists()

    def test_writes_frames(self, seq_setup, tmp_path):
        d, D = seq_setup
        frames = FrameSequence([generate("O", 40), generate("X", 40)])
        run_sequence(d, D, frames, "ELD", AnnealConfig(n_max=50), out_dir=tmp_path / "seq")
        names = sorted(p.name for p in (tmp_path / "seq").iterdir())
        assert names == ["frame_000.json", "frame_000.svg", "frame_001.json", "frame_001.svg"]

    def test_empty(self):
        with pytest.raises(MorphInputError):
            FrameSequence([])
