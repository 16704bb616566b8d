import json

import numpy as np
import pytest

from metricmorph.cli import main
from metricmorph.graph import dual_barabasi_albert, write_edgelist


@pytest.fixture
def ws(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    write_edgelist(dual_barabasi_albert(25, seed=3), tmp_path / "g.txt")
    assert main(["layout", "--graph", "g.txt", "-o", "g.csv", "--quiet"]) == 0
    return tmp_path


def test_layout_and_metrics(ws, capsys):
    capsys.readouterr()
    assert main(["metrics", "--graph", "g.txt", "--coords", "g.csv", "--json"]) == 0
    vals = json.loads(capsys.readouterr().out)
    assert set(vals) == {"ST", "ELD", "CN", "AR"} and isinstance(vals["CN"], int)
    assert main(["metrics", "--graph", "g.txt", "--coords", "g.csv"]) == 0
    assert capsys.readouterr().out.splitlines()[0].startswith("ST: ")


def test_shapes_emit(ws):
    assert main(["shapes", "emit", "grid", "25", "-o", "t.csv"]) == 0
    assert len((ws / "t.csv").read_text().splitlines()) == 26


def test_morph(ws, capsys):
    rc = main(["morph", "--graph", "g.txt", "--coords", "g.csv", "--target", "O", "--qm", "ST", "--qm", "CN",
               "--iterations", "200", "--seed", "4", "--out", "o"])
    assert rc == 0
    doc = json.loads((ws / "o" / "morph_g__O__ST-CN__s4.json").read_text())
    assert doc["config"]["n_max"] == 200 and doc["config"]["seed"] == 4
    assert (ws / "o" / "morph_g__O__ST-CN__s4.svg").exists()
    assert "final percent:" in capsys.readouterr().out


def test_global_options_before_subcommand(ws):
    rc = main(["--seed", "2", "--out", "o", "morph", "--graph", "g.txt", "--target", "X", "--qm", "ELD",
               "--iterations", "20"])
    assert rc == 0 and (ws / "o" / "morph_g__X__ELD__s2.json").exists()


def test_config_and_override(ws):
    (ws / "c.json").write_text(json.dumps({"anneal": {"n_max": 30, "t_init": 0.2}}))
    assert main(["morph", "--graph", "g.txt", "--target", "O", "--qm", "AR", "--config", "c.json"]) == 0
    doc = json.loads((ws / "morph_g__O__AR__s0.json").read_text())
    assert doc["config"]["n_max"] == 30 and doc["config"]["t_init"] == 0.2
    assert main(["morph", "--graph", "g.txt", "--target", "O", "--qm", "AR", "--config", "c.json",
                 "--iterations", "10"]) == 0
    doc = json.loads((ws / "morph_g__O__AR__s0.json").read_text())
    assert doc["config"]["n_max"] == 10


def test_experiment_analyze_render(ws, capsys):
    rc = main(["experiment", "--graphs", "g.txt", "--targets", "O", "X", "--combos", "ST", "ELD",
               "--seeds", "3", "--iterations", "100", "--workers", "1", "--out", "res", "--quiet"])
    assert rc == 0
    assert len((ws / "res" / "results.csv").read_text().splitlines()) == 1 + 12
    assert main(["analyze", "--results", "res", "--axis", "all", "--out", "an"]) == 0
    assert (ws / "an" / "significance_metric.csv").exists() and (ws / "an" / "significance_target.svg").exists()
    assert not (ws / "an" / "significance_graph.csv").exists()  # one graph only
    assert main(["analyze", "--results", "res", "--axis", "graph"]) == 1
    assert main(["render", "--graph", "g.txt", "--result", "res/g__O__ST__s0.json", "-o", "f.svg"]) == 0
    assert (ws / "f.svg").read_text().count("<circle") == 25


def test_sequence(ws, capsys):
    (ws / "frames").mkdir()
    for i, s in enumerate(["O", "X"]):
        assert main(["shapes", "emit", s, "25", "-o", f"frames/{i}_{s}.csv"]) == 0
    rc = main(["sequence", "--graph", "g.txt", "--coords", "g.csv", "--frames", "frames", "--qm", "ELD",
               "--iterations", "50", "--out", "seq"])
    assert rc == 0
    assert sorted(p.name for p in (ws / "seq").glob("*.json")) == ["frame_000.json", "frame_001.json"]
    out = capsys.readouterr().out
    assert "frame 0:" in out and "frame 1:" in out


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["morph", "--graph", "g.txt", "--target", "O"],  # no --qm
    ["morph", "--graph", "nope.txt", "--target", "O", "--qm", "ST"],
    ["morph", "--graph", "g.txt", "--target", "O", "--qm", "XY"],
    ["morph", "--graph", "g.txt", "--target", "O", "--qm", "ST", "--iterations", "-5"],
    ["shapes", "emit", "GRID", "30", "-o", "t.csv", "--config", "missing.json"],
    ["render", "--graph", "g.txt", "-o", "x.svg"],
])
def test_input_errors_exit_1(ws, argv):
    assert main(argv) == 1


def test_size_mismatch_exit_1(ws):
    assert main(["shapes", "emit", "O", "24", "-o", "t.csv"]) == 0
    assert main(["morph", "--graph", "g.txt", "--target", "t.csv", "--qm", "ST"]) == 1


def test_runtime_failure_exit_2(ws, monkeypatch):
    from metricmorph import cli

    def broken(*a, **k):
        raise RuntimeError("jitter exhausted")

    monkeypatch.setattr(cli, "morph", broken)
    assert main(["morph", "--graph", "g.txt", "--target", "O", "--qm", "ST"]) == 2


def test_experiment_cell_failure_exit_2(ws, monkeypatch):
    from metricmorph import experiment

    def broken(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(experiment, "morph", broken)
    assert main(["experiment", "--graphs", "g.txt", "--targets", "O", "--combos", "ST", "--seeds", "1",
                 "--workers", "1", "--out", "res", "--quiet"]) == 2


def test_help(capsys):
    assert main(["--help"]) == 0
    assert "morph" in capsys.readouterr().out
