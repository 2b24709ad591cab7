import csv
import json
from pathlib import Path

import pytest

from max2sat.cli import main
from max2sat.pipeline import FIGURES, is_timing_column


def write_config(tmp_path: Path, **extra) -> Path:
    cfg = {"seed": 3, "out": "out", "graph": {"default": "ideal"},
           "ensembles": [{"kind": "chimera", "n": [16, 24], "alpha": [0.5, 1.5, 2.0], "count": 6},
                         {"kind": "random", "n": [16, 24], "alpha": [0.5, 1.5, 2.0], "count": 6},
                         {"kind": "fixed_M", "n": [16], "m": [20], "count": 3}],
           "solver": {"repeats": 1},
           "anneal": {"reads": 10, "sweeps": 100}}
    cfg.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def rows(path: Path) -> list[dict]:
    with path.open() as fh:
        return list(csv.DictReader(fh))


def run_all(cfg: Path, out: Path, workers: int = 1) -> None:
    common = ["--config", str(cfg), "--out", str(out), "--workers", str(workers)]
    assert main(["generate", *common]) == 0
    assert main(["solve", *common]) == 0
    assert main(["anneal", *common]) == 0
    assert main(["analyze", *common, "--figure", "all"]) == 0


def stripped(path: Path) -> str:
    """File contents with timing columns or keys removed."""
    if path.suffix == ".csv":
        with path.open() as fh:
            r = list(csv.reader(fh))
        keep = [i for i, c in enumerate(r[0]) if not is_timing_column(c)]
        return "\n".join(",".join(row[i] for i in keep) for row in r)
    if path.suffix == ".json":
        def clean(v):
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items() if not is_timing_column(k)}
            if isinstance(v, list):
                return [clean(x) for x in v]
            return v
        data = clean(json.loads(path.read_text()))
        data.get("config", {}).pop("out", None)
        data.get("config", {}).pop("workers", None)
        return json.dumps(data, sort_keys=True)
    return path.read_text()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_config(tmp)
    run_all(cfg, tmp / "a")
    return cfg, tmp


def test_outputs_present(pipeline):
    _, tmp = pipeline
    out = tmp / "a"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["instances"] == 2 * 2 * 3 * 6 + 3
    assert len(list((out / "instances").glob("*.jsonl"))) == len(manifest["groups"])
    for fig in FIGURES:
        assert (out / "analysis" / f"{fig}.csv").exists()
        assert (out / "analysis" / f"{fig}.json").exists()


def test_results_join_one_to_one(pipeline):
    _, tmp = pipeline
    out = tmp / "a"
    ids = [json.loads(l)["id"] for f in sorted((out / "instances").glob("*.jsonl"))
           for l in f.read_text().splitlines()]
    assert len(ids) == len(set(ids))
    exact = [r["instance_id"] for r in rows(out / "exact.csv")]
    anneal = rows(out / "anneal.csv")
    assert sorted(exact) == sorted(ids)
    assert sorted(r["instance_id"] for r in anneal) == sorted(ids)
    assert all(0 <= float(r["p_success"]) <= 1 for r in anneal)


def test_psat_table(pipeline):
    _, tmp = pipeline
    table = rows(tmp / "a" / "analysis" / "psat.csv")
    assert {"alpha", "psat"} <= set(table[0])
    assert all(0 <= float(r["psat"]) <= 1 for r in table)


def test_solve_rerun_is_idempotent(pipeline):
    cfg, tmp = pipeline
    out = tmp / "a"
    before = stripped(out / "exact.csv")
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    assert stripped(out / "exact.csv") == before


def test_worker_count_does_not_change_outputs(pipeline):
    cfg, tmp = pipeline
    run_all(cfg, tmp / "b", workers=2)
    a, b = tmp / "a", tmp / "b"
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for rel in files:
        assert stripped(a / rel) == stripped(b / rel), rel


def test_empty_input_gives_header_only(tmp_path):
    cfg = write_config(tmp_path, ensembles=[])
    out = tmp_path / "o"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "exact.csv").read_text() == \
        "instance_id,optimum,nodes_expanded,elapsed_ns,optimal_flag,lower_bound\n"


def test_single_cell_one_file(tmp_path):
    cfg = write_config(tmp_path, ensembles=[{"kind": "random", "n": 10, "alpha": 1.0, "count": 4}])
    out = tmp_path / "o"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    files = list((out / "instances").glob("*.jsonl"))
    assert len(files) == 1 and len(files[0].read_text().splitlines()) == 4


def test_capacity_violation_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, ensembles=[{"kind": "chimera", "n": 16, "alpha": 9.5, "count": 1}])
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "clause density" in capsys.readouterr().err


def test_missing_mask_exit_2(tmp_path):
    cfg = write_config(tmp_path, graph={"mask": "nope.json"})
    assert main(["generate", "--config", str(cfg)]) == 2


def test_bad_json_and_unknown_keys_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["generate", "--config", str(bad)]) == 2
    assert main(["generate", "--config", str(write_config(tmp_path, colour="red"))]) == 2


def test_unknown_figure_is_usage_error(pipeline):
    cfg, tmp = pipeline
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "--config", str(cfg), "--figure", "nope"])
    assert exc.value.code == 2


def test_help_lists_every_figure(capsys):
    assert main(["help"]) == 0
    text = capsys.readouterr().out
    assert all(f in text for f in FIGURES)


def test_anneal_without_exact_exit_3(tmp_path):
    cfg = write_config(tmp_path, ensembles=[{"kind": "random", "n": 10, "alpha": 1.0, "count": 2}])
    out = tmp_path / "o"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["anneal", "--config", str(cfg), "--out", str(out)]) == 3


def test_budget_exhaustion_exit_4(tmp_path):
    cfg = write_config(tmp_path, ensembles=[{"kind": "random", "n": 300, "alpha": 2.0, "count": 2}])
    out = tmp_path / "o"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--budget-ms", "0.001"]) == 4
    table = rows(out / "exact.csv")
    assert len(table) == 2 and all(r["optimal_flag"] == "0" for r in table)


def test_flags_override_config(tmp_path):
    cfg = write_config(tmp_path, ensembles=[{"kind": "random", "n": 10, "alpha": 1.0, "count": 2}])
    out = tmp_path / "o"
    assert main(["generate", "--config", str(cfg), "--out", str(out), "--seed", "11"]) == 0
    assert json.loads((out / "manifest.json").read_text())["seed"] == 11
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["anneal", "--config", str(cfg), "--out", str(out), "--reads", "7",
                 "--noise-sigma-h", "0.1", "--noise-sigma-j", "0.1"]) == 0
    r = rows(out / "anneal.csv")[0]
    assert r["reads"] == "7" and r["noise_sigma_h"] == "0.1"


def test_graph_info(tmp_path, capsys):
    assert main(["graph-info", "--n", "108", "--out", str(tmp_path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["active"] == 108 and info["edges"] == 255
    assert info["subsets"][0]["max_clause_density"] == "85/9"
    assert (tmp_path / "graph_edges.csv").exists()


def test_config_defaults():
    from max2sat.config import AnalysisConfig, AnnealConfig, SolverConfig
    a = AnnealConfig()
    assert (a.reads, a.sweeps, a.beta_initial, a.beta_final) == (100, 1000, 0.1, 5.0)
    assert SolverConfig().repeats == 10
    assert AnalysisConfig().anneal_thresholds is None
