import json

import pytest

import bench
import cli
from cli import EXIT_FAILED, EXIT_OK, EXIT_REJECT, EXIT_USAGE, main
from graph_core import read_edge_list, triangle_count
from run_pool import SweepPool
from utils.run_utils import InvariantError, PromiseError, ThresholdExceeded


def test_gen_writes_edge_list(tmp_path):
    out = tmp_path / "g.el"
    assert main(["gen", "--family", "c5_blowup", "--n", "25", "--seed", "3", "--out", str(out)]) == EXIT_OK
    g = read_edge_list(out)
    assert g.n == 25 and triangle_count(g) == 0


def test_gen_to_stdout(capsys):
    assert main(["gen", "--n", "5", "--family", "complete"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "5 10"


def test_run_require_witness_on_triangle_free_graph(tmp_path, capsys):
    graph = tmp_path / "g.el"
    main(["gen", "--family", "triangle_free_bipartite", "--n", "32", "--out", str(graph)])
    code = main(["run", "--alg", "walk", "--graph", str(graph), "--require-witness"])
    assert code == EXIT_REJECT
    report = json.loads(capsys.readouterr().out)
    assert report["outcome"] == "reject"
    assert report["n"] == 32


def test_run_writes_report_files(tmp_path):
    out = tmp_path / "reports" / "combo.json"
    assert main(["run", "--alg", "combo", "--n", "32", "--seed", "1", "--c0", "4", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["params"]["c0"] == 4
    assert (tmp_path / "reports" / "combo_readable.txt").exists()


def test_run_malformed_graph_exits_with_usage(tmp_path):
    graph = tmp_path / "bad.el"
    graph.write_text("4 2\n1 2\n1 2\n", encoding="utf-8")
    assert main(["run", "--alg", "walk", "--graph", str(graph)]) == EXIT_USAGE


def test_run_gc_needs_values_with_graph(tmp_path):
    graph = tmp_path / "g.el"
    graph.write_text("4 2\n1 2\n3 4\n", encoding="utf-8")
    assert main(["run", "--alg", "gc", "--graph", str(graph)]) == EXIT_USAGE
    values = tmp_path / "f.txt"
    values.write_text("1 1 0 0\n", encoding="utf-8")
    assert main(["run", "--alg", "gc", "--graph", str(graph), "--values", str(values),
                 "--require-witness"]) == EXIT_OK


def test_usage_errors():
    assert main([]) == EXIT_USAGE
    assert main(["run", "--alg", "bogus", "--n", "8"]) == EXIT_USAGE
    assert main(["run", "--alg", "walk"]) == EXIT_USAGE
    assert main(["missing-file-run", "--n", "4"]) == EXIT_USAGE


def test_bad_config_is_usage_error(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text("unknown_key: 1\n", encoding="utf-8")
    assert main(["--config", str(config), "gen", "--n", "5"]) == EXIT_USAGE
    assert main(["--config", str(tmp_path / "absent.yaml"), "gen", "--n", "5"]) == EXIT_USAGE


def test_sweep_then_fit(tmp_path, capsys):
    csv = tmp_path / "gc.csv"
    code = main(["sweep", "--alg", "gc", "--grid", "100", "400", "1600", "--seeds", "1",
                 "--threads", "2", "--csv", str(csv)])
    assert code == EXIT_OK and csv.exists()
    capsys.readouterr()
    assert main(["fit", "--csv", str(csv), "--alg", "gc"]) == EXIT_OK
    fits = json.loads(capsys.readouterr().out)
    assert 0.5 < fits["gc"]["slope"] < 0.9


def test_exact_baseline(capsys):
    code = main(["exact", "--values", "0", "1", "2", "3", "4", "5", "6", "7", "0", "--r", "3",
                 "--t1-max", "2", "--t2-max", "2"])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["baseline"] == pytest.approx(1 / 12, abs=1e-12)
    assert summary["n"] == 9


def test_validate_useful(capsys, tmp_path):
    csv = tmp_path / "useful.csv"
    assert main(["validate", "--lemma", "useful", "--csv", str(csv)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "useful: pass"
    assert csv.exists()


@pytest.mark.slow
def test_validate_exponents(capsys):
    assert main(["validate", "--lemma", "exponents"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "exponents: pass"


def _crash_seed_one(monkeypatch):
    real = bench.run_algorithm

    def run(algorithm, n, seed, *args, **kwargs):
        if seed == 1:
            raise RuntimeError("cell crashed")
        return real(algorithm, n, seed, *args, **kwargs)

    monkeypatch.setattr(bench, "run_algorithm", run)


def test_sweep_with_failed_cells_exits_failed(tmp_path, monkeypatch):
    _crash_seed_one(monkeypatch)
    csv = tmp_path / "walk.csv"
    code = main(["sweep", "--alg", "walk", "--grid", "16", "32", "--seeds", "2", "--csv", str(csv)])
    assert code == EXIT_FAILED
    assert not csv.exists()


def test_sweep_allow_partial_writes_csv_but_still_fails(tmp_path, monkeypatch):
    _crash_seed_one(monkeypatch)
    csv = tmp_path / "walk.csv"
    code = main(["sweep", "--alg", "walk", "--grid", "16", "32", "--seeds", "2", "--csv", str(csv),
                 "--allow-partial"])
    assert code == EXIT_FAILED
    assert len(csv.read_text(encoding="utf-8").splitlines()) == 3


def test_sweep_threads_flag_beats_environment(tmp_path, monkeypatch):
    seen = []

    class RecordingPool(SweepPool):
        def __init__(self, max_workers=None):
            super().__init__(max_workers)
            seen.append(self.max_workers)

    monkeypatch.setattr(cli, "SweepPool", RecordingPool)
    monkeypatch.setenv("QTRI_THREADS", "5")
    csv = tmp_path / "gc.csv"
    base = ["sweep", "--alg", "gc", "--grid", "100", "400", "--seeds", "1", "--csv", str(csv)]
    assert main(base + ["--threads", "2"]) == EXIT_OK
    assert main(base) == EXIT_OK
    assert seen == [2, 5]


@pytest.mark.parametrize("error", [PromiseError, ThresholdExceeded, InvariantError])
def test_run_time_errors_exit_failed(monkeypatch, error):
    def broken(*args, **kwargs):
        raise error("broken run")

    monkeypatch.setattr(cli, "run_algorithm", broken)
    assert main(["run", "--alg", "walk", "--n", "16"]) == EXIT_FAILED
