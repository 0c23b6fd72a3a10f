import json

import numpy as np
import pytest

from centred_qso import io
from centred_qso.main import run


def _manifest(path):
    return json.loads((path / "manifest.json").read_text(encoding="utf-8"))


def test_depth_prints_fourteen(tmp_path, capsys):
    code = run(
        ["depth", "--alpha", "0.05", "--delta", "0.01", "--vf", "1", "--vg", "0.5",
         "--log", "natural", "--output-dir", str(tmp_path)]
    )
    assert code == 0
    assert capsys.readouterr().out.strip() == "14"
    manifest = _manifest(tmp_path)
    assert manifest["log_base"] == "natural"
    assert manifest["subcommand"] == "depth"
    assert json.loads((tmp_path / "depth.json").read_text(encoding="utf-8"))["depth"] == 14


def test_fixed_point_residual(tmp_path, capsys):
    code = run(
        ["fixed-point", "--candidate", "normal:0,1", "--g", "normal:0,0.5",
         "--grid", "0.05:200", "--output-dir", str(tmp_path)]
    )
    assert code == 0
    residual = float(capsys.readouterr().out.split()[1])
    assert residual < 1e-12


def test_draw_exact_point_masses(tmp_path):
    code = run(
        ["draw-exact", "--f", "pointmass:2", "--g", "pointmass:0", "--n", "3",
         "--count", "10", "--output-dir", str(tmp_path)]
    )
    assert code == 0
    assert io.load_values(tmp_path / "samples.csv").tolist() == [2.0] * 10


@pytest.mark.parametrize(
    "argv",
    [
        ["unknown-command"],
        ["draw-exact", "--g", "normal:0,0.5", "--n", "3"],
        ["draw-exact", "--f", "normal:0,1", "--g", "normal:0,0.5", "--n", "27"],
        ["draw-exact", "--f", "gamma:1", "--g", "normal:0,0.5", "--n", "3"],
        ["depth", "--alpha", "2", "--delta", "0.01", "--vf", "1", "--vg", "0.5"],
    ],
    ids=["unknown", "missing-seed", "guard", "bad-family", "bad-alpha"],
)
def test_validation_errors_exit_two(argv, tmp_path):
    assert run(argv + ["--output-dir", str(tmp_path)]) == 2


def test_depth_cap_exits_three(tmp_path):
    code = run(
        ["cf-limit", "--g", "normal:0,0.5", "--grid", "0.1:10", "--depth-cap", "2",
         "--output-dir", str(tmp_path)]
    )
    assert code == 3
    error = json.loads((tmp_path / "error.json").read_text(encoding="utf-8"))
    assert error["kind"] == "NonConvergenceError"


def test_rerun_from_manifest_is_identical(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    argv = ["draw-exact", "--f", "exponential:1", "--g", "normal:0,0.5", "--n", "4",
            "--count", "5000", "--seed", "7"]
    assert run(argv + ["--output-dir", str(first)]) == 0
    assert run(["draw-exact", "--config", str(first / "manifest.json"),
                "--output-dir", str(second)]) == 0
    assert (first / "samples.csv").read_bytes() == (second / "samples.csv").read_bytes()


def test_output_independent_of_threads(tmp_path):
    argv = ["draw-approx", "--f", "exponential:1", "--g", "normal:0,0.5",
            "--alpha", "0.05", "--delta", "0.01", "--log", "natural", "--count", "9000"]
    assert run(argv + ["--threads", "1", "--output-dir", str(tmp_path / "a")]) == 0
    assert run(argv + ["--threads", "4", "--output-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "samples.csv").read_bytes() == (tmp_path / "b" / "samples.csv").read_bytes()


def test_seed_env_changes_output(tmp_path, monkeypatch):
    argv = ["draw-exact", "--f", "normal:0,1", "--g", "normal:0,0.5", "--n", "2", "--count", "50"]
    assert run(argv + ["--output-dir", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("QSO_SEED", "1234")
    assert run(argv + ["--output-dir", str(tmp_path / "b")]) == 0
    assert _manifest(tmp_path / "b")["master_seed"] == 1234
    a = io.load_values(tmp_path / "a" / "samples.csv")
    b = io.load_values(tmp_path / "b" / "samples.csv")
    assert not np.array_equal(a, b)


def test_cf_iterate_and_json_samples(tmp_path):
    assert run(["cf-iterate", "--f", "exponential:1", "--g", "normal:0,0.5", "--n", "3",
                "--grid", "0.5:4", "--output-dir", str(tmp_path)]) == 0
    table = io.load_table(tmp_path / "cf.csv")
    assert list(table.columns) == ["s", "re", "im"]
    assert len(table) == 9
    assert run(["draw-exact", "--f", "pointmass:1", "--g", "pointmass:0", "--n", "1",
                "--count", "3", "--format", "json", "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "samples.json").exists()


def test_stable_limit_and_tail_check(tmp_path, capsys):
    assert run(["stable-limit", "--dist", "cauchy:0,1", "--n-values", "1,2,4",
                "--grid", "0.1:50", "--output-dir", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "stable_limit.json").read_text(encoding="utf-8"))["non_increasing"]
    assert run(["tail-check", "--g", "stable:1.5", "--tail-A", "1", "--tail-p", "1.5",
                "--tail-s0", "10", "--grid", "0.05:200", "--output-dir", str(tmp_path)]) == 0
    assert "holds True" in capsys.readouterr().out


def test_simulate_and_compare(tmp_path):
    assert run(["simulate-population", "--f", "exponential:1", "--g", "normal:0,0.5",
                "--K", "100", "--n", "3", "--output-dir", str(tmp_path)]) == 0
    means = io.load_table(tmp_path / "means.csv")
    assert means["generation"].tolist() == [0, 1, 2, 3]
    assert run(["compare", "--f", "normal:1,1", "--g", "normal:0,0.5", "--n", "14",
                "--alpha", "0.05", "--delta", "0.01", "--log", "natural",
                "--count", "2000", "--output-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "compare.json").read_text(encoding="utf-8"))
    assert report["depth"] == 14
    assert report["ks"]["sample_sizes"] == [2000, 2000]


def test_reduced_replication(tmp_path):
    assert run(["replicate-figures", "--population-size", "200", "--iterations", "1,3",
                "--figures", "2", "--bins", "10", "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "fig2_top_n1.csv").exists()
    assert "figures_summary.json" in _manifest(tmp_path)["outputs"]


def test_full_replication_matches_published_means(tmp_path):
    assert run(["replicate-figures", "--output-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "figures_summary.json").read_text(encoding="utf-8"))
    entries = summary["entries"]
    assert len(entries) == 18
    assert summary["all_passed"]
    failed = [(e["figure"], e["row"], e["n"]) for e in entries if not e["passed"] and not e["expected_mismatch"]]
    assert failed == []
    assert {e["depth"] for e in entries if e["figure"] == 2} == {14}
    assert {e["depth"] for e in entries if e["figure"] == 3} == {23}


def test_kernel_flag_alias(tmp_path, capsys):
    assert run(["fixed-point", "--candidate", "normal:1,1", "--kernel", "normal:0,0.5",
                "--grid", "0.05:200", "--output-dir", str(tmp_path)]) == 0
    assert float(capsys.readouterr().out.split()[1]) < 1e-12


def test_stable_limit_with_fitted_constant(tmp_path):
    assert run(["stable-limit", "--dist", "cauchy:0,1", "--fit-tail", "--n-values", "1,2",
                "--grid", "0.1:20", "--output-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "stable_limit.json").read_text(encoding="utf-8"))
    assert report["C"] == pytest.approx(1.0 / np.pi, rel=0.01)


@pytest.mark.parametrize(
    "content",
    [
        '{"seed_dist": {"family": "empirical", "params": {}}}',
        '{"seed_dist": {"family": "normal", "params": {"mean": "abc", "variance": 1}}}',
        '{"count": "ten"}',
        '{"hist_range": [1.0]}',
        '{"count": ',
    ],
    ids=["empirical-without-values", "non-numeric-parameter", "mistyped-field", "short-range", "broken-json"],
)
def test_malformed_config_exits_two(content, tmp_path):
    path = tmp_path / "config.json"
    path.write_text(content, encoding="utf-8")
    argv = ["draw-exact", "--config", str(path), "--g", "pointmass:0", "--n", "1",
            "--output-dir", str(tmp_path / "out")]
    assert run(argv) == 2


def test_fixed_point_of_tabulated_cf(tmp_path, capsys):
    assert run(["cf-iterate", "--f", "normal:0,1", "--g", "normal:0,0.5", "--n", "5",
                "--grid", "0.05:200", "--output-dir", str(tmp_path)]) == 0
    assert run(["fixed-point", "--candidate-grid", str(tmp_path / "cf.csv"),
                "--g", "normal:0,0.5", "--output-dir", str(tmp_path)]) == 0
    assert float(capsys.readouterr().out.split()[1]) < 1e-12
    assert _manifest(tmp_path)["laws"] == {"kernel": "normal:0.0,0.5"}


def test_cauchy_like_stable_limit_runs(tmp_path):
    assert run(["stable-limit", "--dist", "cauchylike:0,1,2", "--n-values", "1,4,16,64,256,1024",
                "--grid", "0.05:100", "--output-dir", str(tmp_path)]) == 0
    table = io.load_table(tmp_path / "stable_limit.csv")
    assert table["sup_error"].max() < 1e-8
