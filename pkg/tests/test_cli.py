import json

import pytest

from fwsparse import (
    build_identity_hadamard,
    sample_instance,
    save_dictionary,
    save_instance,
)
from fwsparse.cli import main


@pytest.fixture
def workspace(tmp_path):
    D = build_identity_hadamard(16)
    dict_path = tmp_path / "dict.txt"
    save_dictionary(D, dict_path)
    inst = sample_instance(D, 2, seed=5, dictionary_ref="identity_hadamard(d=16, n=32, seed=0)")
    inst_path = tmp_path / "inst.json"
    save_instance(inst, inst_path)
    config = {
        "generator": {"kind": "identity_hadamard", "d": 16, "n": 32, "m": 2, "seed": 42},
        "beta_policy": {"kind": "multiple_of_xstar_l1", "factor": 2.0},
        "trials": 3,
        "solver": {"algorithm": "fw", "tol_residual": 1e-9, "max_iters": 1000},
        "output_dir": str(tmp_path / "expout"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config, indent=2))
    return tmp_path, dict_path, inst_path, config_path, inst


def test_analyze_emits_report_json(workspace, capsys):
    _, dict_path, *_ = workspace
    assert main(["analyze", str(dict_path), "--m", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["mu"] == pytest.approx(0.25)
    assert report["babel"] == pytest.approx([0.25, 0.5, 0.75])
    assert report["max_recoverable_m"] == 2
    assert report["support_sigma_min"] is None


def test_solve_writes_trace_and_summary(workspace, capsys):
    tmp_path, dict_path, inst_path, _, inst = workspace
    trace_path = tmp_path / "trace.csv"
    rc = main([
        "solve", str(dict_path), str(inst_path),
        "--algo", "fw", "--beta", str(2 * inst.x_star_l1),
        "--trace", str(trace_path),
    ])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["terminated_by"] == "tolerance"
    assert summary["final_residual"] <= 1e-9
    lines = trace_path.read_text().splitlines()
    assert lines[0] == "k,i_k,gamma,residual_norm,x_l1,in_support"
    assert len(lines) == summary["iterations"] + 1
    assert all(line.split(",")[5] in ("0", "1") for line in lines[1:])


def test_solve_each_algorithm(workspace, capsys):
    _, dict_path, inst_path, _, inst = workspace
    for algo in ("mp", "omp"):
        assert main(["solve", str(dict_path), str(inst_path), "--algo", algo]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["algorithm"] == algo
        assert summary["final_residual"] <= 1e-9


def test_experiment_passes_and_writes_reports(workspace, capsys):
    tmp_path, _, _, config_path, _ = workspace
    assert main(["experiment", str(config_path), "--no-plots"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["violations"] == 0
    assert (tmp_path / "expout" / "summary.json").exists()
    assert (tmp_path / "expout" / "trial_000_trace.csv").exists()
    assert not (tmp_path / "expout" / "residual_decay.png").exists()


def test_experiment_renders_figures_by_default(workspace, capsys):
    tmp_path, _, _, config_path, _ = workspace
    assert main(["experiment", str(config_path)]) == 0
    assert (tmp_path / "expout" / "residual_decay.png").exists()
    assert (tmp_path / "expout" / "support_purity.png").exists()


def test_compare_and_report(workspace, capsys):
    tmp_path, _, _, config_path, _ = workspace
    assert main(["compare", str(config_path), "--no-plots"]) == 0
    capsys.readouterr()
    assert (tmp_path / "expout" / "comparison.csv").exists()
    assert main(["report", str(tmp_path / "expout")]) == 0
    listed = capsys.readouterr().out.splitlines()
    assert any(line.endswith("comparison_curves.png") for line in listed)
    assert (tmp_path / "expout" / "comparison_curves.png").exists()


def test_report_on_empty_directory_fails(tmp_path, capsys):
    empty = tmp_path / "nothing"
    empty.mkdir()
    assert main(["report", str(empty)]) == 1


def test_analyze_rejects_bad_file(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n1 0\n0 0\n")
    from fwsparse.instances import DictionaryFileError

    with pytest.raises(DictionaryFileError):
        main(["analyze", str(bad)])
