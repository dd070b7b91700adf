import json
from pathlib import Path

import pytest

from lab import cli
from lab.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, ExperimentConfig, build_parser, main, resolve_config


def _run(*argv: str) -> int:
    return main(list(argv))


def _json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def test_bessel_at_pi(tmp_path):
    out = tmp_path / "bessel.json"
    assert _run("bessel", "--alpha", "-0.5", "--x", "3.14159265", "--format", "json", "--out", str(out)) == EXIT_OK
    report = _json(out)
    assert report["passed"]
    assert report["rows"][0]["value"] == pytest.approx(-1.0, abs=1e-8)
    assert report["records"][0]["S"] == pytest.approx(1.0, abs=1e-9)


def test_report_to_stdout(capsys):
    assert _run("bessel", "--alpha", "0", "--x", "1", "--out", "-") == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# generated_at=")
    assert lines[1] == "alpha,x,value,m,lower,upper,envelope_valid"


def test_default_output_directory(report_dir):
    assert _run("dyadic-stats", "--function", "power_tail(2)", "--n-max", "2") == EXIT_OK
    assert (report_dir / "dyadic-stats.csv").exists()


@pytest.mark.parametrize("argv", [
    ["gm-check", "--function", "nope"],
    ["gm-check", "--function", "power_tail(2)", "--lambda", "3"],
    ["bessel", "--alpha", "-1"],
    ["dyadic-stats"],
    ["dyadic-stats", "--sequence", "inverse_square"],
    ["experiment", "no-such-experiment"],
    ["experiment"],
    ["bound-report", "--function", "power_tail(1.5)", "--alpha", "0"],
    ["transform", "--function", "trunc_exp", "--n-values", "1,-2"],
])
def test_configuration_errors(argv, tmp_path):
    assert _run(*argv, "--out", str(tmp_path / "report.csv")) == EXIT_CONFIG


def test_value_error_during_run_exits_with_one(monkeypatch, tmp_path):
    def broken(config):
        raise ValueError("数値が範囲外")

    monkeypatch.setitem(cli.SUBCOMMANDS, "bessel", broken)
    assert _run("bessel", "--out", str(tmp_path / "bessel.csv")) == EXIT_FAILED
    assert not (tmp_path / "bessel.csv").exists()


def test_unknown_subcommand_is_rejected_by_parser():
    with pytest.raises(SystemExit) as excinfo:
        _run("nope")
    assert excinfo.value.code == 2


def test_failed_check_exits_with_one(tmp_path):
    out = tmp_path / "gms.json"
    assert _run("gm-check", "--sequence", "alternating_harmonic", "--c", "10", "--format", "json",
                "--out", str(out)) == EXIT_FAILED
    report = _json(out)
    assert not report["passed"]
    assert report["failures"]


def test_fitted_check_passes(tmp_path):
    assert _run("gm-check", "--sequence", "inverse_square", "--out", str(tmp_path / "gms.csv")) == EXIT_OK


def test_reruns_are_identical_apart_from_header(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["dyadic-stats", "--function", "power_tail(2)", "--n-max", "4"]
    assert _run(*argv, "--out", str(first)) == EXIT_OK
    assert _run(*argv, "--out", str(second)) == EXIT_OK
    a, b = first.read_text().splitlines(), second.read_text().splitlines()
    assert a[1:] == b[1:]
    assert len(a) == 2 + 5


def test_worker_count_does_not_change_report(tmp_path):
    argv = ["transform", "--function", "trunc_exp", "--u-min", "0.1", "--u-max", "10", "--u-per-decade", "2",
            "--n-values", "0.5,1,2"]
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert _run(*argv, "--out", str(serial)) == EXIT_OK
    assert _run(*argv, "--workers", "3", "--out", str(parallel)) == EXIT_OK
    s, p = serial.read_text().splitlines(), parallel.read_text().splitlines()
    assert s[0].split(" ")[1:] == p[0].split(" ")[1:]
    assert s[1:] == p[1:]
    assert s[1] == "alpha,u,N,value,error_estimate"
    assert len(s) == 2 + 6 * 3


def test_flags_override_config_file(tmp_path):
    config_file = tmp_path / "run.conf"
    config_file.write_text("# 実行設定\nn_max = 3\nnu = 2\nn-values = 5, 50\n", encoding="utf-8")
    args = build_parser().parse_args(["dyadic-stats", "--config", str(config_file), "--n-max", "7"])
    config = resolve_config(args)
    assert config.n_max == 7
    assert config.nu == 2
    assert config.n_values == [5.0, 50.0]


def test_missing_config_file(tmp_path):
    assert _run("dyadic-stats", "--function", "power_tail(2)", "--config", str(tmp_path / "missing.conf")) == EXIT_CONFIG


def test_lambda_sets_nu():
    config = ExperimentConfig.model_validate({"lambda": 4})
    assert config.nu == 2
    assert "out" not in config.fingerprint()


def test_good_bad_dichotomy_experiment(tmp_path):
    out = tmp_path / "dichotomy.json"
    assert _run("experiment", "good-bad-dichotomy", "--n-max", "6", "--format", "json", "--out", str(out)) == EXIT_OK
    report = _json(out)
    records = {(r["entry"], r["nu"]): r for r in report["records"]}
    assert records[("power_tail(2)", 1)]["all_good"]
    assert records[("power_tail(3)", 1)]["all_bad_from_2nu"]
    summary = (tmp_path / "summary.md").read_text(encoding="utf-8")
    assert summary.startswith("<!-- generated_at=")
    assert report["run_id"] in summary


def test_square_wave_experiment(tmp_path):
    assert _run("experiment", "square-wave", "--out", str(tmp_path / "square.csv")) == EXIT_OK


@pytest.mark.slow
def test_bound_report_writes_summary(tmp_path):
    out = tmp_path / "bound.json"
    code = _run("bound-report", "--function", "power_tail(3)", "--n-values", "1,10", "--u-min", "0.01",
                "--u-max", "100", "--u-per-decade", "4", "--format", "json", "--out", str(out))
    assert code == EXIT_OK
    assert len(_json(out)["rows"]) == 4
    assert (tmp_path / "summary.md").exists()


@pytest.mark.slow
@pytest.mark.parametrize("name", ["ibp-identity", "lemma-witness", "series-divergence", "abel-olivier",
                                  "sharpness-cosine"])
def test_named_experiments_pass(name, tmp_path):
    assert _run("experiment", name, "--out", str(tmp_path / "experiment.csv")) == EXIT_OK
