import csv
import io
import json

import pytest

from fgmrisk.cli import main, reproduce_table1, reproduce_table2


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ruin_closed_reference_point(capsys):
    code, out, _ = run_cli(capsys, "ruin", "--x", "0", "--preset", "paper-sec6",
                           "--theta", "0.5", "--method", "closed")
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["results"][0]["psi"] - 0.528807) <= 1e-5


def test_ruin_closed_second_reference_point(capsys):
    code, out, _ = run_cli(capsys, "ruin", "--x", "10", "--preset", "paper-sec6",
                           "--theta", "-0.1", "--method", "closed")
    payload = json.loads(out)
    assert abs(payload["results"][0]["psi"] - 0.256692) <= 1e-5


def test_ruin_json_serializes_many_digits(capsys):
    _, out, _ = run_cli(capsys, "ruin", "--x", "3.5", "--preset", "paper-sec6",
                        "--method", "closed")
    value = json.loads(out)["results"][0]["psi"]
    text = out[out.index('"psi"'):]
    digits = text.split(":")[1].split("}")[0].strip().rstrip(",")
    assert len(digits.replace(".", "").replace("-", "").lstrip("0")) >= 12
    assert abs(value - 0.666666667 * 2.718281828459045 ** (-0.111111111 * 3.5)) < 1e-6


def test_ruin_mc_rejects_zero_paths(capsys):
    code, _, err = run_cli(capsys, "ruin", "--x", "0", "--method", "mc",
                           "--paths", "0")
    assert code == 2
    assert "paths" in err


def test_invalid_theta_exits_2(capsys):
    code, _, err = run_cli(capsys, "ruin", "--x", "0", "--theta", "1.5",
                           "--method", "closed")
    assert code == 2
    assert "theta" in err


def test_closed_unavailable_with_premium_dependence(capsys):
    code, _, err = run_cli(capsys, "ruin", "--x", "0", "--theta-bar", "0.5",
                           "--method", "closed")
    assert code == 2


def test_numerical_failure_exit_code(capsys, monkeypatch):
    import fgmrisk.closedform as cf

    monkeypatch.setattr(cf, "dividend_cubic_discriminant", lambda *a: -1.0)
    code, _, err = run_cli(capsys, "dividends", "--x", "0", "--preset",
                           "paper-sec6", "--b", "5", "--d", "0.1")
    assert code == 3
    assert "D4" in err


def test_dividends_closed_values(capsys):
    code, out, _ = run_cli(capsys, "dividends", "--x", "15", "--x", "70",
                           "--preset", "paper-sec6", "--b", "5", "--d", "0.1",
                           "--delta", "0.01")
    assert code == 0
    res = json.loads(out)["results"]
    assert abs(res[0]["v"] - 8.58284633463) <= 1e-9
    assert abs(res[1]["v"] - 9.99620466884) <= 1e-9


def test_dividends_without_strategy_warns_zero(capsys):
    code, out, err = run_cli(capsys, "dividends", "--x", "3")
    assert code == 0
    assert json.loads(out)["results"][0]["v"] == 0.0
    assert "warning" in err


def test_ruin_grid_matches_closed(capsys):
    code, out, _ = run_cli(capsys, "ruin", "--x", "5", "--method", "grid",
                           "--preset", "paper-sec6", "--grid-x-max", "150",
                           "--grid-n", "1500")
    assert code == 0
    psi = json.loads(out)["results"][0]["psi"]
    assert abs(psi - 0.382502) <= 1e-3


def test_reproduce_table1_diffs_are_tiny(tmp_path, capsys):
    out_file = tmp_path / "t1.csv"
    code, _, _ = run_cli(capsys, "reproduce", "--table", "1", "--out",
                         str(out_file))
    assert code == 0
    rows = list(csv.reader(out_file.read_text().splitlines()))
    header, data = rows[0], rows[1:]
    assert len(data) == 10 and len(header) == 13
    diffs = [abs(float(cell)) for row in data for cell in row[7:]]
    assert max(diffs) <= 1e-5
    # spot value: x=50 at the strongest positive dependence
    row50 = next(r for r in data if r[0] == "50")
    assert float(row50[6]) == pytest.approx(0.000002, abs=1e-6)


def test_reproduce_table2_row7(capsys):
    rows = reproduce_table2()
    x, vals, diffs = next(r for r in rows if r[0] == 7)
    assert vals[0] == pytest.approx(0.306284, abs=1e-5)
    assert vals[1] == pytest.approx(0.563044, abs=1e-5)
    # the dividend column intentionally reproduces the corrected solution,
    # so its diff against the published number is the documented defect
    assert vals[2] == pytest.approx(6.6460980257, abs=1e-8)
    assert diffs[2] == pytest.approx(vals[2] - 5.694612, abs=1e-8)


def test_reproduce_table2_csv_format(capsys):
    code, out, _ = run_cli(capsys, "reproduce", "--table", "2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x", "psi0", "psi", "v", "diff_psi0", "diff_psi", "diff_v"]
    assert len(rows) == 11
    assert "\r" not in out


def test_dividends_mc_route(capsys):
    code, out, _ = run_cli(capsys, "dividends", "--x", "0", "--preset",
                           "paper-sec6", "--b", "5", "--d", "0.1",
                           "--method", "mc", "--paths", "4000",
                           "--horizon", "800", "--seed", "2")
    assert code == 0
    payload = json.loads(out)
    row = payload["results"][0]
    assert abs(row["v"] - 2.8) <= 3.0 * row["std_error"] + 0.01
    assert payload["truncation_bound"][0] < 1e-2


def test_grid_route_rejects_threshold(capsys):
    code, _, err = run_cli(capsys, "ruin", "--x", "0", "--method", "grid",
                           "--b", "5", "--d", "0.1")
    assert code == 2
    assert "no-dividend" in err


def test_trace_emission(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code, _, _ = run_cli(capsys, "ruin", "--x", "5", "--method", "mc",
                         "--preset", "paper-sec6", "--b", "5", "--d", "0.1",
                         "--paths", "10", "--horizon", "50", "--seed", "7",
                         "--trace", str(trace))
    assert code == 0
    rows = trace.read_text().splitlines()
    assert rows[0] == "event_time,event_type,jump_size,surplus_after"
    assert len(rows) > 1
    kinds = {r.split(",")[1] for r in rows[1:]}
    assert kinds <= {"claim", "premium"}


def test_copula_check(capsys):
    code, out, _ = run_cli(capsys, "copula-check", "--theta", "0.9",
                           "--samples", "100000", "--seed", "3")
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["spearman"] - 0.3) <= 0.015
    assert abs(payload["kendall"] - 0.2) <= 0.015


def test_verify_passes_on_reference_preset(capsys):
    code, out, _ = run_cli(capsys, "verify", "--preset", "paper-sec6",
                           "--paths", "4000")
    assert code == 0
    payload = json.loads(out)
    assert payload["pass"] is True


def test_verify_unsupported_regime_is_skip_not_failure(capsys, monkeypatch):
    import fgmrisk.closedform as cf

    real = cf.dividends_threshold_independent

    def fake(params, strategy, delta):
        from fgmrisk.errors import UnsupportedRegimeError

        raise UnsupportedRegimeError("cubic discriminant D4 = -1 <= 0")

    monkeypatch.setattr(cf, "dividends_threshold_independent", fake)
    monkeypatch.setattr("fgmrisk.cli.cf.dividends_threshold_independent", fake)
    code, out, _ = run_cli(capsys, "verify", "--preset", "paper-sec6",
                           "--b", "5", "--d", "0.1", "--paths", "2000")
    payload = json.loads(out)
    names = {c["name"]: c for c in payload["checks"]}
    assert names["dividend_boundary_system"]["pass"] is None
    assert code == 0


def test_mc_worker_count_does_not_change_output(capsys):
    args = ["ruin", "--x", "0", "--method", "mc", "--preset", "paper-sec6",
            "--paths", "20000", "--seed", "5", "--horizon", "500"]
    _, out1, _ = run_cli(capsys, *args, "--workers", "1")
    _, out8, _ = run_cli(capsys, *args, "--workers", "8")
    assert out1 == out8


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[model]\nlambda = 0.1\nlambda_bar = 2.3\nmu = 3.0\nmu_bar = 0.2\n"
        "theta = 0.5\n\n[mc]\npaths = 123\nseed = 9\n"
    )
    code, out, _ = run_cli(capsys, "ruin", "--x", "0", "--method", "closed",
                           "--config", str(cfg))
    payload = json.loads(out)
    assert payload["config"]["theta"] == 0.5
    assert payload["config"]["paths"] == 123
    # flag overrides file
    code, out, _ = run_cli(capsys, "ruin", "--x", "0", "--method", "closed",
                           "--config", str(cfg), "--theta", "0.1")
    assert abs(json.loads(out)["results"][0]["psi"] - 0.638820) <= 1e-5


def test_config_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[model]\nlambda = 0.1\nnonsense = 1\n")
    code, _, err = run_cli(capsys, "ruin", "--x", "0", "--config", str(cfg))
    assert code == 2
    assert "nonsense" in err


def test_threshold_needs_both_b_and_d(capsys):
    code, _, err = run_cli(capsys, "ruin", "--x", "0", "--b", "5")
    assert code == 2
    assert "--b and --d" in err
