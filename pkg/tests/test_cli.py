"""
test_cli.py
"""

import argparse
import io
import json
import math

import numpy as np
import pandas as pd
import pytest

from needles.cli import main, parse_angle, parse_angle_grid, parse_count, parse_ratio
from needles.exact import p_exact
from needles.geometry import ThrowConfig
from needles.verification import resolve_pm_n3

EXACT_ARGS = ["exact", "--n", "5", "--lambda", "1/3", "--mu", "1/4", "--alpha", "pi/10"]


def read_csv(text):
    return pd.read_csv(io.StringIO(text), float_precision="round_trip")


@pytest.mark.parametrize(
    "text, expected",
    [
        ("pi", math.pi),
        ("pi/10", math.pi / 10),
        ("3pi/20", math.pi * 3 / 20),
        ("3*pi/20", math.pi * 3 / 20),
        ("-pi/4", -math.pi / 4),
        ("0.25", 0.25),
        ("PI/2", math.pi / 2),
    ],
)
def test_parse_angle(text, expected):
    assert parse_angle(text) == expected


def test_parse_angle_grid():
    grid = parse_angle_grid("0:pi/5:5")
    assert len(grid) == 5
    assert grid[0] == 0.0 and math.isclose(grid[-1], math.pi / 5)
    assert parse_angle_grid("pi/10,pi/4") == [math.pi / 10, math.pi / 4]


def test_parse_ratio():
    assert parse_ratio("1/3") == 1 / 3
    assert parse_ratio("0.25") == 0.25


@pytest.mark.parametrize(
    "text, expected",
    [
        ("7", 7),
        ("1e7", 10**7),
        ("9007199254740993", 2**53 + 1),
        ("18446744073709551615", 2**64 - 1),
    ],
)
def test_parse_count_is_exact(text, expected):
    assert parse_count(text) == expected


@pytest.mark.parametrize("text", ["1.5", "ten", "1e-3"])
def test_parse_count_rejects_non_integers(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_count(text)


@pytest.mark.cli
def test_exact_csv(capsys):
    assert main(EXACT_ARGS) == 0
    captured = capsys.readouterr()
    table = read_csv(captured.out)
    assert list(table.columns) == ["i", "p", "F"]
    expected = p_exact(ThrowConfig.from_ratios(5, 1 / 3, 1 / 4), math.pi / 10)
    assert np.array_equal(table.p.to_numpy(), expected.p)
    assert table.F.iloc[-1] == 1.0
    summary = [line for line in captured.err.splitlines() if line.startswith("sum p = ")]
    assert len(summary) == 1 and summary[0].endswith(": ok")


@pytest.mark.cli
def test_exact_json(capsys):
    assert main(EXACT_ARGS + ["--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["columns"] == ["i", "p", "F"]
    assert len(payload["rows"]) == 7
    manifest = payload["manifest"]
    assert manifest["command"] == "exact"
    assert manifest["parameters"]["n"] == 5
    assert manifest["checks"]["total"] == pytest.approx(1.0, abs=1e-12)
    assert manifest["checks"]["mean"] == pytest.approx(manifest["checks"]["expectation"], abs=1e-10)
    assert manifest["checks"]["passed"] is True


@pytest.mark.cli
def test_exact_with_spacings_matches_ratios(capsys):
    assert main(["exact", "--n", "5", "--a", "3", "--b", "4", "--alpha", "pi/10"]) == 0
    by_spacing = read_csv(capsys.readouterr().out)
    assert main(EXACT_ARGS) == 0
    by_ratio = read_csv(capsys.readouterr().out)
    assert np.allclose(by_spacing.p, by_ratio.p, rtol=0, atol=1e-15)


@pytest.mark.cli
def test_output_file_is_reproducible(tmp_path, reproducible_timestamp):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert main(EXACT_ARGS + ["--out", str(first)]) == 0
    assert main(EXACT_ARGS + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()

    first_manifest = json.loads((tmp_path / "first.csv.manifest.json").read_text())
    second_manifest = json.loads((tmp_path / "second.csv.manifest.json").read_text())
    assert first_manifest["timestamp"] == second_manifest["timestamp"]
    assert first_manifest["tool_version"] == "1.0.0"


@pytest.mark.cli
def test_sweep(capsys):
    assert main(["sweep", "--n", "5", "--lambda", "1/3", "--mu", "1/4"]) == 0
    table = read_csv(capsys.readouterr().out)
    assert list(table.columns) == ["alpha", "i", "p", "p_star"]
    assert len(table) == 21 * 7
    # p* does not depend on alpha
    assert table.groupby("i").p_star.nunique().max() == 1


@pytest.mark.cli
def test_sweep_selection_and_probe(capsys):
    argv = ["sweep", "--n", "5", "--lambda", "0.3", "--mu", "0.2", "--alpha-grid", "0:pi/5:3"]
    assert main(argv + ["--i-select", "0,3", "--probe", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["rows"]) == 6
    probe = payload["tables"]["probe"]
    assert probe["columns"] == ["i", "conjectured", "observed", "holds", "proved"]


@pytest.mark.cli
def test_sweep_rejects_unknown_index(capsys):
    assert main(["sweep", "--n", "5", "--lambda", "0.3", "--mu", "0.2", "--i-select", "9"]) == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "OutOfRangeError"


@pytest.mark.cli
@pytest.mark.montecarlo
def test_simulate_odd(capsys):
    argv = EXACT_ARGS[1:] + ["--trials", "2000", "--seed", "3", "--backend", "python", "--format", "json"]
    assert main(["simulate"] + argv) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["columns"] == ["i", "p_hat", "ci_half_width", "p_exact", "z"]
    joint = pd.DataFrame(payload["tables"]["joint"]["rows"], columns=payload["tables"]["joint"]["columns"])
    assert joint["count"].sum() == 2000
    assert payload["manifest"]["seed"] == 3
    assert "z" in payload["manifest"]["checks"]


@pytest.mark.cli
@pytest.mark.montecarlo
def test_large_seeds_are_kept_exactly(capsys):
    argv = ["simulate", "--n", "3", "--lambda", "0.3", "--mu", "0.2", "--trials", "500", "--backend", "python"]
    rows = []
    for seed in (2**53, 2**53 + 1, 2**64 - 1):
        assert main(argv + ["--seed", str(seed), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["manifest"]["seed"] == seed
        rows.append(payload["rows"])
    assert rows[0] != rows[1]


@pytest.mark.cli
@pytest.mark.montecarlo
def test_simulate_even_star_has_no_exact_column(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    argv = ["simulate", "--n", "4", "--lambda", "0.3", "--mu", "0.2", "--trials", "1000", "--backend", "python"]
    assert main(argv + ["--out", str(out)]) == 0
    table = pd.read_csv(out)
    assert table.p_exact.isna().all()
    assert len(table) == 5
    assert (tmp_path / "sim.csv.joint.csv").exists()
    assert "mean count" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "sim.csv.manifest.json").read_text())
    assert manifest["checks"]["passed"] is True


@pytest.mark.cli
def test_limit(capsys):
    argv = ["limit", "--lambda", "1/3", "--mu", "1/4", "--n-list", "5,9", "--alpha-list", "pi/10", "--grid", "1000"]
    assert main(argv) == 0
    table = read_csv(capsys.readouterr().out)
    assert list(table.columns) == ["n", "alpha", "xi", "F_n_alpha", "F", "sup_distance"]
    half = table[table.xi == 0.5]
    assert np.allclose(half.F, 1 - math.pi / 12)
    distances = table.groupby("n").sup_distance.first()
    assert distances[9] < distances[5]


@pytest.mark.cli
@pytest.mark.oracle
def test_verify_pm_n3(capsys, monkeypatch):
    calls = []

    def counted(*args, **kwargs):
        calls.append(args)
        return resolve_pm_n3(*args, **kwargs)

    monkeypatch.setattr("needles.cli.resolve_pm_n3", counted)
    monkeypatch.setattr("needles.verification.resolve_pm_n3", counted)
    assert main(["verify", "--scope", "pM-n3"]) == 0
    assert len(calls) == 1
    captured = capsys.readouterr()
    report = read_csv(captured.out)
    assert report.passed.all()
    assert "endorses the 'theorem' formula" in captured.err


@pytest.mark.cli
@pytest.mark.oracle
@pytest.mark.slow
def test_verify_detects_perturbation(capsys):
    assert main(["verify", "--scope", "joint", "--perturb", "f4=1e-3"]) == 3
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "VerificationError"


@pytest.mark.cli
@pytest.mark.parametrize(
    "argv, code",
    [
        (["exact", "--n", "9", "--lambda", "0.6", "--mu", "0.6"], 2),
        (["exact", "--n", "4", "--lambda", "0.2", "--mu", "0.2"], 2),
        (["exact", "--n", "5", "--lambda", "0.2", "--a", "3", "--mu", "0.2"], 1),
        (["exact", "--n", "5", "--lambda", "0.2", "--mu", "0.2", "--alpha", "2"], 2),
        (["limit", "--lambda", "0.7"], 2),
        (["verify", "--tol", "speed=1"], 1),
        (["verify", "--perturb", "nonsense"], 1),
    ],
)
def test_error_exit_codes(argv, code, capsys):
    assert main(argv) == code
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["exit_code"] == code


@pytest.mark.cli
@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["exact", "--lambda", "0.2", "--mu", "0.2"],
        ["exact", "--n", "five", "--lambda", "0.2", "--mu", "0.2"],
        ["verify", "--scope", "everything"],
    ],
)
def test_usage_errors_exit_with_one(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1
