import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from swarmphase.cli import main, parse_photon_range, read_state
from swarmphase.fitness import sharpness


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate_policy(capsys):
    code, out, err = run(capsys, "evaluate", "--photons", "4", "--policy", "1.5701,0.7862,0.5043,0.3507")
    assert code == 0 and err == ""
    report = json.loads(out)
    assert report["n"] == 4 and report["eta"] == 0.0
    assert report["holevo_variance"] == pytest.approx(0.37621, abs=5e-3)


def test_evaluate_golden_row_with_zero_loss(capsys):
    _, lossless, _ = run(capsys, "evaluate", "--photons", "4", "--golden-row", "4")
    code, lossy, _ = run(capsys, "evaluate", "--photons", "4", "--golden-row", "4", "--loss", "0")
    assert code == 0
    assert json.loads(lossy)["sharpness"] == pytest.approx(json.loads(lossless)["sharpness"], abs=1e-12)


def test_evaluate_csv(capsys):
    code, out, _ = run(capsys, "evaluate", "--photons", "4", "--golden-row", "4", "--loss", "1", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["n,eta,sharpness,holevo_variance", "4,1,0,inf"]


@pytest.mark.parametrize(
    "argv, message",
    [
        (["--policy", "0,0,0"], "policy length 3 ≠ 4"),
        (["--policy", "0,x,0,0"], "malformed policy"),
        (["--golden-row", "4", "--loss", "1.5"], "loss rate"),
        (["--golden-row", "3"], "no golden policy"),
        ([], "exactly one"),
    ],
)
def test_evaluate_errors(capsys, argv, message):
    code, out, err = run(capsys, "evaluate", "--photons", "4", *argv)
    assert code != 0 and out == ""
    assert message in err


def test_state_dump(capsys, tmp_path):
    code, out, _ = run(capsys, "state", "--photons", "1")
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["amps"], [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    for n in range(1, 15):
        path = tmp_path / f"s{n}.json"
        assert main(["state", "--photons", str(n), "--out", str(path)]) == 0
        state = read_state(path)
        assert state.norm2() == pytest.approx(1.0, abs=1e-12)
        assert json.dumps(state.to_json(), indent=2) + "\n" == path.read_text()


def test_state_rejects_zero(capsys):
    code, _, err = run(capsys, "state", "--photons", "0")
    assert code != 0 and "photon count" in err


def test_loss_sweep_and_scaling(capsys, tmp_path):
    sweep = tmp_path / "sweep.csv"
    code, out, err = run(capsys, "loss-sweep", "--loss", "0,0.4,1", "--photons", "4..14", "--out", str(sweep))
    assert code == 0 and out == "" and err == ""
    rows = list(csv.DictReader(io.StringIO(sweep.read_text())))
    assert len(rows) == 33
    published = {4: 0.37621, 9: 0.12253, 14: 0.06337}
    for row in rows:
        n, eta = int(row["n"]), float(row["eta"])
        if eta == 0 and n in published:
            assert float(row["holevo_variance"]) == pytest.approx(published[n], abs=5e-3)
        if eta == 1:
            assert float(row["sharpness"]) == 0 and row["holevo_variance"] == "inf"

    code, out, _ = run(capsys, "scaling", str(sweep), "--loss", "0")
    assert code == 0
    assert json.loads(out)["exponent"] == pytest.approx(-1.42, abs=0.1)
    code, out, _ = run(capsys, "scaling", str(sweep), "--loss", "0.4")
    fit = json.loads(out)
    assert fit["points"] == 11 and fit["n_min"] == 4 and fit["n_max"] == 14
    assert fit["exponent"] == pytest.approx(-1.3592, abs=1e-3)

    # infinite variances at total loss cannot be fitted
    code, _, err = run(capsys, "scaling", str(sweep), "--loss", "1")
    assert code != 0 and err


def test_loss_sweep_missing_rows(capsys, tmp_path):
    code, _, err = run(capsys, "loss-sweep", "--loss", "0.1", "--photons", "2..5")
    assert code != 0 and "N=2, 3" in err


def test_loss_sweep_custom_golden_file(capsys, tmp_path):
    path = tmp_path / "mine.csv"
    path.write_text("n,d_phi_1,d_varphi\n2,1.5708,0.7854\n")
    code, out, _ = run(capsys, "loss-sweep", "--golden", str(path), "--loss", "0.0", "--photons", "2")
    assert code == 0
    row = list(csv.DictReader(io.StringIO(out)))[0]
    assert float(row["sharpness"]) == pytest.approx(sharpness([1.5708, 0.7854], 2).sharpness, abs=1e-15)


def test_scaling_needs_two_rows(capsys, tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("n,eta,sharpness,holevo_variance\n4,0.4,0.5,3\n")
    code, _, err = run(capsys, "scaling", str(path), "--loss", "0.4")
    assert code != 0 and "at least 2" in err


def test_optimize_writes_deterministic_files(capsys, tmp_path):
    args = ["optimize", "--photons", "4", "--table-s1", "--seed", "7", "--runs", "3", "--steps", "40"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    code, out, err = run(capsys, *args, "--out", str(first))
    assert code == 0 and err == ""
    run(capsys, *args, "--out", str(second))
    assert first.read_bytes() == second.read_bytes()
    summary = json.loads(out)
    assert summary == json.loads(first.with_suffix(".summary.json").read_text())
    assert summary["runs"] == 3 and summary["success_threshold"] == 0.377
    rows = list(csv.DictReader(io.StringIO(first.read_text())))
    assert [int(r["seed"]) for r in rows] == [7, 8, 9]
    successes = sum(float(r["best_variance"]) <= 0.377 for r in rows)
    assert summary["success_fraction"] == successes / 3
    best = min(rows, key=lambda r: float(r["best_variance"]))
    assert summary["best_overall"]["seed"] == int(best["seed"])
    policy = [float(best[c]) for c in ("d_phi_1", "d_phi_2", "d_phi_3", "d_varphi")]
    assert sharpness(policy, 4).holevo_variance == pytest.approx(float(best["best_variance"]), rel=1e-12)


def test_optimize_with_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"omega": 0.8, "phi1": 0.5, "phi2": 1, "xi": 10, "nu_max": 0.2, "r": 2, "steps": 5}))
    code, out, _ = run(capsys, "optimize", "--photons", "3", "--config", str(cfg), "--threshold", "0.6")
    assert code == 0
    assert json.loads(out)["best_overall"]["config"]["xi"] == 10


@pytest.mark.parametrize(
    "argv, message",
    [
        (["--photons", "3", "--table-s1"], "Table S1 covers N=4..14"),
        (["--photons", "4", "--table-s1", "--runs", "0"], "--runs"),
        (["--photons", "4"], "exactly one"),
        (["--photons", "4", "--config", "/nonexistent/cfg.json"], "cannot read config"),
        (["--photons", "4", "--table-s1", "--steps", "1", "--out", "/nonexistent/dir/x.csv"], "cannot write"),
    ],
)
def test_optimize_errors(capsys, argv, message):
    code, _, err = run(capsys, "optimize", *argv)
    assert code != 0 and message in err


def test_photon_range_forms():
    assert parse_photon_range("4..6") == [4, 5, 6]
    assert parse_photon_range("4-6") == [4, 5, 6]
    assert parse_photon_range("4,9") == [4, 9]
    assert parse_photon_range("7") == [7]


def test_csv_round_trip(tmp_path, capsys):
    path = tmp_path / "s.csv"
    main(["loss-sweep", "--loss", "0.25", "--photons", "4..6", "--out", str(path)])
    text = path.read_text()
    rows = list(csv.reader(io.StringIO(text)))
    rebuilt = io.StringIO()
    writer = csv.writer(rebuilt, lineterminator="\n")
    writer.writerow(rows[0])
    for row in rows[1:]:
        writer.writerow([row[0]] + [f"{float(x):.17g}" if not math.isinf(float(x)) else "inf" for x in row[1:]])
    assert rebuilt.getvalue() == text


def test_module_entry_point_exit_codes():
    ok = subprocess.run(
        [sys.executable, "-m", "swarmphase", "evaluate", "--photons", "4", "--golden-row", "4"],
        capture_output=True,
        text=True,
    )
    assert ok.returncode == 0 and ok.stderr == ""
    bad = subprocess.run(
        [sys.executable, "-m", "swarmphase", "evaluate", "--photons", "4", "--policy", "0,0,0"],
        capture_output=True,
        text=True,
    )
    assert bad.returncode != 0 and "policy length 3" in bad.stderr
