"""Command-line interface: exit codes, artifacts, reproducibility."""

import gzip
import json
import subprocess
import sys

import numpy as np
import pytest

from pencil_spectra.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VIOLATED,
    main,
)
from pencil_spectra.model import (
    ScalarFunctionSpec,
    document_dict,
    make_problem,
    zero_problem,
)

GOLDEN = 1.6180339887498949


@pytest.fixture()
def zero_d2_cfg(tmp_config, zero_d2):
    return tmp_config(zero_d2, 2000, name="zero_d2.json")


@pytest.fixture()
def p05_cfg(tmp_config, const_p05):
    return tmp_config(const_p05, 2000, name="p05.json")


@pytest.fixture()
def q01_cfg(tmp_config, const_q01):
    return tmp_config(const_q01, 1000, name="q01.json")


def read_csv_rows(path):
    lines = open(path).read().strip().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


# --- spectrum ---

def test_spectrum_zero_d2(tmp_path, zero_d2_cfg, capsys):
    out = tmp_path / "spec.csv"
    rc = main(["spectrum", "--config", zero_d2_cfg,
               "--lambda-min", "-2.25", "--lambda-max", "2.25",
               "--out", str(out)])
    assert rc == EXIT_OK
    header, rows = read_csv_rows(out)
    assert header == ["value", "multiplicity", "residual"]
    assert [float(r[0]) for r in rows] == pytest.approx([-2, -1, 0, 1, 2], abs=1e-7)
    assert [int(r[1]) for r in rows] == [2] * 5
    assert "5" in capsys.readouterr().out


def test_spectrum_finds_golden_ratio_value(tmp_path, p05_cfg):
    out = tmp_path / "spec.csv"
    rc = main(["spectrum", "--config", p05_cfg,
               "--lambda-min", "1.2", "--lambda-max", "1.9",
               "--out", str(out)])
    assert rc == EXIT_OK
    _, rows = read_csv_rows(out)
    assert len(rows) == 1
    assert float(rows[0][0]) == pytest.approx(GOLDEN, abs=1e-8)


def test_spectrum_rerun_byte_identical(tmp_path, q01_cfg):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        rc = main(["spectrum", "--config", q01_cfg,
                   "--lambda-min", "-1.6", "--lambda-max", "1.6",
                   "--out", str(out)])
        assert rc == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_spectrum_jobs_do_not_change_bytes(tmp_path, q01_cfg):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    main(["spectrum", "--config", q01_cfg, "--lambda-min", "-1.6",
          "--lambda-max", "1.6", "--out", str(a), "--jobs", "1"])
    main(["spectrum", "--config", q01_cfg, "--lambda-min", "-1.6",
          "--lambda-max", "1.6", "--out", str(b), "--jobs", "4"])
    assert a.read_bytes() == b.read_bytes()


def test_spectrum_grid_override(tmp_path, q01_cfg):
    out = tmp_path / "spec.csv"
    rc = main(["spectrum", "--config", q01_cfg, "--grid-n", "500",
               "--lambda-min", "-0.6", "--lambda-max", "0.6",
               "--out", str(out)])
    assert rc == EXIT_OK


# --- config errors ---

def test_missing_config(tmp_path):
    rc = main(["spectrum", "--config", str(tmp_path / "nope.json"),
               "--lambda-min", "0", "--lambda-max", "1"])
    assert rc == EXIT_CONFIG


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "pencil-spectra/1", "dimension": }')
    rc = main(["spectrum", "--config", str(bad),
               "--lambda-min", "0", "--lambda-max", "1"])
    assert rc == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_wrong_schema(tmp_path, zero_d1, capsys):
    doc = document_dict(zero_d1, 100)
    doc["schema"] = "other/1"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    rc = main(["spectrum", "--config", str(cfg),
               "--lambda-min", "0", "--lambda-max", "1"])
    assert rc == EXIT_CONFIG


def test_reversed_window(q01_cfg):
    rc = main(["spectrum", "--config", q01_cfg,
               "--lambda-min", "2", "--lambda-max", "1"])
    assert rc == EXIT_CONFIG


def test_ambiguous_window_exit(tmp_path, tmp_config, zero_d1, capsys):
    cfg = tmp_config(zero_d1, 2000)
    rc = main(["spectrum", "--config", cfg,
               "--lambda-min", "-0.5", "--lambda-max", "2.0000001",
               "--out", str(tmp_path / "s.csv")])
    assert rc == EXIT_CONFIG
    assert "window" in capsys.readouterr().err


def test_coarse_grid_rejected(tmp_path, q01_cfg):
    rc = main(["spectrum", "--config", q01_cfg, "--grid-n", "8",
               "--lambda-min", "0", "--lambda-max", "1"])
    assert rc == EXIT_CONFIG


def test_unknown_theorem_flag(q01_cfg):
    rc = main(["verify", "--config", q01_cfg, "--theorem", "t99"])
    assert rc == EXIT_CONFIG


# --- kernels ---

def test_kernels_outputs(tmp_path, tmp_config, trig_d1, capsys):
    cfg = tmp_config(trig_d1, 64)
    out = tmp_path / "lattice.csv"
    rc = main(["kernels", "--config", cfg, "--out", str(out)])
    assert rc == EXIT_OK
    header, rows = read_csv_rows(out)
    assert header == ["i", "k", "entry_row", "entry_col", "A_value", "B_value"]
    assert len(rows) == 65 * 66 // 2
    summary = json.loads((tmp_path / "lattice_summary.json").read_text())
    assert {"r33", "r212", "r213", "representation_residual"} <= set(summary)


def test_kernels_gzip(tmp_path, tmp_config, trig_d1):
    cfg = tmp_config(trig_d1, 64)
    out = tmp_path / "lattice.csv.gz"
    rc = main(["kernels", "--config", cfg, "--out", str(out), "--gzip"])
    assert rc == EXIT_OK
    with gzip.open(out, "rt") as fh:
        assert fh.readline().strip() == "i,k,entry_row,entry_col,A_value,B_value"
    assert (tmp_path / "lattice_summary.json").exists()


def test_kernels_window_flag_warns(tmp_path, tmp_config, trig_d1, capsys):
    cfg = tmp_config(trig_d1, 64)
    rc = main(["kernels", "--config", cfg, "--out", str(tmp_path / "l.csv"),
               "--lambda-min", "0", "--lambda-max", "4"])
    assert rc == EXIT_OK
    assert "ignored" in capsys.readouterr().err


def test_kernels_free_case_residuals_tiny(tmp_path, tmp_config, zero_d1):
    # the kernel field vanishes exactly; the representation residual is the
    # RK4 reference error, below 1e-10 once the grid resolves lambda = 5.1
    cfg = tmp_config(zero_d1, 3000)
    rc = main(["kernels", "--config", cfg, "--out", str(tmp_path / "l.csv")])
    assert rc == EXIT_OK
    summary = json.loads((tmp_path / "l_summary.json").read_text())
    assert summary["r33"] == 0.0
    assert summary["r212"] == 0.0
    assert summary["r213"] == 0.0
    assert summary["representation_residual"] <= 1e-10


def test_kernels_blowup_is_numerical_error(tmp_path, tmp_config):
    hot = make_problem(1, [ScalarFunctionSpec.zero()],
                       [ScalarFunctionSpec.constant(1e7)])
    cfg = tmp_config(hot, 100)
    rc = main(["kernels", "--config", cfg, "--out", str(tmp_path / "l.csv")])
    assert rc == EXIT_NUMERICAL


# --- verify ---

def test_verify_t32_consistent(tmp_path, tmp_config, zero_d1, capsys):
    cfg = tmp_config(zero_d1, 1000)
    out = tmp_path / "report.json"
    rc = main(["verify", "--config", cfg, "--theorem", "t32",
               "--n-max", "2", "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads(out.read_text())
    assert report["theorem_id"] == "T32"
    assert report["verdict"] == "consistent"
    assert "consistent" in capsys.readouterr().out


def test_verify_t31_with_document_tilde(tmp_path, tmp_config, zero_d1):
    qt = (ScalarFunctionSpec.constant(0.1),)
    cfg = tmp_config(zero_d1, 1000, q_tilde=qt)
    out = tmp_path / "report.json"
    rc = main(["verify", "--config", cfg, "--theorem", "t31",
               "--lambda-min", "-2.5", "--lambda-max", "2.5",
               "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads(out.read_text())
    assert report["verdict"] == "consistent"
    assert report["metrics"]["deviation"] >= 0.31


def test_verify_violated_exit_code(tmp_path, tmp_config, const_q01):
    qt = (ScalarFunctionSpec.constant(0.1 + 1e-9),)
    cfg = tmp_config(const_q01, 1000, q_tilde=qt)
    out = tmp_path / "report.json"
    rc = main(["verify", "--config", cfg, "--theorem", "t31",
               "--lambda-min", "-2.5", "--lambda-max", "2.5",
               "--tol", "1e-9", "--out", str(out)])
    assert rc == EXIT_VIOLATED
    assert json.loads(out.read_text())["verdict"] == "violated"


def test_verify_ground(tmp_path, tmp_config, zero_d2):
    cfg = tmp_config(zero_d2, 1000)
    out = tmp_path / "report.json"
    rc = main(["verify", "--config", cfg, "--theorem", "ground",
               "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads(out.read_text())
    assert report["theorem_id"] == "ground_state"
    assert report["verdict"] == "consistent"


def test_verify_eq39(tmp_path, tmp_config, const_p05):
    cfg = tmp_config(const_p05, 1000)
    out = tmp_path / "report.json"
    rc = main(["verify", "--config", cfg, "--theorem", "eq39",
               "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads(out.read_text())
    assert report["verdict"] == "inconclusive"
    assert report["metrics"]["residual"] == pytest.approx(0.7853981633974483)


def test_verify_all_order_and_rerun_bytes(tmp_path, tmp_config, zero_d1):
    cfg = tmp_config(zero_d1, 1000)
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        rc = main(["verify", "--config", cfg, "--theorem", "all",
                   "--seed", "7", "--lambda-min", "-2.5",
                   "--lambda-max", "2.5", "--n-max", "2", "--out", str(out)])
        assert rc == EXIT_OK
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    reports = json.loads(outs[0].read_text())
    assert [r["theorem_id"] for r in reports] == ["T31", "T32",
                                                  "ground_state", "eq39"]
    assert all(r["seed"] == 7 for r in reports)


def test_verify_seed_changes_random_family(tmp_path, tmp_config, zero_d1):
    cfg = tmp_config(zero_d1, 1000)
    digests = []
    for seed in ("1", "2"):
        out = tmp_path / f"s{seed}.json"
        rc = main(["verify", "--config", cfg, "--theorem", "t31",
                   "--seed", seed, "--lambda-min", "-2.5",
                   "--lambda-max", "2.5", "--out", str(out)])
        assert rc == EXIT_OK
        digests.append(json.loads(out.read_text())["inputs_digest"])
    assert digests[0] != digests[1]


def test_verify_hypothesis_failure_is_config_error(tmp_path, tmp_config, capsys):
    prob = zero_problem(1, boundary="dirichlet")
    cfg = tmp_config(prob, 1000)
    rc = main(["verify", "--config", cfg, "--theorem", "t32",
               "--out", str(tmp_path / "r.json")])
    assert rc == EXIT_CONFIG


# --- asymptotics ---

def test_asymptotics_gap_table(tmp_path, p05_cfg, capsys):
    out = tmp_path / "gaps.csv"
    rc = main(["asymptotics", "--config", p05_cfg,
               "--lambda-min", "4.8", "--lambda-max", "8.7",
               "--out", str(out)])
    assert rc == EXIT_OK
    header, rows = read_csv_rows(out)
    assert header == ["n", "j", "computed", "predicted", "gap"]
    assert [int(r[0]) for r in rows] == [5, 6, 7, 8]
    for row in rows:
        n = int(row[0])
        assert float(row[3]) == pytest.approx(n + 0.5, abs=1e-12)
        target = 0.125 / n
        assert abs(float(row[4]) - target) <= 0.1 * target


def test_asymptotics_skipped_row_warns(tmp_path, p05_cfg, capsys):
    # lambda_max = 8.4 excludes the n=8 eigenvalue at 8.5156
    out = tmp_path / "gaps.csv"
    rc = main(["asymptotics", "--config", p05_cfg,
               "--lambda-min", "4.8", "--lambda-max", "8.4",
               "--out", str(out)])
    assert rc == EXIT_OK
    _, rows = read_csv_rows(out)
    last = rows[-1]
    assert last[0] == "8" and last[2] == "" and last[4] == ""
    assert "n=8" in capsys.readouterr().err


def test_asymptotics_requires_window(p05_cfg):
    rc = main(["asymptotics", "--config", p05_cfg])
    assert rc == EXIT_CONFIG


# --- validate-bc ---

def test_validate_bc_passes(tmp_path, tmp_config, zero_d2, capsys):
    cfg = tmp_config(zero_d2, 100)
    rc = main(["validate-bc", "--config", cfg])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("pass") == 4
    assert "FAIL" not in out


def test_validate_bc_identity_quadruple_fails(tmp_path, zero_d2, capsys):
    doc = document_dict(zero_d2, 100)
    eye = [[1.0, 0.0], [0.0, 1.0]]
    doc["boundary"] = {"A": eye, "B": eye, "C": eye, "D": eye}
    cfg = tmp_path / "bad_bc.json"
    cfg.write_text(json.dumps(doc))
    rc = main(["validate-bc", "--config", str(cfg)])
    assert rc == EXIT_CONFIG
    out = capsys.readouterr().out
    assert "left_orthogonality" in out and "FAIL" in out


def test_validate_bc_tol_override(tmp_path, zero_d2):
    doc = document_dict(zero_d2, 100)
    doc["boundary"]["A"] = [[5e-11, 0.0], [0.0, 5e-11]]
    cfg = tmp_path / "near.json"
    cfg.write_text(json.dumps(doc))
    assert main(["validate-bc", "--config", str(cfg)]) == EXIT_OK
    assert main(["validate-bc", "--config", str(cfg),
                 "--tol", "1e-12"]) == EXIT_CONFIG


# --- module entry point ---

def test_module_invocation_help():
    proc = subprocess.run([sys.executable, "-m", "pencil_spectra", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "spectrum" in proc.stdout
