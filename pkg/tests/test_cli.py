"""End-to-end CLI runs through a subprocess."""

import csv
import io
import subprocess
import sys
from pathlib import Path

SPEC = str(Path(__file__).resolve().parent.parent / "specs" / "tp.json")
GAUSS = str(Path(__file__).resolve().parent.parent / "specs" / "gaussian_half.json")


def crs(*argv, cwd=None):
    return subprocess.run([sys.executable, "-m", "crs.cli", *argv],
                          capture_output=True, text=True, cwd=cwd)


def parse_csv(text):
    return list(csv.reader(io.StringIO(text)))


# ---------------------------------------------------------------------------
# report / truncate
# ---------------------------------------------------------------------------

def test_report_stdout():
    res = crs("report", "--spec", SPEC, "--grid", "5")
    assert res.returncode == 0
    rows = parse_csv(res.stdout)
    assert rows[0] == ["record", "name", "value", "h", "tail_p", "tail_q",
                       "clipped_mean", "survival"]
    names = {r[1] for r in rows[1:] if r[0] == "divergence"}
    assert {"kl-bits", "max-bits"} <= names
    kl = [r for r in rows if r[1] == "kl-bits"][0]
    assert float(kl[2]) == 0.5310044064107189
    assert sum(1 for r in rows if r[0] == "level") == 5


def test_report_writes_figures(tmp_path):
    out = tmp_path / "report.csv"
    res = crs("report", "--spec", SPEC, "--out", str(out))
    assert res.returncode == 0, res.stderr
    assert out.exists()
    assert (tmp_path / "report_levels.png").exists()


def test_no_figures_flag(tmp_path):
    out = tmp_path / "report.csv"
    res = crs("report", "--spec", SPEC, "--out", str(out), "--no-figures")
    assert res.returncode == 0
    assert out.exists()
    assert list(tmp_path.glob("*.png")) == []


def test_truncate_by_eps():
    res = crs("truncate", "--spec", SPEC, "--eps", "0.06666666666666667")
    assert res.returncode == 0
    rows = parse_csv(res.stdout)
    vals = {r[1]: r[2] for r in rows[1:] if r[0] == "summary"}
    assert abs(float(vals["effective_sup"]) - 5 / 3) < 1e-6
    assert abs(float(vals["tv_to_target"]) - 1 / 15) < 1e-6
    atoms = [r for r in rows[1:] if r[0] == "atom"]
    assert len(atoms) == 2


def test_truncate_requires_exactly_one_selector():
    res = crs("truncate", "--spec", SPEC)
    assert res.returncode == 2
    assert "error: cap:" in res.stderr
    res = crs("truncate", "--spec", SPEC, "--cap", "1.0", "--eps", "0.1")
    assert res.returncode == 2


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def test_sample_depth_one_is_proposal_law():
    res = crs("sample", "--spec", SPEC, "--method", "astar-depth", "--k", "1",
              "--n", "20000", "--seed", "3")
    assert res.returncode == 0, res.stderr
    rows = parse_csv(res.stdout)
    law = {int(r[6]): float(r[7]) for r in rows[1:] if r[0] == "law"}
    assert abs(law[0] - 0.5) < 0.02 and abs(law[1] - 0.5) < 0.02
    summary = {r[1]: r[4] for r in rows[1:] if r[0] == "summary"}
    assert float(summary["mean_examined"]) == 1.0


def test_sample_rejection_budgeted_requires_k():
    res = crs("sample", "--spec", SPEC, "--method", "rejection-budgeted",
              "--seed", "1")
    assert res.returncode == 2
    assert "error: k: --k is required" in res.stderr


def test_sample_cap_and_eps_conflict():
    res = crs("sample", "--spec", SPEC, "--method", "astar", "--seed", "1",
              "--cap", "1.0", "--eps", "0.1")
    assert res.returncode == 2
    assert "mutually exclusive" in res.stderr


def test_sample_run_rows_deterministic():
    a = crs("sample", "--spec", SPEC, "--method", "astar", "--n", "50",
            "--seed", "5")
    b = crs("sample", "--spec", SPEC, "--method", "astar", "--n", "50",
            "--seed", "5")
    assert a.stdout == b.stdout
    rows = parse_csv(a.stdout)
    assert sum(1 for r in rows[1:] if r[0] == "run") == 50


def test_sample_gaussian_astar():
    res = crs("sample", "--spec", GAUSS, "--method", "astar", "--n", "200",
              "--seed", "2")
    assert res.returncode == 0, res.stderr
    rows = parse_csv(res.stdout)
    assert not any(r[0] == "law" for r in rows[1:])  # no finite alphabet


def test_sample_unknown_method():
    res = crs("sample", "--spec", SPEC, "--method", "urn", "--seed", "1")
    assert res.returncode == 2  # argparse rejects the choice


# ---------------------------------------------------------------------------
# code
# ---------------------------------------------------------------------------

def test_code_rate_fields():
    res = crs("code", "--spec", SPEC, "--n", "2000", "--seed", "9")
    assert res.returncode == 0, res.stderr
    rows = parse_csv(res.stdout)
    rates = {r[1]: r[2] for r in rows[1:] if r[0] == "rate"}
    assert len(rates) == 12
    assert abs(float(rates["exponent"]) - 1.4850266802800285) < 1e-9
    assert float(rates["within_rate_bound"]) == 1.0
    streams = {r[1] for r in rows[1:] if r[0] == "stream"}
    assert streams == {"total_bits", "bits_per_index"}
    code_rows = [r for r in rows[1:] if r[0] == "codeword"]
    assert len(code_rows) == 2000


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def test_bounds_depth_limited():
    res = crs("bounds", "--dkl", "0.5310044064107189", "--eps", "0.5")
    assert res.returncode == 0
    rows = parse_csv(res.stdout)
    row = [r for r in rows[1:] if r[1] == "depth-limited-complexity"][0]
    assert row[4] == "18"


def test_bounds_classic_and_improved():
    res = crs("bounds", "--df", "0.5310044064107189", "--eps", "0.25")
    assert res.returncode == 0
    rows = parse_csv(res.stdout)
    names = [r[1] for r in rows[1:]]
    assert names == ["classic-rejection-complexity",
                     "improved-rejection-complexity"]
    ceiled = {r[1]: r[4] for r in rows[1:]}
    assert ceiled["classic-rejection-complexity"] == "2003"
    assert ceiled["improved-rejection-complexity"] == "19"


def test_bounds_importance_rows():
    res = crs("bounds", "--l", "1", "--t", "2", "--tail", "0.5")
    assert res.returncode == 0
    rows = parse_csv(res.stdout)
    vals = {r[1]: float(r[3]) for r in rows[1:]}
    assert abs(vals["importance-epsilon"] - 1.3835510696656972) < 1e-12
    assert "importance-mean-error-bound" in vals


def test_bounds_without_inputs_fails():
    res = crs("bounds")
    assert res.returncode == 2
    assert "error: bounds: no computable bound" in res.stderr


def test_bounds_figure(tmp_path):
    out = tmp_path / "b.csv"
    res = crs("bounds", "--df", "0.5", "--eps", "0.25", "--out", str(out))
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "b_complexity.png").exists()


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def test_verify_deterministic_csv(tmp_path):
    out1, out2 = tmp_path / "v1.csv", tmp_path / "v2.csv"
    res1 = crs("verify", "--spec", SPEC, "--seed", "7", "--out", str(out1),
               "--no-figures")
    res2 = crs("verify", "--spec", SPEC, "--seed", "7", "--out", str(out2),
               "--no-figures")
    assert res1.returncode == 0, res1.stderr
    assert res2.returncode == 0
    assert out1.read_bytes() == out2.read_bytes()
    text = out1.read_bytes().decode()
    assert text.startswith("test_id,statistic,bound,pass\r\n")
    assert "all" in res1.stderr and "checks passed" in res1.stderr


def test_bad_spec_file():
    res = crs("report", "--spec", "/nonexistent/pair.json")
    assert res.returncode == 2
    assert "error:" in res.stderr


def test_invalid_json_spec(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    res = crs("report", "--spec", str(bad))
    assert res.returncode == 2
    assert "error: spec: invalid JSON" in res.stderr
