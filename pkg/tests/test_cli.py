import csv
import io
import subprocess
import sys

import pytest

from attrmean.cli import main

GEN = "N=10,p00=.3,p01=.2,p10=.2,p11=.3,a=5,b1=2,b2=1,sigma=1,seed=3"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_summarize_wheat_prints_coefficients(capsys):
    code, out, _ = run(capsys, "summarize", "--summary", "wheat")
    assert code == 0
    assert "no raw population available" in out
    assert "f1 = 0.0705882" in out and "f3 = 0.06" in out
    for key in ("C_y", "C_p1", "C_p2", "K_pb1", "K_pb2", "K_phi", "f2"):
        assert f"{key} = " in out


def test_summarize_csv(capsys):
    code, out, _ = run(capsys, "summarize", "--summary", "wheat", "--format", "csv")
    assert code == 0
    values = dict(csv.reader(io.StringIO(out)))
    assert float(values["f3"]) == pytest.approx(0.06)
    assert values["N"] == "34"


def test_summarize_bad_population(capsys, tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("y,phi1,phi2\n1,0,1\n2,2,0\n3,1,1\n")
    code, _, err = run(capsys, "summarize", "--input", str(path))
    assert code == 2
    assert "non-binary" in err and "row(s) 2" in err


def test_io_and_parse_errors(capsys, tmp_path):
    code, _, err = run(capsys, "summarize", "--input", str(tmp_path / "missing.csv"))
    assert code == 1
    path = tmp_path / "p.csv"
    path.write_text("y,phi1,phi2\n1,0,1\nx,1,0\n")
    code, _, err = run(capsys, "summarize", "--input", str(path))
    assert code == 1 and "p.csv:3" in err
    bad = tmp_path / "s.txt"
    bad.write_text("N = 3\nnot a pair\n")
    code, _, err = run(capsys, "summarize", "--summary", str(bad))
    assert code == 1 and "s.txt:2" in err


def test_usage_errors(capsys):
    assert run(capsys)[0] == 1
    assert run(capsys, "table")[0] == 1
    assert run(capsys, "table", "--summary", "rice", "--generate", GEN)[0] == 1
    assert run(capsys, "table", "--generate", GEN)[0] == 1  # sample size unknown
    assert run(capsys, "simulate", "--generate", "N=10,p00=1", "--n", "3")[0] == 1
    assert run(capsys, "--help")[0] == 0


def test_table_rice(capsys):
    code, out, _ = run(capsys, "table", "--summary", "rice", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 8
    assert float(rows[0]["mse"]) == pytest.approx(655.28, rel=1e-3)
    assert float(rows[0]["pre"]) == 100.0
    t2 = next(r for r in rows if "label=t2" in r["flags"])
    assert "unreconciled" in t2["flags"] and "printed_mse=1392.16" in t2["flags"]


def test_table_wheat_text_and_as_tabulated(capsys):
    code, out, _ = run(capsys, "table", "--summary", "wheat")
    assert code == 0
    assert "154.286" in out and "canonical-f2" in out
    code, out, _ = run(capsys, "table", "--summary", "wheat", "--as-tabulated", "--format", "csv")
    rows = {r["flags"].split(";")[0]: r for r in csv.DictReader(io.StringIO(out))}
    assert float(rows["label=t_d4"]["mse"]) == pytest.approx(2425.83, rel=1e-3)
    assert "canonical_mse=" in rows["label=t_d4"]["flags"]


def test_table_spec_handling(capsys, tmp_path):
    code, out, _ = run(capsys, "table", "--summary", "rice", "--specs", "")
    assert code == 0 and len(out.splitlines()) == 1
    code, _, err = run(capsys, "table", "--summary", "rice", "--specs", "ratio1 powr(a1=1)")
    assert code == 1 and "powr" in err
    path = tmp_path / "specs.txt"
    path.write_text("# two rows\nmean\npower(a1=-1,a2=1)\n")
    code, out, _ = run(capsys, "table", "--summary", "rice", "--specs", str(path), "--format", "csv")
    assert code == 0 and len(out.splitlines()) == 3


def test_table_overrides_design(capsys):
    code, out, _ = run(capsys, "table", "--summary", "rice", "--n", "20", "--specs", "mean", "--format", "csv")
    mse = float(out.splitlines()[1].split(",")[3])
    assert mse == pytest.approx((1 / 20 - 1 / 73) * 12371.4)
    assert run(capsys, "table", "--summary", "rice", "--n", "100")[0] == 2


def test_simulate_needs_raw_population(capsys):
    code, _, err = run(capsys, "simulate", "--summary", "rice")
    assert code == 2 and "raw population required" in err


def test_simulate_exact(capsys):
    code, out, _ = run(capsys, "simulate", "--generate", GEN, "--n", "4", "--exact", "--specs", "mean ratio1")
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("# var_ybar"))
    assert abs(float(line.split("rel_gap=")[1])) < 1e-12


def test_simulate_cap_exit_code(capsys):
    gen = GEN.replace("N=10", "N=60")
    code, _, err = run(capsys, "simulate", "--generate", gen, "--n", "30", "--exact")
    assert code == 3 and "Monte Carlo" in err


def test_simulate_csv_with_tolerance_and_export(capsys, tmp_path):
    export = tmp_path / "pop.csv"
    args = ["simulate", "--generate", GEN.replace("N=10", "N=80"), "--n", "12", "--nprime", "30",
            "--replicates", "500", "--seed", "4", "--format", "csv", "--tolerance", "0.5",
            "--export-population", str(export)]
    code, out, _ = run(capsys, *args)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["estimator"] for r in rows][0] == "d-mean"
    assert all(r["pass"] in ("pass", "fail") for r in rows)
    code, again, _ = run(capsys, "simulate", "--input", str(export), "--n", "12", "--nprime", "30",
                         "--replicates", "500", "--seed", "4", "--format", "csv", "--tolerance", "0.5")
    assert again == out


def test_simulate_bad_replicates_and_seed(capsys):
    assert run(capsys, "simulate", "--generate", GEN, "--n", "4", "--replicates", "0")[0] == 1
    assert run(capsys, "simulate", "--generate", GEN, "--n", "4", "--seed", "-1")[0] == 1


def test_ledger(capsys):
    code, out, _ = run(capsys, "ledger")
    assert code == 0 and "[composite-w2]" in out and "[two-phase-expproduct-fpc]" in out
    code, out, _ = run(capsys, "ledger", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert any(r["id"] == "two-phase-expproduct-fpc" for r in rows)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "attrmean", "ledger", "--format", "csv"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("id,anchor")


def test_table_drops_reference_flags_when_design_changes(capsys):
    code, out, _ = run(capsys, "table", "--summary", "rice", "--n", "20", "--specs", "ratio1", "--format", "csv")
    assert code == 0 and "printed_mse" not in out
    code, out, _ = run(capsys, "table", "--summary", "rice", "--n", "15", "--specs", "ratio1", "--format", "csv")
    assert "printed_mse=402.8" in out
