import csv
import json
import subprocess
import sys

import pytest

from ptrs_lab import harness as hs
from ptrs_lab.cli import main


def test_alias_check(capsys):
    assert main(["alias-check", "--bins", "16", "--pulses", "4"]) == 0
    assert capsys.readouterr().out.strip() == "W=8/T f_s=4/T aliased=True"
    assert main(["alias-check", "--bins", "8", "--pulses", "4"]) == 0
    assert "aliased=False" in capsys.readouterr().out


def test_trial_with_dump(tmp_path, capsys):
    dump = tmp_path / "traj.csv"
    cfg = str(hs.builtin("block_trial.yaml"))
    assert main(["trial", "--config", cfg, "--seed", "20240105", "--dump", str(dump)]) == 0
    out = capsys.readouterr().out
    assert "scheme=blk seed=20240105" in out
    rows = list(csv.reader(dump.open()))
    assert rows[0] == ["data_index", "theta_true", "theta_hat"] and len(rows) == 129
    # same seed, same line
    main(["trial", "--config", cfg, "--seed", "20240105"])
    assert capsys.readouterr().out == out


def test_sweep_outputs(tmp_path, capsys):
    grid = tmp_path / "grid.yaml"
    grid.write_text(hs.builtin("table1.yaml").read_text())
    assert main(["sweep", "--grid", str(grid), "--out", str(tmp_path / "o"), "--trials", "3"]) == 0
    header = (tmp_path / "o" / "sweep.csv").read_text().splitlines()[0]
    assert header == ",".join(hs.CSV_COLUMNS)
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["reference"] == "nr" and len(summary["gains"]) == 4
    assert set(summary["scenarios"]) == {"nr", "blk", "rc"}
    assert "G_blk=" in capsys.readouterr().out


def test_nr_compare(tmp_path, capsys):
    out = tmp_path / "c"
    rc = main(["nr-compare", "--pn-model", str(hs.builtin("mpz_approx.yaml")), "--carriers", "100e9",
               "--snr", "30", "--trials", "2", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader((out / "nr_compare.csv").open()))
    assert [r["scheme"] for r in rows] == ["nr", "blk"]
    echo = json.loads((out / "nr_compare.json").read_text())
    assert echo["scenarios"]["blk"]["phase_noise"]["label"] == "approximation"


def test_nr_compare_missing_file(capsys):
    assert main(["nr-compare", "--pn-model", "/no/such.yaml", "--trials", "1"]) == 2
    assert "not found" in capsys.readouterr().err


def test_papr(tmp_path, capsys):
    assert main(["papr", "--mod", "qpsk", "--symbols", "1000", "--out", str(tmp_path)]) == 0
    assert "qpsk: PAPR@1e-2" in capsys.readouterr().out
    rows = list(csv.DictReader((tmp_path / "papr_ccdf.csv").open()))
    assert rows[0]["threshold_db"] == "0.0" and len(rows) == 121


def test_bad_value(capsys):
    assert main(["papr", "--mod", "qpsk", "--symbols", "5"]) == 2
    assert "n_symbols" in capsys.readouterr().err


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "ptrs_lab.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("trial", "sweep", "nr-compare", "papr", "alias-check"):
        assert cmd in r.stdout


def test_requires_command():
    with pytest.raises(SystemExit):
        main([])
