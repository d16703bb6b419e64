import json

import numpy as np
import pytest

from pspeclab import reporting
from pspeclab.cli import NUMERICAL_ERROR, USAGE_ERROR, _parse_complex, main


def test_parse_complex():
    assert _parse_complex("1+1i") == 1 + 1j
    assert _parse_complex("-0.5") == -0.5
    assert _parse_complex("2j") == 2j
    from pspeclab.cli import UsageError
    with pytest.raises(UsageError):
        _parse_complex("one")


def test_no_subcommand_is_usage_error():
    assert main([]) == USAGE_ERROR


def test_scan_writes_field(tmp_path, capsys):
    out = tmp_path / "field.csv"
    rc = main(["scan", "--model", "jordan", "--N", "12",
               "--grid=-0.8,0.8,-0.8,0.8,21,21", "--out", str(out)])
    assert rc == 0
    assert "wrote" in capsys.readouterr().out
    fld = reporting.read_field_csv(out)
    assert fld.grid.nx == 21 and fld.fingerprint["model"] == "jordan"


def test_scan_missing_required_field(tmp_path):
    assert main(["scan", "--model", "jordan", "--N", "12"]) == USAGE_ERROR


def test_contours_from_field_file(tmp_path):
    field_csv = tmp_path / "field.csv"
    main(["scan", "--model", "jordan", "--N", "12",
          "--grid=-0.8,0.8,-0.8,0.8,41,41", "--out", str(field_csv)])
    svg = tmp_path / "c.svg"
    csvp = tmp_path / "c.csv"
    rc = main(["contours", "--field", str(field_csv), "--levels", "1e-3,1e-2",
               "--svg", str(svg), "--out", str(csvp)])
    assert rc == 0
    assert svg.read_bytes().startswith(b"<?xml")
    assert csvp.read_text().startswith("level,polyline,re,im")


def test_symbol_order_stdout(capsys):
    rc = main(["symbol", "order", "--model", "davies", "--z", "1"])
    assert rc == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "z_re,z_im,value"
    assert out[1].split(",")[2] == "2"


def test_symbol_kappa(capsys):
    rc = main(["symbol", "kappa", "--model", "davies", "--z", "1+1i",
               "--t", "0.001,0.002,0.004,0.008,0.016"])
    assert rc == 0
    val = float(capsys.readouterr().out.strip().splitlines()[1].split(",")[2])
    assert abs(val - 1.0) < 0.15


def test_fit_boundary_json(tmp_path):
    out = tmp_path / "fit.json"
    rc = main(["fit", "boundary", "--model", "davies", "--z0", "1",
               "--hlist", "0.2,0.1,0.05,0.025", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert abs(doc["slope"] - 2.0 / 3.0) < 0.15


def test_lab_ssv_smoke(tmp_path, capsys):
    out = tmp_path / "ssv.json"
    rc = main(["lab", "ssv", "--N", "11", "--h", "0.4", "--draws", "200",
               "--tgrid", "1e-2,1,9", "--seed", "3", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["draws"] == 200 and len(doc["tails"]) == 9
    assert doc["config"]["command"] == "lab ssv"


def test_lab_weyl_smoke(tmp_path):
    out = tmp_path / "weyl.json"
    fig = tmp_path / "weyl.svg"
    eigs = tmp_path / "eigs.csv"
    rc = main(["lab", "weyl", "--N", "41", "--draws", "2", "--seed", "1",
               "--out", str(out), "--figure", str(fig), "--eigs-csv", str(eigs)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert len(doc["counts"]) == 2 and doc["seed"] == 1
    assert fig.read_bytes().startswith(b"<?xml")
    assert eigs.read_text().startswith("re,im,draw")


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "jordan", "N": 10,
                               "grid": "-0.8,0.8,-0.8,0.8,11,11",
                               "out": str(tmp_path / "f.csv")}))
    rc = main(["--config", str(cfg), "--print-config", "scan", "--N", "12"])
    assert rc == 0
    resolved = json.loads(capsys.readouterr().out)
    assert resolved["N"] == 12          # flag wins
    assert resolved["model"] == "jordan"  # from the file


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"modle": "jordan"}))
    assert main(["--config", str(cfg), "scan"]) == USAGE_ERROR


def test_even_hager_truncation_is_usage_error(tmp_path):
    rc = main(["scan", "--model", "hager", "--N", "10", "--h", "0.1",
               "--grid=-1,1,-1,1,5,5", "--out", str(tmp_path / "f.csv")])
    assert rc == USAGE_ERROR


def test_quasimode_boundary_point_is_numerical_error():
    # z = 1 sits on the boundary set where no beam center exists
    rc = main(["quasimode", "--model", "davies", "--z", "1",
               "--hlist", "0.1,0.05"])
    assert rc == NUMERICAL_ERROR


def test_quasimode_json(tmp_path):
    out = tmp_path / "qm.json"
    rc = main(["quasimode", "--model", "davies", "--z", "1+1i",
               "--hlist", "0.1,0.05", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert len(doc["residuals"]) == 2
    assert doc["residuals"][1] < doc["residuals"][0]


def test_workers_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PSPECLAB_WORKERS", "3")
    rc = main(["--print-config", "scan", "--model", "jordan", "--N", "5",
               "--grid=-1,1,-1,1,3,3", "--out", str(tmp_path / "f.csv")])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["workers"] == 3
