import json

import numpy as np
import pytest

from pspeclab import engine, reporting
from pspeclab.engine import ComplexGrid, contours, scan
from pspeclab.gallery import DiscretizedOperator, jordan_block


def _field():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    op = DiscretizedOperator(matrix=m, h=0.25, basis="canonical", name="random")
    return scan(op, ComplexGrid(-2.1, 2.3, -1.7, 1.9, 12, 9))


def test_field_csv_roundtrip_bit_exact(tmp_path):
    fld = _field()
    path = tmp_path / "field.csv"
    reporting.write_field_csv(fld, path)
    back = reporting.read_field_csv(path)
    assert np.array_equal(back.values, fld.values)  # bit exact, not approx
    assert back.grid == fld.grid
    assert back.fingerprint == fld.fingerprint


def test_read_field_csv_rejects_garbage(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("re,im,sigma_min\n0,0,1\n")
    with pytest.raises(ValueError):
        reporting.read_field_csv(p)


def test_eigenvalues_csv(tmp_path):
    p = tmp_path / "eigs.csv"
    sets = [np.array([1 + 2j, 3 - 4j]), np.array([0.5j])]
    reporting.write_eigenvalues_csv(sets, p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "re,im,draw"
    assert len(lines) == 4
    assert lines[3].split(",") == ["0.0", "0.5", "1"]


def test_contours_csv(tmp_path):
    fld = _field()
    cs = contours(fld, [0.5, 1.0])
    p = tmp_path / "contours.csv"
    reporting.write_contours_csv(cs, p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "level,polyline,re,im"
    n_points = sum(len(poly) for level in cs.levels for poly in cs.polylines[level])
    assert len(lines) == 1 + n_points


def test_json_report_serialization(tmp_path):
    p = tmp_path / "report.json"
    payload = {"z": 1 + 2j, "arr": np.arange(3.0), "n": np.int64(5)}
    reporting.write_json_report(payload, p, config={"model": "davies"}, seed=7)
    doc = json.loads(p.read_text())
    assert doc["z"] == {"re": 1.0, "im": 2.0}
    assert doc["arr"] == [0.0, 1.0, 2.0]
    assert doc["n"] == 5
    assert doc["config"]["model"] == "davies"
    assert doc["seed"] == 7


def test_contour_figure_bytes_stable(tmp_path):
    fld = scan(jordan_block(12), ComplexGrid(-1, 1, -1, 1, 41, 41))
    cs = contours(fld, [1e-3, 1e-2])
    p1 = tmp_path / "a.svg"
    p2 = tmp_path / "b.svg"
    ev = np.zeros(3, dtype=complex)
    reporting.contour_figure(cs, p1, eigenvalues=ev, title="jordan")
    reporting.contour_figure(cs, p2, eigenvalues=ev, title="jordan")
    b1 = p1.read_bytes()
    assert b1 == p2.read_bytes()
    assert b1.startswith(b"<?xml")
    assert b"contour-level-0.001-0" in b1


def test_weyl_figure_renders(tmp_path):
    from pspeclab.gallery import hager_model
    from pspeclab.randlab import PerturbationSpec, probabilistic_weyl_experiment
    op = hager_model(4.0 / 41, 41)
    rep = probabilistic_weyl_experiment(op, (-0.5, 0.5, -0.5, 0.5),
                                        PerturbationSpec(delta=1e-6), draws=2, seed=1,
                                        check_containment=False)
    p = tmp_path / "weyl.svg"
    reporting.weyl_figure(rep, p)
    data = p.read_bytes()
    assert data.startswith(b"<?xml") and b"</svg>" in data
