import numpy as np
import pytest

from pspeclab import engine, linalg
from pspeclab.engine import ComplexGrid, boundary_exponent_fit, contours, region, scan
from pspeclab.gallery import DiscretizedOperator, jordan_block, selfadjoint_ho


def _random_op(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return DiscretizedOperator(matrix=m, h=1.0, basis="canonical", name="random")


def test_grid_validation_and_pitch():
    with pytest.raises(ValueError):
        ComplexGrid(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ComplexGrid(0.0, 1.0, 0.0, 1.0, nx=1)
    g = ComplexGrid(0.0, 1.0, 0.0, 2.0, nx=11, ny=11)
    assert g.pitch == pytest.approx(0.2)
    assert g.re_points()[0] == 0.0 and g.re_points()[-1] == 1.0


def test_scan_matches_direct_svd():
    op = _random_op(12, 3)
    grid = ComplexGrid(-2.0, 2.0, -2.0, 2.0, 9, 9)
    fld = scan(op, grid)
    re = grid.re_points()
    im = grid.im_points()
    for ix in (0, 4, 8):
        for iy in (0, 4, 8):
            z = complex(re[ix], im[iy])
            direct = np.linalg.svd(op.matrix - z * np.eye(12), compute_uv=False)[-1]
            assert fld.values[ix, iy] == pytest.approx(direct, rel=1e-8)


def test_scan_worker_count_does_not_change_values():
    op = _random_op(10, 4)
    grid = ComplexGrid(-1.0, 1.0, -1.0, 1.0, 15, 13)
    f1 = scan(op, grid, workers=1)
    f4 = scan(op, grid, workers=4)
    assert np.array_equal(f1.values, f4.values)
    assert f1.fingerprint == f4.fingerprint


def test_scan_handles_singular_point():
    grid = ComplexGrid(-0.1, 0.1, -0.1, 0.1, 3, 3)
    fld = scan(jordan_block(20), grid)
    # z = 0 is exactly singular: sigma_min 0, not a missing point
    assert fld.values[1, 1] == pytest.approx(0.0, abs=1e-12)
    assert fld.missing_count == 0


def test_region_strict_inequality():
    op = selfadjoint_ho(1.0, 1)  # single eigenvalue at 1
    grid = ComplexGrid(0.0, 2.0, -0.5, 0.5, 3, 3)
    fld = scan(op, grid)
    mask = region(fld, 1.0)
    # the node at z = 0 has sigma_min exactly 1, excluded by strictness
    assert not mask[0, 1]
    assert mask[1, 1]  # z = 1 itself
    with pytest.raises(ValueError):
        region(fld, -0.1)


def test_region_nesting():
    fld = scan(_random_op(15, 6), ComplexGrid(-3, 3, -3, 3, 31, 31))
    prev = region(fld, 1e-3)
    for eps in (1e-2, 1e-1, 1.0):
        cur = region(fld, eps)
        assert np.all(cur[prev])
        prev = cur


def test_normal_operator_field_is_distance_to_spectrum():
    op = selfadjoint_ho(0.2, 8)
    d = np.diag(op.matrix)
    grid = ComplexGrid(-1.0, 4.0, -1.0, 1.0, 26, 11)
    fld = scan(op, grid)
    rr, ii = np.meshgrid(grid.re_points(), grid.im_points(), indexing="ij")
    exact = np.min(np.abs((rr + 1j * ii)[..., None] - d[None, None, :]), axis=-1)
    assert np.max(np.abs(fld.values - exact)) < 1e-10


def test_contours_circle_level_set():
    # scan of the 1x1 zero matrix gives the field |z| exactly
    op = DiscretizedOperator(matrix=np.zeros((1, 1), dtype=complex), h=1.0,
                             basis="canonical", name="zero")
    grid = ComplexGrid(-1.0, 1.0, -1.0, 1.0, 81, 81)
    fld = scan(op, grid)
    cs = contours(fld, [0.5])
    polys = cs.polylines[0.5]
    assert polys
    pts = np.vstack(polys)
    radii = np.hypot(pts[:, 0], pts[:, 1])
    assert np.max(np.abs(radii - 0.5)) < grid.pitch
    # the circle is interior to the grid, so the chain closes
    closed = [p for p in polys if np.allclose(p[0], p[-1])]
    assert closed


def test_contours_linear_field_exact():
    # field = Re z: the 0.3-isoline is the vertical line Re z = 0.3
    grid = ComplexGrid(0.0, 1.0, 0.0, 1.0, 11, 11)
    rr, _ = np.meshgrid(grid.re_points(), grid.im_points(), indexing="ij")
    fld = engine.SigmaMinField(grid=grid, values=rr.copy())
    cs = contours(fld, [0.3])
    pts = np.vstack(cs.polylines[0.3])
    assert np.allclose(pts[:, 0], 0.3, atol=1e-12)


def test_contours_level_validation():
    fld = scan(_random_op(5, 8), ComplexGrid(-1, 1, -1, 1, 5, 5))
    with pytest.raises(ValueError):
        contours(fld, [0.1, 0.05])
    with pytest.raises(ValueError):
        contours(fld, [-1.0])


def test_perturbation_inclusion_check():
    rep = engine.perturbation_inclusion_check(jordan_block(15), eps=1e-2,
                                              draws=20, seed=5)
    assert rep.passed and rep.violations == 0
    with pytest.raises(ValueError):
        engine.perturbation_inclusion_check(jordan_block(5), eps=0.0, draws=1, seed=0)


def _scalar_family(f):
    def build(h):
        return DiscretizedOperator(matrix=np.array([[f(h)]], dtype=complex),
                                   h=h, basis="canonical", name="scalar")
    return build


def test_boundary_exponent_fit_synthetic_power_law():
    # ||(P_h)^{-1}|| = h^{-2/3} exactly for the scalar h^{2/3}
    fam = _scalar_family(lambda h: h ** (2.0 / 3.0))
    slope = boundary_exponent_fit(fam, 0.0, [0.1, 0.05, 0.02, 0.01])
    assert slope == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_exponential_rate_fit_synthetic():
    fam = _scalar_family(lambda h: np.exp(-1.0 / h))
    rate = engine.exponential_rate_fit(fam, 0.0, [0.1, 0.05, 0.02, 0.01])
    assert rate == pytest.approx(1.0, abs=1e-10)


def test_boundary_exponent_fit_needs_enough_points():
    fam = _scalar_family(lambda h: h)
    with pytest.raises(ValueError):
        boundary_exponent_fit(fam, 0.0, [0.1, 0.05, 0.02])
