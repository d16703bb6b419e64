import numpy as np
import pytest

from pspeclab import randlab
from pspeclab.gallery import hager_model
from pspeclab.randlab import (
    PerturbationSpec,
    iid_perturbation_demo,
    probabilistic_weyl_experiment,
    sample_gaussian_matrix,
    sample_random_potential,
    ssv_tail_experiment,
)


def test_gaussian_matrix_seed_determinism():
    a = sample_gaussian_matrix(20, 42)
    b = sample_gaussian_matrix(20, 42)
    c = sample_gaussian_matrix(20, 43)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        sample_gaussian_matrix(0, 1)


def test_gaussian_matrix_moments():
    q = sample_gaussian_matrix(200, 0).ravel()
    assert abs(np.mean(q)) < 0.02
    assert np.mean(np.abs(q) ** 2) == pytest.approx(1.0, abs=0.03)
    # real and imaginary parts carry half the variance each
    assert np.var(q.real) == pytest.approx(0.5, abs=0.02)
    assert np.var(q.imag) == pytest.approx(0.5, abs=0.02)


def test_per_draw_streams_are_independent_of_order():
    spec = PerturbationSpec(kind="gaussian_matrix", delta=1e-3)
    q1 = randlab._draw_perturbation(10, spec, None, seed=5, draw=3)
    q2 = randlab._draw_perturbation(10, spec, None, seed=5, draw=3)
    q3 = randlab._draw_perturbation(10, spec, None, seed=5, draw=4)
    assert np.array_equal(q1, q2)
    assert not np.array_equal(q1, q3)


def test_perturbation_spec_validation():
    with pytest.raises(ValueError):
        PerturbationSpec(delta=0.0)
    with pytest.raises(ValueError):
        PerturbationSpec(kind="bogus", delta=1e-3)


def test_iid_laws():
    rng = np.random.default_rng(9)
    q = randlab._sample_iid(100, "pm1", rng)
    assert set(np.unique(q.real)) == {-1.0, 1.0}
    assert np.allclose(q.imag, 0)
    u = randlab._sample_iid(100, "uniform", rng)
    assert np.max(np.abs(u.real)) <= np.sqrt(3.0)
    assert np.mean(np.abs(u) ** 2) == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        randlab._sample_iid(5, "cauchy", rng)


def test_random_potential_structure_and_gate():
    op = hager_model(0.1, 21)
    spec = PerturbationSpec(kind="random_potential", delta=1e-3, n_modes=3, radius=10.0)
    # the circle transport symbol is not xi-symmetric: gated by default
    with pytest.raises(ValueError):
        sample_random_potential(op, spec, seed=1)
    v = sample_random_potential(op, spec, seed=1, force=True)
    n = op.dim
    rows, cols = np.nonzero(v)
    assert np.all((rows - cols >= 0) & (rows - cols < 3))
    # constant along each populated diagonal, norm within the truncation radius
    for j in range(3):
        d = np.diag(v, -j)
        assert np.allclose(d, d[0])
    coeffs = np.array([np.diag(v, -j)[0] for j in range(3)]) * np.sqrt(2 * np.pi)
    assert np.linalg.norm(coeffs) <= 10.0


def test_random_potential_validation():
    op = hager_model(0.1, 11)
    with pytest.raises(ValueError):
        sample_random_potential(op, PerturbationSpec(kind="gaussian_matrix", delta=1e-3), 0,
                                force=True)
    with pytest.raises(ValueError):
        sample_random_potential(
            op, PerturbationSpec(kind="random_potential", delta=1e-3, n_modes=0, radius=1.0),
            0, force=True)
    with pytest.raises(ValueError):
        sample_random_potential(
            op, PerturbationSpec(kind="random_potential", delta=1e-3, n_modes=2, radius=0.0),
            0, force=True)


def test_count_in_box_edge_grace():
    ev = np.array([0.5 + 0.5j, 0.5 + 0.5000001j, -0.2 + 0.1j])
    assert randlab._count_in_box(ev, (-0.5, 0.5, -0.5, 0.5)) == 2


def test_weyl_experiment_reproducible_and_contained():
    n = 61
    op = hager_model(4.0 / n, n)
    spec = PerturbationSpec(kind="gaussian_matrix", delta=float(n) ** -4)
    gamma = (-0.5, 0.5, -0.5, 0.5)
    r1 = probabilistic_weyl_experiment(op, gamma, spec, draws=3, seed=5)
    r2 = probabilistic_weyl_experiment(op, gamma, spec, draws=3, seed=5)
    assert r1.counts == r2.counts
    assert r1.mean_count == r2.mean_count
    assert r1.containment_max <= 1.0
    assert r1.dropped_draws == 0
    d = r1.to_dict()
    assert d["seed"] == 5 and len(d["counts"]) == 3
    # integrated density is nondecreasing and ends at the full window count
    assert np.all(np.diff(r1.density_counts) >= 0)


def test_weyl_experiment_needs_symbol():
    from pspeclab.gallery import jordan_block
    spec = PerturbationSpec(kind="gaussian_matrix", delta=1e-4)
    with pytest.raises(ValueError):
        probabilistic_weyl_experiment(jordan_block(10), (-1, 1, -1, 1), spec, 2, 0)


def test_ssv_tail_scalar_closed_form():
    # N = 1, X0 = 0, delta = 1: s_1 = |q| with |q|^2 ~ Exp(1), so
    # P(s_1 < t) = 1 - exp(-t^2)
    t_grid = np.geomspace(0.05, 1.0, 9)
    rep = ssv_tail_experiment(np.zeros((1, 1)), 1.0, t_grid, draws=20000, seed=2)
    exact = 1.0 - np.exp(-t_grid ** 2)
    se = np.sqrt(exact * (1 - exact) / 20000)
    assert np.all(np.abs(np.array(rep.tails) - exact) < 5 * se + 1e-4)
    assert rep.slope == pytest.approx(2.0, abs=0.25)


def test_ssv_tails_monotone_and_seeded():
    x0 = hager_model(0.4, 11).matrix
    t_grid = np.geomspace(1e-2, 1.0, 9)
    r1 = ssv_tail_experiment(x0, 1e-3, t_grid, draws=500, seed=7)
    r2 = ssv_tail_experiment(x0, 1e-3, t_grid, draws=500, seed=7)
    assert r1.tails == r2.tails
    assert np.all(np.diff(r1.tails) >= 0)
    assert r1.to_dict()["N"] == 11


def test_ssv_tail_validation():
    with pytest.raises(ValueError):
        ssv_tail_experiment(np.zeros((2, 2)), 1e-3, [0.2, 0.1], draws=100, seed=0)
    with pytest.raises(ValueError):
        ssv_tail_experiment(np.zeros((2, 2)), 1e-3, [0.1, 0.2], draws=5, seed=0)


def test_iid_perturbation_demo():
    x0 = hager_model(0.4, 11).matrix
    out = iid_perturbation_demo(x0, "pm1", draws=200, seed=3)
    assert out["law"] == "pm1"
    assert abs(out["empirical_mean"]) < 0.05
    assert out["empirical_second_moment"] == pytest.approx(1.0, abs=1e-12)
    assert out["tail_report"].draws == 200
    with pytest.raises(ValueError):
        iid_perturbation_demo(x0, "gaussian", draws=100, seed=0)
