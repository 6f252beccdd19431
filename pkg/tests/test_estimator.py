import itertools
from math import comb

import numpy as np
import pytest

from ucov import (
    Element,
    EstimatorConfig,
    InvalidConfigError,
    Sample,
    SpaceDescriptor,
    UnsupportedOperationError,
    draw_iid,
    estimate,
    gaussian_kl,
    ma_wrap,
    population_cm_analytic,
    population_cm_exact,
    population_cm_oracle,
    student_t,
)


def brute_force(coords, m, theta=None):
    coords = np.asarray(coords, dtype=float)
    n, d = coords.shape
    th = np.zeros(d) if theta is None else np.asarray(theta, dtype=float)
    acc = np.zeros((d, d))
    for idx in itertools.combinations(range(n), m):
        v = coords[list(idx)].mean(axis=0) - th
        acc += np.outer(v, v)
    return acc / comb(n, m)


def _sample(coords, kind="l2"):
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    return Sample(SpaceDescriptor(coords.shape[1], kind), coords)


def test_worked_example_both_algorithms():
    s = _sample([[1.0], [2.0], [3.0], [4.0]])
    for algo in ("enumerate", "closed_form"):
        t = estimate(s, EstimatorConfig(m=2, algorithm=algo))
        assert t.grid[0, 0] == pytest.approx(160.0 / 24.0, rel=1e-14)


def test_matches_brute_force_grid():
    rng = np.random.default_rng(0)
    for n, m, d in [(6, 1, 3), (6, 3, 3), (7, 4, 2), (8, 8, 1), (5, 2, 4)]:
        coords = rng.normal(size=(n, d))
        s = _sample(coords)
        want = brute_force(coords, m)
        for algo in ("enumerate", "closed_form"):
            got = estimate(s, EstimatorConfig(m=m, algorithm=algo)).grid
            assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


def test_theta_centering_matches_brute_force():
    rng = np.random.default_rng(1)
    coords = rng.normal(size=(6, 2)) + 3.0
    theta = np.array([3.0, 2.0])
    s = _sample(coords)
    cfg = EstimatorConfig(m=2, theta=Element(s.space, theta))
    assert np.allclose(estimate(s, cfg).grid, brute_force(coords, 2, theta),
                       rtol=1e-10)


def test_m_edges_reduce_to_closed_expressions():
    rng = np.random.default_rng(2)
    coords = rng.normal(size=(9, 3))
    s = _sample(coords)
    c1 = estimate(s, EstimatorConfig(m=1)).grid
    assert np.allclose(c1, coords.T @ coords / 9)
    cn = estimate(s, EstimatorConfig(m=9)).grid
    xb = coords.mean(axis=0)
    assert np.allclose(cn, np.outer(xb, xb))


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    coords = rng.normal(size=(7, 2))
    perm = rng.permutation(7)
    a = estimate(_sample(coords), EstimatorConfig(m=3)).grid
    b = estimate(_sample(coords[perm]), EstimatorConfig(m=3)).grid
    assert np.allclose(a, b, rtol=1e-12)


def test_result_symmetric_psd():
    rng = np.random.default_rng(4)
    coords = rng.normal(size=(10, 4))
    g = estimate(_sample(coords), EstimatorConfig(m=3)).grid
    assert np.allclose(g, g.T)
    assert np.linalg.eigvalsh(g).min() >= -1e-12


def test_sign_kernel_enumerates_unit_directions():
    # scalar subset means normalize to +-1, so the 1x1 grid is exactly 1
    s = _sample([[1.0], [-2.0], [5.0]])
    t = estimate(s, EstimatorConfig(m=2, kernel="sign"))
    assert t.grid[0, 0] == 1.0
    # orthogonal unit directions average to the isotropic grid
    s2 = _sample([[1.0, 0.0], [0.0, 1.0]])
    t2 = estimate(s2, EstimatorConfig(m=1, kernel="sign"))
    assert np.allclose(t2.grid, np.diag([0.5, 0.5]))


def test_sign_kernel_zero_subset_mean_contributes_zero():
    s = _sample([[1.0], [-1.0]])
    t = estimate(s, EstimatorConfig(m=2, kernel="sign"))
    assert t.grid[0, 0] == 0.0


def test_config_rejections():
    with pytest.raises(InvalidConfigError):
        EstimatorConfig(m=0)
    with pytest.raises(UnsupportedOperationError):
        EstimatorConfig(m=2, kernel="sign", algorithm="closed_form")
    s = _sample([[1.0], [2.0]])
    with pytest.raises(InvalidConfigError):
        estimate(s, EstimatorConfig(m=3))
    with pytest.raises(InvalidConfigError):
        EstimatorConfig(m=2, kernel="spin")


def test_unbiasedness_monte_carlo():
    gen = gaussian_kl(1, (1.0,))
    n, m, reps = 8, 3, 4000
    vals = np.empty(reps)
    cfg = EstimatorConfig(m=m)
    for l in range(reps):
        vals[l] = estimate(draw_iid(gen, n, 1000 + l), cfg).grid[0, 0]
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - 1.0 / m) < 3 * se


def test_population_cm_forms_agree():
    assert population_cm_analytic(2.0, 4) == pytest.approx(0.5)
    t5 = student_t(5)
    assert population_cm_exact(t5, 2).grid[0, 0] == pytest.approx(5.0 / 6.0)
    # off-origin centering picks up the outer-product shift
    th = Element(t5.space, np.array([1.0]))
    assert population_cm_exact(t5, 2, theta=th).grid[0, 0] == pytest.approx(
        5.0 / 6.0 + 1.0)
    dep = ma_wrap(gaussian_kl(1, (1.0,)), (1.0, 1.0))
    assert population_cm_exact(dep, 1).grid[0, 0] == pytest.approx(2.0)


def test_population_cm_oracle_brackets_exact():
    gen = gaussian_kl(2, (1.0, 0.5))
    est = population_cm_oracle(gen, 2, reps=40_000, seed=17)
    exact = population_cm_exact(gen, 2).grid
    assert np.all(np.abs(est.value.grid - exact) < 4 * est.se + 1e-12)
    again = population_cm_oracle(gen, 2, reps=40_000, seed=17)
    assert np.array_equal(est.value.grid, again.value.grid)
