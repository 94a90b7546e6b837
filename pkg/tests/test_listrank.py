import math

import numpy as np
import pytest
from scipy import integrate, stats

from crcconv.listrank import (
    RankModel,
    induced_density,
    integrate_rank_over_noise,
    noise_norm_density,
    onion_cdf,
    onion_cond_rank,
    onion_geometry,
    parametric_cond,
    parametric_overall,
    random_coding_rank,
    solid_angle_fraction,
    solve_alpha,
    sphere_area,
    urn_first_red,
)


@pytest.mark.parametrize("n", [1, 2, 16, 134])
def test_noise_norm_density_normalizes(n):
    val, _ = integrate.quad(noise_norm_density, 0, math.sqrt(n) + 40, args=(n,), points=[math.sqrt(n)])
    assert val == pytest.approx(1.0, abs=1e-8)


def test_parametric_forms():
    assert parametric_overall(0.0, 60.0) == 1.0
    assert parametric_overall(1.0, 60.0) == 60.0
    assert parametric_overall(0.01, 61.0) == pytest.approx(1.6)
    table = parametric_cond(np.array([1.0, 2.0]), lambda e: e / 4, 9.0)
    assert table.tolist() == [3.0, 5.0]


def test_solid_angle_fraction_values():
    assert solid_angle_fraction(math.pi, 5) == pytest.approx(1.0)
    assert solid_angle_fraction(math.pi / 2, 7) == pytest.approx(0.5)
    assert solid_angle_fraction(0.0, 7) == 0.0
    # on the circle the fraction is linear in the angle
    assert solid_angle_fraction(0.3, 2) == pytest.approx(0.3 / math.pi)
    # in 3-D the cap fraction is (1 - cos a) / 2
    assert solid_angle_fraction(1.1, 3) == pytest.approx((1 - math.cos(1.1)) / 2)
    with pytest.raises(ValueError):
        solid_angle_fraction(4.0, 3)


def test_solve_alpha_inverts_the_fraction():
    a = solve_alpha(5, 10, 3, 26)
    assert solid_angle_fraction(a, 26) == pytest.approx(5 / 2 ** 13, rel=1e-9)
    with pytest.raises(ValueError):
        solve_alpha(2 ** 13, 10, 3, 26)


def test_onion_geometry_is_continuous_and_saturates():
    geo = onion_geometry(3, 64, 10, 148)
    edges = [math.sqrt(148) * math.sin(a) for a in geo.alphas]
    for e in edges:
        lo, hi = onion_cond_rank(e * (1 - 1e-9), geo, 1017.0), onion_cond_rank(e * (1 + 1e-9), geo, 1017.0)
        assert lo == pytest.approx(hi, abs=1e-5)
    assert onion_cond_rank(edges[0] * 0.5, geo, 1017.0) == 1.0
    big = onion_cond_rank(200.0, geo, 1017.0)
    assert big == pytest.approx(1017.0, rel=0.05)
    ranks = [onion_cond_rank(e, geo, 1017.0) for e in np.linspace(edges[0], 40, 60)]
    assert all(b >= a - 1e-9 for a, b in zip(ranks, ranks[1:]))


def test_onion_cdf_limits():
    n, a = 30, 0.4
    edge = math.sqrt(n) * math.sin(a)
    assert onion_cdf(edge * (1 - 1e-6), a, n) == 1.0
    assert 0 < onion_cdf(10.0, a, n) < 1


@pytest.mark.parametrize("n", [2, 3])
def test_induced_density_normalizes(n):
    R, w = math.sqrt(n), 3.0
    if n == 2:
        # integrate over the circle: y1 = R cos(theta)
        val, _ = integrate.quad(lambda t: induced_density(R * math.cos(t), w, 1.0, 2) * R, 0, 2 * math.pi)
    else:
        # sphere in R^3: area element 2 pi R dy1 (Archimedes)
        val, _ = integrate.quad(lambda y: induced_density(y, w, 1.0, 3) * 2 * math.pi * R, -R, R)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_induced_density_pointwise_bounds():
    n, w = 3, 3.0
    R = math.sqrt(n)
    ys = np.linspace(-R, R, 101)
    dens = induced_density(ys, w, 1.0, n)
    uniform = 1 / sphere_area(R, n)
    assert np.all(dens > 0)
    assert np.all(np.diff(dens) > 0)  # mass tilts toward the transmitted point
    assert dens[0] < uniform < dens[-1]
    with pytest.raises(ValueError):
        induced_density(0.0, 1.0, 1.0, n)


def test_sphere_area():
    assert sphere_area(1.0, 2) == pytest.approx(2 * math.pi)
    assert sphere_area(2.0, 3) == pytest.approx(16 * math.pi)


@pytest.mark.parametrize("k,m", [(1, 1), (4, 3), (10, 6), (64, 10)])
def test_random_coding_rank_below_two_to_m(k, m):
    val = random_coding_rank(2 ** (k + m), 2 ** k)
    assert val <= 2 ** m
    assert val == pytest.approx((2 ** (k + m) + 1) / (2 ** k + 1))


def test_urn_monte_carlo_matches_formula():
    rng = np.random.default_rng(0)
    draws = urn_first_red(16, 4, 200_000, rng)
    mean, se = draws.mean(), draws.std() / math.sqrt(len(draws))
    assert abs(mean - random_coding_rank(16, 4)) < 4 * se
    assert draws.min() == 1 and draws.max() <= 13


def test_integrate_constant_table():
    val = integrate_rank_over_noise([1.0, 50.0], [3.0, 3.0], 30, 1.0)
    assert val == pytest.approx(3.0, abs=1e-6)
    with pytest.warns(RuntimeWarning):
        integrate_rank_over_noise([1.0, 2.0], [1.0, 1.0], 30, 1.0)


def test_integrate_step_table():
    # rank 1 below sqrt(n), 5 above: expectation equals 1 + 4 P(W > sqrt(n))
    n = 20
    eta = np.linspace(0.5, 12, 4001)
    ranks = np.where(eta < math.sqrt(n), 1.0, 5.0)
    expected = 1 + 4 * stats.chi.sf(math.sqrt(n), n)
    assert integrate_rank_over_noise(eta, ranks, n, 1.0) == pytest.approx(expected, abs=5e-3)


def test_rank_model_tables():
    model = RankModel(8.0, 20, 5, 3, eta=np.array([3.0, 4.0]), pe_eta=np.array([0.0, 0.5]),
                      rank_eta=np.array([1.0, 4.0]))
    assert model.parametric_table().tolist() == [1.0, 4.5]
    assert len(model.onion_table(1)) == 2
    with pytest.raises(ValueError):
        RankModel(8.0, 20, 5, 3).parametric_table()
