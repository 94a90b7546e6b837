import math
import warnings

import numpy as np
import pytest
from scipy import integrate, stats

from crcconv.bounds import (
    amplitude,
    bound_curves,
    crossover_snr,
    e0_family,
    mc_bound,
    mutual_information,
    nack1,
    nn_pe1,
    psi,
    q_func,
    rcu_bound,
    tub,
    union_bound,
)
from crcconv.convcode import CodeSpec
from crcconv.dso import distance_spectrum


def test_q_function():
    assert q_func(0.0) == pytest.approx(0.5)
    assert q_func(1.0) == pytest.approx(stats.norm.sf(1.0))
    assert q_func(10.0) == pytest.approx(stats.norm.sf(10.0), rel=1e-10)


def test_union_family_relations():
    spec = CodeSpec.from_octal(["13", "17"], k=20, crc="0x9")
    C = distance_spectrum(spec, spec.crc, 30)
    B = distance_spectrum(CodeSpec.from_octal(["13", "17"], k=23), None, 30)
    for db in (-2.0, 0.0, 3.0, 6.0):
        A = amplitude(db)
        assert tub(C, A, 14) <= union_bound(C, A) + 1e-15
        assert nn_pe1(C, A, 3) <= 2 ** -3
        assert 0.0 <= nack1(B, C, A, 3, 29) <= 1 - 2 ** -3
    # high SNR: the first term dominates
    A = amplitude(12.0)
    d = C.d_min
    assert union_bound(C, A) == pytest.approx(C[d] * float(q_func(A * math.sqrt(d))), rel=1e-3)


def test_low_snr_limits_of_list_one_estimates():
    spec = CodeSpec.from_octal(["13", "17"], k=20, crc="0x43")
    C = distance_spectrum(spec, spec.crc, 30)
    B = distance_spectrum(CodeSpec.from_octal(["13", "17"], k=26), None, 30)
    A = amplitude(-20.0)
    assert nn_pe1(C, A, 6) == 2 ** -6
    assert nack1(B, C, A, 6, 29) == 1 - 2 ** -6


def test_crossover_of_two_synthetic_spectra():
    # few codewords at weight 4 against many at weight 5
    c1 = np.zeros(8)
    c1[4] = 1
    c2 = np.zeros(8)
    c2[5] = 200
    roots = crossover_snr(c1, c2, -10, 15)
    assert len(roots) == 1
    A = amplitude(roots[0])
    assert float(q_func(2 * A)) == pytest.approx(200 * float(q_func(A * math.sqrt(5))), rel=1e-8)


def _e0_direct(rho, snr_db):
    A = amplitude(snr_db)

    def integrand(y):
        w = [stats.norm.pdf(y - A), stats.norm.pdf(y + A)]
        s = 1 / (1 + rho)
        return (0.5 * w[0] ** s + 0.5 * w[1] ** s) ** (1 + rho)

    # finite range with breakpoints; the tails beyond 40 are below 1e-300
    val, _ = integrate.quad(integrand, -A - 40, A + 40, points=[-A, 0.0, A],
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return -math.log(val)


@pytest.mark.parametrize("snr", [-3.0, 0.0, 4.0])
@pytest.mark.parametrize("rho", [0.3, 1.0, 2.5])
def test_e0_matches_adaptive_quadrature(snr, rho):
    assert e0_family(rho, snr)[0] == pytest.approx(_e0_direct(rho, snr), rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("snr", [-2.0, 1.0, 5.0])
def test_e0_shape(snr):
    E0, E1, E2 = e0_family(np.linspace(0, 4, 41), snr)
    assert abs(E0[0]) < 1e-10
    assert E1[0] == pytest.approx(mutual_information(snr), rel=1e-9)
    assert np.all(E2 < 0)
    assert np.all(np.diff(E0) > 0)
    h = 1e-4
    for rho in (0.2, 1.0, 3.0):
        e_p, e_m = e0_family(rho + h, snr)[0], e0_family(rho - h, snr)[0]
        d_p, d_m = e0_family(rho + h, snr)[1], e0_family(rho - h, snr)[1]
        _, E1r, E2r = e0_family(rho, snr)
        assert (e_p - e_m) / (2 * h) == pytest.approx(E1r, rel=1e-6)
        assert (d_p - d_m) / (2 * h) == pytest.approx(E2r, rel=1e-6)


def test_mutual_information_limits():
    assert mutual_information(-30.0) < 1e-3
    assert mutual_information(15.0) == pytest.approx(math.log(2), rel=1e-6)


def test_psi():
    assert psi(0.0) == 0.5
    assert psi(1.0) == pytest.approx(stats.norm.sf(1.0) * math.exp(0.5))
    assert psi(-1.0) == -psi(1.0)


def test_rcu_above_mc_and_monotone():
    n, k = 134, 64
    grid = [0.0, 2.0, 4.0]
    mc = [mc_bound(n, k, s) for s in grid]
    rcu = [rcu_bound(n, k, s) for s in grid]
    assert all(a < b for a, b in zip(mc, rcu))
    assert mc == sorted(mc, reverse=True) and rcu == sorted(rcu, reverse=True)


def test_rcu_saddlepoint_state():
    val, st = rcu_bound(134, 64, 3.0, return_state=True)
    assert 0 < val < 1
    assert st.E0p == pytest.approx(st.rate, abs=1e-7)
    assert st.rate == pytest.approx(64 * math.log(2) / 134)


def test_rcu_above_capacity_warns():
    with pytest.warns(RuntimeWarning):
        assert rcu_bound(128, 127, -5.0) == 1.0


def test_rcu_far_below_capacity_uses_straight_line():
    val, st = rcu_bound(128, 8, 8.0, return_state=True)
    assert st.rho == float("inf")
    assert 0 < val < 1e-20


def test_bound_curves_columns():
    spec = CodeSpec.from_octal(["13", "17"], k=20, crc="0x9")
    C = distance_spectrum(spec, spec.crc, 20)
    B = distance_spectrum(CodeSpec.from_octal(["13", "17"], k=23), None, 20)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        curves = bound_curves([0.0, 2.0], B, C, 3, 19, spec.n, spec.k)
    assert set(curves) == {"union", "tub", "nn_pe1", "nack1", "rcu", "mc"}
    assert all(len(c.values) == 2 for c in curves.values())
