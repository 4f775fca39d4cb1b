import math

import numpy as np
import pytest

from effcap.asymptotics import (
    BelowMinimumEnergyError, asymptotic_limits, ec_derivatives_at_zero, finite_difference_slope,
    low_snr_approximation,
)
from effcap.channel import ChannelModel
from effcap.constellation import from_name
from effcap.effective_capacity import block_rate, channel_ensemble, effective_capacity
from effcap.channel import ChannelSample
from effcap.power_allocation import PowerAllocation

LN2 = math.log(2)


def test_siso_minimum_energy():
    r = ec_derivatives_at_zero(ChannelModel(1, 1), 1.0, 10_000, 0)
    assert abs(r.zeta_min / LN2 - 1) < 0.02
    assert r.first_derivative > 0 and r.second_derivative <= 0 and r.slope_S0 > 0
    assert r.zeta_min == pytest.approx(1 / r.first_derivative)


def test_zeta_min_independent_of_theta():
    z = {ec_derivatives_at_zero(ChannelModel(2, 1), th, 2_000, 5).zeta_min for th in (0.1, 1.0, 10.0)}
    assert len(z) == 1


def test_theta_to_zero_second_derivative():
    m = ChannelModel(1, 2)
    r = ec_derivatives_at_zero(m, 1e-12, 5_000, 1)
    eig, _ = channel_ensemble(m, 1, 5_000)
    want = -np.mean(eig[:, 0] ** 2) / (2 * LN2)
    assert r.second_derivative == pytest.approx(want, rel=1e-9)


def test_real_modulation_halves_slope():
    m = ChannelModel(1, 1)
    a = ec_derivatives_at_zero(m, 1.0, 2_000, 3)
    b = ec_derivatives_at_zero(m, 1.0, 2_000, 3, is_real_modulation=True)
    assert b.slope_S0 == pytest.approx(a.slope_S0 / 2, rel=1e-14)
    assert b.zeta_min == a.zeta_min


def test_slope_decreases_with_estimation_error():
    s = [ec_derivatives_at_zero(ChannelModel(1, 2, beta=b), 1.0, 10_000, 0).slope_S0 for b in (0, .25, .5)]
    assert s[0] > s[1] > s[2]


def test_linear_approximation():
    r = ec_derivatives_at_zero(ChannelModel(1, 1), 1.0, 2_000, 0)
    assert low_snr_approximation(r, r.zeta_min_db) == 0.0
    assert low_snr_approximation(r, r.zeta_min_db + 10 * math.log10(2)) == pytest.approx(r.slope_S0)
    with pytest.raises(BelowMinimumEnergyError):
        low_snr_approximation(r, r.zeta_min_db - 0.1)


def test_linear_approximation_tracks_gaussian_curve(gaussian):
    m = ChannelModel(1, 1)
    r = ec_derivatives_at_zero(m, 1.0, 10_000, 0)
    for P in (1e-3, 1e-2, 3e-2, 1e-1):
        e = effective_capacity(m.with_(P=P), 1.0, "optimal", gaussian, 10_000, 0).value
        if e > 0.1:
            continue
        approx = low_snr_approximation(r, 10 * math.log10(P / e))
        assert abs(approx / e - 1) < 0.10


@pytest.mark.parametrize("name", ["bpsk", "qam4", "gaussian"])
def test_finite_difference_matches_first_derivative(name):
    m = ChannelModel(1, 1)
    c = from_name(name)
    slope = finite_difference_slope(lambda P: effective_capacity(m.with_(P=P), 1.0, "optimal", c, 10_000, 0).value)
    r = ec_derivatives_at_zero(m, 1.0, 10_000, 0)
    assert abs(slope / r.first_derivative - 1) < 0.05


def test_rate_is_concave_in_power(qam4):
    H = np.array([[0.9 + 0.2j, 0.1], [0.3j, 0.7]])
    d, V = np.linalg.eigh(H.conj().T @ H)
    s = ChannelSample(H, d[::-1], V[:, ::-1])
    alloc = PowerAllocation(np.array([0.6, 0.4]), math.nan, 1.0)
    P = np.linspace(0.01, 5, 60)
    r = np.array([block_rate(s, alloc, p, qam4) for p in P])
    assert np.max(np.diff(r, 2)) <= 1e-9


def test_limit_tables():
    assert asymptotic_limits("M_to_inf") == (0.0, 2.0)
    assert asymptotic_limits("both_to_inf_ratio", 2.0) == (LN2 / 2, 2.0)
    assert asymptotic_limits("both_to_inf_ratio", 0.5) == (LN2, 1.0)
    assert asymptotic_limits("both_to_inf_ratio", 1.0) == (LN2, 2.0)
    assert asymptotic_limits("N_to_inf_only_via_ratio") == (LN2, 0.0)
    assert asymptotic_limits("both_to_inf_ratio", 4.0, sigma_h_sq=2.0) == (LN2 / 8, 2.0)


@pytest.mark.parametrize("args", [("both_to_inf_ratio", None), ("both_to_inf_ratio", -1.0), ("M_to_inf", 2.0),
                                  ("sideways", None)])
def test_limit_argument_errors(args):
    with pytest.raises(ValueError):
        asymptotic_limits(*args)


def test_requires_enough_samples():
    with pytest.raises(ValueError):
        ec_derivatives_at_zero(ChannelModel(1, 1), 1.0, 999, 0)


def _curve_s0(c, m, theta):
    P = np.linspace(0.001, 0.01, 12)
    C = np.array([effective_capacity(m.with_(P=p), theta, "optimal", c, 10_000, 0).value for p in P])
    a2, a1 = np.linalg.lstsq(np.stack([P ** 4, P ** 3, P ** 2, P], 1), C, rcond=None)[0][2:]
    return a1 ** 2 / (-a2) * LN2


@pytest.mark.parametrize("theta", [0.01, 1.0])
def test_curve_slope_ratio_against_second_order_expansion(theta):
    # only the mmse term doubles for a real alphabet, the queue term does not
    m = ChannelModel(1, 1)
    eig, _ = channel_ensemble(m, 0, 10_000)
    l1, l2 = eig[:, 0].mean(), (eig[:, 0] ** 2).mean()
    q = theta / LN2 ** 2 * (l1 ** 2 - l2)
    want = (q - l2 / LN2) / (q - 2 * l2 / LN2)
    got = _curve_s0(from_name("bpsk"), m, theta) / _curve_s0(from_name("qam4"), m, theta)
    assert got == pytest.approx(want, rel=0.01)
