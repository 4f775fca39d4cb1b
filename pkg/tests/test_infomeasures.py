import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from effcap.constellation import from_name
from effcap.infomeasures import (
    LOG2E, QuadratureSpec, ScalarMeasures, mmse_mc, mmse_scalar, mutual_info_mc, mutual_info_scalar,
    scalar_measures,
)
from effcap.rng import ORACLE, stream_rng

# BPSK with CN(0,1) noise sees only the in-phase component, i.e. a real
# channel at SNR 2*rho. Values from adaptive scipy.integrate.quad of
#   I = (s - E log cosh(s + sqrt(s) Z)) / ln 2,  mmse = 1 - E tanh(s + sqrt(s) Z),  s = 2 rho
BPSK_ORACLE = {
    0.1: (0.1314160823528472, 0.8309059855305608),
    0.5: (0.4859441541329354, 0.4495995092066727),
    1.0: (0.7214515907903879, 0.23101822192929555),
    2.0: (0.9128222857745091, 0.0685974087907385),
    5.0: (0.996756327990028, 0.002411314735412118),
    10.0: (0.9999833270714099, 1.2036620880562232e-05),
}


@pytest.mark.parametrize("rho", sorted(BPSK_ORACLE))
def test_bpsk_against_quadrature_oracle(bpsk, rho):
    mi, mm = BPSK_ORACLE[rho]
    assert abs(mutual_info_scalar(bpsk, rho) - mi) < 1e-8
    assert abs(mmse_scalar(bpsk, rho) - mm) < 1e-8


def test_trivial_values(bpsk, gaussian):
    assert mutual_info_scalar(gaussian, 3.0) == pytest.approx(2.0, abs=1e-15)
    assert mutual_info_scalar(bpsk, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert abs(mutual_info_scalar(bpsk, 100.0) - 1.0) < 1e-6
    assert mmse_scalar(gaussian, 1.0) == 0.5
    for name in ("bpsk", "qam4", "qam16", "psk8", "pam4"):
        assert mmse_scalar(from_name(name), 0.0) == pytest.approx(1.0, abs=1e-10)


def test_qam4_is_two_bpsk_at_half_snr(bpsk, qam4):
    rho = np.array([0.3, 1.0, 4.0])
    np.testing.assert_allclose(mutual_info_scalar(qam4, rho), 2 * mutual_info_scalar(bpsk, rho / 2), atol=1e-12)


def test_bpsk_mi_matches_monte_carlo(bpsk):
    val, se = mutual_info_mc(bpsk, 1.0, 2_000_000, stream_rng(3, ORACLE, 0))
    assert abs(mutual_info_scalar(bpsk, 1.0) - val) < 3 * se


def test_psk8_tensor_rule_matches_monte_carlo():
    c = from_name("psk8")
    for rho in (0.5, 4.0):
        v, se = mutual_info_mc(c, rho, 4_000_000, stream_rng(5, ORACLE, 1))
        assert abs(mutual_info_scalar(c, rho) - v) < 3 * se + 1e-6
        m, mse = mmse_mc(c, rho, 4_000_000, stream_rng(5, ORACLE, 2))
        assert abs(mmse_scalar(c, rho) - m) < 3 * mse + 1e-6


@pytest.mark.parametrize("name", ["bpsk", "qam4", "qam16", "psk8", "pam4"])
def test_i_mmse_identity(name):
    c = from_name(name)
    for rho in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        h = 1e-4 * max(rho, 1.0)
        d = (mutual_info_scalar(c, rho + h) - mutual_info_scalar(c, rho - h)) / (2 * h)
        assert abs(d - mmse_scalar(c, rho) * LOG2E) <= 1e-4


@pytest.mark.parametrize("name", ["bpsk", "qam16", "psk8"])
def test_monotone_on_log_grid(name):
    c = from_name(name)
    rho = np.logspace(-3, 2, 50)
    assert np.all(np.diff(mutual_info_scalar(c, rho)) >= -1e-12)
    assert np.all(np.diff(mmse_scalar(c, rho)) <= 1e-12)


def test_large_alphabet_falls_back_to_monte_carlo():
    c = from_name("qam256")
    quad = QuadratureSpec(mc_fallback_samples=20_000)
    v = mutual_info_scalar(c, 10.0, quad, rng=stream_rng(1, ORACLE, 3))
    # the Gaussian ceiling and the 8-bit alphabet bound both apply
    assert 0 < v < math.log2(11)


@pytest.mark.parametrize("name", ["bpsk", "qam4", "psk8"])
def test_table_matches_exact(name):
    c = from_name(name)
    exact = ScalarMeasures(c)
    table = scalar_measures(c)
    rho = np.logspace(-4, 2, 37)
    np.testing.assert_allclose(table.mi(rho), exact.mi(rho), atol=1e-7)
    np.testing.assert_allclose(table.mmse(rho), exact.mmse(rho), atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-6, max_value=0.999))
def test_mmse_inverse_roundtrip(t):
    m = scalar_measures(from_name("bpsk"))
    rho = float(m.mmse_inverse(np.array([t]))[0])
    assert abs(float(m.mmse(np.array([rho]))[0]) - t) < 1e-7 * max(t, 1e-3)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(nodes_per_axis=2)
    with pytest.raises(ValueError):
        mutual_info_scalar(from_name("bpsk"), -1.0)
