import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from effcap.channel import (
    ChannelModel, CorrelationSpec, channel_from_innovations, effective_snr, exp_correlation,
    gram_eigendecomposition, jacobi_eigh, sample_channel, sample_channels,
)
from effcap.errors import ConvergenceError
from effcap.rng import CHANNEL, ORACLE, complex_normal, stream_rng


def test_exp_correlation_examples():
    np.testing.assert_array_equal(exp_correlation(CorrelationSpec(2)), np.eye(2))
    np.testing.assert_array_equal(exp_correlation(CorrelationSpec(2, 0.0)), np.ones((2, 2)))
    R = exp_correlation(CorrelationSpec(3, math.log(2)))
    np.testing.assert_allclose(R, [[1, .5, .25], [.5, 1, .5], [.25, .5, 1]], atol=1e-15)


@pytest.mark.parametrize("ratio", [0.01, 0.1, 0.5, 1.0, 3.0])
def test_exp_correlation_is_psd(ratio):
    R = exp_correlation(CorrelationSpec(6, ratio))
    np.linalg.cholesky(R + 1e-12 * np.eye(6))
    np.testing.assert_array_equal(np.diag(R), 1.0)


def test_gram_examples():
    d, _ = gram_eigendecomposition(np.diag([1.0, 2.0]))
    np.testing.assert_allclose(d, [4, 1], atol=1e-14)
    d, V = gram_eigendecomposition(np.eye(2))
    np.testing.assert_allclose(d, [1, 1])
    np.testing.assert_allclose(np.abs(V), np.eye(2), atol=1e-14)


def _quadratic_roots(G):
    tr = np.trace(G).real
    det = np.linalg.det(G).real
    disc = math.sqrt(max(tr * tr / 4 - det, 0.0))
    return np.array([tr / 2 + disc, tr / 2 - disc])


def test_3x2_against_characteristic_polynomial():
    r = stream_rng(9, ORACLE, 0)
    for _ in range(200):
        H = complex_normal(r, (3, 2))
        d, _ = gram_eigendecomposition(H)
        np.testing.assert_allclose(d, _quadratic_roots(H.conj().T @ H), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32))
def test_sample_invariants(M, N, seed):
    s = sample_channel(ChannelModel(M, N), stream_rng(seed, CHANNEL, 0))
    H, d, V = s.H_hat, s.eigenvalues, s.right_singular_basis
    fro = np.linalg.norm(H) ** 2
    assert abs(d.sum() - fro) <= 1e-9 * max(fro, 1.0)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(M), atol=1e-9)
    G = H.conj().T @ H
    for i in range(M):
        assert np.max(np.abs(G @ V[:, i] - d[i] * V[:, i])) <= 1e-8 * (1 + d[i])
    assert np.all(np.diff(d) <= 0) and np.all(d >= 0)


def test_jacobi_reports_non_convergence():
    A = complex_normal(stream_rng(1, ORACLE, 5), (8, 8))
    with pytest.raises(ConvergenceError) as err:
        jacobi_eigh(A + A.conj().T, max_sweeps=1)
    assert err.value.residual > 0


def test_fixed_innovation():
    s = channel_from_innovations(ChannelModel(1, 1), np.array([[0.3 + 0.4j]]))
    assert s.H_hat[0, 0] == pytest.approx(0.3 + 0.4j)
    assert s.eigenvalues[0] == pytest.approx(0.25, abs=1e-15)


def test_estimate_variance_law_of_large_numbers():
    beta = 0.3
    m = ChannelModel(2, 2, beta=beta)
    energy = [np.linalg.norm(s.H_hat) ** 2 / 4 for s in sample_channels(m, 4, 20_000)]
    assert abs(np.mean(energy) - (1 - beta)) < 0.02 * (1 - beta)
    tiny = ChannelModel(2, 2, beta=1 - 1e-9)
    assert np.mean([np.linalg.norm(s.H_hat) ** 2 for s in sample_channels(tiny, 4, 200)]) < 1e-7


def test_largest_eigenvalue_against_power_iteration():
    m = ChannelModel(3, 3)
    ours, theirs = [], []
    for s in sample_channels(m, 2, 10_000):
        ours.append(s.eigenvalues[0])
        G = s.H_hat.conj().T @ s.H_hat
        v = np.ones(3, complex)
        for _ in range(200):
            v = G @ v
            v /= np.linalg.norm(v)
        theirs.append(np.vdot(v, G @ v).real)
    assert abs(np.mean(ours) / np.mean(theirs) - 1) < 0.05


def test_effective_snr():
    assert effective_snr(ChannelModel(2, 3, P=5.0)) == 5.0
    assert effective_snr(ChannelModel(1, 1, beta=0.5, P=2.0)) == pytest.approx(1.0)
    assert effective_snr(ChannelModel(1, 1, P=0.0)) == 0.0
    m = ChannelModel(4, 2, beta=0.2, sigma_h_sq=2.0, P=3.0, sigma_w_sq=0.5)
    assert effective_snr(m) == pytest.approx(3.0 / (0.5 + 3.0 * 0.2 * 2.0 / 4))


def test_correlated_channel_uses_kronecker_colouring():
    m = ChannelModel(2, 2, corr_tx=CorrelationSpec(2, 0.2), corr_rx=CorrelationSpec(2, 0.5))
    H = np.stack([s.H_hat for s in sample_channels(m, 3, 20_000)])
    Rr = np.einsum("snm,skm->nk", H, H.conj()) / (20_000 * 2)
    np.testing.assert_allclose(Rr.real, exp_correlation(m.corr_rx), atol=0.03)


@pytest.mark.parametrize("kwargs", [dict(M=0, N=1), dict(M=1, N=1, beta=1.0), dict(M=1, N=1, P=-1),
                                    dict(M=1, N=1, sigma_w_sq=0), dict(M=2, N=1, corr_tx=CorrelationSpec(3))])
def test_model_validation(kwargs):
    with pytest.raises(ValueError):
        ChannelModel(**kwargs)
