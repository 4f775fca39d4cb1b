"""Monte Carlo effective capacity of the block-fading MIMO link.

Rates are kept in bits throughout and ``theta`` is a per-bit decay rate,
so the exponential mean ``E{exp(-theta T r)}`` needs no unit conversion:
for a deterministic channel the estimate collapses to ``r / N``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from . import rng as _rng
from .channel import ChannelModel, ChannelSample, effective_snr, sample_channels
from .constellation import Constellation
from .errors import UnsupportedConfigurationError
from .infomeasures import LOG2E
from .power_allocation import Policy, PowerAllocation, default_measures, mercury_waterfill_batch

__all__ = [
    "EffectiveCapacityEstimate",
    "MIEstimate",
    "block_rate",
    "vector_mutual_info",
    "channel_ensemble",
    "sample_rates",
    "estimate_from_rates",
    "effective_capacity",
    "link_utilization",
    "MAX_JOINT_SYMBOLS",
]

MAX_JOINT_SYMBOLS = 4096
DEFAULT_NOISE_SAMPLES = 2000


@dataclass(frozen=True)
class EffectiveCapacityEstimate:
    """Effective capacity in bits per channel use per receive dimension.

    ``mean_rate`` is the ``theta -> 0`` limit ``E{r}/N`` on the same samples.
    """

    value: float
    mean_rate: float
    link_utilization: float
    samples: int
    seed: int
    std_error: float
    theta: float
    mean_rate_std_error: float = 0.0


class MIEstimate(NamedTuple):
    value: float
    std_error: float


def block_rate(sample: ChannelSample, alloc: PowerAllocation, gamma: float, c: Constellation,
               measures=None) -> float:
    """Rate of one frame on the diagonalized channel: ``sum_i I(gamma d_i sigma_i)``."""
    n = sample.n_eigen
    if gamma == 0:
        return 0.0
    m = measures or default_measures(c)
    rho = gamma * sample.eigenvalues[:n] * np.asarray(alloc.sigmas)[:n]
    return float(np.sum(m.mi(rho)))


def _psd_sqrt(K: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (K + K.conj().T))
    if w.min() < -1e-10 * max(w.max(), 1.0):
        raise ValueError("input covariance must be positive semi-definite")
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.conj().T


def _joint_alphabet(c: Constellation, M: int) -> np.ndarray:
    if c.size ** M > MAX_JOINT_SYMBOLS:
        raise UnsupportedConfigurationError(
            f"joint alphabet {c.size}^{M} exceeds {MAX_JOINT_SYMBOLS} symbols; "
            "use the eigenbasis (block_rate) path instead"
        )
    grids = np.meshgrid(*([c.points] * M), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)  # (J, M)


def _vector_mi_draws(A: np.ndarray, joint: np.ndarray, rng: np.random.Generator, draws: int) -> np.ndarray:
    """Per-draw information density samples (bits) for ``y = A s + n``."""
    N = A.shape[0]
    codebook = joint @ A.T  # (J, N)
    J = codebook.shape[0]
    idx = rng.integers(J, size=draws)
    n = _rng.complex_normal(rng, (draws, N))
    diff = codebook[idx][:, None, :] - codebook[None, :, :] + n[:, None, :]
    expo = -np.sum(diff.real ** 2 + diff.imag ** 2, axis=2) + np.sum(n.real ** 2 + n.imag ** 2, axis=1)[:, None]
    return math.log2(J) - logsumexp(expo, axis=1) * LOG2E


def vector_mutual_info(sample: ChannelSample, K, gamma: float, c: Constellation,
                       noise_samples: int = DEFAULT_NOISE_SAMPLES, rng=None) -> MIEstimate:
    """Joint mutual information of ``y = sqrt(gamma) H K^{1/2} s + n``.

    ``s`` is uniform over the product alphabet ``c^M``. Gaussian input uses
    ``log2 det(I + gamma H K H^dagger)``; discrete inputs are estimated by
    Monte Carlo over ``(s, n)`` with a log-sum-exp over the joint alphabet.
    """
    H = sample.H_hat
    K = np.asarray(K, dtype=complex)
    M = H.shape[1]
    if K.shape != (M, M):
        raise ValueError("covariance must be M x M")
    if np.trace(K).real > 1.0 + 1e-9:
        raise ValueError("covariance trace must not exceed 1")
    if c.is_gaussian:
        G = np.eye(H.shape[0]) + gamma * H @ K @ H.conj().T
        sign, logdet = np.linalg.slogdet(G)
        return MIEstimate(float(logdet * LOG2E), 0.0)
    joint = _joint_alphabet(c, M)
    if gamma == 0:
        return MIEstimate(0.0, 0.0)
    if rng is None:
        rng = _rng.stream_rng(0, _rng.NOISE, 0)
    A = math.sqrt(gamma) * H @ _psd_sqrt(K)
    v = _vector_mi_draws(A, joint, rng, noise_samples)
    return MIEstimate(float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size)))


@functools.lru_cache(maxsize=16)
def _ensemble_cached(key: tuple, model: ChannelModel, seed: int, samples: int):
    eig = np.empty((samples, model.M))
    H = np.empty((samples, model.N, model.M), dtype=complex)
    for j, s in enumerate(sample_channels(model, seed, samples)):
        eig[j] = s.eigenvalues
        H[j] = s.H_hat
    eig.setflags(write=False)
    H.setflags(write=False)
    return eig, H


def channel_ensemble(model: ChannelModel, seed: int, samples: int):
    """Eigenvalues ``(S, M)`` and estimates ``(S, N, M)`` of samples ``0..S-1``.

    The draws do not depend on the power or noise level, so SNR sweeps
    share one cached ensemble.
    """
    key = (model.M, model.N, model.sigma_h_sq, model.beta, model.corr_tx, model.corr_rx, seed, samples)
    return _ensemble_cached(key, model.with_(P=1.0, sigma_w_sq=1.0), seed, samples)


def sample_rates(model: ChannelModel, policy, c: Constellation, samples: int, seed: int,
                 per_antenna_independent: bool = True,
                 noise_samples: int = DEFAULT_NOISE_SAMPLES) -> np.ndarray:
    """Per-frame service rates ``r_s`` (bits per channel use) for samples ``0..S-1``.

    ``optimal`` and ``beamforming`` run on the eigenbasis. ``equal`` uses
    ``K = I/M``, which is the same matrix in every basis, so by default it
    is the point ``sigma_i = 1/M`` of the eigenbasis signaling that the
    optimal policy searches over. ``per_antenna_independent=False`` instead
    decodes the per-antenna alphabet ``c^M`` jointly (Monte Carlo, slow).
    """
    policy = Policy(policy)
    gamma = effective_snr(model)
    eig, H = channel_ensemble(model, seed, samples)
    n = model.n_eigen
    d = eig[:, :n]
    if gamma == 0:
        return np.zeros(samples)
    m = default_measures(c)

    if policy is Policy.OPTIMAL:
        if n == 1:
            return m.mi(gamma * d[:, 0])
        sig, _ = mercury_waterfill_batch(c, gamma, d, m)
        return np.sum(m.mi(gamma * d * sig), axis=1)
    if policy is Policy.BEAMFORMING or model.M == 1:
        return m.mi(gamma * d[:, 0])
    # equal power, K = I/M
    if c.is_gaussian or per_antenna_independent:
        return np.sum(m.mi(gamma * d / model.M), axis=1)
    return _joint_equal_power_rates(H, gamma, c, seed, noise_samples)


def _joint_equal_power_rates(H: np.ndarray, gamma: float, c: Constellation, seed: int,
                             noise_samples: int) -> np.ndarray:
    S, N, M = H.shape
    joint = _joint_alphabet(c, M) / math.sqrt(M)
    J = joint.shape[0]
    out = np.empty(S)
    # chunk so that draws*J*N complex temporaries stay around 50 MB
    per = max(1, int(3_000_000 // (noise_samples * J * N)))
    for start in range(0, S, per):
        stop = min(S, start + per)
        idx_list, noise_list = [], []
        for j in range(start, stop):
            g = _rng.stream_rng(seed, _rng.NOISE, j)
            idx_list.append(g.integers(J, size=noise_samples))
            noise_list.append(_rng.complex_normal(g, (noise_samples, N)))
        idx = np.stack(idx_list)  # (B, D)
        noise = np.stack(noise_list)  # (B, D, N)
        code = math.sqrt(gamma) * np.einsum("bnm,jm->bjn", H[start:stop], joint)  # (B, J, N)
        sent = np.take_along_axis(code, idx[:, :, None], axis=1)  # (B, D, N)
        diff = sent[:, :, None, :] - code[:, None, :, :] + noise[:, :, None, :]
        expo = -np.sum(diff.real ** 2 + diff.imag ** 2, axis=3)
        expo += np.sum(noise.real ** 2 + noise.imag ** 2, axis=2)[:, :, None]
        dens = math.log2(J) - logsumexp(expo, axis=2) * LOG2E
        out[start:stop] = np.clip(dens.mean(axis=1), 0.0, math.log2(J))
    return out


def estimate_from_rates(rates, theta: float, N: int, T: int, seed: int = 0,
                        alpha: float = 0.0) -> EffectiveCapacityEstimate:
    """Effective-capacity estimate from per-frame rates (bits per channel use).

    ``value = -(1/(theta N T)) log mean exp(-theta T (1-alpha) r_s)``, with a
    delta-method standard error.
    """
    if theta <= 0:
        raise ValueError("theta must be positive; use mean_rate for the theta -> 0 limit")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    r = (1.0 - alpha) * np.asarray(rates, dtype=float)
    S = r.size
    x = -theta * T * r
    shift = x.max()
    y = np.exp(x - shift)
    mean_y = y.mean()
    log_mean = shift + math.log(mean_y)
    value = -log_mean / (theta * N * T)
    se_y = y.std(ddof=1) / math.sqrt(S) if S > 1 else 0.0
    se = se_y / (mean_y * theta * N * T)
    mean_rate = float(r.mean()) / N
    mean_se = float(r.std(ddof=1) / math.sqrt(S)) / N if S > 1 else 0.0
    lu = value / mean_rate if mean_rate > 0 else math.nan
    return EffectiveCapacityEstimate(value, mean_rate, lu, S, seed, se, theta, mean_se)


def effective_capacity(model: ChannelModel, theta: float, policy, c: Constellation,
                       samples: int = 10_000, seed: int = 0, alpha: float = 0.0,
                       per_antenna_independent: bool = True,
                       noise_samples: int = DEFAULT_NOISE_SAMPLES) -> EffectiveCapacityEstimate:
    """Monte Carlo effective capacity (or effective rate for fixed-covariance policies)."""
    if samples < 100:
        raise ValueError("at least 100 channel samples are required")
    if theta <= 0:
        raise ValueError("theta must be positive; use mean_rate for the theta -> 0 limit")
    rates = sample_rates(model, policy, c, samples, seed, per_antenna_independent, noise_samples)
    return estimate_from_rates(rates, theta, model.N, model.T, seed, alpha)


def link_utilization(model: ChannelModel, theta: float, policy, c: Constellation,
                     samples: int = 10_000, seed: int = 0, **kwargs) -> float:
    """Effective capacity over the mean service rate on the same samples."""
    est = effective_capacity(model, theta, policy, c, samples, seed, **kwargs)
    if est.mean_rate <= 0:
        raise ZeroDivisionError("mean rate is zero; link utilization is undefined")
    return est.link_utilization
