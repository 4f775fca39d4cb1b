"""Kronecker-correlated Rayleigh channel estimates and their Gram spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import ConvergenceError

__all__ = [
    "CorrelationSpec",
    "ChannelModel",
    "ChannelSample",
    "exp_correlation",
    "jacobi_eigh",
    "gram_eigendecomposition",
    "channel_from_innovations",
    "sample_channel",
    "sample_channels",
    "effective_snr",
]


@dataclass(frozen=True)
class CorrelationSpec:
    """Exponential correlation of a uniform linear array.

    ``spacing_over_characteristic`` is the antenna spacing divided by the
    characteristic (coherence) distance; ``inf`` means uncorrelated.
    """

    size: int
    spacing_over_characteristic: float = math.inf

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("correlation size must be positive")
        if not self.spacing_over_characteristic >= 0:
            raise ValueError("spacing ratio must be non-negative")


def exp_correlation(spec: CorrelationSpec) -> np.ndarray:
    """``R[k, l] = exp(-ratio * |k - l|)``: unit diagonal, decaying off it."""
    idx = np.arange(spec.size)
    lag = np.abs(idx[:, None] - idx[None, :]).astype(float)
    ratio = spec.spacing_over_characteristic
    if math.isinf(ratio):
        return np.eye(spec.size)
    return np.exp(-ratio * lag)


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm falls below
    ``tol * ||A||_F``. Returns ``(eigenvalues, V)`` in the order Jacobi leaves
    them (unsorted); ``A V = V diag(eigenvalues)``.

    Raises
    ------
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    A = 0.5 * (A + A.conj().T)
    V = np.eye(n, dtype=complex)
    norm = np.linalg.norm(A)
    if n == 1 or norm == 0.0:
        return A.diagonal().real.copy(), V

    threshold = tol * norm
    off = _off_norm(A)
    for _ in range(max_sweeps):
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                gap = A[q, q].real - A[p, p].real
                if mag <= 1e-300 or abs(gap) * 1e-150 > mag:
                    # negligible coupling; rotating would be the identity
                    A[p, q] = A[q, p] = 0.0
                    continue
                phase = apq / mag
                tau = gap / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] restricted to (p, q)
                G = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                A[:, cols] = A[:, cols] @ G
                A[cols, :] = G.conj().T @ A[cols, :]
                V[:, cols] = V[:, cols] @ G
                A[p, q] = A[q, p] = 0.0
        off = _off_norm(A)
    else:
        if off > threshold:
            raise ConvergenceError("Jacobi eigensolver did not converge", off)
    return A.diagonal().real.copy(), V


def _off_norm(A: np.ndarray) -> float:
    off = A[~np.eye(A.shape[0], dtype=bool)]
    return float(np.sqrt(np.sum(off.real ** 2 + off.imag ** 2)))


def gram_eigendecomposition(H):
    """Eigenpairs of ``H^dagger H``, eigenvalues descending and clamped at 0.

    Returns ``(eigenvalues, V)`` with ``V`` the M x M unitary whose columns
    are the right singular vectors of ``H``.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2:
        raise ValueError("channel matrix must be 2-D")
    if H.shape[1] == 1:
        # single transmit antenna: the Gram matrix is the scalar ||h||^2
        return np.array([float(np.vdot(H[:, 0], H[:, 0]).real)]), np.ones((1, 1), complex)
    w, V = jacobi_eigh(H.conj().T @ H)
    order = np.argsort(-w, kind="stable")
    return np.maximum(w[order], 0.0), V[:, order]


def _psd_sqrt(R: np.ndarray) -> np.ndarray:
    w, V = jacobi_eigh(R)
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.conj().T


@dataclass(frozen=True)
class ChannelModel:
    """Static ensemble parameters of the estimated MIMO channel.

    ``beta`` is the estimation-error ratio sigma_e^2 / sigma_h^2. Correlation
    specs default to uncorrelated arrays of the right size.
    """

    M: int
    N: int
    sigma_h_sq: float = 1.0
    beta: float = 0.0
    corr_tx: CorrelationSpec | None = None
    corr_rx: CorrelationSpec | None = None
    T: int = 1
    P: float = 1.0
    sigma_w_sq: float = 1.0
    _sqrt_tx: np.ndarray = field(init=False, repr=False, compare=False)
    _sqrt_rx: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.M < 1 or self.N < 1 or self.T < 1:
            raise ValueError("M, N and T must be positive")
        if self.P < 0:
            raise ValueError("transmit power must be non-negative")
        if self.sigma_w_sq <= 0 or self.sigma_h_sq <= 0:
            raise ValueError("noise and fading variances must be positive")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("estimation-error ratio beta must lie in [0, 1)")
        tx = self.corr_tx or CorrelationSpec(self.M)
        rx = self.corr_rx or CorrelationSpec(self.N)
        if tx.size != self.M or rx.size != self.N:
            raise ValueError("correlation sizes must match the antenna counts")
        object.__setattr__(self, "corr_tx", tx)
        object.__setattr__(self, "corr_rx", rx)
        object.__setattr__(self, "_sqrt_tx", _psd_sqrt(exp_correlation(tx)))
        object.__setattr__(self, "_sqrt_rx", _psd_sqrt(exp_correlation(rx)))

    @property
    def sigma_e_sq(self) -> float:
        return self.beta * self.sigma_h_sq

    @property
    def n_eigen(self) -> int:
        return min(self.M, self.N)

    @property
    def uncorrelated(self) -> bool:
        return math.isinf(self.corr_tx.spacing_over_characteristic) and math.isinf(
            self.corr_rx.spacing_over_characteristic
        )

    def with_(self, **changes) -> "ChannelModel":
        """Copy with some fields replaced (correlation specs resized as needed)."""
        params = {
            "M": self.M, "N": self.N, "sigma_h_sq": self.sigma_h_sq, "beta": self.beta,
            "T": self.T, "P": self.P, "sigma_w_sq": self.sigma_w_sq,
        }
        params.update(changes)
        tx_ratio = self.corr_tx.spacing_over_characteristic
        rx_ratio = self.corr_rx.spacing_over_characteristic
        params.setdefault("corr_tx", CorrelationSpec(params["M"], tx_ratio))
        params.setdefault("corr_rx", CorrelationSpec(params["N"], rx_ratio))
        return ChannelModel(**params)


@dataclass(frozen=True)
class ChannelSample:
    H_hat: np.ndarray
    eigenvalues: np.ndarray
    right_singular_basis: np.ndarray

    @property
    def n_eigen(self) -> int:
        return min(self.H_hat.shape)


def channel_from_innovations(model: ChannelModel, G) -> ChannelSample:
    """Estimated channel built from a standard CN(0,1) innovation matrix ``G``.

    The estimate entries get variance ``(1 - beta) * sigma_h^2`` (MMSE
    orthogonality) before the Kronecker colouring.
    """
    G = np.asarray(G, dtype=complex).reshape(model.N, model.M)
    gamma_hat = math.sqrt((1.0 - model.beta) * model.sigma_h_sq) * G
    if model.uncorrelated:
        H = gamma_hat
    else:
        H = model._sqrt_rx @ gamma_hat @ model._sqrt_tx
    d, V = gram_eigendecomposition(H)
    return ChannelSample(H, d, V)


def sample_channel(model: ChannelModel, rng: np.random.Generator) -> ChannelSample:
    """Draw one estimated channel and its Gram eigendecomposition."""
    return channel_from_innovations(model, _rng.complex_normal(rng, (model.N, model.M)))


def sample_channels(model: ChannelModel, seed: int, count: int, start: int = 0):
    """Yield samples ``start .. start+count-1`` of the counter-based channel stream."""
    for j in range(start, start + count):
        yield sample_channel(model, _rng.stream_rng(seed, _rng.CHANNEL, j))


def effective_snr(model: ChannelModel) -> float:
    """Worst-case-noise SNR ``gamma = P / sigma_w_tilde^2``.

    The estimation error is folded into the noise with an isotropic input
    covariance ``I/M`` inside the trace, which makes gamma independent of
    the channel realization:
    ``sigma_w_tilde^2 = sigma_w^2 + P sigma_e^2 tr(R_r) tr(R_v) / (N M^2)``.
    """
    if model.P == 0:
        return 0.0
    tr_r = float(np.trace(exp_correlation(model.corr_rx)))
    tr_v = float(np.trace(exp_correlation(model.corr_tx)))
    extra = model.P * model.sigma_e_sq * tr_r * tr_v / (model.N * model.M ** 2)
    return model.P / (model.sigma_w_sq + extra)
