"""Scalar mutual information and MMSE of an input over complex AWGN.

The channel is ``y = sqrt(rho) * x + n`` with ``n ~ CN(0, 1)`` and ``x``
drawn from a unit-energy :class:`~effcap.constellation.Constellation`.
Mutual information is returned in bits. With this noise convention the
I-MMSE relation reads ``dI/drho = mmse(rho) * log2(e)``.

Expectations over the noise use Gauss-Hermite rules. Real alphabets only
see the in-phase noise, and square QAM factors into two independent
real-axis alphabets, so both reduce exactly to one-dimensional integrals;
everything else gets a tensor rule over both noise components.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp, softmax

from . import rng as _rng
from .constellation import Constellation

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "mutual_info_scalar",
    "mmse_scalar",
    "mutual_info_mc",
    "mmse_mc",
    "ScalarMeasures",
    "scalar_measures",
]

LOG2E = 1.0 / math.log(2.0)

# bound on K*K*nodes*len(rho) elements materialized per chunk
_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class QuadratureSpec:
    """Noise-expectation rule.

    Real alphabets and Cartesian-product alphabets (square QAM) split into
    independent real-axis problems integrated with ``nodes_real_axis``
    Gauss-Hermite nodes. Other complex alphabets (PSK) use a tensor rule
    with ``nodes_per_axis`` nodes per real dimension.
    """

    nodes_per_axis: int = 48
    nodes_real_axis: int = 300
    mc_fallback_samples: int = 200_000
    mc_threshold_points: int = 64

    def __post_init__(self):
        if self.nodes_per_axis < 8 or self.nodes_real_axis < 8:
            raise ValueError("quadrature needs at least 8 nodes per axis")
        if self.mc_fallback_samples < 10_000:
            raise ValueError("mc_fallback_samples must be >= 1e4")
        if self.mc_threshold_points < 1:
            raise ValueError("mc_threshold_points must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()


@functools.lru_cache(maxsize=32)
def _noise_rule(nodes: int, complex_noise: bool):
    """Nodes and weights for E{g(n)}; n ~ CN(0,1), or its real part."""
    t, w = hermgauss(nodes)
    w = w / math.sqrt(math.pi)
    if not complex_noise:
        # Re(n) ~ N(0, 1/2) has density exp(-t^2)/sqrt(pi)
        return t.astype(complex), w
    tr, ti = np.meshgrid(t, t, indexing="ij")
    return (tr + 1j * ti).ravel(), np.outer(w, w).ravel()


class _Kernel:
    """Pairwise geometry of one alphabet against one noise rule.

    ``dist2[k, j] = |x_k - x_j|^2`` and ``cross[k, j, m] = Re((x_k - x_j) conj(n_m))``
    so that ``-|sqrt(rho)(x_k - x_j) + n|^2 + |n|^2 = -rho*dist2 - 2 sqrt(rho) cross``.
    """

    def __init__(self, points: np.ndarray, probs: np.ndarray, noise: np.ndarray, weights: np.ndarray):
        self.delta = points[:, None] - points[None, :]
        self.dist2 = np.abs(self.delta) ** 2
        self.cross = (self.delta[:, :, None] * np.conj(noise)[None, None, :]).real
        self.weights = weights
        self.logp = np.log(probs)
        self.p = probs

    def exponents(self, rho: np.ndarray) -> np.ndarray:
        # (R, K, K, nodes): log-likelihood ratio plus log prior of hypothesis j
        s = np.sqrt(rho)[:, None, None, None]
        d = -rho[:, None, None, None] * self.dist2[None, :, :, None] - 2.0 * s * self.cross[None]
        return d + self.logp[None, None, :, None]

    def mutual_info(self, rho: np.ndarray) -> np.ndarray:
        lse = logsumexp(self.exponents(rho), axis=2)  # (R, K, nodes)
        return -((lse @ self.weights) @ self.p) * LOG2E

    def mmse(self, rho: np.ndarray) -> np.ndarray:
        post = softmax(self.exponents(rho), axis=2)
        err = np.einsum("rkjm,kj->rkm", post, self.delta)
        return (np.abs(err) ** 2 @ self.weights) @ self.p


def _axis_factors(c: Constellation):
    """Split ``c`` into independent in-phase/quadrature alphabets if possible.

    Returns a list of ``(points, probs)`` real-axis alphabets, or None when
    the alphabet is not a Cartesian product with a factorizing prior.
    """
    if c.is_real:
        return [(c.points.real.astype(complex), c.probabilities)]
    re_vals, re_idx = np.unique(np.round(c.points.real, 12), return_inverse=True)
    im_vals, im_idx = np.unique(np.round(c.points.imag, 12), return_inverse=True)
    if len(re_vals) * len(im_vals) != c.size:
        return None
    joint = np.zeros((len(re_vals), len(im_vals)))
    np.add.at(joint, (re_idx, im_idx), c.probabilities)
    pr, pi = joint.sum(axis=1), joint.sum(axis=0)
    if not np.allclose(joint, np.outer(pr, pi), rtol=0, atol=1e-14):
        return None
    return [(re_vals.astype(complex), pr), (im_vals.astype(complex), pi)]


@functools.lru_cache(maxsize=32)
def _kernels_for(key: tuple, quad: "QuadratureSpec") -> tuple:
    c = _KEYED[key]
    factors = _axis_factors(c)
    if factors is not None:
        noise, weights = _noise_rule(quad.nodes_real_axis, False)
        return tuple(_Kernel(pts, pr, noise, weights) for pts, pr in factors)
    noise, weights = _noise_rule(quad.nodes_per_axis, True)
    return (_Kernel(c.points, c.probabilities, noise, weights),)


_KEYED: dict = {}


def _kernels(c: Constellation, quad: QuadratureSpec) -> tuple:
    key = c.key()
    _KEYED.setdefault(key, c)
    return _kernels_for(key, quad)


def _chunked(fn, rho: np.ndarray, per_rho: int) -> np.ndarray:
    step = max(1, _CHUNK_ELEMS // max(per_rho, 1))
    out = np.empty(rho.shape, dtype=float)
    flat = rho.ravel()
    res = out.ravel()
    for start in range(0, flat.size, step):
        res[start:start + step] = fn(flat[start:start + step])
    return out


def _check_rho(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("SNR must be finite and non-negative")
    return rho


def _use_mc(c: Constellation, quad: QuadratureSpec) -> bool:
    return c.size > quad.mc_threshold_points


def _scalar_or_array(value: np.ndarray, like):
    return float(value) if np.ndim(like) == 0 else value


def mutual_info_scalar(c: Constellation, rho, quad: QuadratureSpec = DEFAULT_QUADRATURE, rng=None):
    """Mutual information I(rho) in bits per complex channel use.

    Accepts a scalar or an array of SNRs. Gaussian input gives
    ``log2(1 + rho)``. Alphabets larger than ``quad.mc_threshold_points``
    fall back to Monte Carlo driven by ``rng``.
    """
    r = _check_rho(rho)
    if c.is_gaussian:
        return _scalar_or_array(np.log2(1.0 + r), rho)
    if _use_mc(c, quad):
        vals = np.array([mutual_info_mc(c, v, quad.mc_fallback_samples, rng)[0] for v in r.ravel()])
        return _scalar_or_array(vals.reshape(r.shape), rho)
    out = sum(_chunked(k.mutual_info, r, k.cross.size) for k in _kernels(c, quad))
    # quadrature noise can push saturated values a hair outside [0, log2 K]
    out = np.clip(out, 0.0, c.bits)
    return _scalar_or_array(out, rho)


def mmse_scalar(c: Constellation, rho, quad: QuadratureSpec = DEFAULT_QUADRATURE, rng=None):
    """MMSE of estimating the unit-energy input from ``y`` at SNR ``rho``.

    Computed from the conditional-mean estimator directly (not by
    differentiating the mutual information). Gaussian input gives
    ``1 / (1 + rho)``.
    """
    r = _check_rho(rho)
    if c.is_gaussian:
        return _scalar_or_array(1.0 / (1.0 + r), rho)
    if _use_mc(c, quad):
        vals = np.array([mmse_mc(c, v, quad.mc_fallback_samples, rng)[0] for v in r.ravel()])
        return _scalar_or_array(vals.reshape(r.shape), rho)
    out = sum(_chunked(k.mmse, r, k.cross.size) for k in _kernels(c, quad))
    return _scalar_or_array(np.clip(out, 0.0, 1.0), rho)


def _mc_draws(c: Constellation, rho: float, samples: int, rng):
    if rng is None:
        rng = _rng.stream_rng(0, _rng.ORACLE, 0)
    k = rng.choice(c.size, size=samples, p=c.probabilities)
    n = _rng.complex_normal(rng, samples)
    delta = c.points[k][:, None] - c.points[None, :]
    d = -np.abs(np.sqrt(rho) * delta + n[:, None]) ** 2 + np.abs(n[:, None]) ** 2
    return delta, d + np.log(c.probabilities)[None, :]


def mutual_info_mc(c: Constellation, rho: float, samples: int = 1_000_000, rng=None, batch: int = 200_000):
    """Monte Carlo mutual information; returns ``(bits, standard_error)``."""
    if c.is_gaussian:
        return math.log2(1.0 + rho), 0.0
    total, total_sq, count = 0.0, 0.0, 0
    while count < samples:
        m = min(batch, samples - count)
        _, d = _mc_draws(c, rho, m, rng)
        v = -logsumexp(d, axis=1) * LOG2E
        total += v.sum()
        total_sq += np.sum(v * v)
        count += m
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return mean, math.sqrt(var / count)


def mmse_mc(c: Constellation, rho: float, samples: int = 1_000_000, rng=None, batch: int = 200_000):
    """Monte Carlo MMSE; returns ``(mmse, standard_error)``."""
    if c.is_gaussian:
        return 1.0 / (1.0 + rho), 0.0
    total, total_sq, count = 0.0, 0.0, 0
    while count < samples:
        m = min(batch, samples - count)
        delta, d = _mc_draws(c, rho, m, rng)
        post = softmax(d, axis=1)
        v = np.abs(np.sum(post * delta, axis=1)) ** 2
        total += v.sum()
        total_sq += np.sum(v * v)
        count += m
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return mean, math.sqrt(var / count)


class ScalarMeasures:
    """Vectorized ``mi``/``mmse``/``mmse_inverse`` for one constellation.

    With ``tabulated=True`` the discrete-input functions are cubic splines
    in ``log(rho)`` fitted to the quadrature values; this is what the
    Monte Carlo estimators use, since they evaluate millions of SNRs.
    Gaussian input always uses the closed forms.
    """

    # spline support in rho; below it the functions are linear in rho, above it saturated
    RHO_LO = 1e-9
    RHO_HI = 1e5
    TABLE_POINTS = 2400
    # tensor-rule alphabets are ~100x costlier per node; a coarser grid keeps builds short
    TABLE_POINTS_TENSOR = 900

    def __init__(self, c: Constellation, quad: QuadratureSpec = DEFAULT_QUADRATURE, tabulated: bool = False):
        self.constellation = c
        self.quad = quad
        self.tabulated = tabulated and not c.is_gaussian
        if self.tabulated:
            self._build_table()

    def _build_table(self):
        c, quad = self.constellation, self.quad
        points = self.TABLE_POINTS if _axis_factors(c) is not None else self.TABLE_POINTS_TENSOR
        u = np.linspace(math.log(self.RHO_LO), math.log(self.RHO_HI), points)
        rho = np.exp(u)
        rng = _rng.stream_rng(0, _rng.ORACLE, 1)
        mi = np.asarray(mutual_info_scalar(c, rho, quad, rng))
        mm = np.asarray(mmse_scalar(c, rho, quad, rng))
        self._u = u
        self._mi = CubicSpline(u, mi)
        self._mmse = CubicSpline(u, mm)
        self._mm_table = mm
        self._mi_lo, self._mm_lo = mi[0], mm[0]
        self._mi_hi, self._mm_hi = mi[-1], mm[-1]

    def mi(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        if not self.tabulated:
            return np.asarray(mutual_info_scalar(self.constellation, rho, self.quad))
        out = np.empty_like(rho)
        lo, hi = rho < self.RHO_LO, rho > self.RHO_HI
        mid = ~(lo | hi)
        out[lo] = self._mi_lo * rho[lo] / self.RHO_LO
        out[hi] = self._mi_hi
        out[mid] = self._mi(np.log(rho[mid]))
        return np.clip(out, 0.0, self.constellation.bits)

    def mmse(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        if not self.tabulated:
            return np.asarray(mmse_scalar(self.constellation, rho, self.quad))
        out = np.empty_like(rho)
        lo, hi = rho < self.RHO_LO, rho > self.RHO_HI
        mid = ~(lo | hi)
        out[lo] = 1.0 - (1.0 - self._mm_lo) * rho[lo] / self.RHO_LO
        out[hi] = 0.0
        out[mid] = self._mmse(np.log(rho[mid]))
        return np.clip(out, 0.0, 1.0)

    def mmse_inverse(self, target) -> np.ndarray:
        """SNR ``rho`` with ``mmse(rho) = target`` for targets in (0, 1).

        Targets >= mmse(0) map to 0; targets below the smallest resolvable
        MMSE map to :attr:`RHO_HI`.
        """
        t = np.asarray(target, dtype=float)
        if self.constellation.is_gaussian:
            with np.errstate(divide="ignore"):
                return np.where(t >= 1.0, 0.0, np.where(t > 0, 1.0 / np.maximum(t, 1e-300) - 1.0, np.inf))
        if self.tabulated:
            return self._inverse_table(t)
        return self._inverse_bisect(t)

    def _inverse_bisect(self, t: np.ndarray) -> np.ndarray:
        lo = np.full(t.shape, math.log(1e-14))
        hi = np.full(t.shape, math.log(self.RHO_HI))
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = self.mmse(np.exp(mid)) > t
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        rho = np.exp(0.5 * (lo + hi))
        rho = np.where(t >= 1.0, 0.0, rho)
        return rho

    def _inverse_table(self, t: np.ndarray) -> np.ndarray:
        table = self._mm_table
        out = np.empty(t.shape)
        flat_t, flat_out = t.ravel(), out.ravel()
        below_lo = flat_t >= self._mm_lo
        above_hi = flat_t <= self._mm_hi
        mid = ~(below_lo | above_hi)
        # linear region: mmse = 1 - slope * rho
        slope = (1.0 - self._mm_lo) / self.RHO_LO
        flat_out[below_lo] = np.maximum(1.0 - flat_t[below_lo], 0.0) / slope
        flat_out[above_hi] = self.RHO_HI
        tm = flat_t[mid]
        # table is decreasing; bracket each target between adjacent knots
        idx = np.searchsorted(-table, -tm, side="right") - 1
        idx = np.clip(idx, 0, len(table) - 2)
        u0, u1 = self._u[idx], self._u[idx + 1]
        m0, m1 = table[idx], table[idx + 1]
        frac = np.where(m0 != m1, (m0 - tm) / np.where(m0 != m1, m0 - m1, 1.0), 0.5)
        u = u0 + np.clip(frac, 0.0, 1.0) * (u1 - u0)
        deriv = self._mmse.derivative()
        for _ in range(4):
            f = self._mmse(u) - tm
            g = deriv(u)
            step = np.where(g < 0, f / np.where(g < 0, g, -1.0), 0.0)
            u = np.clip(u - step, u0, u1)
        flat_out[mid] = np.exp(u)
        return out


@functools.lru_cache(maxsize=64)
def _measures_cached(key: tuple, quad: QuadratureSpec, tabulated: bool) -> ScalarMeasures:
    return ScalarMeasures(_KEYED[key], quad, tabulated)


def scalar_measures(c: Constellation, quad: QuadratureSpec = DEFAULT_QUADRATURE, tabulated: bool = True) -> ScalarMeasures:
    """Shared (cached) :class:`ScalarMeasures` for ``c``."""
    key = c.key()
    _KEYED.setdefault(key, c)
    return _measures_cached(key, quad, tabulated)
