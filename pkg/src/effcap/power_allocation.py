"""Per-realization power allocation across eigenchannels.

The optimal policy maximizes ``sum_i I(gamma d_i sigma_i)`` subject to
``sum_i sigma_i = 1``. Its KKT conditions read

    gamma d_i mmse(gamma d_i sigma_i) = mu      (active channels)
    gamma d_i <= mu                              (inactive channels)

so for a trial level ``mu`` every active channel's SNR follows from one
inversion of the (strictly decreasing) MMSE function, and the total power
is monotone in ``mu``. Bisection on ``mu`` then gives the unique optimum.
The QoS-dependent factor ``theta T exp(-theta T I)`` of the coupled fixed
point is common to all channels and drops out of the KKT ratio, which is
why the allocation itself does not depend on ``theta``;
:func:`theorem2_residual` checks the coupled form after the fact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation
from .infomeasures import DEFAULT_QUADRATURE, ScalarMeasures, scalar_measures

__all__ = [
    "Policy",
    "PowerAllocation",
    "mercury_waterfill",
    "mercury_waterfill_batch",
    "waterfill_gaussian",
    "allocate",
    "theorem2_residual",
]

_BISECTION_STEPS = 200


class Policy(str, enum.Enum):
    OPTIMAL = "optimal"
    EQUAL = "equal"
    BEAMFORMING = "beamforming"


@dataclass(frozen=True)
class PowerAllocation:
    """Power fractions on the eigenchannels, padded with zeros to length M.

    ``water_level`` is the common KKT level ``mu`` (nats per unit power);
    it is ``nan`` for policies that do not solve the KKT system.
    """

    sigmas: np.ndarray
    water_level: float
    achieved_sum: float
    degenerate: bool = False

    def active(self) -> np.ndarray:
        return self.sigmas > 0


def _as_eigenvalues(eigenvalues) -> np.ndarray:
    d = np.asarray(eigenvalues, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("eigenvalues must be a non-empty 1-D sequence")
    if np.any(d < 0):
        raise ValueError("eigenvalues must be non-negative")
    if np.any(np.diff(d) > 0):
        raise ValueError("eigenvalues must be sorted in descending order")
    return d


def _measures(c: Constellation, measures: ScalarMeasures | None) -> ScalarMeasures:
    if measures is not None:
        return measures
    return ScalarMeasures(c, DEFAULT_QUADRATURE, tabulated=False)


def _powers_at_level(mu, gd, measures: ScalarMeasures):
    """sigma_i(mu) for channel gains ``gd = gamma * d_i``; broadcasts over rows."""
    with np.errstate(divide="ignore", invalid="ignore"):
        target = np.where(gd > 0, mu / gd, np.inf)
    active = target < 1.0
    rho = np.zeros_like(gd)
    if np.any(active):
        rho[active] = measures.mmse_inverse(target[active])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(active, rho / np.where(gd > 0, gd, 1.0), 0.0)


def mercury_waterfill_batch(c: Constellation, gamma: float, eigenvalues, measures: ScalarMeasures | None = None):
    """Optimal allocations for many realizations at once.

    ``eigenvalues`` has shape ``(S, n)``, each row descending. Returns
    ``(sigmas, mu)`` of shapes ``(S, n)`` and ``(S,)``. Rows whose
    eigenvalues are all zero (or ``gamma == 0``) get an equal split over
    all ``n`` entries and ``mu = nan``.
    """
    d = np.atleast_2d(np.asarray(eigenvalues, dtype=float))
    m = _measures(c, measures)
    gd = gamma * d
    top = gd.max(axis=1)
    live = top > 0
    S, n = d.shape
    sigmas = np.full((S, n), 1.0 / n)
    mu_out = np.full(S, np.nan)
    if not np.any(live):
        return sigmas, mu_out

    g = gd[live]
    # mu = max_i gd_i * mmse(0) puts zero power everywhere (mmse(0) = 1 for
    # zero-mean unit-energy alphabets); lo is pushed down until power >= 1
    hi = top[live].copy()
    lo = hi * 0.5
    for _ in range(200):
        short = _powers_at_level(lo[:, None], g, m).sum(axis=1) < 1.0
        if not np.any(short):
            break
        lo[short] *= 0.5
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        total = _powers_at_level(mid[:, None], g, m).sum(axis=1)
        over = total > 1.0
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
        if np.all((hi - lo) <= 1e-15 * hi):
            break
    mu = 0.5 * (lo + hi)
    s = _powers_at_level(mu[:, None], g, m)
    # remove the bisection residue so the budget is met to machine precision
    total = s.sum(axis=1, keepdims=True)
    s = np.where(total > 0, s / np.where(total > 0, total, 1.0), 1.0 / n)
    sigmas[live] = s
    mu_out[live] = mu
    return sigmas, mu_out


def mercury_waterfill(c: Constellation, gamma: float, eigenvalues, measures: ScalarMeasures | None = None,
                      M: int | None = None) -> PowerAllocation:
    """Optimal (mercury/water-filling) allocation for one realization.

    Parameters
    ----------
    c : Constellation
        Input alphabet on every eigenchannel.
    gamma : float
        Worst-case-noise SNR.
    eigenvalues : sequence of float
        Descending eigenvalues ``d_i`` of the Gram matrix.
    measures : ScalarMeasures, optional
        MMSE provider; exact quadrature by default.
    M : int, optional
        Transmit dimension; ``sigmas`` is zero-padded to this length.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    d = _as_eigenvalues(eigenvalues)
    M = d.size if M is None else M
    if M < d.size:
        raise ValueError("M must be at least the number of eigenvalues")
    padded = np.zeros(M)
    if gamma == 0 or d[0] == 0:
        nz = np.flatnonzero(d > 0) if gamma > 0 else np.arange(d.size)
        nz = nz if nz.size else np.arange(d.size)
        padded[nz] = 1.0 / nz.size
        return PowerAllocation(padded, math.nan, 1.0, degenerate=True)
    if np.count_nonzero(d) == 1:
        m = _measures(c, measures)
        padded[0] = 1.0
        mu = float(gamma * d[0] * m.mmse(np.array([gamma * d[0]]))[0])
        return PowerAllocation(padded, mu, 1.0)
    sig, mu = mercury_waterfill_batch(c, gamma, d[None, :], measures)
    padded[: d.size] = sig[0]
    return PowerAllocation(padded, float(mu[0]), float(padded.sum()))


def waterfill_gaussian(gamma: float, eigenvalues) -> np.ndarray:
    """Classical water-filling ``sigma_i = [nu - 1/(gamma d_i)]_+`` with unit budget."""
    d = _as_eigenvalues(eigenvalues)
    inv = np.where(d > 0, 1.0 / np.maximum(gamma * d, 1e-300), np.inf)
    for k in range(d.size, 0, -1):
        nu = (1.0 + inv[:k].sum()) / k
        if nu > inv[k - 1]:
            break
    return np.maximum(nu - inv, 0.0)


def allocate(policy, c: Constellation, gamma: float, eigenvalues, M: int,
             measures: ScalarMeasures | None = None) -> PowerAllocation:
    """Power allocation under ``policy`` (``optimal``, ``equal``, ``beamforming``)."""
    policy = Policy(policy)
    d = _as_eigenvalues(eigenvalues)
    if policy is Policy.OPTIMAL:
        return mercury_waterfill(c, gamma, d, measures, M=M)
    sig = np.zeros(M)
    if policy is Policy.EQUAL:
        # spreads over every transmit dimension, null ones included when M > N
        sig[:] = 1.0 / M
    else:
        sig[0] = 1.0
    return PowerAllocation(sig, math.nan, float(sig.sum()))


def theorem2_residual(alloc: PowerAllocation, c: Constellation, gamma: float, eigenvalues,
                      theta: float, T: int, measures: ScalarMeasures | None = None) -> float:
    """Largest violation of the coupled fixed point over the active channels.

    With ``I`` the allocation's rate in nats and ``lambda = theta T e^{-theta T I} mu``,
    each active channel must satisfy
    ``sigma_i = (theta T gamma d_i / lambda) e^{-theta T I} mmse_i`` where
    ``mmse_i = sigma_i * mmse(gamma d_i sigma_i)`` is the MMSE of the
    channel's input at power ``sigma_i``. Inactive channels contribute 0.
    """
    d = _as_eigenvalues(eigenvalues)
    m = _measures(c, measures)
    sig = np.asarray(alloc.sigmas, dtype=float)[: d.size]
    rho = gamma * d * sig
    rate_nats = float(np.sum(m.mi(rho))) * math.log(2.0)
    factor = theta * T * math.exp(-theta * T * rate_nats)
    lam = factor * alloc.water_level
    active = sig > 0
    if not np.any(active):
        return 0.0
    mmse_i = sig[active] * m.mmse(rho[active])
    # factor/lam == 1/mu analytically; keep the literal form unless it underflows
    coef = factor / lam if lam > 0 else 1.0 / alloc.water_level
    rhs = coef * gamma * d[active] * mmse_i
    return float(np.max(np.abs(sig[active] - rhs)))


def default_measures(c: Constellation) -> ScalarMeasures:
    """Tabulated measures used by the Monte Carlo estimators."""
    return scalar_measures(c, DEFAULT_QUADRATURE, tabulated=True)
