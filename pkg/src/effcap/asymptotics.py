"""Low-SNR expansion of the effective capacity and large-antenna limits.

The low-SNR quantities are derivatives with respect to the transmit power
``P`` at ``P = 0``. With ``lam`` the largest Gram eigenvalue, to second order

    r(P) = log2(e) * (g lam - g^2 lam^2 / 2),   g = P/sigma_w^2 - c P^2/sigma_w^4

where ``c`` is the estimation-error coefficient of the worst-case noise.
Averaging ``exp(-theta T r)`` then gives the two derivatives below.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, exp_correlation
from .effective_capacity import channel_ensemble

__all__ = [
    "LowSnrReport",
    "Regime",
    "ec_derivatives_at_zero",
    "low_snr_approximation",
    "asymptotic_limits",
    "finite_difference_slope",
    "BelowMinimumEnergyError",
]

LN2 = math.log(2.0)
_DB_PER_DOUBLING = 10.0 * math.log10(2.0)


class BelowMinimumEnergyError(ValueError):
    """Requested energy per bit lies below the minimum."""


@dataclass(frozen=True)
class LowSnrReport:
    first_derivative: float
    second_derivative: float
    zeta_min: float
    zeta_min_db: float
    slope_S0: float
    multiplicity_l: int = 1
    is_real_modulation: bool = False
    samples: int = 0
    seed: int = 0
    zeta_min_std_error: float = 0.0


def _error_coefficient(model: ChannelModel) -> float:
    """``c`` in ``gamma = P / (sigma_w^2 + c P)``."""
    tr_r = float(np.trace(exp_correlation(model.corr_rx)))
    tr_v = float(np.trace(exp_correlation(model.corr_tx)))
    return model.sigma_e_sq * tr_r * tr_v / (model.N * model.M ** 2)


def ec_derivatives_at_zero(model: ChannelModel, theta: float, samples: int = 10_000, seed: int = 0,
                           is_real_modulation: bool = False) -> LowSnrReport:
    """First and second power derivatives of the effective capacity at ``P = 0``.

    Uses Monte Carlo moments of the largest Gram eigenvalue (taken as
    simple, ``l = 1``). For real modulations the second derivative is
    doubled, which halves the wideband slope.
    """
    if samples < 1000:
        raise ValueError("at least 1000 channel samples are required")
    if theta <= 0:
        raise ValueError("theta must be positive")
    eig, _ = channel_ensemble(model, seed, samples)
    lam = eig[:, 0]
    m1 = float(lam.mean())
    m2 = float(np.mean(lam ** 2))
    N, T, s2 = model.N, model.T, model.sigma_w_sq
    c = _error_coefficient(model)

    c1 = m1 / (N * LN2 * s2)
    c2 = (theta * T / (N * LN2 ** 2) * (m1 ** 2 - m2)
          - m2 / (N * LN2)
          - 2.0 * c * m1 / (N * LN2)) / s2 ** 2
    if is_real_modulation:
        c2 *= 2.0
    zeta = 1.0 / c1
    # delta method on 1 / mean(lam)
    se_m1 = float(lam.std(ddof=1)) / math.sqrt(samples)
    zeta_se = zeta * se_m1 / m1
    s0 = 2.0 * c1 ** 2 / (-c2) * LN2
    return LowSnrReport(c1, c2, zeta, 10.0 * math.log10(zeta), s0, 1, is_real_modulation,
                        samples, seed, zeta_se)


def low_snr_approximation(report: LowSnrReport, zeta_db: float) -> float:
    """Linear wideband approximation ``S0 (zeta_dB - zeta_min_dB) / (10 log10 2)``."""
    excess = zeta_db - report.zeta_min_db
    if excess < 0:
        raise BelowMinimumEnergyError(
            f"{zeta_db:.4f} dB is below the minimum energy per bit {report.zeta_min_db:.4f} dB"
        )
    return report.slope_S0 * excess / _DB_PER_DOUBLING


class Regime(str, enum.Enum):
    M_TO_INF = "M_to_inf"
    BOTH_TO_INF_RATIO = "both_to_inf_ratio"
    N_TO_INF = "N_to_inf_only_via_ratio"


def asymptotic_limits(regime, rho: float | None = None, sigma_h_sq: float = 1.0):
    """Closed-form ``(zeta_min, S0)`` as the antenna counts grow (perfect CSI, i.i.d. entries).

    ``rho = M/N`` is only meaningful for ``both_to_inf_ratio``; the other
    regimes hold the finite dimension fixed.
    """
    regime = Regime(regime)
    if sigma_h_sq <= 0:
        raise ValueError("sigma_h_sq must be positive")
    if regime is Regime.BOTH_TO_INF_RATIO:
        if rho is None or not rho > 0 or math.isinf(rho):
            raise ValueError("both_to_inf_ratio needs a finite ratio rho = M/N > 0")
        if rho > 1:
            return LN2 / (rho * sigma_h_sq), 2.0
        return LN2 / sigma_h_sq, 2.0 * rho
    if rho is not None:
        raise ValueError(f"rho is not used by regime {regime.value!r}")
    if regime is Regime.M_TO_INF:
        return 0.0, 2.0
    return LN2 / sigma_h_sq, 0.0


def finite_difference_slope(rate_at_power, P: float = 1e-3) -> float:
    """Richardson estimate of ``dC/dP`` at 0 from ``C(P)`` and ``C(2P)``.

    ``rate_at_power`` maps a power to an effective capacity on matched
    samples; the quadratic term cancels.
    """
    return (4.0 * rate_at_power(P) - rate_at_power(2.0 * P)) / (2.0 * P)

