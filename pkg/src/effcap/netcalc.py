"""Backlog and delay bounds for a constant-rate source over the fading link.

Per-frame service increments are i.i.d., so the moment-generating-function
envelope of the cumulative service holds with zero slack (``sigma_R = 0``
by default). The queue simulator checks the bounds empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import rng as _rng
from .channel import ChannelModel
from .constellation import Constellation
from .effective_capacity import estimate_from_rates, sample_rates
from .errors import InfeasibleError

__all__ = [
    "QoSBoundConfig",
    "BoundReport",
    "QueueTails",
    "slack_b",
    "backlog_delay_bounds",
    "bounds_from_slack",
    "optimize_bounds",
    "simulate_queue",
    "simulate_queue_from_service",
    "DEFAULT_DELTA_FRACTIONS",
]

DEFAULT_DELTA_FRACTIONS = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass(frozen=True)
class QoSBoundConfig:
    theta: float
    epsilon_prime: float
    delta: float
    arrival_rate_a: float
    effective_rate: float
    T: int = 1
    N: int = 1
    sigma_R: float = 0.0

    @property
    def margin(self) -> float:
        """Stability margin ``N T R_E - T a`` in bits per frame."""
        return self.N * self.T * self.effective_rate - self.T * self.arrival_rate_a

    def stable(self) -> bool:
        return 0.0 < self.delta <= self.margin * (1.0 + 1e-12)


@dataclass(frozen=True)
class BoundReport:
    b: float
    backlog_bound_q: float
    delay_bound_d: float
    feasible: bool
    theta: float = math.nan
    delta: float = math.nan
    effective_rate: float = math.nan


def _validate(config: QoSBoundConfig):
    if config.theta <= 0:
        raise ValueError("theta must be positive")
    if not 0.0 < config.epsilon_prime <= 1.0:
        raise ValueError("epsilon_prime must lie in (0, 1]")
    if config.sigma_R < 0 or config.arrival_rate_a < 0:
        raise ValueError("sigma_R and the arrival rate must be non-negative")
    if not config.stable():
        raise InfeasibleError(
            f"delta={config.delta} violates 0 < delta <= N T R_E - T a = {config.margin}"
        )


def slack_b(config: QoSBoundConfig) -> float:
    """Fluctuation slack ``b = sigma_R - (ln eps' + ln(1 - e^{-theta delta})) / theta`` in bits."""
    _validate(config)
    th = config.theta
    return config.sigma_R - (math.log(config.epsilon_prime) + math.log(-math.expm1(-th * config.delta))) / th


def bounds_from_slack(config: QoSBoundConfig, b: float) -> BoundReport:
    """Backlog bound ``q = T a b / (N T R_E - delta)`` and delay bound ``d = q / a`` for a given ``b``."""
    denom = config.N * config.T * config.effective_rate - config.delta
    a = config.arrival_rate_a
    if a == 0:
        return BoundReport(b, 0.0, math.nan, True, config.theta, config.delta, config.effective_rate)
    q = config.T * a * b / denom
    return BoundReport(b, q, q / a, True, config.theta, config.delta, config.effective_rate)


def backlog_delay_bounds(config: QoSBoundConfig) -> BoundReport:
    """Bounds with ``b`` from :func:`slack_b`.

    An unstable configuration returns an infeasible report (infinite bounds).
    With ``a = 0`` the backlog bound is 0 and the delay bound is undefined (nan).
    """
    try:
        b = slack_b(config)
    except InfeasibleError:
        return BoundReport(math.nan, math.inf, math.inf, False, config.theta, config.delta,
                           config.effective_rate)
    return bounds_from_slack(config, b)


def optimize_bounds(model: ChannelModel, policy, c: Constellation, theta_grid, delta_grid_fractions=DEFAULT_DELTA_FRACTIONS,
                    epsilon_prime: float = 1e-6, arrival_rate_a: float = 0.0, samples: int = 10_000,
                    seed: int = 0, sigma_R: float = 0.0) -> BoundReport:
    """Smallest delay bound over a grid of ``theta`` and ``delta`` fractions.

    ``delta = fraction * (N T R_E(theta) - T a)``; points with a non-positive
    margin are skipped. The best grid fraction for each ``theta`` is then
    refined by a bounded scalar search between its grid neighbours. If no grid point is stable the report is infeasible.
    When ``a = 0`` the backlog bound is minimized instead and ``d`` is
    reported as its ``a -> 0`` limit ``T b / (N T R_E - delta)``.
    """
    thetas = list(theta_grid)
    fracs = list(delta_grid_fractions)
    if not thetas or not fracs:
        raise ValueError("theta and delta grids must be non-empty")
    if any(not 0 < f < 1 for f in fracs):
        raise ValueError("delta fractions must lie in (0, 1)")
    rates = sample_rates(model, policy, c, samples, seed)
    a = arrival_rate_a
    best = BoundReport(math.nan, math.inf, math.inf, False)

    def report(th, R_E, delta):
        cfg = QoSBoundConfig(th, epsilon_prime, delta, a, R_E, model.T, model.N, sigma_R)
        rep = backlog_delay_bounds(cfg)
        if a == 0 and rep.feasible:
            d0 = model.T * rep.b / (model.N * model.T * R_E - delta)
            rep = BoundReport(rep.b, 0.0, d0, True, th, delta, R_E)
        return rep

    grid = sorted(fracs)
    for th in thetas:
        R_E = estimate_from_rates(rates, th, model.N, model.T, seed).value
        margin = model.N * model.T * R_E - model.T * a
        if margin <= 0:
            continue
        reps = [report(th, R_E, f * margin) for f in grid]
        k = min(range(len(grid)), key=lambda i: reps[i].delay_bound_d)
        cand = reps[k]
        # the grid moves with the margin, so polish delta between the
        # neighbouring grid points to make the result a property of (theta, a)
        lo = grid[k - 1] if k > 0 else 0.0
        hi = grid[k + 1] if k + 1 < len(grid) else 1.0
        res = minimize_scalar(lambda f: report(th, R_E, f * margin).delay_bound_d,
                              bounds=(max(lo, 1e-12), hi), method="bounded", options={"xatol": 1e-10})
        polished = report(th, R_E, float(res.x) * margin)
        if polished.delay_bound_d < cand.delay_bound_d:
            cand = polished
        if cand.delay_bound_d < best.delay_bound_d:
            best = cand
    return best


@dataclass(frozen=True)
class QueueTails:
    """Empirical complementary CDFs of backlog (bits) and virtual delay (channel uses)."""

    backlog: np.ndarray = field(repr=False)
    delay: np.ndarray = field(repr=False)
    frames: int = 0

    def backlog_tail(self, level: float) -> float:
        """Fraction of frames with ``Q > level``."""
        return float(np.mean(self.backlog > level))

    def delay_tail(self, d: float) -> float:
        return float(np.mean(self.delay > d))

    def table(self, levels, delays):
        return ([(float(x), self.backlog_tail(x)) for x in levels],
                [(float(x), self.delay_tail(x)) for x in delays])


def simulate_queue_from_service(service, arrival_per_frame: float, T: int = 1) -> QueueTails:
    """Run ``Q_{j+1} = max(Q_j + T a - s_j, 0)`` on a given service sequence (bits per frame).

    The virtual delay of frame ``j`` is the number of later frames whose
    cumulative service clears ``Q_j``, times ``T``. Frames whose backlog is
    not cleared before the sequence ends are counted as +inf.
    """
    s = np.asarray(service, dtype=float)
    J = s.size
    Q = np.empty(J)
    q = 0.0
    for j in range(J):
        Q[j] = q
        q = max(q + arrival_per_frame - s[j], 0.0)
    # W_j = min k with S[j+k] - S[j] >= Q_j, where S is the cumulative service
    # counted from frame j+1 on
    cum = np.concatenate(([0.0], np.cumsum(s)))
    target = cum[1:] + Q  # need cum[j + 1 + k] >= cum[j + 1] + Q_j
    pos = np.searchsorted(cum, target, side="left")
    k = pos - (np.arange(J) + 1)
    W = np.where(pos > J, np.inf, np.maximum(k, 0).astype(float)) * T
    return QueueTails(Q, W, J)


def simulate_queue(model: ChannelModel, policy, c: Constellation, arrival_rate_a: float, frames: int = 100_000,
                   seed: int = 0) -> QueueTails:
    """Queue driven by fresh channel draws, one per frame.

    Frames use the ``QUEUE`` random stream, independent of the stream the
    effective-capacity estimates draw from for the same seed.
    """
    if frames < 10_000:
        raise ValueError("at least 10^4 frames are required")
    if arrival_rate_a < 0:
        raise ValueError("arrival rate must be non-negative")
    qseed = int(_rng.stream_rng(seed, _rng.QUEUE, 0).integers(2 ** 63))
    rates = sample_rates(model, policy, c, frames, qseed)
    return simulate_queue_from_service(model.T * rates, model.T * arrival_rate_a, model.T)
