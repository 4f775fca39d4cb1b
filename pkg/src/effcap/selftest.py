"""Fast invariant suite behind ``effcap selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .asymptotics import asymptotic_limits, ec_derivatives_at_zero
from .channel import ChannelModel, gram_eigendecomposition
from .constellation import from_name
from .effective_capacity import effective_capacity, estimate_from_rates
from .infomeasures import LOG2E, mmse_scalar, mutual_info_scalar
from .netcalc import QoSBoundConfig, simulate_queue_from_service, slack_b
from .power_allocation import mercury_waterfill, theorem2_residual, waterfill_gaussian


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


def _immse():
    worst = 0.0
    for name in ("bpsk", "qam4"):
        c = from_name(name)
        for rho in (0.5, 2.0):
            h = 1e-4 * rho
            d = (mutual_info_scalar(c, rho + h) - mutual_info_scalar(c, rho - h)) / (2 * h)
            worst = max(worst, abs(d - mmse_scalar(c, rho) * LOG2E))
    return worst, 1e-4, "max |dI/drho - mmse log2 e|"


def _gaussian_forms():
    g = from_name("gaussian")
    rho = np.linspace(0.0, 20.0, 11)
    err = max(np.max(np.abs(mutual_info_scalar(g, rho) - np.log2(1 + rho))),
              np.max(np.abs(mmse_scalar(g, rho) - 1 / (1 + rho))))
    return float(err), 1e-12, "closed forms"


def _waterfill(seed):
    g = from_name("gaussian")
    r = _rng.stream_rng(seed, _rng.ORACLE, 0)
    worst = 0.0
    for _ in range(10):
        d = np.sort(r.exponential(size=3))[::-1]
        a = mercury_waterfill(g, 1.0, d)
        worst = max(worst, float(np.max(np.abs(a.sigmas - waterfill_gaussian(1.0, d)))),
                    theorem2_residual(a, g, 1.0, d, 1.0, 1))
    return worst, 1e-6, "Gaussian input reduces to water-filling"


def _deterministic():
    est = estimate_from_rates(np.full(200, 1.7), 3.0, 2, 1)
    return abs(est.value - 1.7 / 2), 1e-12, "constant service gives r/N"


def _theta_monotone(seed):
    m = ChannelModel(1, 1)
    vals = [effective_capacity(m, th, "optimal", from_name("bpsk"), 2000, seed).value
            for th in (0.01, 0.1, 1.0, 5.0, 10.0)]
    worst = max(0.0, max(b - a for a, b in zip(vals, vals[1:])))
    return worst, 0.0, "value nonincreasing in theta"


def _zeta_min(seed):
    r = ec_derivatives_at_zero(ChannelModel(1, 1), 1.0, 10_000, seed)
    return abs(r.zeta_min / math.log(2) - 1.0), 0.03, "SISO Rayleigh zeta_min vs ln 2"


def _limits():
    ln2 = math.log(2)
    got = [asymptotic_limits("M_to_inf"), asymptotic_limits("both_to_inf_ratio", 2.0),
           asymptotic_limits("both_to_inf_ratio", 0.5), asymptotic_limits("N_to_inf_only_via_ratio")]
    want = [(0.0, 2.0), (ln2 / 2, 2.0), (ln2, 1.0), (ln2, 0.0)]
    err = max(abs(a - b) for g, w in zip(got, want) for a, b in zip(g, w))
    return err, 1e-15, "large-antenna case tables"


def _slack():
    b = slack_b(QoSBoundConfig(1.0, 1e-6, 0.5, 0.5, 1.0))
    return abs(b - (-math.log(1e-6) - math.log(1 - math.exp(-0.5)))), 1e-12, "b formula"


def _eigen(seed):
    r = _rng.stream_rng(seed, _rng.ORACLE, 1)
    worst = 0.0
    for _ in range(50):
        H = _rng.complex_normal(r, (3, 2))
        d, _ = gram_eigendecomposition(H)
        worst = max(worst, float(np.max(np.abs(d - np.linalg.eigvalsh(H.conj().T @ H)[::-1]))))
    return worst, 1e-10, "Jacobi vs LAPACK on 3x2"


def _queue():
    t = simulate_queue_from_service(np.full(100, 2.0), 0.0)
    return float(np.max(t.backlog)), 0.0, "zero arrivals keep the queue empty"


def run_checks(seed: int = 0) -> list[CheckResult]:
    checks = [
        ("i_mmse", _immse),
        ("gaussian_closed_forms", _gaussian_forms),
        ("waterfill_reduction", lambda: _waterfill(seed)),
        ("deterministic_channel", _deterministic),
        ("theta_monotone", lambda: _theta_monotone(seed)),
        ("zeta_min_siso", lambda: _zeta_min(seed)),
        ("asymptotic_limits", _limits),
        ("slack_b", _slack),
        ("eigensolver", lambda: _eigen(seed)),
        ("queue_empty", _queue),
    ]
    out = []
    for name, fn in checks:
        try:
            value, thr, detail = fn()
            out.append(CheckResult(name, bool(value <= thr), float(value), thr, detail))
        except Exception as exc:  # a crash is a failed invariant, not an abort
            out.append(CheckResult(name, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return out
