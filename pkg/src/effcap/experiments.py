"""Config-driven sweeps that emit one CSV row per grid point."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from . import __version__
from .asymptotics import ec_derivatives_at_zero, low_snr_approximation
from .channel import ChannelModel, CorrelationSpec
from .constellation import from_name
from .effective_capacity import effective_capacity
from .netcalc import optimize_bounds, simulate_queue
from .power_allocation import Policy

__all__ = ["ConfigError", "ExperimentConfig", "COLUMNS", "load_config", "run_experiment", "write_outputs"]

EXPERIMENTS = ("ec_vs_snr", "ec_vs_theta", "ebno_curve", "slope_vs_beta", "link_utilization",
               "delay_vs_arrival", "selftest")

_AXES = {
    "ec_vs_snr": ("snr_db",),
    "ec_vs_theta": ("theta",),
    "ebno_curve": ("snr_db",),
    "slope_vs_beta": ("beta",),
    "link_utilization": ("N", "M"),
    "delay_vs_arrival": ("arrival_rate",),
    "selftest": ("check",),
}

_EC_COLUMNS = ["snr_db", "theta", "M", "N", "constellation", "policy", "ec", "ec_std_error",
               "mean_rate", "mean_rate_std_error", "link_utilization"]

COLUMNS = {
    "ec_vs_snr": _EC_COLUMNS,
    "ec_vs_theta": _EC_COLUMNS,
    "link_utilization": _EC_COLUMNS,
    "ebno_curve": ["snr_db", "power", "theta", "M", "N", "constellation", "policy", "ec", "ec_std_error",
                   "zeta", "zeta_db", "zeta_min", "zeta_min_db", "zeta_min_std_error", "slope_S0",
                   "linear_approx"],
    "slope_vs_beta": ["beta", "theta", "M", "N", "constellation", "is_real_modulation", "first_derivative",
                      "second_derivative", "zeta_min", "zeta_min_db", "zeta_min_std_error", "slope_S0"],
    "delay_vs_arrival": ["arrival_rate", "M", "N", "constellation", "policy", "epsilon_prime", "feasible",
                         "theta", "delta", "effective_rate", "effective_rate_std_error", "b",
                         "backlog_bound_q", "delay_bound_d", "sim_frames", "sim_backlog_tail",
                         "sim_delay_tail"],
    "selftest": ["check", "passed", "value", "threshold", "detail"],
}


class ConfigError(ValueError):
    """Invalid or unresolvable experiment configuration."""


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    sweep_axis: str
    sweep_values: tuple
    M: int = 1
    N: int = 1
    sigma_h_sq: float = 1.0
    beta: float = 0.0
    tx_spacing_ratio: float | None = None
    rx_spacing_ratio: float | None = None
    T: int = 1
    sigma_w_sq: float = 1.0
    constellations: tuple = ("bpsk",)
    policies: tuple = ("optimal",)
    theta: float = 1.0
    snr_db: float = 0.0
    epsilon_prime: float = 1e-6
    theta_grid: tuple = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
    simulate_frames: int = 0
    per_antenna_independent: bool = True
    samples: int = 10_000
    seed: int = 0
    output_path: str | None = None
    workers: int = 1
    extra: dict = field(default_factory=dict, compare=False)

    def resolved(self) -> dict:
        """Everything that influences the numbers (no output path or worker count)."""
        d = asdict(self)
        for k in ("output_path", "workers", "extra"):
            d.pop(k)
        d["sweep_values"] = list(d["sweep_values"])
        for k in ("constellations", "policies", "theta_grid"):
            d[k] = list(d[k])
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def model(self, **overrides) -> ChannelModel:
        params = dict(M=self.M, N=self.N, sigma_h_sq=self.sigma_h_sq, beta=self.beta, T=self.T,
                      sigma_w_sq=self.sigma_w_sq)
        params.update(overrides)
        tx = math.inf if self.tx_spacing_ratio is None else self.tx_spacing_ratio
        rx = math.inf if self.rx_spacing_ratio is None else self.rx_spacing_ratio
        params["corr_tx"] = CorrelationSpec(params["M"], tx)
        params["corr_rx"] = CorrelationSpec(params["N"], rx)
        return ChannelModel(**params)


_FIELDS = {f for f in ExperimentConfig.__dataclass_fields__} - {"sweep_axis", "sweep_values", "extra"}


def load_config(source, overrides: dict | None = None) -> ExperimentConfig:
    """Parse a JSON document (path, text or dict) into a validated config.

    ``overrides`` replaces top-level fields (used by the CLI flags).
    """
    if isinstance(source, dict):
        raw = dict(source)
    else:
        text = source
        if not str(source).lstrip().startswith("{"):
            try:
                with open(source, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {source!r}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v

    exp = raw.pop("experiment", None)
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; expected one of {', '.join(EXPERIMENTS)}")
    sweep = raw.pop("sweep", None)
    if exp == "selftest":
        sweep = sweep or {"axis": "check", "values": ["all"]}
    if not isinstance(sweep, dict) or "values" not in sweep:
        raise ConfigError("sweep must be an object with 'axis' and 'values'")
    axis = sweep.get("axis", _AXES[exp][0])
    if axis not in _AXES[exp]:
        raise ConfigError(f"sweep axis {axis!r} not valid for {exp}; expected {_AXES[exp]}")
    values = tuple(_as_list(sweep["values"]))
    if not values:
        raise ConfigError("sweep values must be non-empty")

    if "constellation" in raw:
        raw["constellations"] = raw.pop("constellation")
    if "policy" in raw:
        raw["policies"] = raw.pop("policy")
    unknown = set(raw) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    for k in ("constellations", "policies", "theta_grid"):
        if k in raw:
            raw[k] = tuple(_as_list(raw[k]))
    try:
        cfg = ExperimentConfig(experiment=exp, sweep_axis=axis, sweep_values=values, **raw)
        _validate(cfg)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.samples < 100:
        raise ConfigError("samples must be at least 100")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.workers < 1:
        raise ConfigError("workers must be positive")
    for name in cfg.constellations:
        try:
            from_name(name)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    for p in cfg.policies:
        try:
            Policy(p)
        except ValueError:
            raise ConfigError(f"unknown policy {p!r}") from None
    if cfg.experiment == "slope_vs_beta" and cfg.samples < 1000:
        raise ConfigError("slope_vs_beta needs at least 1000 samples")
    if cfg.experiment != "selftest":
        try:
            vals = [float(v) for v in cfg.sweep_values]
        except (TypeError, ValueError):
            raise ConfigError("sweep values must be numeric") from None
        if cfg.sweep_axis in ("N", "M") and any(v < 1 or v != int(v) for v in vals):
            raise ConfigError("antenna counts must be positive integers")
    cfg.model()


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def _ec_rows(cfg: ExperimentConfig, value):
    snr_db, theta, M, N = cfg.snr_db, cfg.theta, cfg.M, cfg.N
    if cfg.sweep_axis == "snr_db":
        snr_db = float(value)
    elif cfg.sweep_axis == "theta":
        theta = float(value)
    elif cfg.sweep_axis == "N":
        N = int(value)
    elif cfg.sweep_axis == "M":
        M = int(value)
    model = cfg.model(M=M, N=N, P=cfg.sigma_w_sq * 10.0 ** (snr_db / 10.0))
    rows = []
    for cname in cfg.constellations:
        c = from_name(cname)
        for pol in cfg.policies:
            e = effective_capacity(model, theta, pol, c, cfg.samples, cfg.seed,
                                   per_antenna_independent=cfg.per_antenna_independent)
            rows.append([snr_db, theta, M, N, cname, pol, e.value, e.std_error, e.mean_rate,
                         e.mean_rate_std_error, e.link_utilization])
    return rows


def _ebno_rows(cfg: ExperimentConfig, value):
    snr_db = float(value)
    P = cfg.sigma_w_sq * 10.0 ** (snr_db / 10.0)
    model = cfg.model(P=P)
    rows = []
    for cname in cfg.constellations:
        c = from_name(cname)
        rep = ec_derivatives_at_zero(model, cfg.theta, max(cfg.samples, 1000), cfg.seed,
                                     is_real_modulation=c.is_real)
        for pol in cfg.policies:
            e = effective_capacity(model, cfg.theta, pol, c, cfg.samples, cfg.seed,
                                   per_antenna_independent=cfg.per_antenna_independent)
            zeta = P / e.value if e.value > 0 else math.inf
            zdb = _db(zeta)
            approx = low_snr_approximation(rep, zdb) if zdb >= rep.zeta_min_db else math.nan
            rows.append([snr_db, P, cfg.theta, cfg.M, cfg.N, cname, pol, e.value, e.std_error, zeta, zdb,
                         rep.zeta_min, rep.zeta_min_db, rep.zeta_min_std_error, rep.slope_S0, approx])
    return rows


def _slope_rows(cfg: ExperimentConfig, value):
    beta = float(value)
    model = cfg.model(beta=beta)
    rows = []
    for cname in cfg.constellations:
        c = from_name(cname)
        r = ec_derivatives_at_zero(model, cfg.theta, cfg.samples, cfg.seed, is_real_modulation=c.is_real)
        rows.append([beta, cfg.theta, cfg.M, cfg.N, cname, c.is_real, r.first_derivative, r.second_derivative,
                     r.zeta_min, r.zeta_min_db, r.zeta_min_std_error, r.slope_S0])
    return rows


def _delay_rows(cfg: ExperimentConfig, value):
    a = float(value)
    model = cfg.model(P=cfg.sigma_w_sq * 10.0 ** (cfg.snr_db / 10.0))
    rows = []
    for cname in cfg.constellations:
        c = from_name(cname)
        for pol in cfg.policies:
            rep = optimize_bounds(model, pol, c, cfg.theta_grid, epsilon_prime=cfg.epsilon_prime,
                                  arrival_rate_a=a, samples=cfg.samples, seed=cfg.seed)
            se = math.nan
            if rep.feasible:
                se = effective_capacity(model, rep.theta, pol, c, cfg.samples, cfg.seed).std_error
            frames, qt, dt = cfg.simulate_frames, math.nan, math.nan
            if frames and rep.feasible:
                tails = simulate_queue(model, pol, c, a, frames, cfg.seed)
                qt, dt = tails.backlog_tail(rep.backlog_bound_q), tails.delay_tail(rep.delay_bound_d)
            rows.append([a, cfg.M, cfg.N, cname, pol, cfg.epsilon_prime, rep.feasible, rep.theta, rep.delta,
                         rep.effective_rate, se, rep.b, rep.backlog_bound_q, rep.delay_bound_d, frames, qt, dt])
    return rows


def _selftest_rows(cfg: ExperimentConfig, value):
    from .selftest import run_checks

    return [[r.name, r.passed, r.value, r.threshold, r.detail] for r in run_checks(seed=cfg.seed)]


_HANDLERS = {
    "ec_vs_snr": _ec_rows,
    "ec_vs_theta": _ec_rows,
    "link_utilization": _ec_rows,
    "ebno_curve": _ebno_rows,
    "slope_vs_beta": _slope_rows,
    "delay_vs_arrival": _delay_rows,
    "selftest": _selftest_rows,
}


def _point(args):
    cfg, value = args
    return _HANDLERS[cfg.experiment](cfg, value)


def run_experiment(cfg: ExperimentConfig) -> list[list]:
    """Rows for every sweep value, in sweep order regardless of ``workers``."""
    jobs = [(cfg, v) for v in cfg.sweep_values]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_point, jobs))
    else:
        chunks = [_point(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) or hasattr(v, "dtype"):
        return repr(float(v))
    return str(v)


def render_csv(cfg: ExperimentConfig, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# effcap {__version__} experiment={cfg.experiment} config_sha256={cfg.config_hash()} "
              f"seed={cfg.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS[cfg.experiment])
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, rows, path: str | None = None) -> str:
    """Write the CSV and its ``.meta.json`` sidecar; returns the CSV text."""
    text = render_csv(cfg, rows)
    path = path or cfg.output_path
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        meta = {
            "experiment": cfg.experiment,
            "config": cfg.resolved(),
            "config_sha256": cfg.config_hash(),
            "seed": cfg.seed,
            "columns": COLUMNS[cfg.experiment],
            "rows": len(rows),
            "version": __version__,
        }
        with open(path + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return text
