"""Effective capacity of MIMO links with arbitrary input constellations."""

__version__ = "0.1.0"

from .constellation import Constellation, Kind, from_name, make_constellation  # noqa: E402
from .infomeasures import QuadratureSpec, mmse_scalar, mutual_info_scalar  # noqa: E402
from .channel import ChannelModel, ChannelSample, CorrelationSpec, effective_snr, sample_channel  # noqa: E402
from .power_allocation import Policy, PowerAllocation, allocate, mercury_waterfill  # noqa: E402
from .effective_capacity import EffectiveCapacityEstimate, effective_capacity, link_utilization  # noqa: E402
from .asymptotics import LowSnrReport, asymptotic_limits, ec_derivatives_at_zero  # noqa: E402
from .netcalc import QoSBoundConfig, backlog_delay_bounds, simulate_queue, slack_b  # noqa: E402

__all__ = [
    "Constellation", "Kind", "from_name", "make_constellation",
    "QuadratureSpec", "mmse_scalar", "mutual_info_scalar",
    "ChannelModel", "ChannelSample", "CorrelationSpec", "effective_snr", "sample_channel",
    "Policy", "PowerAllocation", "allocate", "mercury_waterfill",
    "EffectiveCapacityEstimate", "effective_capacity", "link_utilization",
    "LowSnrReport", "asymptotic_limits", "ec_derivatives_at_zero",
    "QoSBoundConfig", "backlog_delay_bounds", "simulate_queue", "slack_b",
]
