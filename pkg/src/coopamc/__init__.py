"""Joint adaptive modulation-coding and cooperative truncated ARQ over Rayleigh relay links."""

from .analytic import (
    PerformanceReport,
    eta_amc_only,
    eta_cooperative,
    eta_fixed,
    eta_traditional,
    evaluate,
    event_probabilities,
    plr_cooperative,
    plr_fixed,
)
from .channel import (
    AmcMode,
    ConfigError,
    ModeTable,
    Topology,
    derive_topology,
    draw_snr,
    full_avg_per,
    interval_avg_per,
    load_table,
    per_instant,
    rayleigh_interval_prob,
    sr_packet_error,
)
from .design import LinkDesign, avg_sr_eps, design_link, fixed_link, threshold_for_target
from .optimizer import (
    FixedChoice,
    OptimizedSystem,
    baseline_equal_target,
    optimize_adaptive,
    optimize_fixed,
    optimize_traditional,
    power_threshold,
)

__version__ = "0.1.0"
