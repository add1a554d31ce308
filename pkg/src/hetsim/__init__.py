"""Snapshot Monte Carlo simulator for prioritized multi-tier cellular
networks: distributed power control, cell association, and channel-access
scheduling on a single shared channel."""

__version__ = "0.1.0"

from .config import SimConfig, fig2_defaults, fig3_defaults, parse_config
from .harness import (
    experiment_fig2,
    experiment_fig3,
    run_monte_carlo,
    run_snapshot,
)
from .network import (
    build_gain_matrix,
    generate_fig2_snapshot,
    generate_fig3_snapshot,
    path_gain,
)
from .power_control import (
    feasibility_check,
    fixed_point_oracle,
    run_power_control,
)
from .report import emit_report

__all__ = [
    "SimConfig",
    "__version__",
    "build_gain_matrix",
    "emit_report",
    "experiment_fig2",
    "experiment_fig3",
    "feasibility_check",
    "fig2_defaults",
    "fig3_defaults",
    "fixed_point_oracle",
    "generate_fig2_snapshot",
    "generate_fig3_snapshot",
    "parse_config",
    "path_gain",
    "run_monte_carlo",
    "run_power_control",
    "run_snapshot",
]
