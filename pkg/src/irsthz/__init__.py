"""Link-level simulator for IRS-assisted THz industrial IoT networks.

Modules:
    scenario: device placement and mobility.
    channel: THz pathloss, cascaded IRS channels, estimation error, phase configuration.
    linproc: MMSE receivers and beams, SINR and rate expressions.
    power: downlink water-filling.
    association: uplink/downlink IRS pairing and its signalling overhead.
    config, runner, serialize, cli: experiment harness.
"""
from .association import (
    AssociationMatrix,
    RateMatrix,
    build_preferences,
    exhaustive,
    gale_shapley,
    greedy,
    is_stable,
    overhead_slots,
    random_assoc,
    rate_matrix,
)
from .config import ExperimentConfig, noise_power
from .runner import SweepTable, TrialReport, run_trial, sweep

__version__ = "0.1.0"

__all__ = [
    "AssociationMatrix", "RateMatrix", "build_preferences", "exhaustive", "gale_shapley",
    "greedy", "is_stable", "overhead_slots", "random_assoc", "rate_matrix",
    "ExperimentConfig", "noise_power", "SweepTable", "TrialReport", "run_trial", "sweep",
]
