from .runs import (
    anchor_link,
    emit_histogram,
    montecarlo_ber,
    run_ber_sweep,
    run_calibration,
    run_feedthrough,
    run_histogram,
    run_temperature_modulation,
    send_packets,
    table1_comparison,
    wilson_interval,
)
from .scenario import Scenario, load_scenario, parse_scenario, preset_names

__all__ = [
    "Scenario",
    "anchor_link",
    "emit_histogram",
    "load_scenario",
    "montecarlo_ber",
    "parse_scenario",
    "preset_names",
    "run_ber_sweep",
    "run_calibration",
    "run_feedthrough",
    "run_histogram",
    "run_temperature_modulation",
    "send_packets",
    "table1_comparison",
    "wilson_interval",
]
