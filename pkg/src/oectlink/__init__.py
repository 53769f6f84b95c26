"""oectlink: link-level Monte Carlo simulator of a control-referenced
tri-channel OECT molecular-communication receiver.

Maps per-symbol molecule releases through restricted diffusion, stochastic
aptamer binding, OECT transduction, and correlated electrical noise to
MoSK / CSK-4 / Hybrid symbol decisions, and estimates SER and limit of
detection across parameter sweeps.
"""

__version__ = "0.1.0"

from .config import (Medium, Modulation, MonteCarlo, NoiseCorrelation,
                     Scenario, ScenarioError, Scheme, Species,
                     SpeciesChannel, Timing, TimingPolicy, alphabet_levels,
                     baseline_scenario, dump_scenario, effective_diffusivity,
                     load_scenario, loads_scenario, scenario_hash)
from .experiments import (LodResult, SerEstimate, estimate_ser, find_lod,
                          gaussian_bracket_lod, gaussian_ser, run_sweep,
                          simulate_sequence, wilson_interval)

__all__ = [
    "Medium", "Modulation", "MonteCarlo", "NoiseCorrelation", "Scenario",
    "ScenarioError", "Scheme", "Species", "SpeciesChannel", "Timing",
    "TimingPolicy", "alphabet_levels", "baseline_scenario", "dump_scenario",
    "effective_diffusivity", "load_scenario", "loads_scenario",
    "scenario_hash", "LodResult", "SerEstimate", "estimate_ser", "find_lod",
    "gaussian_bracket_lod", "gaussian_ser", "run_sweep", "simulate_sequence",
    "wilson_interval", "__version__",
]
