"""Detector-response simulation under comb switching and Wightman-function reconstruction."""

from .correlators import (CorrelatorSpec, StationaryCorrelator, TwoPointCorrelator, adiabatic_rate,
                          build_correlator, closed_form_pullback, commutator_spectrum, constant_correlator,
                          mode_integral_correlator, single_mode_correlator)
from .delta_limit import (EtaSchedule, ScalingReport, density_of_states, eta_sweep, nonlocal_delta_limit,
                          scaling_experiment, single_kick_coefficient)
from .protocol import (ProtocolConfig, ReconstructionResult, reconstruct_wightman, reconstruction_sweep,
                       statistic_S, synchronize_gap)
from .response import (Detector, ProbeOutcome, QuadSettings, excitation_probability, functional_W,
                       local_term, nonlocal_correlations, stationary_probability)
from .switching import (GAUSSIAN, SMOOTH_BUMP, Comb, NascentDelta, ToothShape, eval_comb, eval_tooth,
                        make_comb, tooth_support)
from .trajectories import Event, Worldline, interval, position

__version__ = "0.1.0"

__all__ = [
    "CorrelatorSpec", "StationaryCorrelator", "TwoPointCorrelator", "adiabatic_rate", "build_correlator",
    "closed_form_pullback", "commutator_spectrum", "constant_correlator", "mode_integral_correlator",
    "single_mode_correlator", "EtaSchedule", "ScalingReport", "density_of_states", "eta_sweep",
    "nonlocal_delta_limit", "scaling_experiment", "single_kick_coefficient", "ProtocolConfig",
    "ReconstructionResult", "reconstruct_wightman", "reconstruction_sweep", "statistic_S",
    "synchronize_gap", "Detector", "ProbeOutcome", "QuadSettings", "excitation_probability",
    "functional_W", "local_term", "nonlocal_correlations", "stationary_probability", "GAUSSIAN",
    "SMOOTH_BUMP", "Comb", "NascentDelta", "ToothShape", "eval_comb", "eval_tooth", "make_comb",
    "tooth_support", "Event", "Worldline", "interval", "position",
]
