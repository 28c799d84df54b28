"""Randomly perturbed switching dynamics of a first-order dc/dc buck converter.

Simulation of the deterministic switching system and its small-noise
stochastic counterpart, Skorokhod-distance bounds between the two, and
Monte Carlo verification of the Gaussian-tail and convergence bounds.
"""

__version__ = "0.1.0"

from .deterministic import (DetPath, DetSchedule, off_flow, on_flow,
                            on_hit_time, sample_path, simulate_det)
from .errors import (BucksimError, ConfigError, DomainError, InternalError,
                     InvalidParamsError)
from .montecarlo import (McConfig, McReport, bad_event_probs, distance_moment,
                         gaussian_tail, gaussian_tail_bound, sweep,
                         wilson_interval)
from .params import (ConverterParams, DerivedConstants, ParamCheck, Violation,
                     border_point, derive_constants, params_from_circuit,
                     validate_params)
from .skorokhod import (DistanceBound, TimeDeformation, WarpedPath,
                        align_schedules, hybrid_distance, skorokhod_bruteforce,
                        skorokhod_uniform, skorokhod_upper_bound)
from .stochastic import (OuIncrementLaw, ReplicaSchedule, StochConfig,
                         StochPath, crossing_probability,
                         inverse_quadratic_variation_time, ou_step,
                         quadratic_variation_time, replica_generator,
                         simulate_batch, simulate_stoch)
from .strobe import (find_fixed_point, iterate_map, strobe_map,
                     strobe_map_derivative)

__all__ = [
    "__version__",
    "BucksimError", "ConfigError", "DomainError", "InternalError", "InvalidParamsError",
    "ConverterParams", "DerivedConstants", "ParamCheck", "Violation",
    "validate_params", "derive_constants", "border_point", "params_from_circuit",
    "strobe_map", "strobe_map_derivative", "find_fixed_point", "iterate_map",
    "DetPath", "DetSchedule", "on_flow", "off_flow", "on_hit_time",
    "simulate_det", "sample_path",
    "StochConfig", "StochPath", "ReplicaSchedule", "OuIncrementLaw",
    "ou_step", "crossing_probability", "quadratic_variation_time",
    "inverse_quadratic_variation_time", "simulate_stoch", "simulate_batch",
    "replica_generator",
    "TimeDeformation", "DistanceBound", "WarpedPath", "hybrid_distance",
    "align_schedules", "skorokhod_upper_bound", "skorokhod_uniform",
    "skorokhod_bruteforce",
    "McConfig", "McReport", "gaussian_tail", "gaussian_tail_bound",
    "wilson_interval", "bad_event_probs", "distance_moment", "sweep",
]
