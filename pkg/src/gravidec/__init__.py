"""Gravitational-wave decoherence of atomic Mach-Zehnder interferometers."""
from ._kernels import BACKEND as KERNEL_BACKEND
from .constants import CONSTANTS
from .decoherence import (ConvergenceError, DecoherenceResult, DetectionFilter, IntegratorOptions,
                          equivalent_mirror_noise, flat_atomic_variance, flat_atomic_variance_limit,
                          flat_photonic_variance, t_of_eta, variance_integral, visibility, y_of_x)
from .geometry import (PRESETS, RamanOptics, RhombGeometry, hyper_instrument, make_raman, make_rhomb,
                       preset_instrument, rhomb_from_kick)
from .gw_background import (GwBackground, effective_temperature, evaluate_sh, graviton_number,
                            theta_gw)
from .kinematics import AngularQuadrature, Direction, angular_average
from .response import (ApparatusResponse, GwProbeMode, atomic_apparatus, atomic_response,
                       combined_apparatus, combined_response, photonic_apparatus, photonic_response)

__version__ = "0.1.0"
