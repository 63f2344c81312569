"""Two-state system coupled to a damped harmonic mode.

Low-energy spectrum via a conditionally displaced oscillator basis and
secular three-level Redfield dynamics, with exact truncated-basis references.
"""

from spinboson.model import (
    ConvergenceError,
    DsrParams,
    ModelParams,
    SpectralDensity,
    lorentzian_j_eff,
    ohmic_j,
    solve_displacement,
)
from spinboson.hamiltonians import (
    DsrEigensystem,
    HermitianMatrix,
    bohr_deviations,
    build_dsr_general,
    build_dsr_jc,
    build_exact,
    build_simple_truncation,
    dsr_eigensystem,
    tracked_levels,
)
from spinboson.numerics import Spectrum, eigh, principal_value, propagate_2x2
from spinboson.redfield import (
    SecularDynamics,
    coupling_elements,
    gamma_plus_rate,
    gamma_tensors,
    redfield_tensor,
    secular_dynamics,
    sigma_z_series,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DsrEigensystem",
    "DsrParams",
    "HermitianMatrix",
    "ModelParams",
    "SecularDynamics",
    "SpectralDensity",
    "Spectrum",
    "bohr_deviations",
    "build_dsr_general",
    "build_dsr_jc",
    "build_exact",
    "build_simple_truncation",
    "coupling_elements",
    "dsr_eigensystem",
    "eigh",
    "gamma_plus_rate",
    "gamma_tensors",
    "lorentzian_j_eff",
    "ohmic_j",
    "principal_value",
    "propagate_2x2",
    "redfield_tensor",
    "secular_dynamics",
    "sigma_z_series",
    "solve_displacement",
    "tracked_levels",
]
