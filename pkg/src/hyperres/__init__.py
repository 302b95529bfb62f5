"""Resonances, scattering phases and trace-formula checks for radial
Schrodinger operators Delta + V on hyperbolic space H^{n+1}."""

from .errors import (CapSensitivityError, HyperresError,
                     InternalConsistencyError, NearSingularWronskianError,
                     NonConvergenceError, NumericalBudgetError, PoleError,
                     QuadratureError, StiffnessError, UnwrapError,
                     ValidationError)
from .kernels import KernelQuery, free_resolvent, free_spectral_kernel
from .potentials import (HyperbolicDim, RadialPotential, evaluate,
                         volume_integral)
from .radial import (ChannelDecomposition, RadialSolution, Sector,
                     channel_smatrix_ratio, decompose_at_match,
                     integrate_regular, jost_function, jost_solution)
from .resonances import (Disk, Resonance, ResonanceList, SearchRegion,
                         count_zeros, counting_function, find_resonances,
                         probe_critical_multiplicity)
from .scattering import (PhaseGrid, default_xi_grid, levinson_constant,
                         phase_asymptotics_fit, phase_coefficient_target,
                         relative_determinant, scattering_phase, tau_at_half)
from .specfun import (LegendreArgs, gauss_2f1, legendre_P_negmu,
                      legendre_Q_norm, log_gamma)
from .traces import (HeatCurve, TestFunction, WaveInvariants, cosine_window,
                     eigenvalue_oracle, gaussian_window, heat_smallt_fit,
                     heat_trace, poisson_pairing, theta_reconstruction,
                     wave_invariants)

__version__ = "0.1.0"

__all__ = [
    "HyperbolicDim", "RadialPotential", "Sector", "RadialSolution",
    "ChannelDecomposition", "LegendreArgs", "KernelQuery", "PhaseGrid",
    "SearchRegion", "Disk", "Resonance", "ResonanceList", "WaveInvariants",
    "TestFunction", "HeatCurve",
    "log_gamma", "gauss_2f1", "legendre_P_negmu", "legendre_Q_norm",
    "evaluate", "volume_integral", "integrate_regular", "jost_solution",
    "decompose_at_match", "jost_function", "channel_smatrix_ratio",
    "free_resolvent", "free_spectral_kernel", "relative_determinant",
    "scattering_phase", "phase_asymptotics_fit", "phase_coefficient_target",
    "levinson_constant", "tau_at_half", "default_xi_grid", "count_zeros",
    "find_resonances", "counting_function", "probe_critical_multiplicity",
    "wave_invariants", "heat_trace", "heat_smallt_fit", "eigenvalue_oracle",
    "poisson_pairing", "theta_reconstruction", "cosine_window",
    "gaussian_window",
    "HyperresError", "ValidationError", "NumericalBudgetError",
    "InternalConsistencyError", "PoleError", "NonConvergenceError",
    "QuadratureError", "StiffnessError", "NearSingularWronskianError",
    "UnwrapError", "CapSensitivityError",
]
