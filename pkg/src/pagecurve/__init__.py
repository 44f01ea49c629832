"""Entropy dynamics and thermodynamics of Markovian open quantum systems."""
from .davies import BathSpec, GKLSGenerator, JumpChannel, bohr_decompose, build_generator, thermal_rate
from .gaussian import CovarianceState, evolve_covariance, gaussian_entropy, symplectic_eigenvalue
from .integrator import IntegrationControls, Trajectory, evolve, steady_state
from .scenarios import ScenarioConfig, builtin, load_config, run
from .thermo import (analytic_qubit_entropy, entropy_rate, heat_current, page_summary,
                     relative_entropy, von_neumann_entropy)

__version__ = "0.1.0"
