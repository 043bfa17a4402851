"""Classical stochastic displacement fields and their Schrodinger-equation counterpart."""
from ._kernels import BACKEND
from .bath import BathConfig, bath_correlation, eta_bath, sample_bath
from .config import ConfigError, ExperimentConfig, parse_config, serialize
from .experiments import run_experiment
from .field import (FieldPair1D, Grid1D, Grid2, GridField2, HolomorphicField, Point2, cr_residual,
                    eval_field, laplacian_residual, restrict_to_line, sample_field)
from .pde import (StabilityError, Wavefunction1D, apply_generator_2d, evolve_pair, padded_domain,
                  schrodinger_evolve, step_generator_2d)
from .sde import (DegenerateEnsembleError, PhysicalParams, SdeConfig, ensemble_average, mc_average_field,
                  simulate_paths, step, white_increment)
from .spectral import SpectrumResult, assemble_psi, energy_spectrum, hermite_state, inner_product
from .superpotential import (Superpotential, oscillator_superpotential, riccati_potential,
                             zero_superpotential)

__version__ = "0.1.0"
