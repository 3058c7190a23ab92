__version__ = "0.1.0"

from .common import (
    Side, ModelKind, SingularityClass, DivergenceKind, ManifoldKind, Command,
    SolverSettings, CosmoKGError, ConfigError,
)
from .cosmology import ScaleFactorModel, ConformalChart, build_chart, reverse_model
from .spectrum import SphereSd, FlatTorusTd, build_ladder, shift_and_cut
from .potential import CouplingSpec, classify, scattering_table
from .dynamics import ChartPotential, ExplicitPotential, ModeState, Probe, evolve_mode, integrate_mode
from .asymptotics import solve_riccati, verify_riemann_bounds
from .wkb import build_olver_series, compare_wkb
from .quantum import bogoliubov_spectrum, pair_creation_number, hilbert_schmidt_certificate
from .semilinear import duffing_period, duffing_sweep
from .config import ScenarioConfig, load_config

__all__ = ['__version__', 'Side', 'ModelKind', 'SingularityClass', 'DivergenceKind', 'ManifoldKind',
           'Command', 'SolverSettings', 'CosmoKGError', 'ConfigError',
           'ScaleFactorModel', 'ConformalChart', 'build_chart', 'reverse_model',
           'SphereSd', 'FlatTorusTd', 'build_ladder', 'shift_and_cut',
           'CouplingSpec', 'classify', 'scattering_table',
           'ChartPotential', 'ExplicitPotential', 'ModeState', 'Probe', 'evolve_mode', 'integrate_mode',
           'solve_riccati', 'verify_riemann_bounds', 'build_olver_series', 'compare_wkb',
           'bogoliubov_spectrum', 'pair_creation_number', 'hilbert_schmidt_certificate',
           'duffing_period', 'duffing_sweep', 'ScenarioConfig', 'load_config']
