"""Generator learning from trajectory snapshots.

The resolvent-type method (``rtm``) estimates the generator matrix of the
Koopman semigroup on a dictionary of observables; ``baselines`` holds the
finite-difference, matrix-logarithm and SINDy comparisons, ``sysid`` turns a
generator into a vector field and scores it, and ``zubov`` reuses the learned
generator for region-of-attraction estimates.
"""

from .baselines import edmd_learn, fdm_learn, klm_learn, sindy_stlsq
from .dataset import SnapshotDataset, dataset_from_trajectories, generate_dataset
from .dictionary import Dictionary, monomial_dictionary, tanh_random_dictionary
from .errors import (
    BranchCutError,
    ConfigError,
    DefectiveMatrixError,
    DegenerateDataError,
    EmptyRegionError,
    EquilibriumNotFoundError,
    KoopgenError,
    MissingCoordinateError,
    NumericalFailure,
    StiffnessError,
)
from .generator import LearnedGenerator, projected_generator
from .quadrature import QuadratureRule, gl_rule, integrate_uniform, quad_error_bound
from .rtm import RtmConfig, learn
from .sysid import IdentifiedSystem, flow_metrics, predict_flow, recover_field, rmse_flow, rmse_weights
from .systems import SystemSpec, Trajectory, builtin_system, integrate, sample_initial_conditions
from .zubov import ZubovProblem, ZubovSolution, roa_extract, zubov_solve

__version__ = "0.1.0"

__all__ = [
    "BranchCutError", "ConfigError", "DefectiveMatrixError", "DegenerateDataError", "Dictionary",
    "EmptyRegionError", "EquilibriumNotFoundError", "IdentifiedSystem", "KoopgenError", "LearnedGenerator",
    "MissingCoordinateError", "NumericalFailure", "QuadratureRule", "RtmConfig", "SnapshotDataset",
    "StiffnessError", "SystemSpec", "Trajectory", "ZubovProblem", "ZubovSolution", "builtin_system",
    "dataset_from_trajectories", "edmd_learn", "fdm_learn", "flow_metrics", "generate_dataset", "gl_rule",
    "integrate", "integrate_uniform", "klm_learn", "learn", "monomial_dictionary", "predict_flow",
    "projected_generator", "quad_error_bound", "recover_field", "rmse_flow", "rmse_weights",
    "roa_extract", "sample_initial_conditions", "sindy_stlsq", "tanh_random_dictionary", "zubov_solve",
]
