"""coalint: interaction indices for cooperative games.

Exact enumeration oracles, polynomial-time extraction from tree ensembles,
coalition samplers, and a proxy-plus-residual estimation pipeline.
"""

from ._backend import BACKEND
from .bitset import (
    CapacityError,
    Coalition,
    CoalintError,
    PreconditionError,
    all_subsets_up_to_order,
)
from .extraction import (
    LambdaKey,
    LinearProxy,
    extract_linear_interactions,
    extract_tree_interactions,
    fit_linear_proxy,
    lambda_closed,
    lambda_general,
)
from .games import (
    ConstantGame,
    CountingGame,
    Game,
    GameFormatError,
    InterventionalGame,
    MissingCoalitionError,
    MoebiusGame,
    TableGame,
    TreeGame,
    UnanimityGame,
    load_moebius_game,
    load_table_game,
)
from .gbt import GbtConfig, fit_gbt, preset
from .indices import IndexSpec, p_weight, q_weight
from .msr import (
    ResidualGame,
    gamma_brute,
    gamma_closed,
    gamma_factor,
    msr_estimate,
    should_adjust,
    variance_exact,
)
from .oracle import discrete_derivative, exact_interactions, moebius_transform
from .pipeline import (
    PipelineConfig,
    ProxySpec,
    benchmark_sweep,
    ground_truth,
    relative_mse,
    estimate_interactions,
    summarize_sweep,
)
from .results import InteractionVector
from .sampling import SamplerConfig, sample
from .trees import (
    Leaf,
    Tree,
    TreeEnsemble,
    ensemble_from_sparse_coefficients,
    interventional_ensemble,
    load_ensemble,
    save_ensemble,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CapacityError",
    "Coalition",
    "CoalintError",
    "ConstantGame",
    "CountingGame",
    "Game",
    "GameFormatError",
    "GbtConfig",
    "IndexSpec",
    "InteractionVector",
    "InterventionalGame",
    "LambdaKey",
    "Leaf",
    "LinearProxy",
    "MissingCoalitionError",
    "MoebiusGame",
    "PipelineConfig",
    "PreconditionError",
    "ProxySpec",
    "ResidualGame",
    "SamplerConfig",
    "TableGame",
    "Tree",
    "TreeEnsemble",
    "TreeGame",
    "UnanimityGame",
    "all_subsets_up_to_order",
    "benchmark_sweep",
    "discrete_derivative",
    "ensemble_from_sparse_coefficients",
    "exact_interactions",
    "extract_linear_interactions",
    "extract_tree_interactions",
    "fit_gbt",
    "fit_linear_proxy",
    "gamma_brute",
    "gamma_closed",
    "gamma_factor",
    "ground_truth",
    "interventional_ensemble",
    "lambda_closed",
    "lambda_general",
    "load_ensemble",
    "load_moebius_game",
    "load_table_game",
    "moebius_transform",
    "msr_estimate",
    "p_weight",
    "preset",
    "q_weight",
    "relative_mse",
    "estimate_interactions",
    "sample",
    "save_ensemble",
    "should_adjust",
    "summarize_sweep",
    "variance_exact",
]
