"""Bayesian context trees: exact posterior inference for variable-memory chains."""

__version__ = "0.1.0"

from .baselines import (
    BaselineReport,
    ctw_entropy,
    lz_entropy,
    lz_match_lengths,
    plugin_entropy,
)
from .ctw import (
    CountTable,
    WeightedTree,
    build_counts,
    log_marginal_likelihood,
    log_pe,
    log_posterior,
    log_prior,
    map_tree,
    run_ctw,
)
from .entropy import (
    InducedChain,
    entropy_posterior,
    entropy_rate_exact,
    entropy_rate_mc,
    entropy_samples,
    induced_chain,
)
from .estimators import BayesianContextTree, EntropyRateEstimator
from .exceptions import (
    BCTError,
    CapacityError,
    DataError,
    DomainError,
    EstimationError,
    StructureError,
)
from .inference import (
    PosteriorSummary,
    PredictiveDistribution,
    SequentialPredictor,
    estimate_functional,
    order_posterior,
    predictive,
    rao_blackwell_params,
)
from .sampling import (
    JointBlock,
    TreeBatch,
    joint_blocks,
    sample_joint,
    sample_params,
    sample_posterior_tree,
    sample_prior_tree,
    sample_tree_batch,
)
from .simulate import Fixture, fixture, generate
from .trees import (
    ROOT,
    ContextTree,
    ParamSet,
    TimeSeries,
    VariableMemoryChain,
    count_trees,
    enumerate_trees,
    format_context,
    matching_leaf,
    parse_context,
)
