"""Cost-sensitive model selection over size-dependent feature-extraction costs.

Offline, characterize feature subsets with a black-box learner, prune the
subset lattice down to a candidate set, and index the candidates' cost
curves by the sizes where their skyline changes. Online, answer "best model
for an item of size n under extraction budget c" in logarithmic time, or
run the greedy anytime cascade when precomputation must stay cheap.
"""

__version__ = "0.1.0"

from .costpoly import (
    Breakpoint,
    CostPolynomial,
    CostSample,
    cost_dominates,
    fit,
    intersections,
    sum_polys,
)
from .errors import (
    AccuracyTie,
    ComputationError,
    DegenerateFit,
    EmptyDataset,
    EquivalenceError,
    IdenticalCurves,
    InsufficientSamples,
    NoFeasibleModel,
    PolydomError,
    TrainingFailed,
    UniverseTooLarge,
    ValidationError,
)
from .lattice import (
    CharacterizedFeatureSet,
    PruningParams,
    candidate_set,
    covering_prunable,
    dominates,
    expand_enumerate,
    expand_progressive,
    is_sandwiched,
)
from .learner import (
    Dataset,
    Item,
    LinearSGDLearner,
    ModelHandle,
    NoisyOracleLearner,
    SyntheticConfig,
    SyntheticOracleLearner,
    accuracy_combiner,
    sample_synthetic_config,
    train_linear,
)
from .polydom_index import (
    IndexStats,
    PolyDomIndex,
    QueryBudget,
    build,
    classify_intersection,
    query,
    skyline_at,
)
from .greedy_cascade import (
    GreedyParams,
    GreedySequenceIndex,
    build_sequences,
    greedy_acc,
    greedy_cost,
    poly_cost_oracle,
    query_anytime,
)
from .baselines import index_all, naive_expand_all, naive_lookup
from .harness import (
    ExperimentSpec,
    MetricsReport,
    MonotonicityReport,
    gen_synthetic,
    monotonicity_analysis,
    profile_costs,
    run_experiment,
)
