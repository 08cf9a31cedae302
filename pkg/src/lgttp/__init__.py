"""Language-guided temporal token pruning.

Given a natural-language query and per-frame video embeddings, this
library extracts temporal cues from the query, weights frame relevance by
when the query points in the clip, and allocates per-frame token budgets
under a global pruning rate, together with a compute-cost estimate and a
synthetic evaluation harness.
"""

from ._version import __version__
from .adaptation import (
    AdaptationMode,
    AdapterParams,
    PositionEmbedParams,
    adapt,
    adapt_learned,
    adapt_position_embedding,
    adapt_timestamp_aware,
    adapter_forward,
    gelu,
    gelu_grad,
    init_adapter,
    init_position,
    layer_norm,
    untrained_params,
    zero_adapter,
    zero_position,
)
from .errors import (
    FileIOError,
    FormatError,
    InvalidInputError,
    LGTTPError,
    NotTrainedError,
)
from .estimator import TemporalTokenPruner
from .formats import (
    load_checkpoint,
    load_lexicon,
    load_training_set,
    plan_to_json,
    read_embeddings,
    save_checkpoint,
    save_lexicon,
    save_training_set,
    write_embeddings,
    write_plan,
    write_report_csv,
)
from .harness import (
    QUERY_TEMPLATES,
    ComparisonRow,
    Scenario,
    Strategy,
    StrategyReport,
    compare,
    default_window,
    gen_scenario,
    make_training_set,
    run_strategy,
    window_retention,
)
from .parsing import (
    CueCategory,
    CueSource,
    MarkerLexicon,
    Query,
    TemporalCue,
    default_lexicon,
    detect_markers,
    extract_cues,
    extract_reference_event,
    resolve_implicit_cues,
)
from .planner import (
    CostEstimate,
    PipelineParams,
    PlannerConfig,
    PruningPlan,
    allocate_rates,
    build_plan,
    estimate_cost,
    select_tokens,
    softmax,
    token_budgets,
)
from .relevance import (
    FrameEmbeddings,
    QueryEmbedding,
    RelevanceParams,
    RelevanceScores,
    apply_temporal_weighting,
    base_relevance,
    cosine_similarities,
    embed_query,
)
from .training import (
    AdamW,
    TrainConfig,
    TrainingSample,
    grad_check,
    train,
)
from .weighting import (
    WeightVector,
    combine_weights,
    cooccurrence_weights,
    precedence_weights,
    subsequence_weights,
    uniform_weights,
    weights_for_cues,
)

__all__ = [
    "__version__",
    # errors
    "LGTTPError",
    "InvalidInputError",
    "FormatError",
    "FileIOError",
    "NotTrainedError",
    # parsing
    "CueCategory",
    "CueSource",
    "Query",
    "TemporalCue",
    "MarkerLexicon",
    "default_lexicon",
    "detect_markers",
    "extract_reference_event",
    "resolve_implicit_cues",
    "extract_cues",
    # weighting
    "WeightVector",
    "precedence_weights",
    "subsequence_weights",
    "cooccurrence_weights",
    "uniform_weights",
    "combine_weights",
    "weights_for_cues",
    # relevance
    "FrameEmbeddings",
    "QueryEmbedding",
    "RelevanceParams",
    "RelevanceScores",
    "embed_query",
    "cosine_similarities",
    "base_relevance",
    "apply_temporal_weighting",
    # adaptation
    "AdaptationMode",
    "PositionEmbedParams",
    "AdapterParams",
    "adapt",
    "adapt_timestamp_aware",
    "adapt_position_embedding",
    "adapt_learned",
    "adapter_forward",
    "gelu",
    "gelu_grad",
    "layer_norm",
    "init_adapter",
    "init_position",
    "zero_adapter",
    "zero_position",
    "untrained_params",
    # training
    "TrainConfig",
    "TrainingSample",
    "AdamW",
    "train",
    "grad_check",
    # planner
    "PlannerConfig",
    "PipelineParams",
    "CostEstimate",
    "PruningPlan",
    "allocate_rates",
    "token_budgets",
    "select_tokens",
    "softmax",
    "estimate_cost",
    "build_plan",
    # estimator
    "TemporalTokenPruner",
    # harness
    "Scenario",
    "Strategy",
    "QUERY_TEMPLATES",
    "StrategyReport",
    "ComparisonRow",
    "gen_scenario",
    "default_window",
    "window_retention",
    "run_strategy",
    "compare",
    "make_training_set",
    # formats
    "read_embeddings",
    "write_embeddings",
    "save_checkpoint",
    "load_checkpoint",
    "load_lexicon",
    "save_lexicon",
    "plan_to_json",
    "write_plan",
    "write_report_csv",
    "save_training_set",
    "load_training_set",
]
