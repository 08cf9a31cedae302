"""Per-frame pruning-rate allocation and token-retention planning.

The allocation mechanism spreads a global budget over frames with a
softmax: ``raw_rates = alpha * n * softmax(scores)``, so the mean raw rate
is exactly alpha and shifting all scores by a constant changes nothing.
Rates clamp to [0, 1], and a frame retaining at rate r keeps

    budget = max(t_min, ceil((1 - r) * t_full))

tokens out of t_full, with t_min = ceil(t_min_fraction * t_full) the soft
floor that keeps every frame minimally represented.

The end-to-end planner prunes hardest where temporally-weighted relevance
is lowest: frames the query points at keep the most tokens.  Concretely it
feeds the negated relevance into the softmax allocation, so higher l_temp
means a lower pruning rate and a larger budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ._version import __version__ as _library_version
from .adaptation import (
    DEFAULT_MAX_FRAMES,
    AdaptationMode,
    AdaptationParams,
    AdapterParams,
    PositionEmbedParams,
    adapt,
    untrained_params,
)
from .errors import InvalidInputError
from .parsing import MarkerLexicon, Query, TemporalCue, extract_cues
from .relevance import (
    FrameEmbeddings,
    QueryEmbedding,
    RelevanceParams,
    RelevanceScores,
    apply_temporal_weighting,
    base_relevance,
    embed_query,
)
from .validation import (
    as_float_vector,
    check_open_unit_interval,
    check_positive_float,
    check_positive_int,
    check_unit_interval,
    readonly,
)
from .weighting import DEFAULT_CENTER_DECAY, WeightVector, weights_for_cues

DEFAULT_ALPHA = 0.65
DEFAULT_T_FULL = 256
DEFAULT_T_MIN_FRACTION = 0.10
DEFAULT_COST_MU = 0.5

# sheds float dust like (1 - 0.35) * 100 = 65.00000000000001 before ceil
_CEIL_DECIMALS = 9


@dataclass(frozen=True)
class PlannerConfig:
    """Planner knobs; validated on construction.

    alpha is the mean pruning rate, t_full the tokens per unpruned frame,
    t_min_fraction the per-frame retention floor as a fraction of t_full,
    lam the co-occurrence profile decay, cost_mu the linear-vs-quadratic
    mix in the compute model, and seed feeds the bundled query embedder.
    """

    alpha: float = DEFAULT_ALPHA
    t_full: int = DEFAULT_T_FULL
    t_min_fraction: float = DEFAULT_T_MIN_FRACTION
    lam: float = DEFAULT_CENTER_DECAY
    mode: AdaptationMode = AdaptationMode.TIMESTAMP_AWARE
    cost_mu: float = DEFAULT_COST_MU
    seed: int = 0

    def __post_init__(self) -> None:
        check_open_unit_interval(self.alpha, "alpha")
        check_positive_int(self.t_full, "t_full")
        frac = check_positive_float(self.t_min_fraction, "t_min_fraction")
        if frac > 1.0:
            raise InvalidInputError(f"t_min_fraction must be <= 1, got {frac}")
        check_positive_float(self.lam, "lam")
        object.__setattr__(self, "mode", AdaptationMode(self.mode))
        check_unit_interval(self.cost_mu, "cost_mu")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise InvalidInputError(f"seed must be an integer, got {self.seed!r}")

    @property
    def t_min(self) -> int:
        return int(math.ceil(self.t_min_fraction * self.t_full))

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "t_full": self.t_full,
            "t_min_fraction": self.t_min_fraction,
            "t_min": self.t_min,
            "lambda": self.lam,
            "mode": self.mode.value,
            "cost_mu": self.cost_mu,
            "seed": int(self.seed),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PlannerConfig":
        if not isinstance(data, dict):
            raise InvalidInputError("config document must be a JSON object")
        known = {"alpha", "t_full", "t_min_fraction", "lambda", "mode", "cost_mu", "seed"}
        unknown = set(data) - known - {"t_min"}
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        for key in ("alpha", "t_full", "t_min_fraction", "cost_mu", "seed"):
            if key in data:
                kwargs[key] = data[key]
        if "lambda" in data:
            kwargs["lam"] = data["lambda"]
        if "mode" in data:
            try:
                kwargs["mode"] = AdaptationMode(data["mode"])
            except ValueError as exc:
                raise InvalidInputError(f"unknown mode {data['mode']!r}") from exc
        return cls(**kwargs)


@dataclass(frozen=True)
class PipelineParams:
    """Trained parameters a plan runs with: adaptation plus relevance."""

    adaptation: AdaptationParams = None
    relevance: RelevanceParams = field(default_factory=RelevanceParams)

    def mode_matches(self, mode: AdaptationMode) -> bool:
        if mode is AdaptationMode.TIMESTAMP_AWARE:
            return self.adaptation is None
        if mode is AdaptationMode.POSITION_EMBEDDING:
            return isinstance(self.adaptation, PositionEmbedParams)
        return isinstance(self.adaptation, AdapterParams)

    @classmethod
    def untrained(
        cls, mode: AdaptationMode, dim: int, max_frames: int = DEFAULT_MAX_FRAMES
    ) -> "PipelineParams":
        return cls(adaptation=untrained_params(mode, dim, max_frames))


@dataclass(frozen=True)
class CostEstimate:
    """Relative compute of a pruned plan against processing every token.

    token_ratio is retained_tokens/full_tokens; attention_ratio is its
    square (self-attention is quadratic in sequence length); the
    relative-FLOPs percentage mixes the two linearly with weight mu on the
    linear term.
    """

    retained_tokens: int
    full_tokens: int
    token_ratio: float
    attention_ratio: float
    relative_flops_percent: float
    mu: float


@dataclass(frozen=True)
class PruningPlan:
    """Everything the pipeline computed for one query over one clip."""

    query_id: str
    cues: tuple[TemporalCue, ...]
    weights: WeightVector
    scores: RelevanceScores
    raw_rates: np.ndarray
    rates: np.ndarray
    budgets: np.ndarray
    kept_tokens: tuple[tuple[int, ...], ...]
    cost: CostEstimate
    config: PlannerConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "raw_rates", readonly(np.array(self.raw_rates, dtype=np.float64)))
        object.__setattr__(self, "rates", readonly(np.array(self.rates, dtype=np.float64)))
        object.__setattr__(self, "budgets", readonly(np.array(self.budgets, dtype=np.int64)))

    @property
    def n_frames(self) -> int:
        return int(self.budgets.shape[0])

    def to_json_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "cues": [
                {
                    "category": cue.category.value,
                    "marker": cue.marker,
                    "marker_span": [cue.marker_span[0], cue.marker_span[1]],
                    "reference_event": cue.reference_event,
                    "source": cue.source.value,
                }
                for cue in self.cues
            ],
            "weights": self.weights.weights.tolist(),
            "l_base": self.scores.l_base.tolist(),
            "l_temp": self.scores.l_temp.tolist(),
            "raw_rates": self.raw_rates.tolist(),
            "rates": self.rates.tolist(),
            "budgets": self.budgets.tolist(),
            "kept_tokens": [list(kept) for kept in self.kept_tokens],
            "cost": {
                "retained_tokens": self.cost.retained_tokens,
                "full_tokens": self.cost.full_tokens,
                "token_ratio": self.cost.token_ratio,
                "attention_ratio": self.cost.attention_ratio,
                "relative_flops_percent": self.cost.relative_flops_percent,
                "mu": self.cost.mu,
            },
            "config": self.config.to_json_dict(),
            "version": _library_version,
        }


# =============================================================================
# Allocation primitives
# =============================================================================


def softmax(scores: np.ndarray) -> np.ndarray:
    """Numerically-stable softmax (max subtraction)."""
    shifted = scores - scores.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def allocate_rates(scores, alpha: float = DEFAULT_ALPHA) -> tuple[np.ndarray, np.ndarray]:
    """Spread pruning mass over frames: ``alpha * n * softmax(scores)``.

    Returns (raw_rates, rates) where rates clamps raw to [0, 1].  The raw
    rates always average exactly alpha; after clamping that only holds as
    an upper bound.  Higher score means a higher pruning rate here; the
    planner inverts relevance before calling this.
    """
    vec = as_float_vector(scores, "scores")
    a = check_open_unit_interval(alpha, "alpha")
    raw = a * vec.shape[0] * softmax(vec)
    return raw, np.clip(raw, 0.0, 1.0)


def token_budgets(rates, t_full: int, t_min: int) -> np.ndarray:
    """Retained tokens per frame: ``max(t_min, ceil((1 - r) * t_full))``."""
    vec = as_float_vector(rates, "rates")
    full = check_positive_int(t_full, "t_full")
    floor = check_positive_int(t_min, "t_min")
    if floor > full:
        raise InvalidInputError(f"t_min={floor} exceeds t_full={full}")
    if np.any(vec < 0.0) or np.any(vec > 1.0):
        raise InvalidInputError("rates must lie in [0, 1]")
    budgets = np.empty(vec.shape[0], dtype=np.int64)
    for i, rate in enumerate(vec):
        kept = math.ceil(round((1.0 - rate) * full, _CEIL_DECIMALS))
        budgets[i] = max(floor, kept)
    return budgets


def select_tokens(token_scores, budget: int) -> np.ndarray:
    """Indices of the ``budget`` highest-scoring tokens, ascending.

    Ties break toward the lower index, so uniform scores keep the prefix.
    """
    scores = as_float_vector(token_scores, "token_scores")
    b = check_positive_int(budget, "budget")
    if b > scores.shape[0]:
        raise InvalidInputError(
            f"budget {b} exceeds the {scores.shape[0]} available tokens"
        )
    ranked = np.argsort(-scores, kind="stable")  # stable: ties keep index order
    return np.sort(ranked[:b])


def estimate_cost(
    budgets, t_full: int, n_frames: int, mu: float = DEFAULT_COST_MU
) -> CostEstimate:
    """Relative-compute estimate for a budget vector.

    token_ratio = sum(budgets) / (n_frames * t_full); attention cost scales
    with its square; relative_flops_percent = 100 * (mu * token_ratio +
    (1 - mu) * token_ratio**2).  mu defaults to 0.5, weighting linear
    (projection/MLP) and quadratic (attention) work equally.
    """
    n = check_positive_int(n_frames, "n_frames")
    full = check_positive_int(t_full, "t_full")
    m = check_unit_interval(mu, "mu")
    vec = np.asarray(budgets)
    if vec.shape != (n,):
        raise InvalidInputError(f"budgets must have shape ({n},), got {vec.shape}")
    if np.any(vec < 0) or np.any(vec > full):
        raise InvalidInputError("budgets must lie in [0, t_full]")
    full_total = n * full
    token_ratio = float(vec.sum()) / full_total
    attention_ratio = token_ratio**2
    percent = 100.0 * (m * token_ratio + (1.0 - m) * attention_ratio)
    return CostEstimate(
        retained_tokens=int(round(float(vec.sum()))),
        full_tokens=full_total,
        token_ratio=token_ratio,
        attention_ratio=attention_ratio,
        relative_flops_percent=percent,
        mu=m,
    )


# =============================================================================
# End-to-end plan construction
# =============================================================================


def build_plan(
    query: Union[Query, str],
    embeddings: FrameEmbeddings,
    config: PlannerConfig = PlannerConfig(),
    params: Optional[PipelineParams] = None,
    *,
    query_embedding: Optional[QueryEmbedding] = None,
    token_scores: Optional[np.ndarray] = None,
    lexicon: Optional[MarkerLexicon] = None,
    use_temporal_cues: bool = True,
) -> PruningPlan:
    """Run the full pipeline for one query over one clip.

    Stages: cue extraction, temporal weight profile, embedding adaptation,
    relevance scoring, rate allocation (relevance negated so relevant
    frames prune least), integer budgets, token selection, cost estimate.

    ``query_embedding`` overrides the bundled hash embedder.  ``token_scores``
    is an optional (n_frames, t_full) matrix of per-token salience; without
    it every frame keeps its leading tokens.  ``use_temporal_cues=False``
    forces the uniform weight profile (ablation switch); cues are still
    reported.
    """
    if isinstance(query, str):
        query = Query(id="q0", text=query)
    n = embeddings.n_frames
    if params is None:
        params = PipelineParams.untrained(
            config.mode, embeddings.dim, max_frames=max(DEFAULT_MAX_FRAMES, n)
        )
    if not params.mode_matches(config.mode):
        raise InvalidInputError(
            f"params do not match mode {config.mode.value!r}"
        )

    cues = extract_cues(query, lexicon)
    if use_temporal_cues:
        weights = weights_for_cues(cues, n, config.lam)
    else:
        weights = weights_for_cues([], n, config.lam)

    adapted = adapt(embeddings, config.mode, params.adaptation)
    if query_embedding is None:
        query_embedding = embed_query(query.text, embeddings.dim, seed=config.seed)
    elif query_embedding.dim != embeddings.dim:
        raise InvalidInputError(
            f"query embedding is {query_embedding.dim}-d but frames are {embeddings.dim}-d"
        )
    l_base = base_relevance(adapted, query_embedding, params.relevance)
    scores = apply_temporal_weighting(l_base, weights)

    # most-relevant frames must keep the most tokens, so negate before the
    # softmax allocation (see module docstring)
    raw_rates, rates = allocate_rates(-scores.l_temp, config.alpha)
    budgets = token_budgets(rates, config.t_full, config.t_min)

    if token_scores is None:
        per_frame_scores = np.zeros((n, config.t_full), dtype=np.float64)
    else:
        per_frame_scores = np.asarray(token_scores, dtype=np.float64)
        if per_frame_scores.shape != (n, config.t_full):
            raise InvalidInputError(
                f"token_scores must have shape ({n}, {config.t_full}), "
                f"got {per_frame_scores.shape}"
            )
        if not np.all(np.isfinite(per_frame_scores)):
            raise InvalidInputError("token_scores contains non-finite values")
    kept = tuple(
        tuple(int(i) for i in select_tokens(per_frame_scores[f], int(budgets[f])))
        for f in range(n)
    )
    cost = estimate_cost(budgets, config.t_full, n, config.cost_mu)
    return PruningPlan(
        query_id=query.id,
        cues=tuple(cues),
        weights=weights,
        scores=scores,
        raw_rates=raw_rates,
        rates=rates,
        budgets=budgets,
        kept_tokens=kept,
        cost=cost,
        config=config,
    )
