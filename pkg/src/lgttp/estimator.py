"""Scikit-learn style estimator over the planning pipeline.

``TemporalTokenPruner`` wraps training (``fit``) and plan construction
(``transform`` / ``predict``) behind the usual estimator surface, so it
composes with ``get_params`` / ``set_params`` / ``clone``.  Fitting is
optional: an unfitted pruner plans with identity adaptation and the
default relevance calibration, mirroring untrained CLI planning.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .adaptation import DEFAULT_MAX_FRAMES, AdaptationMode
from .errors import InvalidInputError
from .planner import (
    DEFAULT_ALPHA,
    DEFAULT_COST_MU,
    DEFAULT_T_FULL,
    DEFAULT_T_MIN_FRACTION,
    PipelineParams,
    PlannerConfig,
    PruningPlan,
    build_plan,
)
from .relevance import FrameEmbeddings, QueryEmbedding
from .training import TrainConfig, TrainingSample, train
from .weighting import DEFAULT_CENTER_DECAY


class TemporalTokenPruner(BaseEstimator):
    """Plan per-frame token budgets from a query and frame embeddings.

    Parameters mirror the planner and trainer configuration; all are plain
    constructor arguments so scikit-learn tooling can introspect them.

    Attributes set by ``fit``: ``adaptation_params_``, ``relevance_params_``,
    ``loss_history_``, ``n_features_in_``.
    """

    def __init__(
        self,
        alpha: float = DEFAULT_ALPHA,
        t_full: int = DEFAULT_T_FULL,
        t_min_fraction: float = DEFAULT_T_MIN_FRACTION,
        lam: float = DEFAULT_CENTER_DECAY,
        mode: str = AdaptationMode.TIMESTAMP_AWARE.value,
        cost_mu: float = DEFAULT_COST_MU,
        seed: int = 0,
        learning_rate: float = 1e-4,
        weight_decay: float = 0.01,
        epochs: int = 20,
        batch_size: int = 1,
        max_frames: Optional[int] = None,
    ):
        self.alpha = alpha
        self.t_full = t_full
        self.t_min_fraction = t_min_fraction
        self.lam = lam
        self.mode = mode
        self.cost_mu = cost_mu
        self.seed = seed
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.max_frames = max_frames

    # -- configuration ----------------------------------------------------

    def _planner_config(self) -> PlannerConfig:
        return PlannerConfig(
            alpha=self.alpha,
            t_full=self.t_full,
            t_min_fraction=self.t_min_fraction,
            lam=self.lam,
            mode=AdaptationMode(self.mode),
            cost_mu=self.cost_mu,
            seed=self.seed,
        )

    def _pipeline_params(self, dim: int, n_frames: int) -> PipelineParams:
        if hasattr(self, "relevance_params_"):
            return PipelineParams(
                adaptation=self.adaptation_params_, relevance=self.relevance_params_
            )
        return PipelineParams.untrained(
            AdaptationMode(self.mode), dim, max(DEFAULT_MAX_FRAMES, n_frames)
        )

    # -- estimator surface ------------------------------------------------

    def fit(self, X: Sequence, y: Sequence) -> "TemporalTokenPruner":
        """Train adaptation and relevance parameters.

        ``X`` is a sequence of ``(frame_matrix, query_vector)`` pairs and
        ``y`` the matching sequence of binary per-frame label arrays.
        """
        if len(X) != len(y):
            raise InvalidInputError(f"X has {len(X)} samples but y has {len(y)}")
        samples = []
        for pair, labels in zip(X, y):
            try:
                matrix, query_vec = pair
            except (TypeError, ValueError) as exc:
                raise InvalidInputError(
                    "each X item must be a (frame_matrix, query_vector) pair"
                ) from exc
            samples.append(
                TrainingSample(
                    embeddings=FrameEmbeddings(np.asarray(matrix, dtype=np.float64)),
                    query=QueryEmbedding(np.asarray(query_vec, dtype=np.float64)),
                    labels=np.asarray(labels, dtype=np.float64),
                )
            )
        config = TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        adaptation, relevance, history = train(
            samples, AdaptationMode(self.mode), config, max_frames=self.max_frames
        )
        self.adaptation_params_ = adaptation
        self.relevance_params_ = relevance
        self.loss_history_ = history
        self.n_features_in_ = samples[0].embeddings.dim
        return self

    def plan(
        self,
        query_text: str,
        frame_matrix,
        query_vector=None,
    ) -> PruningPlan:
        """Build one pruning plan; the main single-clip entry point."""
        embeddings = FrameEmbeddings(np.asarray(frame_matrix, dtype=np.float64))
        query_embedding = (
            QueryEmbedding(np.asarray(query_vector, dtype=np.float64))
            if query_vector is not None
            else None
        )
        return build_plan(
            query_text,
            embeddings,
            self._planner_config(),
            self._pipeline_params(embeddings.dim, embeddings.n_frames),
            query_embedding=query_embedding,
        )

    def transform(self, X: Sequence) -> list[PruningPlan]:
        """Plans for a sequence of ``(query_text, frame_matrix[, query_vector])``."""
        plans = []
        for item in X:
            if len(item) == 2:
                plans.append(self.plan(item[0], item[1]))
            elif len(item) == 3:
                plans.append(self.plan(item[0], item[1], item[2]))
            else:
                raise InvalidInputError(
                    "each item must be (query_text, frame_matrix[, query_vector])"
                )
        return plans

    def predict(self, X: Sequence) -> list[np.ndarray]:
        """Per-frame token budgets for each item of ``X``."""
        return [plan.budgets for plan in self.transform(X)]
