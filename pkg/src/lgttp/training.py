"""Training and gradient verification for the adaptation modes.

The trainable objective is mean squared error between sigmoid(l_base) and
binary per-frame relevance labels; the relevance calibration (scale,
offset) trains jointly with the mode's adaptation parameters.  Updates use
adaptive moment estimation with decoupled weight decay (beta1=0.9,
beta2=0.999, eps=1e-8), the dataset is reshuffled every epoch from the run
seed, and the whole procedure is bit-reproducible given (seed, dataset).

All gradients are hand-derived and verified against central finite
differences by ``grad_check``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .adaptation import (
    LAYERNORM_EPS,
    AdaptationMode,
    AdaptationParams,
    AdapterParams,
    PositionEmbedParams,
    gelu,
    gelu_grad,
    init_adapter,
    init_position,
)
from .errors import InvalidInputError
from .relevance import FrameEmbeddings, QueryEmbedding, RelevanceParams
from .validation import (
    check_non_negative_int,
    check_positive_float,
    check_positive_int,
    readonly,
)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    epochs: int = 20
    batch_size: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        check_positive_float(self.learning_rate, "learning_rate")
        if not np.isfinite(self.weight_decay) or self.weight_decay < 0:
            raise InvalidInputError(f"weight_decay must be >= 0, got {self.weight_decay}")
        check_positive_int(self.epochs, "epochs")
        check_positive_int(self.batch_size, "batch_size")
        check_non_negative_int(abs(int(self.seed)), "seed")


@dataclass(frozen=True)
class TrainingSample:
    """One clip: frame embeddings, the query embedding, binary frame labels."""

    embeddings: FrameEmbeddings
    query: QueryEmbedding
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.float64)
        if labels.shape != (self.embeddings.n_frames,):
            raise InvalidInputError(
                f"labels must have shape ({self.embeddings.n_frames},), got {labels.shape}"
            )
        if not np.all((labels == 0.0) | (labels == 1.0)):
            raise InvalidInputError("labels must be binary (0 or 1)")
        if self.embeddings.dim != self.query.dim:
            raise InvalidInputError("sample embeddings and query dimensions differ")
        object.__setattr__(self, "labels", readonly(labels))


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


# =============================================================================
# Parameter trees: name -> writable float64 array
# =============================================================================


def params_to_tree(
    mode: AdaptationMode,
    adaptation: AdaptationParams,
    relevance: RelevanceParams,
) -> dict[str, np.ndarray]:
    tree: dict[str, np.ndarray] = {}
    if mode is AdaptationMode.POSITION_EMBEDDING:
        assert isinstance(adaptation, PositionEmbedParams)
        tree["pos_w"] = np.array(adaptation.w_p)
        tree["pos_b"] = np.array(adaptation.b_p)
    elif mode is AdaptationMode.LEARNED_ADAPTER:
        assert isinstance(adaptation, AdapterParams)
        tree["embed_table"] = np.array(adaptation.embed_table)
        tree["mlp_w1"] = np.array(adaptation.mlp_w1)
        tree["mlp_b1"] = np.array(adaptation.mlp_b1)
        tree["mlp_w2"] = np.array(adaptation.mlp_w2)
        tree["mlp_b2"] = np.array(adaptation.mlp_b2)
        tree["ln_gain"] = np.array(adaptation.ln_gain)
        tree["ln_bias"] = np.array(adaptation.ln_bias)
        tree["scale"] = np.array([adaptation.scale])
    tree["rel_scale"] = np.array([relevance.scale])
    tree["rel_offset"] = np.array([relevance.offset])
    return tree


def tree_to_params(
    mode: AdaptationMode, tree: dict[str, np.ndarray]
) -> tuple[AdaptationParams, RelevanceParams]:
    relevance = RelevanceParams(
        scale=float(tree["rel_scale"][0]), offset=float(tree["rel_offset"][0])
    )
    if mode is AdaptationMode.TIMESTAMP_AWARE:
        return None, relevance
    if mode is AdaptationMode.POSITION_EMBEDDING:
        return PositionEmbedParams(w_p=tree["pos_w"], b_p=tree["pos_b"]), relevance
    adapter = AdapterParams(
        embed_table=tree["embed_table"],
        mlp_w1=tree["mlp_w1"],
        mlp_b1=tree["mlp_b1"],
        mlp_w2=tree["mlp_w2"],
        mlp_b2=tree["mlp_b2"],
        ln_gain=tree["ln_gain"],
        ln_bias=tree["ln_bias"],
        scale=float(tree["scale"][0]),
    )
    return adapter, relevance


# =============================================================================
# Forward / backward
# =============================================================================


def _sample_loss_and_grads(
    tree: dict[str, np.ndarray],
    mode: AdaptationMode,
    sample: TrainingSample,
    *,
    want_grads: bool = True,
) -> tuple[float, Optional[dict[str, np.ndarray]]]:
    """Loss (and gradients) of one sample under the current parameters."""
    e = sample.embeddings.data
    n, d = e.shape
    q = sample.query.vector
    y = sample.labels

    # --- adaptation forward, keeping intermediates for the backward pass
    if mode is AdaptationMode.LEARNED_ADAPTER:
        table = tree["embed_table"]
        if n > table.shape[0]:
            raise InvalidInputError(
                f"{n} frames exceed the adapter's {table.shape[0]}-position table"
            )
        h0 = table[:n]
        mean = h0.mean(axis=1, keepdims=True)
        var = h0.var(axis=1, keepdims=True)
        sigma = np.sqrt(var + LAYERNORM_EPS)
        xhat = (h0 - mean) / sigma
        h1 = tree["ln_gain"] * xhat + tree["ln_bias"]
        z1 = h1 @ tree["mlp_w1"] + tree["mlp_b1"]
        h2 = gelu(z1)
        z2 = h2 @ tree["mlp_w2"] + tree["mlp_b2"]
        scale = float(tree["scale"][0])
        v = e + scale * z2
    elif mode is AdaptationMode.POSITION_EMBEDDING:
        t = (np.arange(1, n + 1, dtype=np.float64) / n)[:, None]
        v = e + t * tree["pos_w"] + tree["pos_b"]
    else:
        v = e

    # --- relevance forward
    q_norm = float(np.linalg.norm(q))
    u = q / q_norm
    v_norms = np.linalg.norm(v, axis=1)
    nonzero = v_norms > 0.0
    cos = np.zeros(n, dtype=np.float64)
    cos[nonzero] = (v[nonzero] @ u) / v_norms[nonzero]
    a = float(tree["rel_scale"][0])
    b = float(tree["rel_offset"][0])
    logits = a * cos + b
    p = sigmoid(logits)
    residual = p - y
    loss = float(np.mean(residual**2))
    if not want_grads:
        return loss, None

    # --- backward
    grads = {name: np.zeros_like(arr) for name, arr in tree.items()}
    dlogits = (2.0 / n) * residual * p * (1.0 - p)
    grads["rel_scale"][0] = float(dlogits @ cos)
    grads["rel_offset"][0] = float(np.sum(dlogits))
    dcos = a * dlogits

    # d cos / d v = (u - cos * v_hat) / ||v||, zero for zero-norm rows
    dv = np.zeros_like(v)
    vn = v_norms[nonzero][:, None]
    vhat = v[nonzero] / vn
    dv[nonzero] = dcos[nonzero][:, None] * (u[None, :] - cos[nonzero][:, None] * vhat) / vn

    if mode is AdaptationMode.POSITION_EMBEDDING:
        t = np.arange(1, n + 1, dtype=np.float64) / n
        grads["pos_w"][:] = t @ dv
        grads["pos_b"][:] = dv.sum(axis=0)
    elif mode is AdaptationMode.LEARNED_ADAPTER:
        dz2 = scale * dv
        grads["scale"][0] = float(np.sum(dv * z2))
        grads["mlp_w2"][:] = h2.T @ dz2
        grads["mlp_b2"][:] = dz2.sum(axis=0)
        dh2 = dz2 @ tree["mlp_w2"].T
        dz1 = dh2 * gelu_grad(z1)
        grads["mlp_w1"][:] = h1.T @ dz1
        grads["mlp_b1"][:] = dz1.sum(axis=0)
        dh1 = dz1 @ tree["mlp_w1"].T
        grads["ln_gain"][:] = (dh1 * xhat).sum(axis=0)
        grads["ln_bias"][:] = dh1.sum(axis=0)
        dxhat = dh1 * tree["ln_gain"]
        dh0 = (
            dxhat
            - dxhat.mean(axis=1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
        ) / sigma
        grads["embed_table"][:n] = dh0
    return loss, grads


def _batch_loss_and_grads(
    tree: dict[str, np.ndarray],
    mode: AdaptationMode,
    batch: Sequence[TrainingSample],
) -> tuple[float, dict[str, np.ndarray]]:
    total_loss = 0.0
    total_grads = {name: np.zeros_like(arr) for name, arr in tree.items()}
    for sample in batch:
        loss, grads = _sample_loss_and_grads(tree, mode, sample)
        assert grads is not None
        total_loss += loss
        for name in total_grads:
            total_grads[name] += grads[name]
    scale = 1.0 / len(batch)
    for name in total_grads:
        total_grads[name] *= scale
    return total_loss * scale, total_grads


def dataset_loss(
    tree: dict[str, np.ndarray],
    mode: AdaptationMode,
    samples: Sequence[TrainingSample],
) -> float:
    """Mean per-sample loss over the whole dataset, no gradients."""
    total = 0.0
    for sample in samples:
        loss, _ = _sample_loss_and_grads(tree, mode, sample, want_grads=False)
        total += loss
    return total / len(samples)


# =============================================================================
# Optimizer
# =============================================================================


@dataclass
class AdamW:
    """Adaptive moments with decoupled weight decay, applied to a param tree."""

    learning_rate: float
    weight_decay: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    _step: int = 0
    _m: dict[str, np.ndarray] = field(default_factory=dict)
    _v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, tree: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self._step += 1
        t = self._step
        for name, param in tree.items():
            g = grads[name]
            if name not in self._m:
                self._m[name] = np.zeros_like(param)
                self._v[name] = np.zeros_like(param)
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            # decoupled decay: shrink the parameter, not the gradient
            param -= self.learning_rate * self.weight_decay * param
            param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


# =============================================================================
# Training loop
# =============================================================================


def train(
    samples: Sequence[TrainingSample],
    mode: AdaptationMode,
    config: TrainConfig = TrainConfig(),
    *,
    max_frames: Optional[int] = None,
) -> tuple[AdaptationParams, RelevanceParams, list[float]]:
    """Fit a mode's parameters on labelled samples.

    Returns the trained adaptation parameters (None in timestamp mode), the
    trained relevance calibration, and the loss history: entry 0 is the
    full-dataset loss before any update, followed by one full-dataset
    evaluation after each epoch.
    """
    mode = AdaptationMode(mode)
    if len(samples) == 0:
        raise InvalidInputError("training needs at least one sample")
    dim = samples[0].embeddings.dim
    longest = max(s.embeddings.n_frames for s in samples)
    for s in samples:
        if s.embeddings.dim != dim:
            raise InvalidInputError("all samples must share the embedding dimension")
    if max_frames is None:
        max_frames = longest
    elif max_frames < longest:
        raise InvalidInputError(
            f"max_frames={max_frames} is below the longest sample ({longest} frames)"
        )

    if mode is AdaptationMode.POSITION_EMBEDDING:
        adaptation: AdaptationParams = init_position(dim, seed=config.seed)
    elif mode is AdaptationMode.LEARNED_ADAPTER:
        adaptation = init_adapter(dim, max_frames, seed=config.seed)
    else:
        adaptation = None
    tree = params_to_tree(mode, adaptation, RelevanceParams())

    optimizer = AdamW(config.learning_rate, config.weight_decay)
    rng = np.random.default_rng(config.seed)
    history = [dataset_loss(tree, mode, samples)]
    for _ in range(config.epochs):
        order = rng.permutation(len(samples))
        for start in range(0, len(order), config.batch_size):
            batch = [samples[i] for i in order[start : start + config.batch_size]]
            _, grads = _batch_loss_and_grads(tree, mode, batch)
            optimizer.step(tree, grads)
        history.append(dataset_loss(tree, mode, samples))
    adaptation_out, relevance_out = tree_to_params(mode, tree)
    return adaptation_out, relevance_out, history


# =============================================================================
# Gradient verification
# =============================================================================

#: Tensors larger than this get a seeded random coordinate subset.
_FULL_SWEEP_LIMIT = 200


def grad_check(
    adaptation: AdaptationParams,
    sample: TrainingSample,
    epsilon: float = 1e-5,
    *,
    relevance: RelevanceParams = RelevanceParams(),
    seed: int = 0,
    corruption: float = 0.0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Every coordinate of every tensor is checked; tensors with more than 200
    elements are checked on a seeded random subset of 200 coordinates.  The
    relative error uses max(|finite difference|, |analytic|, 1e-8) as the
    denominator.  ``corruption`` is a self-test hook: it is added to the
    first analytic coordinate so detector sensitivity can be exercised.
    """
    check_positive_float(epsilon, "epsilon")
    if isinstance(adaptation, AdapterParams):
        mode = AdaptationMode.LEARNED_ADAPTER
    elif isinstance(adaptation, PositionEmbedParams):
        mode = AdaptationMode.POSITION_EMBEDDING
    elif adaptation is None:
        mode = AdaptationMode.TIMESTAMP_AWARE
    else:
        raise InvalidInputError(f"unrecognized adaptation params: {type(adaptation)!r}")

    tree = params_to_tree(mode, adaptation, relevance)
    _, analytic = _sample_loss_and_grads(tree, mode, sample)
    assert analytic is not None

    rng = np.random.default_rng(seed)
    first = True
    max_rel_err = 0.0
    for name in tree:
        param = tree[name]
        flat = param.reshape(-1)
        size = flat.shape[0]
        if size > _FULL_SWEEP_LIMIT:
            coords = np.sort(rng.choice(size, size=_FULL_SWEEP_LIMIT, replace=False))
        else:
            coords = np.arange(size)
        an_flat = analytic[name].reshape(-1)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + epsilon
            loss_plus, _ = _sample_loss_and_grads(tree, mode, sample, want_grads=False)
            flat[idx] = original - epsilon
            loss_minus, _ = _sample_loss_and_grads(tree, mode, sample, want_grads=False)
            flat[idx] = original
            fd = (loss_plus - loss_minus) / (2.0 * epsilon)
            an = float(an_flat[idx])
            if first:
                an += corruption
                first = False
            rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
            if rel > max_rel_err:
                max_rel_err = rel
    return max_rel_err
