"""Temporal adaptation of frame embeddings.

Three modes, all mapping an (n_frames, dim) matrix to an equally-shaped
matrix that downstream relevance scoring consumes:

* timestamp: identity.  Frame order itself carries the temporal signal and
  the raw embeddings pass through untouched.
* position: adds a learned linear function of normalized frame position,
  ``e_i + w_p * (i / n) + b_p`` with 1-based i.
* adapter: adds the output of a small per-position network with a residual
  connection: an embedding-table lookup, layer norm, a two-layer MLP with
  exact GELU, and a learned output scale.

With all-zero parameters every mode reduces exactly to the identity, which
keeps untrained planning well-defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.special import erf

from .errors import InvalidInputError
from .relevance import FrameEmbeddings
from .validation import (
    as_float_matrix,
    as_float_vector,
    check_finite_float,
    check_positive_int,
    readonly,
)

DEFAULT_DIM = 768
DEFAULT_MAX_FRAMES = 128
LAYERNORM_EPS = 1e-5
ADAPTER_SCALE_INIT = 0.1
EMBED_TABLE_STD = 0.02


class AdaptationMode(str, Enum):
    TIMESTAMP_AWARE = "timestamp"
    POSITION_EMBEDDING = "position"
    LEARNED_ADAPTER = "adapter"


@dataclass(frozen=True)
class PositionEmbedParams:
    """Linear position encoding: per-dimension slope and offset."""

    w_p: np.ndarray
    b_p: np.ndarray

    def __post_init__(self) -> None:
        w = as_float_vector(self.w_p, "w_p")
        b = as_float_vector(self.b_p, "b_p")
        if w.shape != b.shape:
            raise InvalidInputError("w_p and b_p must have the same length")
        object.__setattr__(self, "w_p", readonly(w))
        object.__setattr__(self, "b_p", readonly(b))

    @property
    def dim(self) -> int:
        return int(self.w_p.shape[0])


@dataclass(frozen=True)
class AdapterParams:
    """Per-position residual adapter: embedding table, layer norm, 2-layer MLP."""

    embed_table: np.ndarray  # (max_frames, dim)
    mlp_w1: np.ndarray       # (dim, dim)
    mlp_b1: np.ndarray       # (dim,)
    mlp_w2: np.ndarray       # (dim, dim)
    mlp_b2: np.ndarray       # (dim,)
    ln_gain: np.ndarray      # (dim,)
    ln_bias: np.ndarray      # (dim,)
    scale: float

    def __post_init__(self) -> None:
        table = as_float_matrix(self.embed_table, "embed_table")
        dim = table.shape[1]
        w1 = as_float_matrix(self.mlp_w1, "mlp_w1")
        w2 = as_float_matrix(self.mlp_w2, "mlp_w2")
        if w1.shape != (dim, dim) or w2.shape != (dim, dim):
            raise InvalidInputError("mlp weight matrices must be (dim, dim)")
        vectors = {}
        for name in ("mlp_b1", "mlp_b2", "ln_gain", "ln_bias"):
            vec = as_float_vector(getattr(self, name), name)
            if vec.shape != (dim,):
                raise InvalidInputError(f"{name} must have length dim={dim}")
            vectors[name] = vec
        check_finite_float(self.scale, "scale")
        object.__setattr__(self, "embed_table", readonly(table))
        object.__setattr__(self, "mlp_w1", readonly(w1))
        object.__setattr__(self, "mlp_w2", readonly(w2))
        for name, vec in vectors.items():
            object.__setattr__(self, name, readonly(vec))

    @property
    def max_frames(self) -> int:
        return int(self.embed_table.shape[0])

    @property
    def dim(self) -> int:
        return int(self.embed_table.shape[1])


AdaptationParams = Union[PositionEmbedParams, AdapterParams, None]


# =============================================================================
# Forward computations
# =============================================================================


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact GELU: x * Phi(x) with the Gaussian CDF."""
    x = np.asarray(x, dtype=np.float64)
    return x * 0.5 * (1.0 + erf(x / np.sqrt(2.0)))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    """Derivative of exact GELU: Phi(x) + x * phi(x)."""
    x = np.asarray(x, dtype=np.float64)
    cdf = 0.5 * (1.0 + erf(x / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return cdf + x * pdf


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Row-wise layer norm with biased variance and eps 1e-5."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return gain * (x - mean) / np.sqrt(var + LAYERNORM_EPS) + bias


def adapter_forward(params: AdapterParams, frame_index: int) -> np.ndarray:
    """Adapter network output for one 0-based frame position."""
    if not isinstance(frame_index, (int, np.integer)) or isinstance(frame_index, bool):
        raise InvalidInputError(f"frame_index must be an integer, got {frame_index!r}")
    if not 0 <= frame_index < params.max_frames:
        raise InvalidInputError(
            f"frame_index {frame_index} outside table of {params.max_frames} positions"
        )
    return _adapter_outputs(params, int(frame_index) + 1)[frame_index]


def _adapter_outputs(params: AdapterParams, n_frames: int) -> np.ndarray:
    """Adapter outputs for positions 0..n_frames-1, shape (n_frames, dim)."""
    h0 = params.embed_table[:n_frames]
    h1 = layer_norm(h0, params.ln_gain, params.ln_bias)
    h2 = gelu(h1 @ params.mlp_w1 + params.mlp_b1)
    h3 = h2 @ params.mlp_w2 + params.mlp_b2
    return params.scale * h3


def adapt_timestamp_aware(embeddings: FrameEmbeddings) -> FrameEmbeddings:
    """Identity adaptation: frame order already encodes time."""
    return embeddings


def adapt_position_embedding(
    embeddings: FrameEmbeddings, params: PositionEmbedParams
) -> FrameEmbeddings:
    """Add ``w_p * (i / n) + b_p`` to frame i (1-based)."""
    if params.dim != embeddings.dim:
        raise InvalidInputError(
            f"position params are {params.dim}-d but embeddings are {embeddings.dim}-d"
        )
    n = embeddings.n_frames
    t = np.arange(1, n + 1, dtype=np.float64)[:, None] / n
    return FrameEmbeddings(embeddings.data + t * params.w_p + params.b_p)


def adapt_learned(embeddings: FrameEmbeddings, params: AdapterParams) -> FrameEmbeddings:
    """Residual adapter: frame i gains the network output for position i."""
    if params.dim != embeddings.dim:
        raise InvalidInputError(
            f"adapter params are {params.dim}-d but embeddings are {embeddings.dim}-d"
        )
    if embeddings.n_frames > params.max_frames:
        raise InvalidInputError(
            f"{embeddings.n_frames} frames exceed the adapter's "
            f"{params.max_frames}-position table"
        )
    return FrameEmbeddings(embeddings.data + _adapter_outputs(params, embeddings.n_frames))


def adapt(
    embeddings: FrameEmbeddings,
    mode: AdaptationMode,
    params: AdaptationParams = None,
) -> FrameEmbeddings:
    """Dispatch to the mode's adaptation; timestamp mode ignores params."""
    mode = AdaptationMode(mode)
    if mode is AdaptationMode.TIMESTAMP_AWARE:
        return adapt_timestamp_aware(embeddings)
    if mode is AdaptationMode.POSITION_EMBEDDING:
        if not isinstance(params, PositionEmbedParams):
            raise InvalidInputError("position mode requires PositionEmbedParams")
        return adapt_position_embedding(embeddings, params)
    if not isinstance(params, AdapterParams):
        raise InvalidInputError("adapter mode requires AdapterParams")
    return adapt_learned(embeddings, params)


# =============================================================================
# Initialization
# =============================================================================


def _xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_adapter(
    dim: int = DEFAULT_DIM,
    max_frames: int = DEFAULT_MAX_FRAMES,
    seed: int = 0,
) -> AdapterParams:
    """Seed-deterministic adapter init.

    Embedding table draws N(0, 0.02); the MLP weights draw Xavier-uniform;
    biases start at zero, layer-norm affine at identity, output scale at
    0.1.  Draw order is fixed: table, then mlp_w1, then mlp_w2.
    """
    d = check_positive_int(dim, "dim")
    m = check_positive_int(max_frames, "max_frames")
    rng = np.random.default_rng(seed)
    table = rng.normal(0.0, EMBED_TABLE_STD, size=(m, d))
    w1 = _xavier_uniform(rng, d, d, (d, d))
    w2 = _xavier_uniform(rng, d, d, (d, d))
    return AdapterParams(
        embed_table=table,
        mlp_w1=w1,
        mlp_b1=np.zeros(d),
        mlp_w2=w2,
        mlp_b2=np.zeros(d),
        ln_gain=np.ones(d),
        ln_bias=np.zeros(d),
        scale=ADAPTER_SCALE_INIT,
    )


def init_position(dim: int = DEFAULT_DIM, seed: int = 0) -> PositionEmbedParams:
    """Seed-deterministic position-encoding init: Xavier slope, zero offset."""
    d = check_positive_int(dim, "dim")
    rng = np.random.default_rng(seed)
    return PositionEmbedParams(
        w_p=_xavier_uniform(rng, 1, d, (d,)),
        b_p=np.zeros(d),
    )


def zero_position(dim: int) -> PositionEmbedParams:
    """All-zero position params: adaptation is exactly the identity."""
    d = check_positive_int(dim, "dim")
    return PositionEmbedParams(w_p=np.zeros(d), b_p=np.zeros(d))


def zero_adapter(dim: int, max_frames: int = DEFAULT_MAX_FRAMES) -> AdapterParams:
    """All-zero adapter params: adaptation is exactly the identity."""
    d = check_positive_int(dim, "dim")
    m = check_positive_int(max_frames, "max_frames")
    return AdapterParams(
        embed_table=np.zeros((m, d)),
        mlp_w1=np.zeros((d, d)),
        mlp_b1=np.zeros(d),
        mlp_w2=np.zeros((d, d)),
        mlp_b2=np.zeros(d),
        ln_gain=np.zeros(d),
        ln_bias=np.zeros(d),
        scale=0.0,
    )


def untrained_params(
    mode: AdaptationMode, dim: int, max_frames: int = DEFAULT_MAX_FRAMES
) -> AdaptationParams:
    """Identity-adaptation parameters for a mode, for planning before training."""
    mode = AdaptationMode(mode)
    if mode is AdaptationMode.TIMESTAMP_AWARE:
        return None
    if mode is AdaptationMode.POSITION_EMBEDDING:
        return zero_position(dim)
    return zero_adapter(dim, max_frames)
