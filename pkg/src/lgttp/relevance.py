"""Query-to-frame relevance scoring.

Base relevance for frame i is an affine map of the cosine similarity
between the (possibly adapted) frame embedding and the query embedding:

    l_base[i] = a * cos(e_i, e_q) + b        (a=1, b=0 until trained)

Temporal weighting multiplies base relevance element-wise by the cue
profile.  Frames with zero-norm embeddings score cosine 0 by convention.

The bundled query embedder is a seeded sign-hash bag of words: it exists so
the pipeline runs end to end without an external text encoder, not as a
semantic model.  Real deployments pass a precomputed query embedding.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .validation import (
    as_float_matrix,
    as_float_vector,
    check_finite_float,
    readonly,
)
from .weighting import WeightVector

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class FrameEmbeddings:
    """An (n_frames, dim) float64 matrix of per-frame embeddings."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = as_float_matrix(self.data, "frame embeddings")
        object.__setattr__(self, "data", readonly(arr))

    @property
    def n_frames(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class QueryEmbedding:
    """A finite query vector with strictly positive norm."""

    vector: np.ndarray

    def __post_init__(self) -> None:
        arr = as_float_vector(self.vector, "query embedding")
        if float(np.linalg.norm(arr)) == 0.0:
            raise InvalidInputError("query embedding must have positive norm")
        object.__setattr__(self, "vector", readonly(arr))

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class RelevanceParams:
    """Affine calibration (scale, offset) applied to cosine similarity."""

    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        check_finite_float(self.scale, "scale")
        check_finite_float(self.offset, "offset")


@dataclass(frozen=True)
class RelevanceScores:
    """Base and temporally-weighted relevance, one entry per frame."""

    l_base: np.ndarray
    l_temp: np.ndarray

    def __post_init__(self) -> None:
        base = as_float_vector(self.l_base, "l_base")
        temp = as_float_vector(self.l_temp, "l_temp")
        if base.shape != temp.shape:
            raise InvalidInputError("l_base and l_temp must have the same length")
        object.__setattr__(self, "l_base", readonly(base))
        object.__setattr__(self, "l_temp", readonly(temp))

    @property
    def n_frames(self) -> int:
        return int(self.l_base.shape[0])


def _token_bucket_and_sign(token: str, seed: int, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(
        token.encode("utf-8"),
        key=int(seed).to_bytes(8, "little", signed=True),
        digest_size=9,
    ).digest()
    bucket = int.from_bytes(digest[:8], "little") % dim
    sign = 1.0 if digest[8] & 1 else -1.0
    return bucket, sign


def embed_query(text: str, dim: int, seed: int = 0) -> QueryEmbedding:
    """Hashed bag-of-words query embedding, L2-normalized.

    Tokenizes on non-alphanumerics and lowercases, so token order does not
    matter.  Each token lands in a seed-keyed hash bucket with a +-1 sign.
    A query with no tokens, or whose token signs cancel exactly, has no
    usable direction and is rejected.
    """
    if not isinstance(text, str):
        raise InvalidInputError("query text must be a string")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InvalidInputError(f"dim must be a positive integer, got {dim!r}")
    tokens = _TOKEN.findall(text.lower())
    if not tokens:
        raise InvalidInputError("query text has no alphanumeric tokens to embed")
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        bucket, sign = _token_bucket_and_sign(token, seed, dim)
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise InvalidInputError("query tokens cancelled to a zero embedding")
    return QueryEmbedding(vec / norm)


def cosine_similarities(embeddings: FrameEmbeddings, query: QueryEmbedding) -> np.ndarray:
    """Cosine similarity per frame; zero-norm frame rows score exactly 0."""
    if embeddings.dim != query.dim:
        raise InvalidInputError(
            f"dimension mismatch: frames are {embeddings.dim}-d, query is {query.dim}-d"
        )
    matrix = embeddings.data
    row_norms = np.linalg.norm(matrix, axis=1)
    q_norm = float(np.linalg.norm(query.vector))
    dots = matrix @ query.vector
    sims = np.zeros(embeddings.n_frames, dtype=np.float64)
    nonzero = row_norms > 0.0
    sims[nonzero] = dots[nonzero] / (row_norms[nonzero] * q_norm)
    return sims


def base_relevance(
    embeddings: FrameEmbeddings,
    query: QueryEmbedding,
    params: RelevanceParams = RelevanceParams(),
) -> np.ndarray:
    """Affine-calibrated cosine relevance per frame."""
    sims = cosine_similarities(embeddings, query)
    return params.scale * sims + params.offset


def apply_temporal_weighting(l_base: np.ndarray, weights: WeightVector) -> RelevanceScores:
    """Element-wise product of base relevance with the temporal profile."""
    base = as_float_vector(l_base, "l_base")
    if base.shape[0] != weights.n_frames:
        raise InvalidInputError(
            f"l_base has {base.shape[0]} frames but weights have {weights.n_frames}"
        )
    return RelevanceScores(l_base=base, l_temp=base * weights.weights)
