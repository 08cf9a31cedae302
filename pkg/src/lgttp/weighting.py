"""Per-frame temporal weight profiles.

Each cue category maps to a weight profile over the frame axis:

* precedence:    linear ramp down, 1.5 at the first frame to 0.5 at the last
* subsequence:   linear ramp up, 0.5 at the first frame to 1.5 at the last
* co-occurrence: exp(-lam * |t - 0.5|) over normalized time t, peaking at the
  clip center (lam defaults to 2.0, so the endpoints sit at exp(-1))
* uniform:       all ones, used when a query carries no temporal cues

Profiles from multiple cues combine by element-wise product followed by a
rescale to mean 1, so the overall token budget stays calibrated no matter
how many cues fired.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .parsing import CueCategory, TemporalCue
from .validation import check_positive_float, check_positive_int, readonly

DEFAULT_CENTER_DECAY = 2.0  # lam in the co-occurrence profile


@dataclass(frozen=True)
class WeightVector:
    """A strictly positive per-frame weight profile.

    ``lam`` records the decay constant for co-occurrence profiles and is
    None for the other profiles.  The wrapped array is read-only.
    """

    weights: np.ndarray
    lam: Optional[float] = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.weights, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidInputError("weights must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)) or not np.all(arr > 0.0):
            raise InvalidInputError("weights must be finite and strictly positive")
        if self.lam is not None:
            check_positive_float(self.lam, "lam")
        object.__setattr__(self, "weights", readonly(np.array(arr, copy=True)))

    @property
    def n_frames(self) -> int:
        return int(self.weights.shape[0])


def _normalized_positions(n_frames: int) -> np.ndarray:
    # (i - 1) / (N - 1) for 1-based i; the single-frame clip sits at 0
    if n_frames == 1:
        return np.zeros(1)
    return np.arange(n_frames, dtype=np.float64) / (n_frames - 1)


def precedence_weights(n_frames: int) -> WeightVector:
    """Ramp from 1.5 down to 0.5; a single frame gets weight 1.0."""
    n = check_positive_int(n_frames, "n_frames")
    if n == 1:
        return WeightVector(np.ones(1))
    return WeightVector(1.5 - _normalized_positions(n))


def subsequence_weights(n_frames: int) -> WeightVector:
    """Ramp from 0.5 up to 1.5; a single frame gets weight 1.0."""
    n = check_positive_int(n_frames, "n_frames")
    if n == 1:
        return WeightVector(np.ones(1))
    return WeightVector(0.5 + _normalized_positions(n))


def cooccurrence_weights(n_frames: int, lam: float = DEFAULT_CENTER_DECAY) -> WeightVector:
    """Exponential bump centered mid-clip; a single frame gets weight 1.0."""
    n = check_positive_int(n_frames, "n_frames")
    decay = check_positive_float(lam, "lam")
    if n == 1:
        return WeightVector(np.ones(1), lam=decay)
    t = _normalized_positions(n)
    return WeightVector(np.exp(-decay * np.abs(t - 0.5)), lam=decay)


def uniform_weights(n_frames: int) -> WeightVector:
    """All-ones profile for queries without temporal cues."""
    n = check_positive_int(n_frames, "n_frames")
    return WeightVector(np.ones(n))


def combine_weights(parts: Sequence[WeightVector]) -> WeightVector:
    """Element-wise product of profiles, rescaled to mean exactly 1.

    The rescale keeps combined profiles budget-neutral: downstream token
    allocation sees the same total mass regardless of cue count.
    """
    if len(parts) == 0:
        raise InvalidInputError("combine_weights needs at least one profile")
    n = parts[0].n_frames
    for part in parts[1:]:
        if part.n_frames != n:
            raise InvalidInputError(
                f"profile lengths differ: {part.n_frames} vs {n}"
            )
    product = np.ones(n, dtype=np.float64)
    for part in parts:
        product = product * part.weights
    total = float(product.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise InvalidInputError("combined profile has non-positive mass")
    return WeightVector(product * (n / total))


def weights_for_cues(
    cues: Sequence[TemporalCue],
    n_frames: int,
    lam: float = DEFAULT_CENTER_DECAY,
) -> WeightVector:
    """Weight profile for a query's full cue list.

    No cues means the uniform profile.  Each cue contributes its category's
    profile; duplicates compound through the product, sharpening the ramp.
    """
    n = check_positive_int(n_frames, "n_frames")
    if len(cues) == 0:
        return uniform_weights(n)
    profiles: list[WeightVector] = []
    for cue in cues:
        if cue.category is CueCategory.PRECEDENCE:
            profiles.append(precedence_weights(n))
        elif cue.category is CueCategory.SUBSEQUENCE:
            profiles.append(subsequence_weights(n))
        elif cue.category is CueCategory.COOCCURRENCE:
            profiles.append(cooccurrence_weights(n, lam))
        else:  # pragma: no cover - enum is closed
            raise InvalidInputError(f"unknown cue category: {cue.category!r}")
    return combine_weights(profiles)
