"""Temporal cue extraction from natural-language queries.

A query like "what happens after the goal" carries a temporal marker
("after") plus a reference event ("the goal").  This module detects such
markers against a configurable lexicon, classifies them into the three
temporal relation categories, and extracts the reference event text that
follows each explicit marker.

Matching rules: case-insensitive, word-boundary anchored, longest match
first at each position, scanning left to right with no overlaps.  The
ambiguous single words "when" and "as" only count as markers when followed
by at least two word tokens before the next clause boundary; bare trailing
uses ("what color is the car as") are ignored.
"""

from __future__ import annotations

import re
from bisect import bisect_left
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InvalidInputError

# =============================================================================
# Core types
# =============================================================================


class CueCategory(str, Enum):
    """Temporal relation expressed by a marker."""

    PRECEDENCE = "precedence"      # relevant content comes before the event
    SUBSEQUENCE = "subsequence"    # relevant content comes after the event
    COOCCURRENCE = "cooccurrence"  # relevant content overlaps the event


class CueSource(str, Enum):
    """Whether a cue came from an explicit marker or an implicit hint."""

    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class Query:
    """A natural-language query with a stable identifier."""

    id: str
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise InvalidInputError("query text must be a non-empty string")
        if not isinstance(self.id, str) or not self.id:
            raise InvalidInputError("query id must be a non-empty string")


@dataclass(frozen=True)
class TemporalCue:
    """One detected temporal marker occurrence.

    ``marker_span`` is a half-open byte range into the UTF-8 encoding of the
    query text; the text at that range equals ``marker`` case-insensitively.
    ``reference_event`` is the trimmed event description following an
    explicit marker, absent when nothing usable follows it.
    """

    category: CueCategory
    marker: str
    marker_span: tuple[int, int]
    reference_event: Optional[str]
    source: CueSource


# =============================================================================
# Lexicon
# =============================================================================

#: Single-word markers that need a clausal continuation to count as temporal.
AMBIGUOUS_MARKERS = frozenset({"when", "as"})

#: Minimum word tokens that must follow an ambiguous marker.
_MIN_CONTINUATION_TOKENS = 2

_WORD_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)
_CLAUSE_BOUNDARY = re.compile(r"[,;.!?]")


def _normalize_phrases(entries: Mapping[str, "CueCategory | str"], which: str) -> dict[str, CueCategory]:
    out: dict[str, CueCategory] = {}
    for phrase, category in entries.items():
        if not isinstance(phrase, str) or not phrase.strip():
            raise InvalidInputError(f"{which} lexicon phrase must be a non-empty string")
        key = phrase.strip().lower()
        if not _WORD_TOKEN.search(key):
            raise InvalidInputError(f"{which} lexicon phrase {phrase!r} has no word characters")
        if key in out:
            raise InvalidInputError(f"duplicate {which} lexicon phrase {key!r}")
        try:
            out[key] = CueCategory(category)
        except ValueError as exc:
            raise InvalidInputError(
                f"unknown cue category {category!r} for phrase {key!r}"
            ) from exc
    return out


@dataclass(frozen=True)
class MarkerLexicon:
    """Phrase-to-category maps for explicit markers and implicit hints.

    Phrases are lowercased on construction; a phrase may not appear in both
    maps.  Instances are immutable and safe to share across threads.
    """

    explicit: Mapping[str, CueCategory] = field(default_factory=dict)
    implicit: Mapping[str, CueCategory] = field(default_factory=dict)

    def __post_init__(self) -> None:
        explicit = _normalize_phrases(self.explicit, "explicit")
        implicit = _normalize_phrases(self.implicit, "implicit")
        overlap = set(explicit) & set(implicit)
        if overlap:
            raise InvalidInputError(
                f"phrases present in both explicit and implicit maps: {sorted(overlap)}"
            )
        if not explicit and not implicit:
            raise InvalidInputError("lexicon must contain at least one phrase")
        object.__setattr__(self, "explicit", MappingProxyType(explicit))
        object.__setattr__(self, "implicit", MappingProxyType(implicit))


def default_lexicon() -> MarkerLexicon:
    """The built-in English marker lexicon."""
    return MarkerLexicon(
        explicit={
            # precedence: content before the reference event
            "before": CueCategory.PRECEDENCE,
            "prior to": CueCategory.PRECEDENCE,
            "until": CueCategory.PRECEDENCE,
            "by the time": CueCategory.PRECEDENCE,
            # subsequence: content after the reference event
            "after": CueCategory.SUBSEQUENCE,
            "following": CueCategory.SUBSEQUENCE,
            "once": CueCategory.SUBSEQUENCE,
            "then": CueCategory.SUBSEQUENCE,
            "subsequently": CueCategory.SUBSEQUENCE,
            # co-occurrence: content overlapping the reference event
            "during": CueCategory.COOCCURRENCE,
            "while": CueCategory.COOCCURRENCE,
            "when": CueCategory.COOCCURRENCE,
            "as": CueCategory.COOCCURRENCE,
            "throughout": CueCategory.COOCCURRENCE,
        },
        implicit={
            "beginning": CueCategory.PRECEDENCE,
            "start": CueCategory.PRECEDENCE,
            "end": CueCategory.SUBSEQUENCE,
            "finally": CueCategory.SUBSEQUENCE,
            "middle": CueCategory.COOCCURRENCE,
            "midway": CueCategory.COOCCURRENCE,
        },
    )


# =============================================================================
# Matching machinery
# =============================================================================


def _compile_phrase_pattern(phrases: Iterable[str]) -> Optional[re.Pattern]:
    # Longest phrase first so regex alternation realizes longest-match-first.
    ordered = sorted(phrases, key=lambda p: (-len(p), p))
    if not ordered:
        return None
    alternation = "|".join(re.escape(p) for p in ordered)
    return re.compile(rf"\b(?:{alternation})\b", re.IGNORECASE | re.UNICODE)


def _byte_offset_table(text: str) -> list[int]:
    # offsets[k] = byte offset of character k in the UTF-8 encoding
    offsets = [0] * (len(text) + 1)
    total = 0
    for k, ch in enumerate(text):
        offsets[k] = total
        total += len(ch.encode("utf-8"))
    offsets[len(text)] = total
    return offsets


def _byte_to_char(offsets: Sequence[int], byte_pos: int, what: str) -> int:
    idx = bisect_left(offsets, byte_pos)
    if idx == len(offsets) or offsets[idx] != byte_pos:
        raise InvalidInputError(f"{what} byte offset {byte_pos} is not a character boundary")
    return idx


def _has_clausal_continuation(text: str, char_end: int) -> bool:
    # Tokens between the marker and the next clause boundary.
    boundary = _CLAUSE_BOUNDARY.search(text, char_end)
    stop = boundary.start() if boundary else len(text)
    tokens = _WORD_TOKEN.findall(text, char_end, stop)
    return len(tokens) >= _MIN_CONTINUATION_TOKENS


def _match_phrases(
    query: Query, entries: Mapping[str, CueCategory], *, apply_ambiguity_rule: bool
) -> list[tuple[int, int, str, CueCategory]]:
    """Char-span matches (start, end, canonical phrase, category), in order."""
    pattern = _compile_phrase_pattern(entries.keys())
    if pattern is None:
        return []
    text = query.text
    matches: list[tuple[int, int, str, CueCategory]] = []
    pos = 0
    while True:
        m = pattern.search(text, pos)
        if m is None:
            break
        phrase = m.group(0).lower()
        pos = m.end()  # consume the span whether or not the match is kept
        if apply_ambiguity_rule and phrase in AMBIGUOUS_MARKERS:
            if not _has_clausal_continuation(text, m.end()):
                continue
        matches.append((m.start(), m.end(), phrase, entries[phrase]))
    return matches


# =============================================================================
# Public operations
# =============================================================================


def detect_markers(query: Query, lexicon: Optional[MarkerLexicon] = None) -> list[TemporalCue]:
    """Detect explicit temporal markers in the query text.

    Returns cues ordered by span start with non-overlapping byte spans, each
    carrying the reference event that follows the marker, when present.
    """
    lex = lexicon if lexicon is not None else default_lexicon()
    matches = _match_phrases(query, lex.explicit, apply_ambiguity_rule=True)
    offsets = _byte_offset_table(query.text)
    cues: list[TemporalCue] = []
    for idx, (start, end, phrase, category) in enumerate(matches):
        next_start = matches[idx + 1][0] if idx + 1 < len(matches) else None
        ref = _reference_event_from_chars(query.text, end, next_start)
        cues.append(
            TemporalCue(
                category=category,
                marker=phrase,
                marker_span=(offsets[start], offsets[end]),
                reference_event=ref,
                source=CueSource.EXPLICIT,
            )
        )
    return cues


def _reference_event_from_chars(
    text: str, char_end: int, next_marker_start: Optional[int]
) -> Optional[str]:
    stop = len(text)
    boundary = _CLAUSE_BOUNDARY.search(text, char_end)
    if boundary is not None:
        stop = boundary.start()
    if next_marker_start is not None:
        stop = min(stop, next_marker_start)
    ref = text[char_end:stop].strip()
    return ref if ref else None


def extract_reference_event(
    query: Query,
    cue_span: tuple[int, int],
    lexicon: Optional[MarkerLexicon] = None,
) -> Optional[str]:
    """Reference event text following the marker at ``cue_span`` (byte range).

    The event runs from the end of the marker to the first clause boundary
    (comma, semicolon, or sentence-ending punctuation), the start of the
    next detected marker when a lexicon is supplied, or the end of the text.
    Returns None when nothing but whitespace remains.
    """
    offsets = _byte_offset_table(query.text)
    start_b, end_b = cue_span
    if not (0 <= start_b < end_b <= offsets[-1]):
        raise InvalidInputError(f"cue span {cue_span!r} out of bounds for query text")
    char_end = _byte_to_char(offsets, end_b, "cue span end")
    char_start = _byte_to_char(offsets, start_b, "cue span start")

    next_marker_start: Optional[int] = None
    if lexicon is not None:
        for start, _end, _phrase, _cat in _match_phrases(
            query, lexicon.explicit, apply_ambiguity_rule=True
        ):
            if start >= char_end and (next_marker_start is None or start < next_marker_start):
                next_marker_start = start
    del char_start
    return _reference_event_from_chars(query.text, char_end, next_marker_start)


def resolve_implicit_cues(
    query: Query, lexicon: Optional[MarkerLexicon] = None
) -> list[TemporalCue]:
    """Detect implicit positional hints ("beginning", "end", ...).

    Implicit cues never carry a reference event; they map a positional noun
    straight to a relation category.
    """
    lex = lexicon if lexicon is not None else default_lexicon()
    matches = _match_phrases(query, lex.implicit, apply_ambiguity_rule=False)
    offsets = _byte_offset_table(query.text)
    return [
        TemporalCue(
            category=category,
            marker=phrase,
            marker_span=(offsets[start], offsets[end]),
            reference_event=None,
            source=CueSource.IMPLICIT,
        )
        for start, end, phrase, category in matches
    ]


def extract_cues(query: Query, lexicon: Optional[MarkerLexicon] = None) -> list[TemporalCue]:
    """All cues for a query: explicit markers plus implicit hints.

    Both kinds are emitted; duplicates are preserved (two occurrences of
    "after" yield two cues, and downstream weighting compounds them).
    Ordered by span start, explicit before implicit on exact ties.
    """
    explicit = detect_markers(query, lexicon)
    implicit = resolve_implicit_cues(query, lexicon)
    return sorted(explicit + implicit, key=lambda c: (c.marker_span[0], c.source.value))
