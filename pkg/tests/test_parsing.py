"""Temporal cue extraction behavior."""

import pytest

from lgttp import (
    CueCategory,
    CueSource,
    InvalidInputError,
    MarkerLexicon,
    Query,
    default_lexicon,
    detect_markers,
    extract_cues,
    extract_reference_event,
    resolve_implicit_cues,
)


def q(text: str) -> Query:
    return Query(id="t", text=text)


class TestQueryType:
    def test_rejects_empty_text(self):
        with pytest.raises(InvalidInputError):
            Query(id="t", text="")

    def test_rejects_whitespace_text(self):
        with pytest.raises(InvalidInputError):
            Query(id="t", text="   \t ")

    def test_rejects_empty_id(self):
        with pytest.raises(InvalidInputError):
            Query(id="", text="fine")


class TestDetectMarkers:
    def test_single_subsequence_marker_with_reference_event(self):
        cues = detect_markers(q("what happens after talking to the coach"))
        assert len(cues) == 1
        cue = cues[0]
        assert cue.category is CueCategory.SUBSEQUENCE
        assert cue.marker == "after"
        assert cue.reference_event == "talking to the coach"
        assert cue.source is CueSource.EXPLICIT

    def test_two_markers_with_comma_bounded_events(self):
        cues = detect_markers(q("before the speech, during the applause"))
        assert [c.marker for c in cues] == ["before", "during"]
        assert [c.category for c in cues] == [
            CueCategory.PRECEDENCE,
            CueCategory.COOCCURRENCE,
        ]
        assert [c.reference_event for c in cues] == ["the speech", "the applause"]

    def test_no_markers_yields_empty_list(self):
        assert detect_markers(q("a red car drives down the street")) == []

    def test_trailing_marker_has_no_reference_event(self):
        cues = detect_markers(q("show events after"))
        assert len(cues) == 1
        assert cues[0].reference_event is None

    def test_case_insensitive_match_keeps_canonical_marker(self):
        cues = detect_markers(q("AFTER the goal"))
        assert cues[0].marker == "after"
        assert cues[0].marker_span == (0, 5)

    def test_marker_span_matches_text_case_insensitively(self):
        text = "Before the anthem"
        cues = detect_markers(q(text))
        start, stop = cues[0].marker_span
        assert text.encode("utf-8")[start:stop].decode("utf-8").lower() == cues[0].marker

    def test_spans_are_ordered_and_non_overlapping(self):
        cues = detect_markers(q("after the goal and before the save, during the pause"))
        spans = [c.marker_span for c in cues]
        assert spans == sorted(spans)
        for (a, b), (c, d) in zip(spans, spans[1:]):
            assert b <= c

    def test_duplicate_markers_yield_duplicate_cues(self):
        cues = detect_markers(q("after the goal and after the save"))
        assert [c.marker for c in cues] == ["after", "after"]

    def test_longest_match_wins_at_shared_prefix(self):
        lex = MarkerLexicon(
            explicit={"by": CueCategory.PRECEDENCE, "by the time": CueCategory.PRECEDENCE}
        )
        cues = detect_markers(q("by the time the race starts"), lex)
        assert len(cues) == 1
        assert cues[0].marker == "by the time"

    def test_word_boundary_blocks_substring_hits(self):
        # "rafter" contains "after"; "weekend" contains "end"
        assert detect_markers(q("the rafter holds the roof")) == []
        assert resolve_implicit_cues(q("a quiet weekend outside")) == []

    def test_non_ascii_byte_spans(self):
        text = "café before noon"
        cues = detect_markers(q(text))
        assert len(cues) == 1
        start, stop = cues[0].marker_span
        # "caf<e-acute> " is 6 bytes in UTF-8, so the marker starts at byte 6
        assert (start, stop) == (6, 12)
        assert text.encode("utf-8")[start:stop] == b"before"

    def test_determinism(self):
        text = "after the goal, before the replay"
        assert detect_markers(q(text)) == detect_markers(q(text))


class TestAmbiguousMarkers:
    def test_bare_trailing_as_is_not_a_marker(self):
        assert detect_markers(q("what color is the car as")) == []

    def test_as_with_clausal_continuation_matches(self):
        cues = detect_markers(q("as the dog runs away"))
        assert len(cues) == 1
        assert cues[0].marker == "as"
        assert cues[0].category is CueCategory.COOCCURRENCE

    def test_when_with_single_following_token_is_rejected(self):
        assert detect_markers(q("tell me when exactly")) == []

    def test_when_with_continuation_matches(self):
        cues = detect_markers(q("when the rain stops"))
        assert [c.marker for c in cues] == ["when"]

    def test_continuation_is_cut_by_clause_boundary(self):
        # only one token between "as" and the comma
        assert detect_markers(q("the car as well, obviously not temporal")) == []

    def test_unconditional_markers_do_not_need_continuation(self):
        cues = detect_markers(q("show the scene during"))
        assert [c.marker for c in cues] == ["during"]


class TestReferenceEvent:
    def test_event_runs_to_end_of_text(self):
        text = "after talking to the coach"
        cues = detect_markers(q(text))
        assert cues[0].reference_event == "talking to the coach"

    def test_event_stops_at_sentence_end(self):
        cues = detect_markers(q("after the goal. the crowd cheers"))
        assert cues[0].reference_event == "the goal"

    def test_event_stops_at_next_marker(self):
        cues = detect_markers(q("after the goal before the replay"))
        assert cues[0].reference_event == "the goal"
        assert cues[1].reference_event == "the replay"

    def test_standalone_extraction_with_lexicon_bound(self):
        text = "after the goal before the replay"
        cues = detect_markers(q(text))
        ref = extract_reference_event(q(text), cues[0].marker_span, default_lexicon())
        assert ref == "the goal"

    def test_standalone_extraction_without_lexicon_runs_to_boundary(self):
        text = "after the goal before the replay"
        cues = detect_markers(q(text))
        # without a lexicon the next marker is unknown, so the comma-free
        # remainder of the text is the event
        ref = extract_reference_event(q(text), cues[0].marker_span)
        assert ref == "the goal before the replay"

    def test_reference_event_is_substring_of_text(self):
        text = "what happens after the second half , then the awards"
        for cue in detect_markers(q(text)):
            if cue.reference_event is not None:
                assert cue.reference_event in text

    def test_out_of_bounds_span_rejected(self):
        with pytest.raises(InvalidInputError):
            extract_reference_event(q("after the goal"), (0, 999))

    def test_mid_character_byte_offset_rejected(self):
        # byte 1 splits the two-byte encoding of the first character
        with pytest.raises(InvalidInputError):
            extract_reference_event(q("é after x y"), (1, 3))


class TestImplicitCues:
    def test_beginning_maps_to_precedence(self):
        cues = resolve_implicit_cues(q("show me the beginning of the match"))
        assert len(cues) == 1
        assert cues[0].category is CueCategory.PRECEDENCE
        assert cues[0].marker == "beginning"
        assert cues[0].source is CueSource.IMPLICIT
        assert cues[0].reference_event is None

    def test_end_maps_to_subsequence(self):
        cues = resolve_implicit_cues(q("summarize the end of the video"))
        assert cues[0].category is CueCategory.SUBSEQUENCE

    def test_middle_maps_to_cooccurrence(self):
        cues = resolve_implicit_cues(q("what is in the middle"))
        assert cues[0].category is CueCategory.COOCCURRENCE


class TestExtractCues:
    def test_combines_explicit_and_implicit_sorted_by_span(self):
        cues = extract_cues(q("at the start, after the whistle"))
        assert [(c.marker, c.source) for c in cues] == [
            ("start", CueSource.IMPLICIT),
            ("after", CueSource.EXPLICIT),
        ]

    def test_explicit_and_implicit_can_both_fire_on_one_word_pair(self):
        cues = extract_cues(q("when does it start"))
        assert {(c.marker, c.source.value) for c in cues} == {
            ("when", "explicit"),
            ("start", "implicit"),
        }

    def test_markerless_query_has_no_cues(self):
        assert extract_cues(q("describe the main activity")) == []


class TestLexiconValidation:
    def test_phrase_in_both_maps_rejected(self):
        with pytest.raises(InvalidInputError):
            MarkerLexicon(
                explicit={"start": CueCategory.PRECEDENCE},
                implicit={"start": CueCategory.PRECEDENCE},
            )

    def test_unknown_category_rejected(self):
        with pytest.raises(InvalidInputError):
            MarkerLexicon(explicit={"soon": "sometime"})

    def test_empty_phrase_rejected(self):
        with pytest.raises(InvalidInputError):
            MarkerLexicon(explicit={"  ": CueCategory.PRECEDENCE})

    def test_phrases_lowercased_and_duplicates_rejected(self):
        with pytest.raises(InvalidInputError):
            MarkerLexicon(
                explicit={"Before": CueCategory.PRECEDENCE, "before": CueCategory.PRECEDENCE}
            )

    def test_empty_lexicon_rejected(self):
        with pytest.raises(InvalidInputError):
            MarkerLexicon()

    def test_default_lexicon_covers_all_three_categories(self):
        lex = default_lexicon()
        assert set(lex.explicit.values()) == set(CueCategory)
        assert set(lex.implicit.values()) == set(CueCategory)
