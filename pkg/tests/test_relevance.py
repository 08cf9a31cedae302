"""Relevance scoring: cosine math, affine calibration, hashed query embedder."""

import numpy as np
import pytest

from lgttp import (
    FrameEmbeddings,
    InvalidInputError,
    QueryEmbedding,
    RelevanceParams,
    RelevanceScores,
    apply_temporal_weighting,
    base_relevance,
    cosine_similarities,
    embed_query,
    uniform_weights,
    weights_for_cues,
)


class TestContainers:
    def test_frame_embeddings_shape_accessors(self):
        fe = FrameEmbeddings(np.ones((4, 7)))
        assert fe.n_frames == 4 and fe.dim == 7

    def test_frame_embeddings_rejects_vector(self):
        with pytest.raises(InvalidInputError):
            FrameEmbeddings(np.ones(5))

    def test_frame_embeddings_rejects_nan(self):
        data = np.ones((2, 2))
        data[1, 0] = np.nan
        with pytest.raises(InvalidInputError):
            FrameEmbeddings(data)

    def test_frame_embeddings_read_only(self):
        fe = FrameEmbeddings(np.ones((2, 2)))
        with pytest.raises(ValueError):
            fe.data[0, 0] = 3.0

    def test_query_embedding_rejects_zero_vector(self):
        with pytest.raises(InvalidInputError):
            QueryEmbedding(np.zeros(4))

    def test_relevance_params_reject_non_finite(self):
        with pytest.raises(InvalidInputError):
            RelevanceParams(scale=float("inf"))

    def test_relevance_scores_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            RelevanceScores(l_base=np.zeros(3), l_temp=np.zeros(4))


class TestEmbedQuery:
    def test_unit_norm(self):
        vec = embed_query("a dog runs in the park", 32).vector
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-12

    def test_deterministic(self):
        a = embed_query("after the goal", 64, seed=3).vector
        b = embed_query("after the goal", 64, seed=3).vector
        np.testing.assert_array_equal(a, b)

    def test_seed_changes_vector(self):
        a = embed_query("after the goal", 64, seed=3).vector
        b = embed_query("after the goal", 64, seed=4).vector
        assert not np.array_equal(a, b)

    def test_token_order_does_not_matter(self):
        a = embed_query("dog park", 64).vector
        b = embed_query("park dog", 64).vector
        np.testing.assert_array_equal(a, b)

    def test_case_does_not_matter(self):
        a = embed_query("Dog Park", 64).vector
        b = embed_query("dog park", 64).vector
        np.testing.assert_array_equal(a, b)

    def test_no_tokens_rejected(self):
        with pytest.raises(InvalidInputError):
            embed_query("?! ... #", 16)

    def test_bad_dim_rejected(self):
        with pytest.raises(InvalidInputError):
            embed_query("fine text", 0)

    def test_different_texts_usually_differ(self):
        a = embed_query("a dog in the park", 128).vector
        b = embed_query("rockets launching at dawn", 128).vector
        assert not np.array_equal(a, b)


class TestCosine:
    def test_aligned_vector_scores_one(self):
        fe = FrameEmbeddings(np.array([[2.0, 0.0], [0.0, 3.0]]))
        q = QueryEmbedding(np.array([1.0, 0.0]))
        np.testing.assert_allclose(cosine_similarities(fe, q), [1.0, 0.0], atol=1e-15)

    def test_opposite_vector_scores_minus_one(self):
        fe = FrameEmbeddings(np.array([[-5.0, 0.0]]))
        q = QueryEmbedding(np.array([1.0, 0.0]))
        np.testing.assert_allclose(cosine_similarities(fe, q), [-1.0], atol=1e-15)

    def test_scale_invariance(self):
        rng = np.random.default_rng(11)
        rows = rng.normal(size=(6, 9))
        q = QueryEmbedding(rng.normal(size=9))
        a = cosine_similarities(FrameEmbeddings(rows), q)
        b = cosine_similarities(FrameEmbeddings(rows * 40.0), q)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_zero_norm_row_scores_zero(self):
        fe = FrameEmbeddings(np.array([[0.0, 0.0], [1.0, 1.0]]))
        q = QueryEmbedding(np.array([1.0, 0.0]))
        sims = cosine_similarities(fe, q)
        assert sims[0] == 0.0

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(5)
        rows = rng.normal(size=(5, 4))
        qv = rng.normal(size=4)
        sims = cosine_similarities(FrameEmbeddings(rows), QueryEmbedding(qv))
        for i in range(5):
            num = sum(rows[i, j] * qv[j] for j in range(4))
            den = np.sqrt(sum(x * x for x in rows[i])) * np.sqrt(sum(x * x for x in qv))
            assert abs(sims[i] - num / den) < 1e-12

    def test_dim_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            cosine_similarities(
                FrameEmbeddings(np.ones((2, 3))), QueryEmbedding(np.ones(4))
            )

    def test_bounded_by_one(self):
        rng = np.random.default_rng(23)
        sims = cosine_similarities(
            FrameEmbeddings(rng.normal(size=(50, 12))),
            QueryEmbedding(rng.normal(size=12)),
        )
        assert np.all(np.abs(sims) <= 1.0 + 1e-12)


class TestBaseRelevance:
    def test_default_params_are_identity_affine(self):
        fe = FrameEmbeddings(np.array([[1.0, 0.0], [0.0, 1.0]]))
        q = QueryEmbedding(np.array([1.0, 0.0]))
        np.testing.assert_allclose(base_relevance(fe, q), [1.0, 0.0], atol=1e-15)

    def test_scale_and_offset_applied(self):
        fe = FrameEmbeddings(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        q = QueryEmbedding(np.array([1.0, 0.0]))
        out = base_relevance(fe, q, RelevanceParams(scale=2.0, offset=0.5))
        np.testing.assert_allclose(out, [2.5, -1.5], atol=1e-15)


class TestTemporalWeighting:
    def test_elementwise_product(self):
        base = np.array([1.0, 2.0, 3.0])
        w = uniform_weights(3)
        scores = apply_temporal_weighting(base, w)
        np.testing.assert_array_equal(scores.l_temp, base)
        np.testing.assert_array_equal(scores.l_base, base)

    def test_non_uniform_profile_reshapes_scores(self):
        from lgttp import subsequence_weights

        base = np.array([1.0, 1.0, 1.0])
        scores = apply_temporal_weighting(base, subsequence_weights(3))
        np.testing.assert_allclose(scores.l_temp, [0.5, 1.0, 1.5], rtol=1e-15)

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            apply_temporal_weighting(np.ones(4), uniform_weights(3))

    def test_negative_base_stays_negative_under_weighting(self):
        base = np.array([-1.0, -1.0])
        scores = apply_temporal_weighting(base, weights_for_cues([], 2))
        assert np.all(scores.l_temp < 0)
