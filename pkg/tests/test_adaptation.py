"""Adaptation modes: forward math against scalar oracles, init, identities."""

import math

import numpy as np
import pytest

from lgttp import (
    AdaptationMode,
    AdapterParams,
    FrameEmbeddings,
    InvalidInputError,
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


def adapter_oracle(params: AdapterParams, i: int) -> list[float]:
    """Pure-scalar recomputation of the adapter output for position i."""
    d = params.dim
    h0 = [float(params.embed_table[i, j]) for j in range(d)]
    mean = sum(h0) / d
    var = sum((x - mean) ** 2 for x in h0) / d
    xhat = [(x - mean) / math.sqrt(var + 1e-5) for x in h0]
    h1 = [float(params.ln_gain[j]) * xhat[j] + float(params.ln_bias[j]) for j in range(d)]
    z = [
        sum(h1[k] * float(params.mlp_w1[k, j]) for k in range(d)) + float(params.mlp_b1[j])
        for j in range(d)
    ]
    g = [x * 0.5 * (1.0 + math.erf(x / math.sqrt(2.0))) for x in z]
    out = [
        sum(g[k] * float(params.mlp_w2[k, j]) for k in range(d)) + float(params.mlp_b2[j])
        for j in range(d)
    ]
    return [params.scale * x for x in out]


class TestActivations:
    def test_gelu_fixed_points(self):
        assert gelu(np.array(0.0)) == 0.0
        # gelu(x) -> x for large positive x, -> 0 for large negative x
        assert abs(gelu(np.array(10.0)) - 10.0) < 1e-12
        assert abs(gelu(np.array(-10.0))) < 1e-12

    def test_gelu_at_one(self):
        # 1 * Phi(1), Phi(1) = 0.5 * (1 + erf(1/sqrt(2)))
        expected = 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))
        assert abs(float(gelu(np.array(1.0))) - expected) < 1e-15

    @pytest.mark.parametrize("x", [-3.0, -0.7, 0.0, 0.4, 2.2])
    def test_gelu_grad_matches_finite_differences(self, x):
        eps = 1e-6
        fd = (float(gelu(np.array(x + eps))) - float(gelu(np.array(x - eps)))) / (2 * eps)
        assert abs(float(gelu_grad(np.array(x))) - fd) < 1e-9


class TestLayerNorm:
    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(3, 6))
        gain = rng.normal(size=6)
        bias = rng.normal(size=6)
        out = layer_norm(x, gain, bias)
        for r in range(3):
            row = [float(v) for v in x[r]]
            mean = sum(row) / 6
            var = sum((v - mean) ** 2 for v in row) / 6
            for j in range(6):
                expected = gain[j] * (row[j] - mean) / math.sqrt(var + 1e-5) + bias[j]
                assert abs(out[r, j] - expected) < 1e-12

    def test_constant_row_collapses_to_bias(self):
        out = layer_norm(np.full((1, 4), 7.0), np.ones(4), np.full(4, 0.25))
        np.testing.assert_allclose(out, np.full((1, 4), 0.25), atol=1e-15)

    def test_normalized_rows_have_zero_mean_unit_ish_variance(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(5, 64)) * 10.0
        out = layer_norm(x, np.ones(64), np.zeros(64))
        np.testing.assert_allclose(out.mean(axis=1), 0.0, atol=1e-12)
        # eps keeps variance slightly under 1
        assert np.all(out.var(axis=1) < 1.0)
        np.testing.assert_allclose(out.var(axis=1), 1.0, atol=1e-4)


class TestTimestampMode:
    def test_identity_returns_same_object(self):
        fe = FrameEmbeddings(np.ones((3, 4)))
        assert adapt_timestamp_aware(fe) is fe

    def test_dispatcher_ignores_params(self):
        fe = FrameEmbeddings(np.ones((3, 4)))
        out = adapt(fe, AdaptationMode.TIMESTAMP_AWARE)
        np.testing.assert_array_equal(out.data, fe.data)


class TestPositionMode:
    def test_two_frame_one_dim_frozen(self):
        # e=0, w=1, b=0: frame i gets i/n, so [0.5] and [1.0]
        fe = FrameEmbeddings(np.zeros((2, 1)))
        params = PositionEmbedParams(w_p=np.array([1.0]), b_p=np.array([0.0]))
        out = adapt_position_embedding(fe, params)
        np.testing.assert_allclose(out.data, [[0.5], [1.0]], atol=1e-15)

    def test_four_frame_fractions(self):
        fe = FrameEmbeddings(np.zeros((4, 1)))
        params = PositionEmbedParams(w_p=np.array([1.0]), b_p=np.array([0.0]))
        out = adapt_position_embedding(fe, params)
        np.testing.assert_allclose(out.data[:, 0], [0.25, 0.5, 0.75, 1.0], atol=1e-15)

    def test_offset_is_position_independent(self):
        fe = FrameEmbeddings(np.zeros((3, 2)))
        params = PositionEmbedParams(w_p=np.zeros(2), b_p=np.array([1.0, -2.0]))
        out = adapt_position_embedding(fe, params)
        np.testing.assert_array_equal(out.data, np.tile([1.0, -2.0], (3, 1)))

    def test_zero_params_identity_is_exact(self):
        rng = np.random.default_rng(4)
        fe = FrameEmbeddings(rng.normal(size=(5, 3)))
        out = adapt_position_embedding(fe, zero_position(3))
        np.testing.assert_array_equal(out.data, fe.data)

    def test_dim_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            adapt_position_embedding(FrameEmbeddings(np.ones((2, 3))), zero_position(4))


class TestAdapterMode:
    def test_forward_matches_scalar_oracle(self):
        params = init_adapter(dim=5, max_frames=6, seed=3)
        for i in range(6):
            np.testing.assert_allclose(
                adapter_forward(params, i), adapter_oracle(params, i), atol=1e-12
            )

    def test_adapt_learned_is_residual_of_forward(self):
        params = init_adapter(dim=4, max_frames=8, seed=9)
        rng = np.random.default_rng(10)
        fe = FrameEmbeddings(rng.normal(size=(5, 4)))
        out = adapt_learned(fe, params)
        deltas = np.stack([adapter_forward(params, i) for i in range(5)])
        np.testing.assert_allclose(out.data, fe.data + deltas, atol=1e-12)

    def test_delta_depends_only_on_position(self):
        params = init_adapter(dim=4, max_frames=4, seed=1)
        rng = np.random.default_rng(2)
        a = FrameEmbeddings(rng.normal(size=(3, 4)))
        b = FrameEmbeddings(rng.normal(size=(3, 4)))
        da = adapt_learned(a, params).data - a.data
        db = adapt_learned(b, params).data - b.data
        np.testing.assert_allclose(da, db, atol=1e-12)

    def test_zero_params_identity_is_exact(self):
        rng = np.random.default_rng(5)
        fe = FrameEmbeddings(rng.normal(size=(4, 3)))
        out = adapt_learned(fe, zero_adapter(3, max_frames=4))
        np.testing.assert_array_equal(out.data, fe.data)

    def test_too_many_frames_rejected(self):
        params = init_adapter(dim=2, max_frames=3, seed=0)
        with pytest.raises(InvalidInputError):
            adapt_learned(FrameEmbeddings(np.ones((4, 2))), params)

    def test_frame_index_bounds(self):
        params = init_adapter(dim=2, max_frames=3, seed=0)
        with pytest.raises(InvalidInputError):
            adapter_forward(params, 3)
        with pytest.raises(InvalidInputError):
            adapter_forward(params, -1)

    def test_dim_mismatch_rejected(self):
        params = init_adapter(dim=2, max_frames=3, seed=0)
        with pytest.raises(InvalidInputError):
            adapt_learned(FrameEmbeddings(np.ones((2, 5))), params)


class TestDispatcher:
    def test_mode_accepts_plain_strings(self):
        fe = FrameEmbeddings(np.ones((2, 3)))
        out = adapt(fe, "position", zero_position(3))
        np.testing.assert_array_equal(out.data, fe.data)

    def test_wrong_params_type_rejected(self):
        fe = FrameEmbeddings(np.ones((2, 3)))
        with pytest.raises(InvalidInputError):
            adapt(fe, "position", zero_adapter(3))
        with pytest.raises(InvalidInputError):
            adapt(fe, "adapter", zero_position(3))

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            adapt(FrameEmbeddings(np.ones((2, 3))), "frequency")


class TestInitialization:
    def test_adapter_init_draw_order_is_pinned(self):
        # bit-exact replay: table N(0, 0.02), then w1, then w2 Xavier-uniform
        d, m, seed = 6, 5, 7
        params = init_adapter(dim=d, max_frames=m, seed=seed)
        rng = np.random.default_rng(seed)
        bound = math.sqrt(6.0 / (d + d))
        np.testing.assert_array_equal(params.embed_table, rng.normal(0.0, 0.02, (m, d)))
        np.testing.assert_array_equal(params.mlp_w1, rng.uniform(-bound, bound, (d, d)))
        np.testing.assert_array_equal(params.mlp_w2, rng.uniform(-bound, bound, (d, d)))

    def test_adapter_init_constants(self):
        params = init_adapter(dim=4, max_frames=3, seed=0)
        np.testing.assert_array_equal(params.mlp_b1, np.zeros(4))
        np.testing.assert_array_equal(params.mlp_b2, np.zeros(4))
        np.testing.assert_array_equal(params.ln_gain, np.ones(4))
        np.testing.assert_array_equal(params.ln_bias, np.zeros(4))
        assert params.scale == 0.1

    def test_adapter_table_std_near_002(self):
        params = init_adapter(dim=48, max_frames=64, seed=11)
        std = float(params.embed_table.std())
        assert 0.018 < std < 0.022

    def test_xavier_weights_respect_bound(self):
        d = 16
        params = init_adapter(dim=d, max_frames=2, seed=13)
        bound = math.sqrt(6.0 / (2 * d))
        for w in (params.mlp_w1, params.mlp_w2):
            assert float(np.abs(w).max()) <= bound
            assert float(np.abs(w).max()) > 0.8 * bound

    def test_position_init_bit_exact_replay(self):
        d, seed = 9, 21
        params = init_position(dim=d, seed=seed)
        rng = np.random.default_rng(seed)
        bound = math.sqrt(6.0 / (1 + d))
        np.testing.assert_array_equal(params.w_p, rng.uniform(-bound, bound, (d,)))
        np.testing.assert_array_equal(params.b_p, np.zeros(d))

    def test_same_seed_same_params(self):
        a = init_adapter(dim=3, max_frames=2, seed=5)
        b = init_adapter(dim=3, max_frames=2, seed=5)
        np.testing.assert_array_equal(a.embed_table, b.embed_table)
        np.testing.assert_array_equal(a.mlp_w1, b.mlp_w1)

    def test_different_seed_different_params(self):
        a = init_adapter(dim=3, max_frames=2, seed=5)
        b = init_adapter(dim=3, max_frames=2, seed=6)
        assert not np.array_equal(a.embed_table, b.embed_table)

    def test_untrained_params_per_mode(self):
        assert untrained_params("timestamp", 4) is None
        pos = untrained_params("position", 4)
        assert isinstance(pos, PositionEmbedParams)
        np.testing.assert_array_equal(pos.w_p, np.zeros(4))
        ada = untrained_params("adapter", 4, max_frames=6)
        assert isinstance(ada, AdapterParams)
        assert ada.max_frames == 6 and ada.scale == 0.0

    def test_untrained_params_plan_as_identity(self):
        rng = np.random.default_rng(17)
        fe = FrameEmbeddings(rng.normal(size=(4, 5)))
        for mode in AdaptationMode:
            out = adapt(fe, mode, untrained_params(mode, 5, max_frames=4))
            np.testing.assert_array_equal(out.data, fe.data)


class TestParamValidation:
    def test_mlp_shape_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            AdapterParams(
                embed_table=np.zeros((2, 3)),
                mlp_w1=np.zeros((3, 4)),
                mlp_b1=np.zeros(3),
                mlp_w2=np.zeros((3, 3)),
                mlp_b2=np.zeros(3),
                ln_gain=np.ones(3),
                ln_bias=np.zeros(3),
                scale=0.1,
            )

    def test_vector_length_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            PositionEmbedParams(w_p=np.zeros(3), b_p=np.zeros(4))

    def test_non_finite_scale_rejected(self):
        with pytest.raises(InvalidInputError):
            AdapterParams(
                embed_table=np.zeros((2, 2)),
                mlp_w1=np.zeros((2, 2)),
                mlp_b1=np.zeros(2),
                mlp_w2=np.zeros((2, 2)),
                mlp_b2=np.zeros(2),
                ln_gain=np.ones(2),
                ln_bias=np.zeros(2),
                scale=float("nan"),
            )
