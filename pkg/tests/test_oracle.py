import math

import numpy as np
import pytest

from advface.imageops import FacePair, ImageError
from advface.oracle import (
    QueryLedger,
    ToyEmbedder,
    ToyEmbedderSpec,
    VerifierConfig,
    embed,
    feature_distance,
    toy_embed_formula,
    verify,
)
from advface.rng import MCG_MULTIPLIER, PortableRng, normal_stream

from conftest import TOY_DIMS, make_pair


class TestPortableRng:
    def test_scalar_vector_parity(self):
        for seed in (0, 1, 7, 2**63):
            scalar = PortableRng(seed).normals(101)
            np.testing.assert_array_equal(scalar, normal_stream(seed, 101))

    def test_first_uniform_by_hand(self):
        # one MCG step computed directly from the documented recurrence
        state = ((2 * 7 + 1) * MCG_MULTIPLIER) % 2**64
        expected = ((state >> 11) + 0.5) * 2.0**-53
        assert PortableRng(7).uniform() == expected

    def test_distribution_sanity(self):
        z = normal_stream(3, 100_000)
        assert abs(z.mean()) < 0.02
        assert abs(z.std() - 1.0) < 0.02


class TestToyEmbedder:
    def test_determinism_and_ledger(self, toy_oracle):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, TOY_DIMS)
        ledger = QueryLedger()
        e1 = embed(toy_oracle, img, ledger)
        e2 = embed(toy_oracle, img, ledger)
        np.testing.assert_array_equal(e1, e2)
        assert ledger.count == 2

    def test_unit_norm(self, toy_oracle):
        rng = np.random.default_rng(1)
        for _ in range(10):
            e = toy_oracle.embed_raw(rng.uniform(0, 1, TOY_DIMS))
            assert abs(np.linalg.norm(e) - 1.0) < 1e-6

    def test_formula_parity_straight_line(self):
        # independent straight-line reimplementation of the documented formula
        spec = ToyEmbedderSpec(seed=7, input_dims=(8, 8, 3), embed_dim=128)
        img = np.zeros((8, 8, 3))
        n, d = 8 * 8 * 3, 128
        gen = PortableRng(7)
        scale = 1.0 / math.sqrt(n)
        weights = np.array([[gen.normal() * scale for _ in range(n)]
                            for _ in range(d)])
        bias = np.array([gen.normal() * scale for _ in range(d)])
        raw = np.tanh(weights @ img.ravel() + bias)
        expected = raw / np.linalg.norm(raw)
        got = toy_embed_formula(spec, img)
        np.testing.assert_allclose(got, expected, atol=1e-12)
        np.testing.assert_allclose(
            ToyEmbedder(7, (8, 8, 3), 128).embed_raw(img), expected, atol=1e-12)

    def test_zero_image_is_normalized_tanh_bias(self):
        spec = ToyEmbedderSpec(seed=11, input_dims=(4, 4, 1), embed_dim=16)
        e = toy_embed_formula(spec, np.zeros((4, 4, 1)))
        assert np.any(e != 0.0)
        assert abs(np.linalg.norm(e) - 1.0) < 1e-12

    def test_lipschitz_bound(self):
        oracle = ToyEmbedder(5, (4, 4, 3), 32)
        n = 48
        stream = normal_stream(5, 32 * n + 32) / np.sqrt(n)
        weights = stream[: 32 * n].reshape(32, n)
        opnorm = np.linalg.norm(weights, 2)
        rng = np.random.default_rng(2)
        img = rng.uniform(0.2, 0.8, (4, 4, 3))
        delta = rng.normal(0, 1e-5, (4, 4, 3))
        pre_a = np.tanh(weights @ img.ravel() + stream[32 * n:])
        pre_b = np.tanh(weights @ (img + delta).ravel() + stream[32 * n:])
        # tanh is 1-Lipschitz, so pre-normalization outputs move at most |W| |delta|
        assert np.linalg.norm(pre_a - pre_b) <= opnorm * np.linalg.norm(delta.ravel()) + 1e-12

    def test_seed_sensitivity(self):
        img = np.full((4, 4, 1), 0.5)
        e7 = ToyEmbedder(7, (4, 4, 1), 16).embed_raw(img)
        e8 = ToyEmbedder(8, (4, 4, 1), 16).embed_raw(img)
        assert not np.allclose(e7, e8)

    def test_dimension_mismatch(self, toy_oracle):
        with pytest.raises(ImageError):
            toy_oracle.embed_raw(np.zeros((4, 4, 3)))


class TestFeatureDistance:
    def test_equal(self):
        e = np.array([1.0, 0.0])
        assert feature_distance(e, e) == 0.0

    def test_antipodal(self):
        e = np.array([0.6, 0.8])
        assert feature_distance(e, -e) == pytest.approx(2.0)

    def test_orthonormal(self):
        assert feature_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == \
            pytest.approx(np.sqrt(2))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            feature_distance(np.zeros(3), np.zeros(4))


class TestVerify:
    def test_identical_images_match(self, toy_oracle):
        img = np.full(TOY_DIMS, 0.5)
        pair = FacePair(img, img)
        is_match, dist = verify(toy_oracle, pair, VerifierConfig(0.5))
        assert is_match and dist == 0.0

    def test_symmetric_decision(self, toy_oracle):
        pair = make_pair(np.random.default_rng(3))
        swapped = FacePair(pair.target, pair.source)
        cfg = VerifierConfig(1.14)
        assert verify(toy_oracle, pair, cfg) == verify(toy_oracle, swapped, cfg)

    def test_line_search_crossing(self, toy_oracle):
        # push the target along a random direction until the distance crosses d_b
        rng = np.random.default_rng(4)
        pair = make_pair(rng)
        _, d0 = verify(toy_oracle, pair, VerifierConfig(1.0))
        d_b = d0 + 0.02
        assert verify(toy_oracle, pair, VerifierConfig(d_b))[0]
        direction = rng.normal(0, 1, TOY_DIMS)
        for scale in np.linspace(0.01, 0.5, 50):
            moved = np.clip(pair.target + scale * direction, 0, 1)
            crossed = FacePair(pair.source, moved)
            if verify(toy_oracle, crossed, VerifierConfig(d_b))[1] >= d_b:
                assert not verify(toy_oracle, crossed, VerifierConfig(d_b))[0]
                break
        else:
            pytest.fail("line search never crossed the boundary")

    def test_d_b_range_validation(self):
        with pytest.raises(ValueError):
            VerifierConfig(0.0)
        with pytest.raises(ValueError):
            VerifierConfig(2.5)
