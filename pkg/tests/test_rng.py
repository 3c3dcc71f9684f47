import math

import numpy as np
import pytest

from predres.rng import (
    RngStream,
    next_dirichlet_uniform,
    next_standard_normal,
    next_uniform,
)


class TestDeterminism:
    def test_replay_identical(self):
        a = RngStream(12345, 0)
        b = RngStream(12345, 0)
        seq_a = [next_uniform(a) for _ in range(200)]
        seq_b = [next_uniform(b) for _ in range(200)]
        assert seq_a == seq_b

    def test_normal_and_dirichlet_replay(self):
        a = RngStream(9, 3)
        b = RngStream(9, 3)
        assert [next_standard_normal(a) for _ in range(50)] == [
            next_standard_normal(b) for _ in range(50)
        ]
        np.testing.assert_array_equal(
            next_dirichlet_uniform(a, 7), next_dirichlet_uniform(b, 7)
        )

    def test_distinct_streams_share_no_prefix(self):
        seqs = [RngStream(777, sid).uniforms(32) for sid in range(8)]
        for i in range(len(seqs)):
            for j in range(i + 1, len(seqs)):
                assert not np.array_equal(seqs[i], seqs[j])

    def test_batch_matches_scalar_consumption(self):
        a = RngStream(4, 2)
        b = RngStream(4, 2)
        batch = a.uniforms(17)
        scalars = np.array([b.uniform() for _ in range(17)])
        np.testing.assert_array_equal(batch, scalars)
        np.testing.assert_array_equal(a.standard_normals(5),
                                      [b.standard_normal() for _ in range(5)])

    def test_counter_advances(self):
        s = RngStream(1, 0)
        c0 = s.counter
        s.uniforms(1000)
        assert s.counter > c0

    @pytest.mark.parametrize("seed,sid", [(-1, 0), (0, -1), (2 ** 64, 0), (0, 2 ** 64)])
    def test_rejects_out_of_range_ids(self, seed, sid):
        with pytest.raises(ValueError):
            RngStream(seed, sid)


class TestUniform:
    def test_moments_and_range(self):
        us = RngStream(2024, 0).uniforms(100_000)
        assert np.all(us >= 0.0) and np.all(us < 1.0)
        assert abs(us.mean() - 0.5) < 0.005


class TestStandardNormal:
    def test_moments(self):
        zs = RngStream(2024, 1).standard_normals(100_000)
        assert abs(zs.mean()) < 0.01
        assert abs(zs.var() - 1.0) < 0.02

    def test_upper_quantile(self):
        zs = RngStream(5, 0).standard_normals(1_000_000)
        assert abs(np.quantile(zs, 0.975) - 1.96) < 0.02


class TestDirichlet:
    def test_k1_is_unit(self):
        np.testing.assert_array_equal(RngStream(0, 0).dirichlet_uniform(1), [1.0])

    def test_sum_to_one(self):
        s = RngStream(3, 0)
        for _ in range(200):
            w = s.dirichlet_uniform(5)
            assert np.all(w >= 0.0)
            assert abs(w.sum() - 1.0) < 1e-12

    def test_component_means(self):
        s = RngStream(11, 0)
        total = np.zeros(3)
        n = 100_000
        # one batched pass over n draws keeps this test quick
        us = s.uniforms(n * 3).reshape(n, 3)
        e = -np.log1p(-us)
        w = e / e.sum(axis=1, keepdims=True)
        total = w.mean(axis=0)
        np.testing.assert_allclose(total, 1.0 / 3.0, atol=0.005)

    def test_rejects_k0(self):
        with pytest.raises(ValueError):
            RngStream(0, 0).dirichlet_uniform(0)
