"""Tests for the deterministic counter-based random stream."""

import numpy as np
import pytest

from sencore.rng import ALGORITHM, GOLDEN, MIX1, MIX2, Rng, raw_block, unit_block


def _reference_splitmix(seed: int, index: int) -> int:
    """Scalar python-int reimplementation of one stream output."""
    mask = (1 << 64) - 1
    z = (seed + (index + 1) * int(GOLDEN)) & mask
    z = ((z ^ (z >> 30)) * int(MIX1)) & mask
    z = ((z ^ (z >> 27)) * int(MIX2)) & mask
    return z ^ (z >> 31)


class TestStream:
    def test_algorithm_tag_is_frozen(self):
        assert ALGORITHM == "splitmix64/1"

    def test_matches_scalar_reference(self):
        """The vectorized stream equals a from-scratch big-int evaluation."""
        for seed in (0, 1, 7, 2**63, 2**64 - 1):
            got = raw_block(seed, 0, 20)
            want = [_reference_splitmix(seed, i) for i in range(20)]
            assert [int(v) for v in got] == want

    def test_same_seed_same_stream(self):
        a, b = Rng(12345), Rng(12345)
        np.testing.assert_array_equal(a.raw(100), b.raw(100))
        np.testing.assert_array_equal(a.uniforms(50), b.uniforms(50))

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).raw(10), Rng(2).raw(10))

    def test_counter_advances_across_calls(self):
        """Draw-by-draw equals one big block: counter mode, no hidden state."""
        rng = Rng(9)
        piecewise = np.concatenate([rng.raw(3), rng.raw(5), rng.raw(2)])
        np.testing.assert_array_equal(piecewise, raw_block(9, 0, 10))

    def test_reserve_skips_exactly(self):
        rng = Rng(4)
        seed, start = rng.reserve(17)
        assert (seed, start) == (4, 0)
        np.testing.assert_array_equal(rng.raw(4), raw_block(4, 17, 4))

    def test_reserved_block_is_replayable(self):
        rng = Rng(11)
        rng.uniforms(13)
        seed, start = rng.reserve(8)
        np.testing.assert_array_equal(unit_block(seed, start, 8), unit_block(11, 13, 8))


class TestDistributions:
    def test_uniforms_in_unit_interval(self):
        u = Rng(3).uniforms(100000)
        assert u.min() >= 0.0 and u.max() < 1.0
        assert abs(u.mean() - 0.5) < 0.005
        assert abs(u.var() - 1.0 / 12.0) < 0.001

    def test_normals_moments(self):
        z = Rng(5).normals(100000)
        assert np.isfinite(z).all()
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_normals_odd_count_prefix_of_even(self):
        a = Rng(6).normals(7)
        b = Rng(6).normals(8)
        np.testing.assert_array_equal(a, b[:7])

    def test_randint_covers_range_uniformly(self):
        rng = Rng(8)
        counts = np.bincount([rng.randint(5) for _ in range(50000)], minlength=5)
        assert counts.min() > 0
        np.testing.assert_allclose(counts / 50000, 0.2, atol=0.01)

    def test_randint_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Rng(0).randint(0)

    def test_sample_without_replacement_is_distinct_and_in_range(self):
        rng = Rng(10)
        for _ in range(200):
            out = rng.sample_without_replacement(10, 4)
            assert len(set(out)) == 4
            assert all(0 <= v < 10 for v in out)

    def test_sample_without_replacement_bounds(self):
        rng = Rng(1)
        assert rng.sample_without_replacement(5, 0) == []
        assert sorted(rng.sample_without_replacement(5, 5)) == [0, 1, 2, 3, 4]
        with pytest.raises(ValueError):
            rng.sample_without_replacement(3, 4)

    def test_shuffle_is_a_permutation(self):
        rng = Rng(2)
        items = list(range(20))
        rng.shuffle(items)
        assert sorted(items) == list(range(20))
        assert items != list(range(20))

    def test_choice_draws_members(self):
        rng = Rng(3)
        items = ("a", "b", "c")
        seen = {rng.choice(items) for _ in range(100)}
        assert seen == set(items)
