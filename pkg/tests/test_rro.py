import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deephybrid.exceptions import DegenerateInputError
from deephybrid.rro import (
    estimate_rank,
    weighted_correlation,
    weighted_difference,
    weighted_ratio,
)


def _loop_ratio(d):
    d = [max(abs(v), 1e-14) for v in d]
    raw = [d[i] / d[i + 1] for i in range(len(d) - 1)]
    return [(len(d) - 2) * r / sum(raw) for r in raw]


def _loop_difference(d):
    out, acc = [], 0.0
    for i in range(len(d) - 1):
        acc += abs(d[i])
        out.append(abs(abs(d[i + 1]) - abs(d[i])) / acc)
    return out


class TestCriteria:
    def test_ratio_matches_loop(self, rng):
        d = np.sort(rng.uniform(0.01, 10, 12))[::-1]
        np.testing.assert_allclose(weighted_ratio(d), _loop_ratio(d), rtol=1e-13)

    def test_ratio_two_entries_is_zero(self):
        np.testing.assert_array_equal(weighted_ratio([3.0, 1.0]), [0.0])

    def test_difference_matches_loop(self, rng):
        d = np.sort(rng.uniform(0.01, 10, 12))[::-1]
        np.testing.assert_allclose(weighted_difference(d), _loop_difference(d), rtol=1e-13)

    def test_flat_diagonal(self):
        np.testing.assert_array_equal(weighted_difference(np.full(5, 2.0)), 0.0)
        wr = weighted_ratio(np.ones(4))
        np.testing.assert_allclose(wr, wr[0])

    def test_difference_reverse(self):
        d = np.array([4.0, 2.0, 1.0])
        np.testing.assert_allclose(weighted_difference(d, "reverse"), [2.0 / 1.0, 1.0 / 2.0])

    def test_difference_unknown_denominator(self):
        with pytest.raises(ValueError, match="denominator"):
            weighted_difference([1.0, 0.5], "median")

    def test_difference_zero_lead(self):
        with pytest.raises(DegenerateInputError):
            weighted_difference([0.0, 0.0, 0.0])

    def test_correlation_matches_numpy(self, rng):
        r = rng.standard_normal((6, 5))
        c = np.abs(r)
        expect = []
        for j in range(3):
            c1 = np.corrcoef(c[:, j], c[:, j + 1])[0, 1]
            c2 = np.corrcoef(c[:, j + 1], c[:, j + 2])[0, 1]
            expect.append(abs(c1 - c2) / np.sum(c[:, j:j + 3] ** 2))
        np.testing.assert_allclose(weighted_correlation(r), expect, rtol=1e-12)

    def test_correlation_constant_columns(self):
        np.testing.assert_array_equal(weighted_correlation(np.ones((4, 3))), [0.0])

    def test_correlation_needs_three_columns(self):
        with pytest.raises(ValueError):
            weighted_correlation(np.ones((3, 2)))


class TestEstimateRank:
    @pytest.mark.parametrize("r", [1, 2, 5, 9, 15])
    def test_exact_low_rank(self, rng, r):
        m = rng.standard_normal((60, r)) @ rng.standard_normal((r, 100))
        assert estimate_rank(m).rank == r

    def test_identity_breaks_ties_low(self):
        assert estimate_rank(np.eye(8)).rank == 1

    def test_all_zero(self):
        with pytest.raises(DegenerateInputError):
            estimate_rank(np.zeros((4, 4)))

    def test_too_small(self):
        with pytest.raises(ValueError):
            estimate_rank(np.ones((1, 5)))

    def test_csv_and_positions(self, rng):
        m = rng.standard_normal((20, 3)) @ rng.standard_normal((3, 30))
        est = estimate_rank(m)
        assert est.as_csv() == f"{est.rank},{est.pos_wd},{est.pos_wr},{est.pos_wc}"
        assert est.rank == max(est.pos_wd, est.pos_wr, est.pos_wc)
        assert est.gap > 1e6

    def test_first_index_wins_ties(self):
        # Flat diagonal: every wd and wr entry ties, so the lowest position wins.
        est = estimate_rank(np.eye(6) * 2.0)
        assert est.pos_wd == 1 and est.pos_wr == 1

    def test_unpivoted_agrees_on_clean_input(self, rng):
        m = rng.standard_normal((30, 4)) @ rng.standard_normal((4, 40))
        assert estimate_rank(m, pivot=False).rank == 4

    def test_scale_invariance(self, rng):
        m = rng.standard_normal((30, 6)) @ rng.standard_normal((6, 40))
        assert estimate_rank(m).rank == estimate_rank(1e-7 * m).rank == estimate_rank(1e7 * m).rank

    @settings(max_examples=100, deadline=None)
    @given(
        arrays(
            np.float64,
            st.tuples(st.integers(2, 12), st.integers(2, 12)),
            elements=st.floats(-1e6, 1e6, allow_nan=False),
        ).filter(lambda a: np.any(a))
    )
    def test_always_below_min_dim(self, m):
        est = estimate_rank(m)
        assert 1 <= est.rank <= min(m.shape) - 1
