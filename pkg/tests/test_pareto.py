import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emompc.errors import DimensionMismatchError, EmptySetError
from emompc.pareto import (
    ParetoEntry,
    ParetoSet,
    dominates,
    hausdorff,
    hausdorff_curve,
    nondominated_filter,
    proper_filter,
    select_by_weight,
    select_index,
)


def entries(objs):
    return [ParetoEntry(np.zeros(1), np.asarray(o, dtype=float)) for o in objs]


class TestDominates:
    def test_strict_componentwise(self):
        assert dominates((1, 2), (2, 3))

    def test_equality_excluded(self):
        assert not dominates((1, 2), (1, 2))

    def test_incomparable(self):
        assert not dominates((1, 3), (2, 2))
        assert not dominates((2, 2), (1, 3))

    def test_weak_dominance_counts(self):
        assert dominates((1, 2), (1, 3))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            dominates((1, 2), (1, 2, 3))

    @given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=3, max_size=3))
    def test_order_properties(self, triple):
        a, b, c = (np.array(t, dtype=float) for t in triple)
        assert not dominates(a, a)  # irreflexive
        if dominates(a, b):
            assert not dominates(b, a)  # asymmetric
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)  # transitive


class TestNondominatedFilter:
    def test_basic(self):
        result = nondominated_filter(entries([(1, 2), (2, 1), (2, 2)]))
        assert [tuple(e.objectives) for e in result] == [(1, 2), (2, 1)]

    def test_singleton_identity(self):
        result = nondominated_filter(entries([(5, 5)]))
        assert len(result) == 1 and tuple(result[0].objectives) == (5, 5)

    def test_empty_raises(self):
        with pytest.raises(EmptySetError):
            nondominated_filter([])

    def test_duplicates_keep_first(self):
        first = ParetoEntry(np.array([1.0]), np.array([1.0, 2.0]))
        second = ParetoEntry(np.array([9.0]), np.array([1.0, 2.0]))
        result = nondominated_filter([first, second])
        assert len(result) == 1
        assert result[0].control[0] == 1.0

    @given(
        st.lists(
            st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=25
        )
    )
    def test_filter_is_tight(self, objs):
        result = nondominated_filter(entries(objs))
        kept = result.objectives_array()
        # mutually nondominated
        for i in range(len(kept)):
            for j in range(len(kept)):
                if i != j:
                    assert not dominates(kept[i], kept[j])
        # every dropped point is dominated by (or duplicates) a kept one
        kept_set = {tuple(k) for k in kept}
        for o in objs:
            o = np.array(o, dtype=float)
            if tuple(o) not in kept_set:
                assert any(dominates(k, o) for k in kept)

    def test_sorted_by_first_objective(self):
        result = nondominated_filter(entries([(3, 0), (0, 3), (2, 1), (1, 2)]))
        j1 = result.objectives_array()[:, 0]
        assert np.all(np.diff(j1) > 0)


class TestHausdorff:
    def test_identical_sets(self):
        a = np.array([[0.0, 0.0], [1.0, 2.0]])
        assert hausdorff(a, a) == 0.0

    def test_three_four_five(self):
        assert hausdorff([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(5.0)

    def test_empty_raises(self):
        with pytest.raises(EmptySetError):
            hausdorff(np.zeros((0, 2)), [[1.0, 2.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            hausdorff([[1.0, 2.0]], [[1.0, 2.0, 3.0]])

    def test_metric_properties(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            a, b, c = (rng.normal(size=(rng.integers(1, 6), 2)) for _ in range(3))
            dab, dba = hausdorff(a, b), hausdorff(b, a)
            assert dab == dba >= 0.0
            assert hausdorff(a, c) <= dab + hausdorff(b, c) + 1e-12

    def test_zero_iff_equal_point_sets(self):
        a = [[0.0, 1.0], [1.0, 0.0]]
        b = [[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
        assert hausdorff(a, b) == 0.0
        assert hausdorff(a, [[0.0, 1.0]]) > 0.0

    def test_curve_variant_ignores_sampling(self):
        line_a = np.column_stack([np.linspace(0, 1, 5), np.linspace(0, 1, 5)])
        line_b = np.column_stack([np.linspace(0, 1, 9), np.linspace(0, 1, 9)])
        assert hausdorff_curve(line_a, line_b) < 1e-12
        assert hausdorff(line_a, line_b) > 0.05


class TestProperFilter:
    def test_tail_removed(self):
        front = ParetoSet(entries([(0, 1), (0.5, 0.5), (1, 0.49)]))
        result = proper_filter(front, eps=0.05)
        assert [tuple(e.objectives) for e in result] == [(0, 1), (0.5, 0.5)]

    def test_uniform_tradeoff_unchanged(self):
        j1 = np.linspace(0, 1, 20)
        front = ParetoSet(entries(np.column_stack([j1, 1 - j1])))
        assert len(proper_filter(front, eps=0.05)) == 20

    def test_short_front_unchanged(self):
        front = ParetoSet(entries([(0, 1)]))
        assert proper_filter(front, eps=0.05) is front

    def test_at_least_two_retained(self):
        front = ParetoSet(entries([(0, 1), (0.9, 0.5), (0.95, 0.49), (0.96, 0.489)]))
        result = proper_filter(front, eps=0.4)
        assert [tuple(e.objectives) for e in result] == [(0, 1), (0.9, 0.5)]

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        j1 = np.sort(rng.uniform(0, 1, 15))
        j2 = np.sort(rng.uniform(0, 1, 15))[::-1]
        front = nondominated_filter(entries(np.column_stack([j1, j2])))
        once = proper_filter(front, eps=0.05)
        twice = proper_filter(once, eps=0.05)
        assert [tuple(e.objectives) for e in once] == [tuple(e.objectives) for e in twice]

    def test_eps_validation(self):
        front = ParetoSet(entries([(0, 1), (1, 0)]))
        with pytest.raises(ValueError):
            proper_filter(front, eps=0.6)

    def test_requires_two_objectives(self):
        front = ParetoSet(entries([(0, 1, 2), (1, 0, 2)]))
        with pytest.raises(DimensionMismatchError):
            proper_filter(front, eps=0.05)


class TestSelectByWeight:
    def front(self, m=20):
        j1 = np.arange(m, dtype=float)
        return ParetoSet(entries(np.column_stack([j1, m - 1 - j1])))

    def test_extremes_and_midpoint(self):
        front = self.front(20)
        assert select_by_weight(front, 1.0) is front[19]
        assert select_by_weight(front, 0.0) is front[0]
        assert select_by_weight(front, 0.5) is front[10]  # 9.5 rounds half up

    def test_clamp_warns(self):
        front = self.front(5)
        with pytest.warns(UserWarning):
            entry = select_by_weight(front, 1.5)
        assert entry is front[4]

    def test_monotone_in_rho(self):
        front = self.front(13)
        values = [select_by_weight(front, r).objectives[0] for r in np.linspace(0, 1, 40)]
        assert np.all(np.diff(values) >= 0)

    def test_empty_raises(self):
        with pytest.raises(EmptySetError):
            select_by_weight(ParetoSet([]), 0.5)

    def test_select_index_matches(self):
        front = self.front(7)
        for rho in np.linspace(0, 1, 11):
            assert front[select_index(7, rho)] is select_by_weight(front, rho)
