"""Tests for the X-ray jump, noisy uniqueness bounds and convex lattice sets."""

from collections.abc import Generator
from itertools import combinations

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _reset_settings() -> Generator[None, None, None]:
    """Drop cached settings between tests."""
    from discrete_tomo.config import reset_settings

    reset_settings()
    yield
    reset_settings()


def _subsets(n: int, sizes: range) -> list[frozenset[tuple[int, int]]]:
    pts = [(i, j) for i in range(n) for j in range(n)]
    return [frozenset(c) for k in sizes for c in combinations(pts, k)]


class TestJump:
    """Nonzero X-ray differences of equal-size sets are at least 2(m-1)."""

    def test_bound(self) -> None:
        from discrete_tomo.stability import jump_bound

        assert jump_bound(2) == 2
        assert jump_bound(3) == 4

    def test_small_sets(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.stability import check_jump

        dirs = directions_from([(1, 0), (0, 1), (1, 1)])
        for k in (1, 2):
            sets = [WeightedLatticeSet.from_points(s) for s in _subsets(3, range(k, k + 1))]
            for a, b in combinations(sets, 2):
                assert check_jump(a, b, dirs)

    @pytest.mark.slow
    def test_every_pair_in_3x3(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.stability import check_jump

        dirs = directions_from([(1, 0), (0, 1), (1, 1)])
        for k in range(1, 9):
            sets = [WeightedLatticeSet.from_points(s) for s in _subsets(3, range(k, k + 1))]
            for a, b in combinations(sets, 2):
                assert check_jump(a, b, dirs)

    def test_unequal_sizes_rejected(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.stability import check_jump

        with pytest.raises(DimensionMismatchError):
            check_jump(
                WeightedLatticeSet.from_points([(0, 0)]),
                WeightedLatticeSet.from_points([(0, 0), (1, 1)]),
                directions_from([(1, 0), (0, 1)]),
            )


class TestStableRenyi:
    """Small sets survive small X-ray errors."""

    def test_far_pair_does_not_apply(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.stability import stable_renyi_applies, stable_renyi_holds

        dirs = directions_from([(1, 0), (0, 1), (1, 1)])
        a = WeightedLatticeSet.from_points([(0, 0)])
        b = WeightedLatticeSet.from_points([(1, 1)])
        assert not stable_renyi_applies(a, b, dirs)
        assert stable_renyi_holds(a, b, dirs)

    def test_identical_sets_apply(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.stability import stable_renyi_applies, stable_renyi_holds

        dirs = directions_from([(1, 0), (0, 1), (1, 1)])
        a = WeightedLatticeSet.from_points([(0, 0), (2, 1)])
        assert stable_renyi_applies(a, a, dirs)
        assert stable_renyi_holds(a, a, dirs)

    def test_holds_for_all_small_pairs(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.stability import stable_renyi_holds

        dirs = directions_from([(1, 0), (0, 1), (1, 1)])
        sets = [WeightedLatticeSet.from_points(s) for s in _subsets(3, range(1, 3))]
        for a in sets:
            for b in sets:
                if len(a) <= len(b):
                    assert stable_renyi_holds(a, b, dirs)


class TestDalenBound:
    """Overlap bound for two directions."""

    def test_identical_sets(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet
        from discrete_tomo.recon2 import COLUMNS, ROWS
        from discrete_tomo.stability import dalen_bound_holds

        a = WeightedLatticeSet.from_points([(0, 0), (0, 1), (1, 0)])
        assert dalen_bound_holds(a, a, [ROWS, COLUMNS])

    def test_random_pairs_with_unique_first_set(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet
        from discrete_tomo.recon2 import COLUMNS, ROWS, unique2
        from discrete_tomo.stability import dalen_bound_holds

        rng = np.random.default_rng(3)
        checked = 0
        for _ in range(300):
            a = WeightedLatticeSet.from_points(
                {(int(i), int(j)) for i, j in rng.integers(0, 4, size=(5, 2))}
            )
            b_pts: set[tuple[int, int]] = set()
            while len(b_pts) < len(a):
                i, j = rng.integers(0, 4, size=2)
                b_pts.add((int(i), int(j)))
            b = WeightedLatticeSet.from_points(b_pts)
            if unique2(a, [ROWS, COLUMNS]):
                checked += 1
            assert dalen_bound_holds(a, b, [ROWS, COLUMNS])
        assert checked > 0

    def test_needs_two_directions(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.stability import dalen_bound_holds

        a = WeightedLatticeSet.from_points([(0, 0)])
        with pytest.raises(DimensionMismatchError):
            dalen_bound_holds(a, a, directions_from([(1, 0), (0, 1), (1, 1)]))


class TestConvexLatticeSets:
    """Convexity test and enumeration."""

    @pytest.mark.parametrize(
        ("points", "expected"),
        [
            ([(0, 0), (0, 1), (1, 0), (1, 1)], True),
            ([(0, 0), (0, 1), (1, 0)], True),
            ([(0, 0), (0, 2)], False),
            ([(0, 0), (1, 2)], True),
            ([(0, 0), (2, 1)], True),
            ([(0, 0), (0, 1), (0, 2), (1, 0), (1, 2)], False),
        ],
    )
    def test_examples(self, points: list[tuple[int, int]], expected: bool) -> None:
        from discrete_tomo.core import WeightedLatticeSet
        from discrete_tomo.stability import is_convex_lattice_set

        assert is_convex_lattice_set(WeightedLatticeSet.from_points(points)) == expected

    def test_hull(self) -> None:
        from discrete_tomo.stability import convex_hull

        pts = [(0, 0), (2, 0), (1, 1), (2, 2), (0, 2), (1, 0)]
        assert convex_hull(pts) == [(0, 0), (2, 0), (2, 2), (0, 2)]

    def test_every_subset_of_2x2_is_convex(self) -> None:
        from discrete_tomo.core import Box
        from discrete_tomo.stability import convex_lattice_sets

        assert len(list(convex_lattice_sets(Box.square(2)))) == 15

    def test_enumeration_matches_filter(self) -> None:
        from discrete_tomo.core import Box, WeightedLatticeSet
        from discrete_tomo.stability import convex_lattice_sets, is_convex_lattice_set

        expected = {
            WeightedLatticeSet.from_points(s)
            for s in _subsets(3, range(1, 10))
            if is_convex_lattice_set(WeightedLatticeSet.from_points(s))
        }
        found = list(convex_lattice_sets(Box.square(3)))
        assert len(found) == len(set(found))
        assert set(found) == expected

    def test_good_directions_separate_convex_sets(self) -> None:
        from discrete_tomo.core import Box, directions_from, xray
        from discrete_tomo.stability import convex_lattice_sets

        dirs = directions_from([(1, 0), (1, 1), (1, 2), (1, 5)])
        seen: set[tuple[object, ...]] = set()
        for f in convex_lattice_sets(Box.square(4)):
            key = tuple(xray(f, s) for s in dirs)
            assert key not in seen
            seen.add(key)

    @pytest.mark.slow
    def test_good_directions_separate_convex_sets_5x5(self) -> None:
        from discrete_tomo.core import Box, directions_from, xray
        from discrete_tomo.stability import convex_lattice_sets

        dirs = directions_from([(1, 0), (1, 1), (1, 2), (1, 5)])
        seen: set[tuple[object, ...]] = set()
        for f in convex_lattice_sets(Box.square(5)):
            key = tuple(xray(f, s) for s in dirs)
            assert key not in seen
            seen.add(key)

    def test_rejects_spatial_sets(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.stability import is_convex_lattice_set

        with pytest.raises(DimensionMismatchError):
            is_convex_lattice_set(WeightedLatticeSet.from_points([(0, 0, 0)]))
