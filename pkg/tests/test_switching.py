"""Tests for switching components, divisibility, cross-ratios and uniqueness checks."""

from collections.abc import Generator
from fractions import Fraction
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


def _small_directions() -> list[tuple[int, int]]:
    """Canonical primitive planar directions with entries in ``[-2, 2]``."""
    return [(0, 1), (1, 0), (1, 1), (1, -1), (1, 2), (1, -2), (2, 1), (2, -1)]


# ---------------------------------------------------------------------------
# Switching components
# ---------------------------------------------------------------------------


class TestZonotopeSwitching:
    """Product construction of switching components."""

    def test_axis_polynomial(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import product_polynomial

        psi = product_polynomial(directions_from([(1, 0), (0, 1)]))
        assert dict(psi.entries) == {(0, 0): 1, (0, 1): -1, (1, 0): -1, (1, 1): 1}

    def test_axis_component(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import zonotope_switching

        pair = zonotope_switching(directions_from([(1, 0), (0, 1)]), base=(2, 3))
        assert pair.plus.support == ((2, 3), (3, 4))
        assert pair.minus.support == ((2, 4), (3, 3))
        assert pair.is_valid()

    def test_generic_directions_keep_full_weight(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import zonotope_switching

        pair = zonotope_switching(directions_from([(1, 0), (0, 1), (1, 3)]))
        assert pair.plus.total_weight() == 4
        assert pair.minus.total_weight() == 4

    def test_cancelling_translates(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import zonotope_switching

        pair = zonotope_switching(directions_from([(1, 0), (0, 1), (1, 1)]))
        assert pair.plus.total_weight() == 3
        assert pair.is_valid()

    @pytest.mark.parametrize("size", [2, 3, 4, 5, 6])
    def test_every_small_direction_set(self, size: int) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import zonotope_switching

        for vectors in combinations(_small_directions(), size):
            pair = zonotope_switching(directions_from(vectors))
            assert pair.is_valid()
            assert pair.plus.total_weight() <= 2 ** (size - 1)

    def test_corrupted_pair_is_invalid(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.switching import SwitchingPair, zonotope_switching

        pair = zonotope_switching(directions_from([(1, 0), (0, 1)]))
        moved = SwitchingPair(
            pair.plus, pair.minus + WeightedLatticeSet.from_points([(5, 5)]), pair.directions
        )
        assert not moved.is_valid()

    def test_to_dict_keys(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import zonotope_switching

        doc = zonotope_switching(directions_from([(1, 0), (0, 1)])).to_dict()
        assert set(doc) == {"directions", "plus", "minus"}
        assert doc["directions"] == [[1, 0], [0, 1]]

    def test_equivalence_dimension_mismatch(self) -> None:
        from discrete_tomo.core import Direction, WeightedLatticeSet
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.switching import tomographically_equivalent

        with pytest.raises(DimensionMismatchError):
            tomographically_equivalent(
                WeightedLatticeSet.from_points([(0, 0)]),
                WeightedLatticeSet.from_points([(0, 0, 0)]),
                [Direction((1, 0))],
            )


# ---------------------------------------------------------------------------
# Divisibility
# ---------------------------------------------------------------------------


class TestDivisibility:
    """Polynomial remainder against X-ray equality."""

    def test_axis_switch(self) -> None:
        from discrete_tomo.core import Direction, WeightedLatticeSet
        from discrete_tomo.switching import divisibility_check

        psi = WeightedLatticeSet.from_points([(0, 0), (1, 1)])
        phi = WeightedLatticeSet.from_points([(1, 0), (0, 1)])
        assert divisibility_check(psi, phi, Direction((1, 0)))
        assert divisibility_check(psi, phi, Direction((0, 1)))
        assert not divisibility_check(psi, phi, Direction((1, 1)))

    def test_spatial(self) -> None:
        from discrete_tomo.core import Direction, WeightedLatticeSet
        from discrete_tomo.switching import divisibility_check

        psi = WeightedLatticeSet.from_points([(0, 0, 1)])
        phi = WeightedLatticeSet.from_points([(0, 0, 0)])
        assert divisibility_check(psi, phi, Direction((0, 0, 1)))
        assert not divisibility_check(psi, phi, Direction((1, 0, 0)))

    def test_random_and_switched_pairs(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from, xray
        from discrete_tomo.switching import divisibility_check, zonotope_switching

        rng = np.random.default_rng(17)
        dirs = directions_from(_small_directions())
        agreeing = 0
        for trial in range(1000):
            v = dirs[int(rng.integers(len(dirs)))]
            size = int(rng.integers(1, 5))
            pts = rng.integers(3, 8, size=(size, 2)).tolist()
            weights = rng.integers(1, 4, size=size).tolist()
            psi = WeightedLatticeSet(2, {tuple(p): w for p, w in zip(pts, weights, strict=True)})
            if trial % 2:
                # slide every point along v: same X-ray in that direction
                phi = WeightedLatticeSet(2, {})
                for p, w in psi.entries.items():
                    step = int(rng.integers(-1, 2))
                    moved = tuple(a + step * b for a, b in zip(p, v.v, strict=True))
                    phi = phi + WeightedLatticeSet(2, {moved: w})
            else:
                others = rng.integers(3, 8, size=(size, 2)).tolist()
                phi = WeightedLatticeSet(
                    2, {tuple(p): w for p, w in zip(others, weights, strict=True)}
                )
            expected = xray(psi, v) == xray(phi, v)
            agreeing += expected
            assert divisibility_check(psi, phi, v) == expected
        assert 500 <= agreeing < 1000
        for vectors in combinations(_small_directions(), 3):
            pair = zonotope_switching(directions_from(vectors), base=(6, 6))
            for v in pair.directions:
                assert divisibility_check(pair.plus, pair.minus, v)

    def test_rejects_negative_coordinates(self) -> None:
        from discrete_tomo.core import Direction, WeightedLatticeSet
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.switching import divisibility_check

        with pytest.raises(InstanceSchemaError):
            divisibility_check(
                WeightedLatticeSet.from_points([(-1, 0)]),
                WeightedLatticeSet.from_points([(0, 0)]),
                Direction((1, 0)),
            )


# ---------------------------------------------------------------------------
# Cross-ratios
# ---------------------------------------------------------------------------


class TestCrossRatio:
    """Cross-ratio of four slopes."""

    def test_good_set(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import cross_ratio, good_four_cross_ratio

        dirs = directions_from([(1, 0), (1, 1), (1, 2), (1, 5)])
        assert cross_ratio(dirs) == Fraction(8, 5)
        assert good_four_cross_ratio(dirs)

    def test_bad_set(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.switching import cross_ratio, good_four_cross_ratio

        dirs = directions_from([(1, 0), (1, 1), (1, 2), (0, 1)])
        assert cross_ratio(dirs) == 2
        assert not good_four_cross_ratio(dirs)

    def test_orbit(self) -> None:
        from discrete_tomo.switching import cross_ratio_orbit

        assert cross_ratio_orbit(Fraction(2)) == {Fraction(2), Fraction(1, 2), Fraction(-1)}

    def test_needs_four_directions(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.errors import InvalidDirectionError
        from discrete_tomo.switching import cross_ratio

        with pytest.raises(InvalidDirectionError):
            cross_ratio(directions_from([(1, 0), (0, 1), (1, 1)]))

    def test_rejects_non_coplanar(self) -> None:
        from discrete_tomo.core import directions_from
        from discrete_tomo.errors import InvalidDirectionError
        from discrete_tomo.switching import cross_ratio

        with pytest.raises(InvalidDirectionError):
            cross_ratio(directions_from([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]))


# ---------------------------------------------------------------------------
# Uniqueness checks
# ---------------------------------------------------------------------------


class TestFindSwitch:
    """Interchanges inside a set."""

    def test_diagonal(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet
        from discrete_tomo.recon2 import COLUMNS, ROWS
        from discrete_tomo.switching import find_switch_in, tomographically_equivalent

        psi = WeightedLatticeSet.from_points([(0, 0), (1, 1)])
        switch = find_switch_in(psi, [ROWS, COLUMNS])
        assert switch == ((0, 0), (1, 1), (0, 1), (1, 0))
        _, _, r, s = switch
        swapped = WeightedLatticeSet.from_points([r, s])
        assert tomographically_equivalent(psi, swapped, [ROWS, COLUMNS])

    def test_full_square_has_none(self) -> None:
        from discrete_tomo.core import Box, WeightedLatticeSet
        from discrete_tomo.recon2 import COLUMNS, ROWS
        from discrete_tomo.switching import find_switch_in

        square = WeightedLatticeSet.from_points(Box.square(2).points())
        assert find_switch_in(square, [ROWS, COLUMNS]) is None


class TestRenyi:
    """Few points are determined by more directions."""

    def test_small_sets_are_unique(self) -> None:
        from discrete_tomo.core import Box, WeightedLatticeSet, directions_from
        from discrete_tomo.switching import renyi_uniqueness_check

        pool = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1), (1, 3), (3, 1)]
        rng = np.random.default_rng(31)
        for _ in range(1000):
            m = int(rng.integers(2, 6))
            dirs = directions_from([pool[i] for i in rng.choice(len(pool), size=m, replace=False)])
            size = int(rng.integers(1, m))
            pts = {tuple(p) for p in rng.integers(0, 6, size=(size, 2)).tolist()}
            psi = WeightedLatticeSet.from_points(pts)
            assert renyi_uniqueness_check(psi, dirs, Box.square(6))

    def test_switch_is_not_unique(self) -> None:
        from discrete_tomo.core import Box, WeightedLatticeSet
        from discrete_tomo.recon2 import COLUMNS, ROWS
        from discrete_tomo.switching import renyi_uniqueness_check

        psi = WeightedLatticeSet.from_points([(0, 0), (1, 1)])
        assert not renyi_uniqueness_check(psi, [ROWS, COLUMNS], Box.square(2))


class TestPolygon:
    """Regular polygon colour classes."""

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_equal_along_edges(self, m: int) -> None:
        from discrete_tomo.switching import polygon_two_coloring, real_xray_equal

        black, white, edges = polygon_two_coloring(m)
        assert black.shape == white.shape == (m, 2)
        assert edges.shape == (m, 2)
        assert real_xray_equal(black, white, edges)

    def test_differ_along_other_direction(self) -> None:
        from discrete_tomo.switching import polygon_two_coloring, real_xray_equal

        black, white, _ = polygon_two_coloring(3)
        assert not real_xray_equal(black, white, [[1.0, 0.3]])

    def test_rejects_zero(self) -> None:
        from discrete_tomo.switching import polygon_two_coloring

        with pytest.raises(ValueError):
            polygon_two_coloring(0)


class TestDifferenceProfile:
    """Per-direction X-ray distances."""

    def test_sums_to_difference(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet, directions_from
        from discrete_tomo.switching import difference_profile

        dirs = directions_from([(1, 0), (0, 1), (1, 1)])
        a = WeightedLatticeSet.from_points([(0, 0)])
        b = WeightedLatticeSet.from_points([(1, 1)])
        assert difference_profile(a, b, dirs) == [2, 2, 0]
