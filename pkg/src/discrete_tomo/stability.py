"""Stability of reconstruction under noisy X-rays, and convex lattice sets.

The X-ray difference between two sets of equal size is either zero or at
least ``2(m-1)``; the predicates here evaluate that jump and the noisy
uniqueness statements that follow from it for explicit pairs of sets.
"""

import logging
from collections.abc import Iterator, Sequence
from itertools import product

from discrete_tomo.core import Box, Direction, Point, WeightedLatticeSet, xray_difference
from discrete_tomo.errors import DimensionMismatchError

logger = logging.getLogger(__name__)


def jump_bound(m: int) -> int:
    """Smallest nonzero X-ray difference of equal-size sets along *m* directions."""
    return 2 * (m - 1)


def _same_size(f1: WeightedLatticeSet, f2: WeightedLatticeSet) -> None:
    if len(f1) != len(f2):
        raise DimensionMismatchError(f"sets of size {len(f1)} and {len(f2)} are not comparable")


def check_jump(f1: WeightedLatticeSet, f2: WeightedLatticeSet, dirs: Sequence[Direction]) -> bool:
    """True iff the X-ray difference of *f1*, *f2* is 0 or at least ``2(m-1)``."""
    _same_size(f1, f2)
    delta = xray_difference(f1, f2, dirs)
    return delta == 0 or delta >= jump_bound(len(dirs))


def stable_renyi_applies(
    f1: WeightedLatticeSet, f2: WeightedLatticeSet, dirs: Sequence[Direction]
) -> bool:
    """Whether the noisy Rényi statement forces ``f1 == f2`` for this pair.

    It applies when the X-ray difference is below ``2|f1|`` and either
    ``|f1| = |f2|`` with ``|f1| + 1 <= m``, or ``|f1| <= |f2|`` with ``2|f1| <= m``.
    """
    m = len(dirs)
    n1, n2 = len(f1), len(f2)
    if xray_difference(f1, f2, dirs) >= 2 * n1:
        return False
    return (n1 == n2 and n1 + 1 <= m) or (n1 <= n2 and 2 * n1 <= m)


def stable_renyi_holds(
    f1: WeightedLatticeSet, f2: WeightedLatticeSet, dirs: Sequence[Direction]
) -> bool:
    return not stable_renyi_applies(f1, f2, dirs) or f1 == f2


def dalen_bound_holds(
    f1: WeightedLatticeSet, f2: WeightedLatticeSet, dirs: Sequence[Direction]
) -> bool:
    """Overlap bound for two directions when *f1* is uniquely determined.

    With ``i = |f1 ∩ f2|`` and ``b`` the X-ray difference:
    ``4i + (b+2)(b-1+sqrt(8i+(b-1)^2)) >= 4|f1|``, evaluated exactly.
    Pairs outside the hypotheses (``f1`` not unique) pass vacuously.
    """
    from discrete_tomo.recon2 import unique2

    if len(dirs) != 2:
        raise DimensionMismatchError(f"two directions expected, got {len(dirs)}")
    _same_size(f1, f2)
    if not unique2(f1, dirs):
        logger.debug("dalen_bound_holds: first set is not unique, bound not applicable")
        return True
    common = len(set(f1.support) & set(f2.support))
    b = xray_difference(f1, f2, dirs)
    rest = 4 * len(f1) - 4 * common - (b + 2) * (b - 1)
    if rest <= 0:
        return True
    return (b + 2) ** 2 * (8 * common + (b - 1) ** 2) >= rest * rest


# ---------------------------------------------------------------------------
# Convex lattice sets
# ---------------------------------------------------------------------------


def _cross(o: Point, a: Point, b: Point) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[Point]) -> list[Point]:
    """Counter-clockwise hull vertices (monotone chain); collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _in_hull(hull: list[Point], p: Point) -> bool:
    if len(hull) == 1:
        return p == hull[0]
    if len(hull) == 2:
        a, b = hull
        return (
            _cross(a, b, p) == 0
            and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
        )
    return all(_cross(hull[k], hull[(k + 1) % len(hull)], p) >= 0 for k in range(len(hull)))


def is_convex_lattice_set(f: WeightedLatticeSet) -> bool:
    """True iff *f* is a planar set equal to ``conv(f) ∩ Z^2``."""
    if f.dim != 2:
        raise DimensionMismatchError("convexity is checked for planar sets only")
    if not f.is_binary():
        return False
    if len(f) == 0:
        return True
    hull = convex_hull(list(f.support))
    box = Box.bounding(hull)
    members = set(f.support)
    return all((p in members) == _in_hull(hull, p) for p in box.points())


def convex_lattice_sets(box: Box) -> Iterator[WeightedLatticeSet]:
    """Every nonempty convex lattice set inside the planar *box*.

    Each row of a convex lattice set is an interval, possibly empty between
    the first and last occupied rows; candidates are enumerated that way and
    filtered by convexity.
    """
    if box.dim != 2:
        raise DimensionMismatchError("convex lattice sets are enumerated in the plane")
    (r0, c0), (r1, c1) = box.lo, box.hi
    intervals: list[tuple[int, int] | None] = [
        (a, b) for a in range(c0, c1 + 1) for b in range(a, c1 + 1)
    ]
    options = [*intervals, None]
    count = 0
    for top in range(r0, r1 + 1):
        for bottom in range(top, r1 + 1):
            for rows in product(options, repeat=bottom - top + 1):
                if rows[0] is None or rows[-1] is None:
                    continue
                points = [
                    (top + k, c)
                    for k, row in enumerate(rows)
                    if row is not None
                    for c in range(row[0], row[1] + 1)
                ]
                candidate = WeightedLatticeSet.from_points(points, dim=2)
                if is_convex_lattice_set(candidate):
                    count += 1
                    yield candidate
    logger.info("convex_lattice_sets: %d sets in box %s..%s", count, box.lo, box.hi)
