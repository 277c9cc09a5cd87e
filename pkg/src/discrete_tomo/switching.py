"""Switching components and the uniqueness tests built on them.

A switching component for directions ``S`` is a pair of nonnegative
weighted sets with equal X-rays along every direction of ``S``.  The
product construction runs over integer-weighted functions and splits the
result into positive and negative parts at the end, so translates that
land on the same point are handled by cancellation instead of being lost.
"""

import heapq
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.typing as npt

from discrete_tomo.core import (
    Box,
    Direction,
    Instance,
    Point,
    WeightedLatticeSet,
    directions_from,
    line_intersection,
    xray,
    xray_difference,
)
from discrete_tomo.errors import (
    DimensionMismatchError,
    InstanceSchemaError,
    InvalidDirectionError,
    InvariantViolationError,
)

logger = logging.getLogger(__name__)

FORBIDDEN_CROSS_RATIOS = frozenset(
    {Fraction(4, 3), Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4)}
)


@dataclass(frozen=True)
class SwitchingPair:
    """Two nonnegative weighted sets meant to share their X-rays along ``directions``."""

    plus: WeightedLatticeSet
    minus: WeightedLatticeSet
    directions: tuple[Direction, ...]

    def is_valid(self) -> bool:
        """Disjoint supports, equal total weight and equal X-rays."""
        if set(self.plus.support) & set(self.minus.support):
            return False
        if not (self.plus.is_nonnegative() and self.minus.is_nonnegative()):
            return False
        if self.plus.total_weight() != self.minus.total_weight():
            return False
        return tomographically_equivalent(self.plus, self.minus, self.directions)

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "directions": [list(s.v) for s in self.directions],
            "plus": self.plus.to_dict(),
            "minus": self.minus.to_dict(),
        }


def sign_split(psi: WeightedLatticeSet) -> tuple[WeightedLatticeSet, WeightedLatticeSet]:
    """``(psi+, psi-)`` with ``psi = psi+ - psi-``, both nonnegative."""
    plus = psi.positive_part()
    return plus, plus - psi


def product_polynomial(dirs: Sequence[Direction]) -> WeightedLatticeSet:
    """Coefficients of the Laurent polynomial ``prod_i (1 - X^{v_i})``."""
    if not dirs:
        raise InvalidDirectionError("at least one direction is required")
    dim = dirs[0].dim
    if any(s.dim != dim for s in dirs):
        raise DimensionMismatchError("directions differ in dimension")
    psi = WeightedLatticeSet(dim, {(0,) * dim: 1})
    for s in dirs:
        psi = psi - psi.translate(s.v)
    return psi


def zonotope_switching(
    dirs: Sequence[Direction], base: Sequence[int] | None = None
) -> SwitchingPair:
    """The switching component spanned by *dirs*, translated to *base*.

    Each class carries weight ``2**(m-1)`` before cancellation; where an
    even and an odd subset of *dirs* sum to the same vector the two
    contributions cancel and both classes lose that weight.
    """
    dirs = directions_from(s.v for s in dirs)
    psi = product_polynomial(dirs)
    if base is not None:
        psi = psi.translate(base)
    plus, minus = sign_split(psi)
    logger.debug(
        "zonotope_switching: %d directions, %d+%d support points",
        len(dirs),
        len(plus),
        len(minus),
    )
    return SwitchingPair(plus, minus, dirs)


def tomographically_equivalent(
    f1: WeightedLatticeSet, f2: WeightedLatticeSet, dirs: Sequence[Direction]
) -> bool:
    if f1.dim != f2.dim:
        raise DimensionMismatchError(f"dimensions {f1.dim} and {f2.dim} differ")
    return all(xray(f1, s) == xray(f2, s) for s in dirs)


# ---------------------------------------------------------------------------
# Polynomial divisibility
# ---------------------------------------------------------------------------


def divisibility_check(
    psi: WeightedLatticeSet, phi: WeightedLatticeSet, v: Direction
) -> bool:
    """True iff ``sum X^a - sum X^b`` is divisible by ``X^{v+} - X^{v-}``.

    The remainder is computed by reducing monomials in decreasing lex
    order, which terminates because ``v`` is lex-positive.  The verdict is
    cross-checked against equality of the X-rays along ``v``.
    """
    if psi.dim != phi.dim or psi.dim != v.dim:
        raise DimensionMismatchError("psi, phi and v must share their dimension")
    for name, f in (("psi", psi), ("phi", phi)):
        if any(c < 0 for p in f.support for c in p):
            raise InstanceSchemaError("points must lie in the nonnegative orthant", field=name)

    v_plus = tuple(max(c, 0) for c in v.v)
    poly: dict[Point, int] = dict((psi - phi).entries)
    heap = [tuple(-c for c in p) for p in poly]
    heapq.heapify(heap)
    remainder = False
    while heap:
        p = tuple(-c for c in heapq.heappop(heap))
        coef = poly.pop(p, 0)
        if not coef:
            continue
        if all(a >= b for a, b in zip(p, v_plus, strict=True)):
            q = tuple(a - b for a, b in zip(p, v.v, strict=True))
            if q not in poly:
                heapq.heappush(heap, tuple(-c for c in q))
            poly[q] = poly.get(q, 0) + coef
        else:
            remainder = True
            break
    divisible = not remainder

    equal = xray(psi, v) == xray(phi, v)
    if divisible != equal:
        raise InvariantViolationError(
            f"divisibility ({divisible}) and X-ray equality ({equal}) disagree along {v}"
        )
    return divisible


# ---------------------------------------------------------------------------
# Cross-ratio of four directions
# ---------------------------------------------------------------------------


def _planar(dirs: Sequence[Direction]) -> list[tuple[int, int]]:
    if dirs[0].dim == 2:
        return [(s.v[0], s.v[1]) for s in dirs]
    matrix = np.array([s.v for s in dirs], dtype=np.int64)
    if np.linalg.matrix_rank(matrix) != 2:
        raise InvalidDirectionError("directions are not coplanar")
    d = dirs[0].dim
    for a in range(d):
        for b in range(a + 1, d):
            minor = matrix[:, [a, b]]
            if np.linalg.matrix_rank(minor) == 2:
                return [(int(x), int(y)) for x, y in minor.tolist()]
    raise InvalidDirectionError("directions are not coplanar")


def cross_ratio(dirs: Sequence[Direction]) -> Fraction:
    """Cross-ratio of the slopes of four coplanar directions (vertical slopes included)."""
    if len(dirs) != 4:
        raise InvalidDirectionError(f"four directions expected, got {len(dirs)}")
    if len(set(dirs)) != 4:
        raise InvalidDirectionError("directions must be distinct")
    p = _planar(dirs)

    def det(i: int, j: int) -> int:
        return p[i][0] * p[j][1] - p[i][1] * p[j][0]

    den = det(1, 2) * det(0, 3)
    if det(0, 2) * det(1, 3) == 0 or den == 0:
        raise InvalidDirectionError("two of the directions are parallel")
    return Fraction(det(0, 2) * det(1, 3), den)


def cross_ratio_orbit(lam: Fraction) -> frozenset[Fraction]:
    """The six values a cross-ratio takes under reordering of its four slopes."""
    return frozenset(
        {lam, 1 / lam, 1 - lam, 1 / (1 - lam), lam / (lam - 1), (lam - 1) / lam}
    )


def good_four_cross_ratio(dirs: Sequence[Direction]) -> bool:
    """True iff no reordering of the slopes gives a cross-ratio in {4/3, 3/2, 2, 3, 4}."""
    orbit = cross_ratio_orbit(cross_ratio(dirs))
    return not (orbit & FORBIDDEN_CROSS_RATIOS)


# ---------------------------------------------------------------------------
# Uniqueness
# ---------------------------------------------------------------------------


def find_switch_in(
    f: WeightedLatticeSet, dirs: Sequence[Direction]
) -> tuple[Point, Point, Point, Point] | None:
    """An interchange ``(p, q, r, s)`` with ``p, q`` in *f* and ``r, s`` outside.

    ``r`` is where the ``v``-line of ``p`` meets the ``w``-line of ``q``, ``s``
    where the ``w``-line of ``p`` meets the ``v``-line of ``q``.  Swapping
    ``{p, q}`` for ``{r, s}`` keeps both X-rays.  None when *f* is unique.
    """
    if len(dirs) != 2:
        raise InvalidDirectionError(f"two directions expected, got {len(dirs)}")
    v, w = dirs
    pts = sorted(f.support)
    members = set(pts)
    for n, p in enumerate(pts):
        for q in pts[n + 1 :]:
            r = line_intersection(p, v, q, w)
            if r is None or r in members:
                continue
            s = line_intersection(p, w, q, v)
            if s is None or s in members:
                continue
            return p, q, r, s
    return None


def renyi_uniqueness_check(
    f: WeightedLatticeSet, dirs: Sequence[Direction], box: Box
) -> bool:
    """True iff no other subset of *box* has the X-rays of *f* along *dirs*."""
    from discrete_tomo.recon2 import guarded_grid, iter_solutions

    instance = Instance.from_set(f, dirs)
    for solution in iter_solutions(instance, guarded_grid(instance, box)):
        if solution != f:
            return False
    return True


# ---------------------------------------------------------------------------
# Real-coordinate fixture: the regular 2m-gon
# ---------------------------------------------------------------------------


def polygon_two_coloring(
    m: int,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Vertices of the regular ``2m``-gon split by parity, and its ``m`` edge directions.

    The two colour classes have equal X-rays along every edge direction.
    """
    if m < 1:
        raise ValueError("m must be positive")
    angles = np.pi * np.arange(2 * m) / m
    vertices = np.column_stack([np.cos(angles), np.sin(angles)])
    edges = np.roll(vertices, -1, axis=0)[:m] - vertices[:m]
    edges /= np.linalg.norm(edges, axis=1, keepdims=True)
    return vertices[0::2], vertices[1::2], edges


def real_xray_equal(
    x: npt.ArrayLike, y: npt.ArrayLike, dirs: npt.ArrayLike, tol: float = 1e-9
) -> bool:
    """Equal X-rays of two finite point sets in the plane, up to *tol*."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        return False
    for d in np.asarray(dirs, dtype=np.float64):
        normal = np.array([-d[1], d[0]]) / math.hypot(d[0], d[1])
        if not np.allclose(np.sort(a @ normal), np.sort(b @ normal), atol=tol, rtol=0.0):
            return False
    return True


def difference_profile(
    f1: WeightedLatticeSet, f2: WeightedLatticeSet, dirs: Sequence[Direction]
) -> list[int]:
    """Per-direction l1 distances whose sum is the X-ray difference."""
    out = [(xray(f1, s) - xray(f2, s)).l1_norm() for s in dirs]
    if sum(out) != xray_difference(f1, f2, dirs):
        raise InvariantViolationError("per-direction distances do not add up")
    return out
