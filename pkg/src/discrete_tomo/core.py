"""Domain model: lattice directions, weighted lattice sets, X-rays and grids.

A *weighted lattice set* is a finitely supported function ``Z^d -> Z``; a
finite lattice set is the special case with all weights equal to 1.  The
X-ray of such a function along a direction ``v`` sums the weights on every
lattice line parallel to ``v``.

Lines are identified by a :data:`LineKey`:

* for ``d = 2`` and ``v = (v1, v2)`` the scalar ``v2*x1 - v1*x2``;
* for ``d >= 3`` the canonical point of the line, i.e. the point whose
  coordinate at the first nonzero index ``i`` of ``v`` lies in ``[0, v_i)``.

Both keys are exact integers and do not depend on the data.
"""

import logging
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import product
from math import gcd
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from typing import Self

import numpy as np
import numpy.typing as npt

from discrete_tomo.errors import DimensionMismatchError, InvalidDirectionError

logger = logging.getLogger(__name__)

Point = tuple[int, ...]
LineKey = int | tuple[int, ...]


# ---------------------------------------------------------------------------
# Directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Direction:
    """A reduced lattice direction whose first nonzero component is positive."""

    v: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.v) < 2:
            raise InvalidDirectionError(f"directions need d >= 2, got {self.v}")
        if not any(self.v):
            raise InvalidDirectionError("the zero vector is not a direction")
        if gcd(*self.v) != 1:
            raise InvalidDirectionError(f"direction {self.v} is not reduced")
        if self.v[self.leading_index] < 0:
            raise InvalidDirectionError(f"direction {self.v} is not sign-normalised")

    @property
    def dim(self) -> int:
        return len(self.v)

    @property
    def leading_index(self) -> int:
        """Index of the first nonzero component."""
        return next(i for i, c in enumerate(self.v) if c != 0)

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.v) + ")"


def canonical_direction(v: Sequence[int]) -> Direction:
    """Reduce *v* by the gcd of its entries and normalise its sign.

    ``(2, 4) -> (1, 2)``, ``(-1, 2) -> (1, -2)``.  Idempotent on directions.
    """
    comps = tuple(int(c) for c in v)
    if not any(comps):
        raise InvalidDirectionError("the zero vector is not a direction")
    g = gcd(*comps)
    comps = tuple(c // g for c in comps)
    lead = next(c for c in comps if c != 0)
    if lead < 0:
        comps = tuple(-c for c in comps)
    return Direction(comps)


def directions_from(vectors: Iterable[Sequence[int]]) -> tuple[Direction, ...]:
    """Canonicalise *vectors*, rejecting repeats (``S`` and ``-S`` count as equal)."""
    dirs = tuple(canonical_direction(v) for v in vectors)
    if len(set(dirs)) != len(dirs):
        raise InvalidDirectionError("directions must be distinct")
    return dirs


# ---------------------------------------------------------------------------
# Lines
# ---------------------------------------------------------------------------


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y = g = gcd(a, b) >= 0``."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        return -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def _canonical_point(p: Point, s: Direction) -> Point:
    i = s.leading_index
    t = p[i] // s.v[i]
    return tuple(pc - t * vc for pc, vc in zip(p, s.v, strict=True))


def line_key(p: Point, s: Direction) -> LineKey:
    """Key of the line through *p* parallel to *s*."""
    if len(p) != s.dim:
        raise DimensionMismatchError(f"point {p} and direction {s} differ in dimension")
    if s.dim == 2:
        return s.v[1] * p[0] - s.v[0] * p[1]
    return _canonical_point(p, s)


def line_anchor(key: LineKey, s: Direction) -> Point:
    """Canonical point of the line with *key* parallel to *s*."""
    if isinstance(key, tuple):
        return key
    v1, v2 = s.v
    _, a, b = _ext_gcd(v2, v1)
    return _canonical_point((a * key, -b * key), s)


def line_intersection(p: Point, v: Direction, q: Point, w: Direction) -> Point | None:
    """Lattice point where the line ``p + Zv`` meets ``q + Zw``, if any."""
    if v == w:
        return None
    det = 0
    i = j = 0
    for a in range(v.dim):
        for b in range(a + 1, v.dim):
            det = v.v[a] * w.v[b] - v.v[b] * w.v[a]
            if det:
                i, j = a, b
                break
        if det:
            break
    if not det:
        return None
    di = q[i] - p[i]
    dj = q[j] - p[j]
    num = di * w.v[j] - w.v[i] * dj
    if num % det:
        return None
    s = num // det
    point = tuple(pc + s * vc for pc, vc in zip(p, v.v, strict=True))
    if line_key(point, w) != line_key(q, w):
        return None
    return point


# ---------------------------------------------------------------------------
# Boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Inclusive axis-parallel integer box ``lo <= x <= hi``."""

    lo: Point
    hi: Point

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi):
            raise DimensionMismatchError("box corners differ in dimension")
        if any(a > b for a, b in zip(self.lo, self.hi, strict=True)):
            raise ValueError(f"empty box {self.lo}..{self.hi}")

    @classmethod
    def square(cls, n: int, dim: int = 2) -> "Self":
        """The box ``[0, n-1]^dim``."""
        return cls((0,) * dim, (n - 1,) * dim)

    @classmethod
    def bounding(cls, points: Iterable[Point]) -> "Self":
        pts = list(points)
        if not pts:
            raise ValueError("cannot bound an empty point set")
        cols = list(zip(*pts, strict=True))
        return cls(tuple(min(c) for c in cols), tuple(max(c) for c in cols))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi, strict=True))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def contains(self, p: Point) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, p, self.hi, strict=True))

    def points(self) -> Iterator[Point]:
        """All points of the box in lexicographic order."""
        ranges = [range(a, b + 1) for a, b in zip(self.lo, self.hi, strict=True)]
        return iter(product(*ranges))


# ---------------------------------------------------------------------------
# Weighted lattice sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedLatticeSet:
    """Finitely supported function ``Z^dim -> Z``; only nonzero weights are stored."""

    dim: int
    entries: Mapping[Point, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionMismatchError(f"dimension must be positive, got {self.dim}")
        clean: dict[Point, int] = {}
        for p, w in self.entries.items():
            q = tuple(int(c) for c in p)
            if len(q) != self.dim:
                raise DimensionMismatchError(f"point {p} is not {self.dim}-dimensional")
            if int(w):
                clean[q] = clean.get(q, 0) + int(w)
        object.__setattr__(self, "entries", {p: w for p, w in sorted(clean.items()) if w})

    def __hash__(self) -> int:
        return hash((self.dim, tuple(self.entries.items())))

    @classmethod
    def from_points(cls, points: Iterable[Sequence[int]], dim: int | None = None) -> "Self":
        """Set with weight 1 per listed point; repeated points add up."""
        counts = Counter(tuple(int(c) for c in p) for p in points)
        if dim is None:
            dim = len(next(iter(counts))) if counts else 2
        return cls(dim, dict(counts))

    @classmethod
    def empty(cls, dim: int = 2) -> "Self":
        return cls(dim, {})

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.entries)

    def __contains__(self, p: object) -> bool:
        return p in self.entries

    def weight(self, p: Point) -> int:
        return self.entries.get(p, 0)

    @property
    def support(self) -> tuple[Point, ...]:
        return tuple(self.entries)

    def total_weight(self) -> int:
        return sum(self.entries.values())

    def is_binary(self) -> bool:
        return all(w == 1 for w in self.entries.values())

    def is_nonnegative(self) -> bool:
        return all(w > 0 for w in self.entries.values())

    def _check(self, other: "WeightedLatticeSet") -> None:
        if other.dim != self.dim:
            raise DimensionMismatchError(f"dimensions {self.dim} and {other.dim} differ")

    def __add__(self, other: "WeightedLatticeSet") -> "WeightedLatticeSet":
        self._check(other)
        out = dict(self.entries)
        for p, w in other.entries.items():
            out[p] = out.get(p, 0) + w
        return WeightedLatticeSet(self.dim, out)

    def __neg__(self) -> "WeightedLatticeSet":
        return WeightedLatticeSet(self.dim, {p: -w for p, w in self.entries.items()})

    def __sub__(self, other: "WeightedLatticeSet") -> "WeightedLatticeSet":
        return self + (-other)

    def translate(self, u: Sequence[int]) -> "WeightedLatticeSet":
        """``psi(. - u)``: every support point moves by *u*."""
        if len(u) != self.dim:
            raise DimensionMismatchError(f"translation {tuple(u)} is not {self.dim}-dimensional")
        return WeightedLatticeSet(
            self.dim,
            {tuple(a + b for a, b in zip(p, u, strict=True)): w for p, w in self.entries.items()},
        )

    def positive_part(self) -> "WeightedLatticeSet":
        return WeightedLatticeSet(self.dim, {p: w for p, w in self.entries.items() if w > 0})

    def negative_part(self) -> "WeightedLatticeSet":
        """``max(-psi, 0)``, so that ``psi = positive_part - negative_part``."""
        return WeightedLatticeSet(self.dim, {p: -w for p, w in self.entries.items() if w < 0})

    def multiset(self) -> list[Point]:
        """Support points repeated by weight (nonnegative weights only)."""
        if not self.is_nonnegative():
            raise ValueError("multiset view needs nonnegative weights")
        return [p for p, w in self.entries.items() for _ in range(w)]

    def bounding_box(self) -> Box | None:
        return Box.bounding(self.entries) if self.entries else None

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "dim": self.dim,
            "points": [{"p": list(p), "w": w} for p, w in self.entries.items()],
        }


def from_image(image: npt.ArrayLike) -> WeightedLatticeSet:
    """Pixel ``a[i, j]`` becomes the point ``(i, j)`` with weight ``a[i, j]``.

    Along ``(0, 1)`` the X-ray then holds the row sums, along ``(1, 0)`` the
    column sums.
    """
    a = np.asarray(image)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D image, got shape {a.shape}")
    rows, cols = np.nonzero(a)
    return WeightedLatticeSet(
        2,
        {(int(i), int(j)): int(a[i, j]) for i, j in zip(rows, cols, strict=True)},
    )


def to_image(psi: WeightedLatticeSet, shape: tuple[int, int]) -> npt.NDArray[np.int64]:
    """Inverse of :func:`from_image`; every support point must fall inside *shape*."""
    if psi.dim != 2:
        raise DimensionMismatchError("only 2-D sets convert to images")
    out = np.zeros(shape, dtype=np.int64)
    for (i, j), w in psi.entries.items():
        if not (0 <= i < shape[0] and 0 <= j < shape[1]):
            raise DimensionMismatchError(f"point {(i, j)} lies outside an image of shape {shape}")
        out[i, j] = w
    return out


# ---------------------------------------------------------------------------
# X-rays
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DataFunction:
    """The X-ray of one direction: line key -> nonzero line sum."""

    direction: Direction
    lines: Mapping[LineKey, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {k: int(v) for k, v in self.lines.items() if int(v)}
        object.__setattr__(self, "lines", dict(sorted(clean.items())))

    def __hash__(self) -> int:
        return hash((self.direction, tuple(self.lines.items())))

    @classmethod
    def from_anchors(
        cls, direction: Direction, pairs: Iterable[tuple[Sequence[int], int]]
    ) -> "DataFunction":
        """Build from ``(point on line, value)`` pairs; values on a shared line add up."""
        lines: dict[LineKey, int] = {}
        for anchor, value in pairs:
            key = line_key(tuple(int(c) for c in anchor), direction)
            lines[key] = lines.get(key, 0) + int(value)
        return cls(direction, lines)

    @property
    def dim(self) -> int:
        return self.direction.dim

    def value(self, key: LineKey) -> int:
        return self.lines.get(key, 0)

    def at(self, p: Point) -> int:
        """Value on the line through *p*."""
        return self.lines.get(line_key(p, self.direction), 0)

    def anchor(self, key: LineKey) -> Point:
        return line_anchor(key, self.direction)

    def total(self) -> int:
        return sum(self.lines.values())

    def l1_norm(self) -> int:
        return sum(abs(v) for v in self.lines.values())

    def _combine(self, other: "DataFunction", sign: int) -> "DataFunction":
        if other.direction != self.direction:
            raise InvalidDirectionError(
                f"cannot combine X-rays along {self.direction} and {other.direction}"
            )
        out = dict(self.lines)
        for k, v in other.lines.items():
            out[k] = out.get(k, 0) + sign * v
        return DataFunction(self.direction, out)

    def __add__(self, other: "DataFunction") -> "DataFunction":
        return self._combine(other, 1)

    def __sub__(self, other: "DataFunction") -> "DataFunction":
        return self._combine(other, -1)

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "direction": list(self.direction.v),
            "lines": [
                {"anchor": list(self.anchor(k)), "value": v} for k, v in self.lines.items()
            ],
        }


def xray(psi: WeightedLatticeSet, s: Direction) -> DataFunction:
    """Discrete X-ray of *psi* parallel to *s*."""
    if psi.dim != s.dim:
        raise DimensionMismatchError(f"set of dimension {psi.dim} vs direction {s}")
    lines: dict[LineKey, int] = {}
    for p, w in psi.entries.items():
        k = line_key(p, s)
        lines[k] = lines.get(k, 0) + w
    return DataFunction(s, lines)


def xray_difference(
    f1: WeightedLatticeSet, f2: WeightedLatticeSet, dirs: Sequence[Direction]
) -> int:
    """Sum over *dirs* of the l1 distance between the X-rays of *f1* and *f2*."""
    if f1.dim != f2.dim:
        raise DimensionMismatchError(f"dimensions {f1.dim} and {f2.dim} differ")
    return sum((xray(f1, s) - xray(f2, s)).l1_norm() for s in dirs)


# ---------------------------------------------------------------------------
# Instances and grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """Tomographic input: one data function per direction."""

    directions: tuple[Direction, ...]
    data: tuple[DataFunction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "directions", tuple(self.directions))
        object.__setattr__(self, "data", tuple(self.data))
        if not self.directions:
            raise InvalidDirectionError("an instance needs at least one direction")
        if len(set(self.directions)) != len(self.directions):
            raise InvalidDirectionError("instance directions must be distinct")
        if len(self.data) != len(self.directions):
            raise DimensionMismatchError("one data function per direction is required")
        for s, f in zip(self.directions, self.data, strict=True):
            if f.direction != s:
                raise InvalidDirectionError(f"data function along {f.direction} listed for {s}")
        if len({s.dim for s in self.directions}) != 1:
            raise DimensionMismatchError("directions differ in dimension")

    @classmethod
    def from_data(cls, data: Iterable[DataFunction]) -> "Instance":
        fs = tuple(data)
        return cls(tuple(f.direction for f in fs), fs)

    @classmethod
    def from_set(cls, psi: WeightedLatticeSet, dirs: Iterable[Direction]) -> "Instance":
        """The exact X-ray data of *psi*."""
        return cls.from_data(xray(psi, s) for s in dirs)

    @property
    def dim(self) -> int:
        return self.directions[0].dim

    @property
    def m(self) -> int:
        return len(self.directions)

    @property
    def totals(self) -> tuple[int, ...]:
        return tuple(f.total() for f in self.data)

    @property
    def mass_consistent(self) -> bool:
        """Every data function carries the same total mass."""
        return len(set(self.totals)) <= 1

    def residual(self, psi: WeightedLatticeSet) -> int:
        """``sum_S ||X_S psi - f_S||_1``."""
        return sum((xray(psi, f.direction) - f).l1_norm() for f in self.data)

    def is_solution(self, psi: WeightedLatticeSet) -> bool:
        return all(xray(psi, f.direction) == f for f in self.data)

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "dim": self.dim,
            "directions": [list(s.v) for s in self.directions],
            "data": [f.to_dict() for f in self.data],
        }


def grid(instance: Instance, box: Box | None = None) -> list[Point]:
    """Points on a nonzero-data line of every direction, sorted.

    Every solution of *instance* is supported in the result.  With a single
    direction the grid is a union of lines, so a *box* is required.
    """
    if instance.m == 1:
        if box is None:
            raise InvalidDirectionError("the grid of a single direction is unbounded; pass a box")
        (f,) = instance.data
        return [p for p in box.points() if f.at(p)]

    order = sorted(range(instance.m), key=lambda i: (len(instance.data[i].lines), i))
    a, b = instance.data[order[0]], instance.data[order[1]]
    rest = [instance.data[i] for i in order[2:]]
    points: set[Point] = set()
    b_anchors = [b.anchor(k) for k in b.lines]
    for ka in a.lines:
        pa = a.anchor(ka)
        for pb in b_anchors:
            p = line_intersection(pa, a.direction, pb, b.direction)
            if p is None or (box is not None and not box.contains(p)):
                continue
            if all(f.at(p) for f in rest):
                points.add(p)
    result = sorted(points)
    logger.debug("Grid of %d-direction instance has %d points", instance.m, len(result))
    return result
