"""Reconstruction from two directions, plus the guarded exhaustive search.

Two X-rays make reconstruction a transportation problem: the lines of one
direction supply, the lines of the other demand, and every grid point is an
arc of capacity 1 (binary sets) or unbounded (weighted sets).  Axis margins
of binary images take the direct Ryser path.
"""

import logging
from collections.abc import Iterator, Sequence
from graphlib import CycleError, TopologicalSorter

import numpy as np
import numpy.typing as npt

from discrete_tomo.config import get_settings
from discrete_tomo.core import (
    Box,
    DataFunction,
    Direction,
    Instance,
    LineKey,
    Point,
    WeightedLatticeSet,
    grid,
    line_key,
)
from discrete_tomo.errors import InvalidDirectionError
from discrete_tomo.models import ReconstructionResult, RyserResult
from discrete_tomo.optim import transportation

logger = logging.getLogger(__name__)

ROWS = Direction((0, 1))
COLUMNS = Direction((1, 0))

# A line of the first (0) or second (1) direction
_LineNode = tuple[int, LineKey]


# ---------------------------------------------------------------------------
# Margins of binary matrices
# ---------------------------------------------------------------------------


def gale_ryser_consistent(r: Sequence[int], c: Sequence[int]) -> bool:
    """True iff a 0/1 matrix with row sums *r* and column sums *c* exists."""
    if any(x < 0 for x in r) or any(x < 0 for x in c):
        return False
    if sum(r) != sum(c):
        return False
    cs = sorted(c, reverse=True)
    prefix = 0
    for k, ck in enumerate(cs, start=1):
        prefix += ck
        if prefix > sum(min(ri, k) for ri in r):
            return False
    return True


def ryser_reconstruct(r: Sequence[int], c: Sequence[int]) -> RyserResult:
    """A 0/1 matrix with margins (r, c), or an infeasible result.

    Rows are filled in input order, each into the columns with the largest
    remaining sums (ties to the lower column index).
    """
    if not gale_ryser_consistent(r, c):
        return RyserResult(feasible=False)
    remaining = [int(x) for x in c]
    matrix = np.zeros((len(r), len(c)), dtype=np.int64)
    for i, ri in enumerate(r):
        cols = sorted(range(len(c)), key=lambda j: (-remaining[j], j))[:ri]
        for j in cols:
            if remaining[j] == 0:
                return RyserResult(feasible=False)
            matrix[i, j] = 1
            remaining[j] -= 1
    return RyserResult(feasible=True, matrix=matrix)


def margins(image: npt.ArrayLike) -> tuple[list[int], list[int]]:
    """Row and column sums of a 2-D array."""
    a = np.asarray(image, dtype=np.int64)
    return a.sum(axis=1).tolist(), a.sum(axis=0).tolist()


# ---------------------------------------------------------------------------
# General two-direction reconstruction
# ---------------------------------------------------------------------------


def solve_on_grid(
    fa: DataFunction,
    fb: DataFunction,
    points: Sequence[Point],
    costs: Sequence[int] | None = None,
    capacity: int | None = 1,
) -> WeightedLatticeSet | None:
    """Cheapest weighted set on *points* with X-rays *fa* and *fb*, or None.

    ``capacity=None`` leaves the per-point weight unbounded.
    """
    if any(v < 0 for v in fa.lines.values()) or any(v < 0 for v in fb.lines.values()):
        return None
    a_keys = list(fa.lines)
    b_keys = list(fb.lines)
    a_index = {k: i for i, k in enumerate(a_keys)}
    b_index = {k: j for j, k in enumerate(b_keys)}
    cap = fa.total() if capacity is None else capacity
    arcs: list[tuple[int, int, int, int]] = []
    used: list[Point] = []
    for n, p in enumerate(points):
        i = a_index.get(line_key(p, fa.direction))
        j = b_index.get(line_key(p, fb.direction))
        if i is None or j is None:
            continue
        arcs.append((i, j, cap, 0 if costs is None else int(costs[n])))
        used.append(p)
    result = transportation(
        [fa.lines[k] for k in a_keys], [fb.lines[k] for k in b_keys], arcs
    )
    if not result.feasible:
        return None
    return WeightedLatticeSet(
        fa.dim, {p: f for p, f in zip(used, result.flows, strict=True) if f}
    )


def _ryser_path(instance: Instance) -> ReconstructionResult:
    rows_f = instance.data[instance.directions.index(ROWS)]
    cols_f = instance.data[instance.directions.index(COLUMNS)]
    row_ids = sorted(k for k in rows_f.lines if isinstance(k, int))
    col_ids = sorted(-k for k in cols_f.lines if isinstance(k, int))
    r = [rows_f.value(i) for i in row_ids]
    c = [cols_f.value(-j) for j in col_ids]
    result = ryser_reconstruct(r, c)
    if not result.feasible or result.matrix is None:
        return ReconstructionResult(feasible=False, method="ryser")
    ii, jj = np.nonzero(result.matrix)
    solution = WeightedLatticeSet.from_points(
        ((row_ids[a], col_ids[b]) for a, b in zip(ii.tolist(), jj.tolist(), strict=True)),
        dim=2,
    )
    return ReconstructionResult(feasible=True, solution=solution, method="ryser")


def reconstruct_two_directions(instance: Instance, binary: bool = True) -> ReconstructionResult:
    """A set (binary) or weighted set (``binary=False``) with the two given X-rays."""
    if instance.m != 2:
        raise InvalidDirectionError(f"two directions expected, got {instance.m}")
    if not instance.mass_consistent:
        logger.info("reconstruct_two_directions: totals %s differ", instance.totals)
        return ReconstructionResult(feasible=False, method="mass")
    if binary and set(instance.directions) == {ROWS, COLUMNS}:
        return _ryser_path(instance)

    points = grid(instance)
    fa, fb = instance.data
    solution = solve_on_grid(fa, fb, points, capacity=1 if binary else None)
    logger.info(
        "reconstruct_two_directions: grid %d points, %s",
        len(points),
        "feasible" if solution is not None else "infeasible",
    )
    if solution is None:
        return ReconstructionResult(feasible=False, method="flow")
    return ReconstructionResult(feasible=True, solution=solution, method="flow")


# ---------------------------------------------------------------------------
# Uniqueness and exhaustive search
# ---------------------------------------------------------------------------


def switching_cycle(
    f: WeightedLatticeSet, dirs: Sequence[Direction]
) -> tuple[tuple[Point, ...], tuple[Point, ...]] | None:
    """Points to remove from and add to *f* keeping both X-rays, or None if *f* is unique.

    Grid points are arcs between their two lines, pointing one way for
    members of *f* and the other way for the rest.  A directed cycle
    alternates members and non-members, so every line on it loses one
    point and gains one.
    """
    if len(dirs) != 2:
        raise InvalidDirectionError(f"two directions expected, got {len(dirs)}")
    v, w = dirs
    graph: dict[_LineNode, set[_LineNode]] = {}
    point_at: dict[tuple[_LineNode, _LineNode], Point] = {}
    for p in grid(Instance.from_set(f, dirs)):
        a, b = (0, line_key(p, v)), (1, line_key(p, w))
        point_at[a, b] = p
        tail, head = (a, b) if p in f else (b, a)
        graph.setdefault(head, set()).add(tail)
    try:
        TopologicalSorter(graph).prepare()
    except CycleError as exc:
        cycle: list[_LineNode] = exc.args[1]
        points = [point_at[min(x, y), max(x, y)] for x, y in zip(cycle, cycle[1:], strict=False)]
        remove = tuple(sorted(p for p in points if p in f))
        add = tuple(sorted(p for p in points if p not in f))
        logger.debug("switching cycle through %d points", len(points))
        return remove, add
    return None


def unique2(f: WeightedLatticeSet, dirs: Sequence[Direction]) -> bool:
    """True iff *f* is the only lattice set with its X-rays along the two *dirs*."""
    return switching_cycle(f, dirs) is None


def iter_solutions(instance: Instance, points: Sequence[Point]) -> Iterator[WeightedLatticeSet]:
    """All binary solutions supported on *points*, lexicographically smallest first."""
    pts = sorted(points)
    keys: list[list[LineKey]] = [[line_key(p, s) for s in instance.directions] for p in pts]
    need: list[dict[LineKey, int]] = [dict(f.lines) for f in instance.data]
    avail: list[dict[LineKey, int]] = [{} for _ in instance.data]
    for ks in keys:
        for d, k in enumerate(ks):
            avail[d][k] = avail[d].get(k, 0) + 1
    for d in range(instance.m):
        for k, v in need[d].items():
            if v < 0 or v > avail[d].get(k, 0):
                return
    chosen: list[Point] = []

    def search(n: int) -> Iterator[WeightedLatticeSet]:
        if n == len(pts):
            if all(v == 0 for nd in need for v in nd.values()):
                yield WeightedLatticeSet.from_points(chosen, dim=instance.dim)
            return
        ks = keys[n]
        for d, k in enumerate(ks):
            avail[d][k] -= 1
        if all(need[d].get(k, 0) > 0 for d, k in enumerate(ks)):
            for d, k in enumerate(ks):
                need[d][k] -= 1
            chosen.append(pts[n])
            yield from search(n + 1)
            chosen.pop()
            for d, k in enumerate(ks):
                need[d][k] += 1
        if all(need[d].get(k, 0) <= avail[d][k] for d, k in enumerate(ks)):
            yield from search(n + 1)
        for d, k in enumerate(ks):
            avail[d][k] += 1

    yield from search(0)


def guarded_grid(instance: Instance, box: Box | None, limit: int | None = None) -> list[Point]:
    """``grid(instance) ∩ box``, refused above the brute-force guard."""
    settings = get_settings()
    points = grid(instance, box)
    settings.check_guard(
        "grid points", len(points), settings.max_grid_points if limit is None else limit
    )
    return points


def count_solutions_bruteforce(instance: Instance, box: Box | None = None) -> int:
    """Number of binary solutions supported in *box*."""
    points = guarded_grid(instance, box)
    count = sum(1 for _ in iter_solutions(instance, points))
    logger.info("count_solutions_bruteforce: %d solutions on %d points", count, len(points))
    return count
