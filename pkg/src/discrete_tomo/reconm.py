"""Reconstruction from three or more directions.

Exact answers come from guarded exhaustive search; the alternating
direction heuristic scales further but may stop at a positive residual.
"""

import logging
from collections.abc import Sequence

import numpy as np

from discrete_tomo.config import get_settings
from discrete_tomo.core import (
    Box,
    Direction,
    Instance,
    LineKey,
    Point,
    WeightedLatticeSet,
    grid,
    line_key,
    xray,
)
from discrete_tomo.errors import InvalidDirectionError, InvariantViolationError
from discrete_tomo.models import AlternatingResult, NearestResult, ReconstructionResult
from discrete_tomo.recon2 import (
    guarded_grid,
    iter_solutions,
    reconstruct_two_directions,
    solve_on_grid,
)

logger = logging.getLogger(__name__)


def reconstruct_bruteforce(instance: Instance, box: Box | None = None) -> ReconstructionResult:
    """The lexicographically smallest binary solution inside *box*, or infeasible."""
    points = guarded_grid(instance, box)
    first = next(iter_solutions(instance, points), None)
    logger.info(
        "reconstruct_bruteforce: %d grid points, %s",
        len(points),
        "solved" if first is not None else "no solution",
    )
    if first is None:
        return ReconstructionResult(feasible=False, method="bruteforce")
    return ReconstructionResult(feasible=True, solution=first, method="bruteforce")


# ---------------------------------------------------------------------------
# Alternating directions
# ---------------------------------------------------------------------------


def _proximity_costs(points: Sequence[Point], current: WeightedLatticeSet) -> list[int]:
    """l1 distance from every point to the nearest support point of *current*."""
    if not points or len(current) == 0:
        return [0] * len(points)
    g = np.asarray(points, dtype=np.int64)
    f = np.asarray(current.support, dtype=np.int64)
    dist = np.abs(g[:, None, :] - f[None, :, :]).sum(axis=2).min(axis=1)
    return [int(x) for x in dist]


def alternating_directions(instance: Instance, max_rounds: int | None = None) -> AlternatingResult:
    """Alternate exact two-direction solves over cyclic pairs of directions.

    Round 1 solves the first pair outright.  Every later round re-solves
    the next pair, moving as few points as possible away from the current
    set (l1 displacement), and keeps the result if the total residual does
    not grow.  Stops at residual 0, after *max_rounds*, or once a full cycle
    of pairs leaves the set unchanged.
    """
    if instance.m < 2:
        raise InvalidDirectionError("alternating reconstruction needs at least two directions")
    rounds_cap = get_settings().max_rounds if max_rounds is None else max_rounds
    m = instance.m
    pairs = [(0, 1)] if m == 2 else [(i, (i + 1) % m) for i in range(m)]

    def sub(pair: tuple[int, int]) -> Instance:
        i, j = pair
        return Instance.from_data([instance.data[i], instance.data[j]])

    first = reconstruct_two_directions(sub(pairs[0]))
    current = first.solution or WeightedLatticeSet.empty(instance.dim)
    residual = instance.residual(current)
    active = pairs[0]
    history = [residual]
    rounds = 1
    unchanged = 0
    while residual > 0 and rounds < rounds_cap and unchanged < len(pairs):
        pair = pairs[rounds % len(pairs)]
        rounds += 1
        pair_instance = sub(pair)
        points = grid(pair_instance)
        fa, fb = pair_instance.data
        candidate = solve_on_grid(fa, fb, points, costs=_proximity_costs(points, current))
        if candidate is None or candidate == current:
            unchanged += 1
            continue
        cand_residual = instance.residual(candidate)
        logger.debug(
            "alternating_directions: round %d pair %s residual %d -> %d",
            rounds,
            pair,
            residual,
            cand_residual,
        )
        if cand_residual <= residual:
            unchanged = 0 if cand_residual < residual else unchanged + 1
            current, residual, active = candidate, cand_residual, pair
            history.append(residual)
        else:
            unchanged += 1
    logger.info("alternating_directions: residual %d after %d rounds", residual, rounds)
    return AlternatingResult(
        solution=current,
        residual=residual,
        rounds=rounds,
        active_pair=(instance.directions[active[0]], instance.directions[active[1]]),
        history=history,
    )


# ---------------------------------------------------------------------------
# Noisy data
# ---------------------------------------------------------------------------


def _line_bound(count: int, target: int, avail: int) -> int:
    return max(0, count - target) + max(0, target - count - avail)


def nearest_solution_bruteforce(instance: Instance, box: Box) -> NearestResult:
    """A set in *box* minimising ``sum_S ||X_S F - f_S||_1``.

    Only box points on a nonzero line of some direction can lower the
    distance, so the search runs over those.  ``correctable`` reports
    whether the data lie within ``m - 1`` of consistent data.
    """
    settings = get_settings()
    m = instance.m
    candidates = [p for p in box.points() if any(f.at(p) for f in instance.data)]
    settings.check_guard("candidate points", len(candidates), settings.max_nearest_points)

    keys: list[list[LineKey]] = [[line_key(p, s) for s in instance.directions] for p in candidates]
    target: list[dict[LineKey, int]] = [dict(f.lines) for f in instance.data]
    count: list[dict[LineKey, int]] = [dict.fromkeys(f.lines, 0) for f in instance.data]
    avail: list[dict[LineKey, int]] = [dict.fromkeys(f.lines, 0) for f in instance.data]
    for ks in keys:
        for d, k in enumerate(ks):
            count[d].setdefault(k, 0)
            target[d].setdefault(k, 0)
            avail[d][k] = avail[d].get(k, 0) + 1

    def bound(d: int, k: LineKey) -> int:
        return _line_bound(count[d][k], target[d][k], avail[d][k])

    lb = sum(bound(d, k) for d in range(m) for k in count[d])
    best = sum(abs(v) for f in instance.data for v in f.lines.values())
    best_set: list[Point] = []
    chosen: list[Point] = []

    def step(ks: list[LineKey], include: bool, undo: bool) -> int:
        """Apply (or revert) one decision, returning the change of the lower bound."""
        delta = 0
        for d, k in enumerate(ks):
            before = bound(d, k)
            sign = -1 if undo else 1
            avail[d][k] -= sign
            if include:
                count[d][k] += sign
            delta += bound(d, k) - before
        return delta

    def search(n: int, lower: int) -> None:
        nonlocal best, best_set
        if lower >= best:
            return
        if n == len(candidates):
            best, best_set = lower, list(chosen)
            return
        ks = keys[n]
        for include in (True, False):
            delta = step(ks, include, undo=False)
            if include:
                chosen.append(candidates[n])
            search(n + 1, lower + delta)
            if include:
                chosen.pop()
            step(ks, include, undo=True)

    search(0, lb)
    solution = WeightedLatticeSet.from_points(best_set, dim=instance.dim)
    corrected = tuple(xray(solution, s) for s in instance.directions)
    if instance.residual(solution) != best:
        raise InvariantViolationError("branch and bound distance disagrees with the residual")
    logger.info(
        "nearest_solution_bruteforce: distance %d over %d candidates", best, len(candidates)
    )
    return NearestResult(
        solution=solution, distance=best, correctable=best <= m - 1, corrected=corrected
    )


def similar_solution_bruteforce(
    f: WeightedLatticeSet, dirs: Sequence[Direction], box: Box
) -> WeightedLatticeSet | None:
    """A set ``F' != f`` in *box* with ``|F'| = |f|`` and X-ray difference at most ``2m - 3``.

    Below the jump bound such a set has exactly the X-rays of *f*, so the
    search runs over the solutions of those X-rays.
    """
    if len(dirs) < 2:
        raise InvalidDirectionError("at least two directions are required")
    instance = Instance.from_set(f, dirs)
    for solution in iter_solutions(instance, guarded_grid(instance, box)):
        if solution != f:
            return solution
    return None
