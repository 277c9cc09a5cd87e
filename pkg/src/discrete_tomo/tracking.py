"""Tomographic particle tracking.

Frames are lists of planar points, one per particle.  With every frame
known, a cost that only links consecutive times splits tracking into
independent bipartite matchings (:func:`markov_track`).  With only the
first frame known and two X-rays per later time, :func:`rolling_horizon`
reconstructs each frame by a transportation solve weighted towards the
particles' predicted positions and then matches it onto the tracks.
"""

import logging
import math
from collections import Counter
from collections.abc import Callable, Sequence
from itertools import permutations, product

import numpy as np

from discrete_tomo.config import get_settings
from discrete_tomo.core import Instance, Point, WeightedLatticeSet, grid
from discrete_tomo.errors import (
    DimensionMismatchError,
    InvalidDirectionError,
    InvariantViolationError,
)
from discrete_tomo.models import RollingHorizonResult, TrackSet
from discrete_tomo.optim import min_weight_perfect_matching_bipartite, quantize_costs
from discrete_tomo.recon2 import solve_on_grid

logger = logging.getLogger(__name__)

MarkovCost = Callable[[Point, Point, int], float]
TrackCost = Callable[[Sequence[Point]], float]


def euclidean_cost(p: Point, q: Point, tau: int) -> float:
    return math.dist(p, q)


def squared_cost(p: Point, q: Point, tau: int) -> float:
    return float(sum((a - b) ** 2 for a, b in zip(p, q, strict=True)))


def acceleration_cost(track: Sequence[Point]) -> float:
    """Sum of squared second differences; zero exactly on straight uniform tracks."""
    total = 0
    for a, b, c in zip(track, track[1:], track[2:], strict=False):
        total += sum((x - 2 * y + z) ** 2 for x, y, z in zip(a, b, c, strict=True))
    return float(total)


def markov_track_cost(step: MarkovCost) -> TrackCost:
    """Lift a step cost to the cost of a whole track."""

    def cost(track: Sequence[Point]) -> float:
        pairs = zip(track, track[1:], strict=False)
        return sum(step(p, q, tau) for tau, (p, q) in enumerate(pairs))

    return cost


def coupling_cost(tracks: TrackSet, cost: TrackCost) -> float:
    return sum(cost(track) for track in tracks.tracks)


def _check_frames(frames: Sequence[Sequence[Point]]) -> list[list[Point]]:
    out = [sorted(tuple(p) for p in frame) for frame in frames]
    if not out:
        raise DimensionMismatchError("at least one frame is required")
    if len({len(f) for f in out}) != 1:
        raise DimensionMismatchError(f"frames differ in size: {[len(f) for f in out]}")
    return out


# ---------------------------------------------------------------------------
# Known frames
# ---------------------------------------------------------------------------


def markov_track(
    frames: Sequence[Sequence[Point]], cost: MarkovCost = euclidean_cost
) -> TrackSet:
    """Link every pair of consecutive frames by a minimum-cost perfect matching."""
    fs = _check_frames(frames)
    scale = get_settings().cost_scale
    tracks = [[p] for p in fs[0]]
    for tau in range(len(fs) - 1):
        nxt = fs[tau + 1]
        matrix = [[cost(track[-1], q, tau) for q in nxt] for track in tracks]
        matching = min_weight_perfect_matching_bipartite(
            quantize_costs(np.array(matrix, dtype=np.float64).reshape(len(tracks), len(nxt)), scale)
        )
        for track, j in zip(tracks, matching.permutation, strict=True):
            track.append(nxt[j])
    logger.info("markov_track: %d particles over %d frames", len(tracks), len(fs))
    return TrackSet(tuple(tuple(track) for track in tracks))


def _guard_coupling(fs: list[list[Point]]) -> None:
    settings = get_settings()
    settings.check_guard("particles", len(fs[0]), settings.max_track_particles)
    settings.check_guard("frames", len(fs), settings.max_track_frames)


def best_coupling_bruteforce(frames: Sequence[Sequence[Point]], cost: TrackCost) -> TrackSet:
    """Coupling of least total track cost over all ``(n!)^(t-1)`` couplings."""
    fs = _check_frames(frames)
    _guard_coupling(fs)
    n = len(fs[0])
    best: TrackSet | None = None
    best_cost = math.inf
    for perms in product(permutations(range(n)), repeat=len(fs) - 1):
        tracks = TrackSet(
            tuple(
                tuple([fs[0][i]] + [fs[tau + 1][perm[i]] for tau, perm in enumerate(perms)])
                for i in range(n)
            )
        )
        value = coupling_cost(tracks, cost)
        if best is None or value < best_cost:
            best, best_cost = tracks, value
    if best is None:
        raise InvariantViolationError("no coupling was evaluated")
    return best


def straight_line_coupling_bruteforce(frames: Sequence[Sequence[Point]]) -> TrackSet | None:
    """A coupling in which every track is ``p + tau * u``, or None if there is none."""
    fs = _check_frames(frames)
    _guard_coupling(fs)
    if len(fs) <= 2:
        return TrackSet(tuple(tuple(points) for points in zip(*fs, strict=True)))
    first, second = fs[0], fs[1]
    pools = [Counter(frame) for frame in fs[2:]]
    used = [False] * len(second)
    tracks: list[tuple[Point, ...]] = []

    def search(i: int) -> bool:
        if i == len(first):
            return True
        p = first[i]
        for j, q in enumerate(second):
            if used[j]:
                continue
            u = tuple(b - a for a, b in zip(p, q, strict=True))
            path = [
                tuple(a + (tau + 2) * c for a, c in zip(p, u, strict=True))
                for tau in range(len(pools))
            ]
            if any(pool[x] == 0 for pool, x in zip(pools, path, strict=True)):
                continue
            used[j] = True
            for pool, x in zip(pools, path, strict=True):
                pool[x] -= 1
            tracks.append((p, q, *path))
            if search(i + 1):
                return True
            tracks.pop()
            for pool, x in zip(pools, path, strict=True):
                pool[x] += 1
            used[j] = False
        return False

    if not search(0):
        return None
    return TrackSet(tuple(tracks))


# ---------------------------------------------------------------------------
# Rolling horizon
# ---------------------------------------------------------------------------


def _predictions(tracks: Sequence[Sequence[Point]], model: str) -> list[Point]:
    if model == "nearest":
        return [tuple(track[-1]) for track in tracks]
    if model == "velocity":
        out = []
        for track in tracks:
            if len(track) < 2:
                out.append(tuple(track[-1]))
            else:
                out.append(tuple(2 * a - b for a, b in zip(track[-1], track[-2], strict=True)))
        return out
    raise ValueError(f"unknown weight model {model!r}")


def _nearest_sq(points: Sequence[Point], targets: Sequence[Point]) -> list[int]:
    if not points:
        return []
    g = np.asarray(points, dtype=np.int64)
    t = np.asarray(targets, dtype=np.int64)
    d = ((g[:, None, :] - t[None, :, :]) ** 2).sum(axis=2)
    return [int(x) for x in d.min(axis=1)]


def nearest_predecessor_cost(
    points: Sequence[Point], tracks: Sequence[Sequence[Point]]
) -> list[int]:
    """Squared distance from each point to the nearest current track end."""
    return _nearest_sq(points, _predictions(tracks, "nearest"))


def constant_velocity_cost(
    points: Sequence[Point], tracks: Sequence[Sequence[Point]]
) -> list[int]:
    """Squared distance to the nearest position extrapolated at constant velocity."""
    return _nearest_sq(points, _predictions(tracks, "velocity"))


WEIGHT_MODELS: dict[str, Callable[[Sequence[Point], Sequence[Sequence[Point]]], list[int]]] = {
    "nearest": nearest_predecessor_cost,
    "velocity": constant_velocity_cost,
}


def rolling_horizon(
    first: Sequence[Point], data: Sequence[Instance], model: str = "nearest"
) -> RollingHorizonResult:
    """Reconstruct frames ``2..t`` from two X-rays each and link them into tracks.

    Each frame is the cheapest binary set on its grid with exactly the given
    X-rays, weighted by *model* (``"nearest"`` or ``"velocity"``); particles
    are then matched onto the tracks by squared distance to their predicted
    positions.  Ties go to the lexicographically smaller grid point.
    """
    if model not in WEIGHT_MODELS:
        raise ValueError(f"unknown weight model {model!r}")
    start = sorted(tuple(p) for p in first)
    tracks: list[list[Point]] = [[p] for p in start]
    frames = [WeightedLatticeSet.from_points(start, dim=2)]
    for tau, instance in enumerate(data, start=2):
        if instance.m != 2:
            raise InvalidDirectionError(f"frame {tau} needs exactly two X-rays")
        if instance.totals[0] != len(tracks) or not instance.mass_consistent:
            logger.info("rolling_horizon: frame %d carries mass %s", tau, instance.totals)
            return RollingHorizonResult(feasible=False, frames=frames, failed_step=tau)
        points = grid(instance)
        weights = WEIGHT_MODELS[model](points, tracks)
        fa, fb = instance.data
        frame = solve_on_grid(fa, fb, points, costs=weights, capacity=1)
        if frame is None:
            logger.info("rolling_horizon: frame %d has no binary solution", tau)
            return RollingHorizonResult(feasible=False, frames=frames, failed_step=tau)
        frames.append(frame)

        new_points = list(frame.support)
        preds = np.asarray(_predictions(tracks, model), dtype=np.int64)
        cand = np.asarray(new_points, dtype=np.int64)
        matrix = ((preds[:, None, :] - cand[None, :, :]) ** 2).sum(axis=2)
        matching = min_weight_perfect_matching_bipartite(matrix)
        for track, j in zip(tracks, matching.permutation, strict=True):
            track.append(new_points[j])
        logger.debug("rolling_horizon: frame %d from %d grid points", tau, len(points))

    result = TrackSet(tuple(tuple(track) for track in tracks))
    logger.info("rolling_horizon: %d particles over %d frames", result.n, len(frames))
    return RollingHorizonResult(feasible=True, frames=frames, tracks=result)


def simulate_scene(
    n: int, t: int, rng: np.random.Generator, max_speed: int = 1
) -> TrackSet:
    """Ground-truth tracks with integer constant velocities in ``[-max_speed, max_speed]``.

    Particles start with pairwise distinct coordinates spaced so that at
    every time any two of them differ by at least ``3 * max_speed`` in each
    coordinate.
    """
    if n < 1 or t < 1:
        raise ValueError("a scene needs at least one particle and one frame")
    spacing = max(1, 3 * max_speed + 2 * max_speed * (t - 1))
    xs = rng.permutation(n) * spacing
    ys = rng.permutation(n) * spacing
    velocities = rng.integers(-max_speed, max_speed + 1, size=(n, 2))
    tracks = tuple(
        tuple(
            (int(xs[i] + tau * velocities[i, 0]), int(ys[i] + tau * velocities[i, 1]))
            for tau in range(t)
        )
        for i in range(n)
    )
    return TrackSet(tracks)
