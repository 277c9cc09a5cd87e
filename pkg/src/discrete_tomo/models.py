"""Result containers returned by the solvers.

Infeasible inputs come back as results with ``feasible=False`` rather than
as exceptions; ``to_dict`` gives the JSON shape the CLI prints.
"""

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from discrete_tomo.core import DataFunction, Direction, Point, WeightedLatticeSet


def _points(psi: WeightedLatticeSet | None) -> object:
    return None if psi is None else psi.to_dict()


# ---------------------------------------------------------------------------
# Flow engine
# ---------------------------------------------------------------------------


@dataclass
class MaxFlowResult:
    """Maximum flow value, per-arc flows and the source side of a minimum cut."""

    value: int
    flows: list[int] = field(default_factory=list)
    source_side: frozenset[int] = frozenset()

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "value": self.value,
            "flows": list(self.flows),
            "sourceSide": sorted(self.source_side),
        }


@dataclass
class MinCostFlowResult:
    """Min-cost flow with the node potentials certifying optimality."""

    feasible: bool
    value: int = 0
    flows: list[int] = field(default_factory=list)
    cost: int = 0
    potentials: list[int] = field(default_factory=list)

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "feasible": self.feasible,
            "value": self.value,
            "flows": list(self.flows),
            "cost": self.cost,
            "potentials": list(self.potentials),
        }


@dataclass
class MatchingResult:
    permutation: tuple[int, ...]
    cost: int

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {"permutation": list(self.permutation), "cost": self.cost}


@dataclass
class AssignmentResult:
    """Count-bounded assignment of rows to columns.

    ``offsets`` are integer column potentials: each row is assigned to an
    argmin of ``cost[i, k] - offsets[k]``.
    """

    feasible: bool
    labels: npt.NDArray[np.int64] | None = None
    counts: list[int] = field(default_factory=list)
    cost: int = 0
    offsets: npt.NDArray[np.int64] | None = None


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------


@dataclass
class ReconstructionResult:
    """A solution of a reconstruction instance, or the verdict that none exists."""

    feasible: bool
    solution: WeightedLatticeSet | None = None
    method: str = ""

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "feasible": self.feasible,
            "method": self.method,
            "solution": _points(self.solution),
        }


@dataclass
class RyserResult:
    feasible: bool
    matrix: npt.NDArray[np.int64] | None = None

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "feasible": self.feasible,
            "matrix": None if self.matrix is None else self.matrix.tolist(),
        }


@dataclass
class AlternatingResult:
    """Outcome of the alternating-direction heuristic.

    ``history`` lists the residual after round 1 and after every accepted
    later round; it never increases.
    """

    solution: WeightedLatticeSet
    residual: int
    rounds: int
    active_pair: tuple[Direction, Direction]
    history: list[int] = field(default_factory=list)

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "solution": self.solution.to_dict(),
            "residual": self.residual,
            "rounds": self.rounds,
            "activePair": [list(s.v) for s in self.active_pair],
            "history": list(self.history),
        }


@dataclass
class NearestResult:
    """Best fit to possibly noisy data and the X-ray correction verdict."""

    solution: WeightedLatticeSet
    distance: int
    correctable: bool
    corrected: tuple[DataFunction, ...] = ()

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "solution": self.solution.to_dict(),
            "distance": self.distance,
            "correctable": self.correctable,
            "corrected": [f.to_dict() for f in self.corrected],
        }


# ---------------------------------------------------------------------------
# Superresolution and tracking
# ---------------------------------------------------------------------------


@dataclass
class DRResult:
    feasible: bool
    image: npt.NDArray[np.int64] | None = None
    nodes: int = 0

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "feasible": self.feasible,
            "image": None if self.image is None else self.image.tolist(),
            "nodes": self.nodes,
        }


@dataclass(frozen=True)
class TrackSet:
    """``n`` tracks of ``t`` points; track ``i`` visits ``tracks[i][tau]`` at time ``tau``."""

    tracks: tuple[tuple[Point, ...], ...]

    @property
    def n(self) -> int:
        return len(self.tracks)

    @property
    def t(self) -> int:
        return len(self.tracks[0]) if self.tracks else 0

    def frame(self, tau: int) -> list[Point]:
        return sorted(track[tau] for track in self.tracks)

    def canonical(self) -> "TrackSet":
        """Tracks sorted by their point sequences, for order-free comparison."""
        return TrackSet(tuple(sorted(self.tracks)))

    def to_records(self) -> list[dict[str, object]]:
        return [
            {"particle": i, "points": [list(p) for p in track]}
            for i, track in enumerate(self.tracks)
        ]


@dataclass
class RollingHorizonResult:
    """Reconstructed frames and tracks; ``failed_step`` is the first infeasible time."""

    feasible: bool
    frames: list[WeightedLatticeSet] = field(default_factory=list)
    tracks: TrackSet | None = None
    failed_step: int | None = None

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "feasible": self.feasible,
            "frames": [f.to_dict() for f in self.frames],
            "tracks": None if self.tracks is None else self.tracks.to_records(),
            "failedStep": self.failed_step,
        }


# ---------------------------------------------------------------------------
# Grain maps
# ---------------------------------------------------------------------------


@dataclass
class GBPDFitResult:
    """Volume-constrained grain assignment with the offsets that certify it."""

    feasible: bool
    labels: npt.NDArray[np.int64] | None = None
    counts: list[int] = field(default_factory=list)
    offsets: npt.NDArray[np.float64] | None = None
    cost: float = 0.0

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "feasible": self.feasible,
            "counts": list(self.counts),
            "offsets": None if self.offsets is None else [float(x) for x in self.offsets],
            "cost": self.cost,
        }
