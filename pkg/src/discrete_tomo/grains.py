"""Generalized balanced power diagrams (GBPDs) for grain maps.

A GBPD with sites ``s_j``, positive definite matrices ``A_j`` and additive
weights ``sigma_j`` labels a point ``x`` with an argmin over ``j`` of
``(x - s_j)^T A_j (x - s_j) - sigma_j``.  Pixel ``(i, j)`` of a label map
sits at the point ``(i, j)``; labels are 0-based grain indices.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from discrete_tomo.config import get_settings
from discrete_tomo.errors import DimensionMismatchError, NotPositiveDefiniteError
from discrete_tomo.models import GBPDFitResult
from discrete_tomo.optim import bounded_assignment, quantize_costs

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
LabelArray = npt.NDArray[np.int64]


def _check_positive_definite(matrix: FloatArray, index: int) -> None:
    if not np.allclose(matrix, matrix.T):
        raise NotPositiveDefiniteError(f"matrix {index} is not symmetric")
    for r in range(1, matrix.shape[0] + 1):
        if np.linalg.det(matrix[:r, :r]) <= 0:
            raise NotPositiveDefiniteError(f"matrix {index} has a non-positive leading minor")


@dataclass(frozen=True)
class GBPDSpec:
    """Sites ``(l, d)``, matrices ``(l, d, d)`` and additive weights ``(l,)``.

    Matrices default to the identity and weights to zero, which gives the
    ordinary Voronoi diagram of the sites.
    """

    sites: FloatArray
    matrices: FloatArray = field(default_factory=lambda: np.zeros((0, 0, 0)))
    weights: FloatArray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        sites = np.atleast_2d(np.asarray(self.sites, dtype=np.float64))
        n, d = sites.shape
        matrices = np.asarray(self.matrices, dtype=np.float64)
        if matrices.size == 0:
            matrices = np.broadcast_to(np.eye(d), (n, d, d)).copy()
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.size == 0:
            weights = np.zeros(n)
        if matrices.shape != (n, d, d) or weights.shape != (n,):
            raise DimensionMismatchError(
                f"{n} sites in R^{d} need matrices of shape {(n, d, d)} and {n} weights"
            )
        if len({tuple(s) for s in sites.tolist()}) != n:
            raise ValueError("sites must be distinct")
        for j, a in enumerate(matrices):
            _check_positive_definite(a, j)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return int(self.sites.shape[0])

    @property
    def dim(self) -> int:
        return int(self.sites.shape[1])

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "sites": self.sites.tolist(),
            "matrices": self.matrices.tolist(),
            "weights": self.weights.tolist(),
        }


def pixel_points(shape: Sequence[int]) -> FloatArray:
    """Coordinates of every pixel of *shape* in C order, one row per pixel."""
    grids = np.meshgrid(*(np.arange(n) for n in shape), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.float64)


def ellipsoidal_costs(spec: GBPDSpec, points: npt.ArrayLike) -> FloatArray:
    """``(q, l)`` matrix of ``||x_i - s_j||^2_{A_j}``."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.dim:
        raise DimensionMismatchError(f"points must have shape (q, {spec.dim})")
    diff = x[:, None, :] - spec.sites[None, :, :]
    return np.einsum("qld,lde,qle->ql", diff, spec.matrices, diff)


def gbpd_assign(spec: GBPDSpec, shape: Sequence[int]) -> LabelArray:
    """Label every pixel of *shape* by its GBPD cell; ties go to the lowest index."""
    if len(shape) != spec.dim:
        raise DimensionMismatchError(f"domain of dimension {len(shape)} for sites in R^{spec.dim}")
    costs = ellipsoidal_costs(spec, pixel_points(shape)) - spec.weights[None, :]
    labels = np.argmin(costs, axis=1).astype(np.int64)
    return labels.reshape(tuple(shape))


def volume_bounds(
    volumes: Sequence[int], slack: float | None = None
) -> tuple[list[int], list[int]]:
    """``(floor(v (1 - slack)), ceil(v (1 + slack)))`` per grain."""
    eps = get_settings().volume_slack if slack is None else slack
    if eps < 0:
        raise ValueError("slack must be non-negative")
    lower = [max(0, math.floor(v * (1 - eps))) for v in volumes]
    upper = [math.ceil(v * (1 + eps)) for v in volumes]
    return lower, upper


def fitted_offsets(offsets: npt.ArrayLike, scale: int | None = None) -> FloatArray:
    """Per-grain weights ``sigma_hat`` from the integer potentials of a scaled fit."""
    s = get_settings().cost_scale if scale is None else scale
    return np.asarray(offsets, dtype=np.float64) / s


def gbpd_fit(
    sites: npt.ArrayLike,
    shape: Sequence[int],
    lower: Sequence[int],
    upper: Sequence[int],
    matrices: npt.ArrayLike | None = None,
) -> GBPDFitResult:
    """Cheapest assignment of the pixels of *shape* to grains with counts in ``[lower, upper]``.

    Costs are ``||x - s_j||^2_{A_j}`` scaled by ``cost_scale`` and rounded to
    integers; the solve is exact over those integers.  The returned offsets
    turn the labelling into a GBPD argmin labelling.
    """
    spec = GBPDSpec(
        np.asarray(sites, dtype=np.float64),
        np.zeros((0, 0, 0)) if matrices is None else np.asarray(matrices, dtype=np.float64),
    )
    if len(shape) != spec.dim:
        raise DimensionMismatchError(f"domain of dimension {len(shape)} for sites in R^{spec.dim}")
    scale = get_settings().cost_scale
    costs = quantize_costs(ellipsoidal_costs(spec, pixel_points(shape)), scale)
    result = bounded_assignment(costs, lower, upper)
    if not result.feasible or result.labels is None or result.offsets is None:
        logger.info("gbpd_fit: volume bounds %s..%s are infeasible", list(lower), list(upper))
        return GBPDFitResult(feasible=False)
    logger.info("gbpd_fit: %d pixels into %d grains", costs.shape[0], spec.size)
    return GBPDFitResult(
        feasible=True,
        labels=result.labels.reshape(tuple(shape)),
        counts=result.counts,
        offsets=fitted_offsets(result.offsets, scale),
        cost=result.cost / scale,
    )


def certificate_holds(
    spec: GBPDSpec,
    labels: npt.ArrayLike,
    offsets: npt.ArrayLike,
    tol: float | None = None,
) -> bool:
    """Whether every pixel's label is an argmin of ``cost - offsets`` up to *tol*.

    ``spec.weights`` is ignored; *offsets* play their role.
    """
    tolerance = get_settings().certificate_tolerance if tol is None else tol
    lab = np.asarray(labels, dtype=np.int64)
    shifted = ellipsoidal_costs(spec, pixel_points(lab.shape)) - np.asarray(offsets)[None, :]
    chosen = np.take_along_axis(shifted, lab.reshape(-1, 1), axis=1)[:, 0]
    return bool(np.all(chosen <= shifted.min(axis=1) + tolerance))


def random_gbpd(grains: int, shape: Sequence[int], rng: np.random.Generator) -> GBPDSpec:
    """Synthetic planar GBPD with *grains* sites inside the pixel domain.

    Matrices are rotated ellipses with axis factors in ``[0.5, 2]``; weights
    are up to a tenth of the mean cell area.
    """
    if len(shape) != 2:
        raise DimensionMismatchError("synthetic diagrams are planar")
    if grains < 1:
        raise ValueError("at least one grain is required")
    h, w = shape
    cells = rng.choice(h * w, size=grains, replace=False)
    sites = np.stack([cells // w, cells % w], axis=1).astype(np.float64)
    sites += rng.uniform(0.0, 0.5, size=sites.shape)
    angles = rng.uniform(0.0, np.pi, size=grains)
    cos, sin = np.cos(angles), np.sin(angles)
    rot = np.stack([np.stack([cos, -sin], axis=1), np.stack([sin, cos], axis=1)], axis=1)
    axes = rng.uniform(0.5, 2.0, size=(grains, 2))
    matrices = np.einsum("lij,lj,lkj->lik", rot, axes, rot)
    weights = rng.uniform(0.0, 0.1 * h * w / grains, size=grains)
    return GBPDSpec(sites, matrices, weights)


def cell_boundaries(labels: npt.ArrayLike) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Unit segments, in pixel-corner coordinates, separating differently labelled pixels."""
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise DimensionMismatchError("label maps are planar")
    segments: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for i, j in zip(*np.nonzero(lab[:, 1:] != lab[:, :-1]), strict=True):
        segments.append(((int(i), int(j) + 1), (int(i) + 1, int(j) + 1)))
    for i, j in zip(*np.nonzero(lab[1:, :] != lab[:-1, :]), strict=True):
        segments.append(((int(i) + 1, int(j)), (int(i) + 1, int(j) + 1)))
    return sorted(segments)
