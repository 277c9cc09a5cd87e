"""Double resolution and noisy superresolution.

A binary image is sought from its row and column sums at the fine scale
and the number of ones in each ``k x k`` block (its gray value).  Blocks
outside the reliable set may deviate from their gray value by ``epsilon``.

Gray images are integer numpy arrays of block values; pixel ``a[i, j]``
lies in block ``(i // k, j // k)``.
"""

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import numpy.typing as npt

from discrete_tomo.config import get_settings
from discrete_tomo.core import DataFunction
from discrete_tomo.errors import (
    DimensionMismatchError,
    InstanceSchemaError,
    InvariantViolationError,
)
from discrete_tomo.models import DRResult
from discrete_tomo.optim import FlowNetwork, max_flow
from discrete_tomo.recon2 import COLUMNS, ROWS

logger = logging.getLogger(__name__)

Block = tuple[int, int]


@dataclass(frozen=True)
class BlockConstraint:
    block: Block
    value: int
    lower: int
    upper: int


def block_constraints(
    rho: npt.ArrayLike, k: int, epsilon: int = 0, reliable: frozenset[Block] | None = None
) -> list[BlockConstraint]:
    """Bounds ``rho - eps <= sum <= rho + eps`` per block, clipped to ``[0, k^2]``.

    Reliable blocks are exact.
    """
    values = np.asarray(rho, dtype=np.int64)
    out = []
    for (by, bx), v in np.ndenumerate(values):
        block = (int(by), int(bx))
        slack = 0 if reliable is None or block in reliable else epsilon
        out.append(
            BlockConstraint(block, int(v), max(0, int(v) - slack), min(k * k, int(v) + slack))
        )
    return out


@dataclass(frozen=True)
class DRInstance:
    """Block gray values plus fine-scale row and column sums.

    ``reliable=None`` marks every block reliable.
    """

    k: int
    rho: npt.NDArray[np.int64]
    rows: npt.NDArray[np.int64]
    cols: npt.NDArray[np.int64]
    epsilon: int = 0
    reliable: frozenset[Block] | None = None
    _bounds: tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=np.int64)
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        if self.k < 1:
            raise InstanceSchemaError(f"block size must be positive, got {self.k}", field="k")
        if self.epsilon < 0:
            raise InstanceSchemaError("epsilon must be nonnegative", field="epsilon")
        if rho.ndim != 2 or rows.ndim != 1 or cols.ndim != 1:
            raise DimensionMismatchError("rho must be 2-D, rows and cols 1-D")
        if rows.shape[0] != self.k * rho.shape[0] or cols.shape[0] != self.k * rho.shape[1]:
            raise DimensionMismatchError(
                f"{rows.shape[0]}x{cols.shape[0]} pixels do not tile {rho.shape} blocks of {self.k}"
            )
        if rho.size and (rho.min() < 0 or rho.max() > self.k * self.k):
            raise InstanceSchemaError(f"gray values must lie in [0, {self.k**2}]", field="rho")
        if self.reliable is not None:
            for by, bx in self.reliable:
                if not (0 <= by < rho.shape[0] and 0 <= bx < rho.shape[1]):
                    raise InstanceSchemaError(f"reliable block {(by, bx)} is outside rho")
        lower = np.zeros_like(rho)
        upper = np.zeros_like(rho)
        for c in block_constraints(rho, self.k, self.epsilon, self.reliable):
            lower[c.block] = c.lower
            upper[c.block] = c.upper
        object.__setattr__(self, "_bounds", (lower, upper))

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.rows.shape[0]), int(self.cols.shape[0])

    def bounds(self) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
        """Per-block lower and upper limits on the number of ones."""
        return self._bounds

    def data_functions(self) -> tuple[DataFunction, DataFunction]:
        """Row sums along ``(0, 1)`` and column sums along ``(1, 0)``."""
        return (
            DataFunction(ROWS, {i: int(v) for i, v in enumerate(self.rows)}),
            DataFunction(COLUMNS, {-j: int(v) for j, v in enumerate(self.cols)}),
        )

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "k": self.k,
            "epsilon": self.epsilon,
            "rho": self.rho.tolist(),
            "rows": self.rows.tolist(),
            "cols": self.cols.tolist(),
            "reliable": None if self.reliable is None else sorted(list(b) for b in self.reliable),
        }


def downsample(image: npt.ArrayLike, k: int) -> npt.NDArray[np.int64]:
    """Number of ones in every ``k x k`` block."""
    a = np.asarray(image, dtype=np.int64)
    if a.ndim != 2 or a.shape[0] % k or a.shape[1] % k:
        raise DimensionMismatchError(f"image of shape {a.shape} does not tile into {k}x{k} blocks")
    h, w = a.shape
    return a.reshape(h // k, k, w // k, k).sum(axis=(1, 3))


def make_dr_instance(
    image: npt.ArrayLike,
    k: int = 2,
    epsilon: int = 0,
    reliable: frozenset[Block] | None = None,
) -> DRInstance:
    """The instance measured from a ground-truth binary image."""
    a = np.asarray(image, dtype=np.int64)
    return DRInstance(
        k=k,
        rho=downsample(a, k),
        rows=a.sum(axis=1),
        cols=a.sum(axis=0),
        epsilon=epsilon,
        reliable=reliable,
    )


def check_dr_solution(inst: DRInstance, image: npt.ArrayLike) -> bool:
    """Binary, exact X-rays, every block within its bounds."""
    a = np.asarray(image, dtype=np.int64)
    if a.shape != inst.shape or not np.isin(a, (0, 1)).all():
        return False
    if not (np.array_equal(a.sum(axis=1), inst.rows) and np.array_equal(a.sum(axis=0), inst.cols)):
        return False
    lower, upper = inst.bounds()
    blocks = downsample(a, inst.k)
    return bool(((blocks >= lower) & (blocks <= upper)).all())


# ---------------------------------------------------------------------------
# Shared set-up: pre-checks and forced blocks
# ---------------------------------------------------------------------------


@dataclass
class _Setup:
    image: npt.NDArray[np.int64]
    search: list[Block]
    r_need: list[int]
    c_need: list[int]


def _prepare(inst: DRInstance) -> _Setup | None:
    k = inst.k
    h, w = inst.shape
    lower, upper = inst.bounds()
    rows, cols = inst.rows, inst.cols
    total = int(rows.sum())
    if rows.min(initial=0) < 0 or cols.min(initial=0) < 0:
        return None
    if rows.max(initial=0) > w or cols.max(initial=0) > h or total != int(cols.sum()):
        return None
    if not int(lower.sum()) <= total <= int(upper.sum()):
        return None

    image = np.zeros((h, w), dtype=np.int64)
    search: list[Block] = []
    for (by, bx), hi in np.ndenumerate(upper):
        if hi == 0:
            continue
        if lower[by, bx] == k * k:
            image[by * k : (by + 1) * k, bx * k : (bx + 1) * k] = 1
        else:
            search.append((int(by), int(bx)))
    r_need = (rows - image.sum(axis=1)).tolist()
    c_need = (cols - image.sum(axis=0)).tolist()
    if min(r_need, default=0) < 0 or min(c_need, default=0) < 0:
        return None
    return _Setup(image, search, r_need, c_need)


def _relaxations_hold(inst: DRInstance, setup: _Setup) -> bool:
    """Max-flow relaxations: rows x columns over free pixels, rows/columns x blocks."""
    k = inst.k
    h, w = inst.shape
    _, upper = inst.bounds()
    total = sum(setup.r_need)

    net = FlowNetwork(h + w + 2, source=h + w, sink=h + w + 1)
    for i, need in enumerate(setup.r_need):
        net.add_arc(h + w, i, need)
    for j, need in enumerate(setup.c_need):
        net.add_arc(h + j, h + w + 1, need)
    for by, bx in setup.search:
        for i in range(by * k, (by + 1) * k):
            for j in range(bx * k, (bx + 1) * k):
                net.add_arc(i, h + j, 1)
    if max_flow(net).value != total:
        return False

    for needs, axis in ((setup.r_need, 0), (setup.c_need, 1)):
        n_lines, n_blocks = len(needs), len(setup.search)
        source, sink = n_lines + n_blocks, n_lines + n_blocks + 1
        net = FlowNetwork(n_lines + n_blocks + 2, source=source, sink=sink)
        for i, need in enumerate(needs):
            net.add_arc(source, i, need)
        for b, block in enumerate(setup.search):
            band = block[axis]
            for i in range(band * k, (band + 1) * k):
                net.add_arc(i, n_lines + b, k)
            net.add_arc(n_lines + b, sink, int(upper[block]))
        if max_flow(net).value != total:
            return False
    return True


# ---------------------------------------------------------------------------
# Gray levels: per-line bounds contributed by each level's blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrayLevel:
    """Undecided blocks sharing a gray value and count bounds."""

    value: int
    lower: int
    upper: int
    blocks: tuple[Block, ...]

    def line_bounds(self, k: int) -> tuple[int, int]:
        """Fewest and most ones one block of this level can put on one fine row or column."""
        return max(0, self.lower - (k - 1) * k), min(k, self.upper)


def gray_levels(inst: DRInstance, blocks: list[Block]) -> list[GrayLevel]:
    """Group *blocks* by gray value and bounds, in ascending order."""
    lower, upper = inst.bounds()
    groups: dict[tuple[int, int, int], list[Block]] = {}
    for block in blocks:
        key = (int(inst.rho[block]), int(lower[block]), int(upper[block]))
        groups.setdefault(key, []).append(block)
    return [GrayLevel(v, lo, hi, tuple(bs)) for (v, lo, hi), bs in sorted(groups.items())]


@dataclass
class LineBounds:
    """Per fine row and column: least and most ones the undecided blocks can supply."""

    r_lo: list[int]
    r_hi: list[int]
    c_lo: list[int]
    c_hi: list[int]

    def add(self, k: int, block: Block, lo: int, hi: int, sign: int = 1) -> None:
        by, bx = block
        for d in range(k):
            self.r_lo[by * k + d] += sign * lo
            self.r_hi[by * k + d] += sign * hi
            self.c_lo[bx * k + d] += sign * lo
            self.c_hi[bx * k + d] += sign * hi

    def admit(self, r_need: list[int], c_need: list[int]) -> bool:
        return all(
            lo <= need <= hi for need, lo, hi in zip(r_need, self.r_lo, self.r_hi, strict=True)
        ) and all(
            lo <= need <= hi for need, lo, hi in zip(c_need, self.c_lo, self.c_hi, strict=True)
        )


def level_line_bounds(inst: DRInstance, blocks: list[Block]) -> LineBounds:
    """Sum the per-level line bounds of *blocks* onto every fine row and column."""
    k = inst.k
    h, w = inst.shape
    bounds = LineBounds([0] * h, [0] * h, [0] * w, [0] * w)
    for level in gray_levels(inst, blocks):
        lo, hi = level.line_bounds(k)
        logger.debug(
            "gray level %d [%d, %d]: %d blocks, %d..%d per line",
            level.value,
            level.lower,
            level.upper,
            len(level.blocks),
            lo,
            hi,
        )
        for block in level.blocks:
            bounds.add(k, block, lo, hi)
    return bounds


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def dr_solve(inst: DRInstance) -> DRResult:
    """A solution of *inst*, or a definitive infeasible verdict.

    Blocks of gray value 0 or ``k^2`` (when exact) are forced.  The rest
    are grouped by gray level, and every fine line must lie within the
    ones its levels can supply.  Flow relaxations screen the remainder,
    then block fills are searched in block-major order, fuller fills
    first, keeping every line within the bounds of the blocks still open.
    The relaxations are re-checked on the open blocks after each band.
    """
    setup = _prepare(inst)
    if setup is None:
        logger.info("dr_solve: rejected by pre-checks")
        return DRResult(feasible=False)
    k = inst.k
    search = setup.search
    open_bounds = level_line_bounds(inst, search)
    if not open_bounds.admit(setup.r_need, setup.c_need):
        logger.info("dr_solve: rejected by gray-level line bounds")
        return DRResult(feasible=False)
    if not _relaxations_hold(inst, setup):
        logger.info("dr_solve: rejected by flow relaxations")
        return DRResult(feasible=False)

    lower, upper = inst.bounds()
    per_block: dict[Block, tuple[int, int]] = {}
    for level in gray_levels(inst, search):
        for block in level.blocks:
            per_block[block] = level.line_bounds(k)
    image = setup.image
    r_need, c_need = setup.r_need, setup.c_need
    fills = {s: list(combinations(range(k * k), s)) for s in range(k * k + 1)}
    nodes = 0

    def local_counts(fill: tuple[int, ...]) -> tuple[list[int], list[int]]:
        rs = [0] * k
        cs = [0] * k
        for cell in fill:
            rs[cell // k] += 1
            cs[cell % k] += 1
        return rs, cs

    def candidates(t: int) -> Iterator[tuple[int, ...]]:
        by, bx = search[t]
        for s in range(int(upper[by, bx]), int(lower[by, bx]) - 1, -1):
            for fill in fills[s]:
                rs, cs = local_counts(fill)
                if all(
                    open_bounds.r_lo[by * k + d]
                    <= r_need[by * k + d] - rs[d]
                    <= open_bounds.r_hi[by * k + d]
                    and open_bounds.c_lo[bx * k + d]
                    <= c_need[bx * k + d] - cs[d]
                    <= open_bounds.c_hi[bx * k + d]
                    for d in range(k)
                ):
                    yield fill

    def shift(t: int, fill: tuple[int, ...], sign: int) -> None:
        by, bx = search[t]
        rs, cs = local_counts(fill)
        for d in range(k):
            r_need[by * k + d] -= sign * rs[d]
            c_need[bx * k + d] -= sign * cs[d]
        for cell in fill:
            image[by * k + cell // k, bx * k + cell % k] = 1 if sign > 0 else 0

    def reserve(t: int, sign: int) -> None:
        lo, hi = per_block[search[t]]
        open_bounds.add(k, search[t], lo, hi, -sign)

    if not search:
        found = all(v == 0 for v in r_need) and all(v == 0 for v in c_need)
        return DRResult(feasible=found, image=image.copy() if found else None)

    stack: list[Iterator[tuple[int, ...]]] = []
    placed: list[tuple[int, ...] | None] = []
    reserve(0, 1)
    stack.append(candidates(0))
    placed.append(None)
    found = False
    while stack:
        t = len(stack) - 1
        prev = placed[t]
        if prev is not None:
            shift(t, prev, -1)
            placed[t] = None
        fill = next(stack[t], None)
        if fill is None:
            stack.pop()
            placed.pop()
            reserve(t, -1)
            continue
        nodes += 1
        shift(t, fill, 1)
        placed[t] = fill
        if t + 1 == len(search):
            found = True
            break
        if search[t + 1][0] != search[t][0]:
            rest = _Setup(image, search[t + 1 :], r_need, c_need)
            if not _relaxations_hold(inst, rest):
                continue
        reserve(t + 1, 1)
        stack.append(candidates(t + 1))
        placed.append(None)

    logger.info("dr_solve: %s after %d nodes", "solved" if found else "infeasible", nodes)
    if not found:
        return DRResult(feasible=False, nodes=nodes)
    solution = image.copy()
    if not check_dr_solution(inst, solution):
        raise InvariantViolationError("dr_solve produced an image violating its constraints")
    return DRResult(feasible=True, image=solution, nodes=nodes)


def dr_bruteforce(inst: DRInstance) -> list[npt.NDArray[np.int64]]:
    """Every solution of *inst*, by pixel-level enumeration of the non-forced blocks."""
    settings = get_settings()
    setup = _prepare(inst)
    if setup is None:
        return []
    k = inst.k
    lower, upper = inst.bounds()
    free = [
        (i, j, b)
        for b, (by, bx) in enumerate(setup.search)
        for i in range(by * k, (by + 1) * k)
        for j in range(bx * k, (bx + 1) * k)
    ]
    settings.check_guard("free pixels", len(free), settings.max_free_pixels)
    free.sort()
    image = setup.image.copy()
    r_need, c_need = list(setup.r_need), list(setup.c_need)
    r_left = [0] * len(r_need)
    c_left = [0] * len(c_need)
    b_left = [k * k] * len(setup.search)
    b_count = [0] * len(setup.search)
    b_lo = [int(lower[b]) for b in setup.search]
    b_hi = [int(upper[b]) for b in setup.search]
    for i, j, _ in free:
        r_left[i] += 1
        c_left[j] += 1
    solutions: list[npt.NDArray[np.int64]] = []

    def ok(i: int, j: int, b: int) -> bool:
        return (
            0 <= r_need[i] <= r_left[i]
            and 0 <= c_need[j] <= c_left[j]
            and b_count[b] <= b_hi[b]
            and b_count[b] + b_left[b] >= b_lo[b]
        )

    def search(n: int) -> None:
        if n == len(free):
            if not any(r_need) and not any(c_need):
                solutions.append(image.copy())
            return
        i, j, b = free[n]
        r_left[i] -= 1
        c_left[j] -= 1
        b_left[b] -= 1
        for bit in (0, 1):
            r_need[i] -= bit
            c_need[j] -= bit
            b_count[b] += bit
            image[i, j] = bit
            if ok(i, j, b):
                search(n + 1)
            r_need[i] += bit
            c_need[j] += bit
            b_count[b] -= bit
        image[i, j] = 0
        r_left[i] += 1
        c_left[j] += 1
        b_left[b] += 1

    search(0)
    solutions.sort(key=lambda a: tuple(a.ravel().tolist()))
    logger.info("dr_bruteforce: %d solutions over %d free pixels", len(solutions), len(free))
    return solutions


# ---------------------------------------------------------------------------
# Instability construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstabilityPair:
    """Two uniquely solvable double-resolution instances with far-apart solutions."""

    first: DRInstance
    second: DRInstance
    image1: npt.NDArray[np.int64]
    image2: npt.NDArray[np.int64]


def instability_pair(alpha: int = 1) -> InstabilityPair:
    """Unique solutions ``F1``, ``F2`` with X-ray difference 4, ``|F1| = |F2| >= alpha``
    and ``|F1 ∩ F2| = |F1| / 2``.

    Two block permutation patterns on an ``s x s`` block grid, each with one
    pixel deleted from one block, are paired with a shared strip of full
    blocks (one with its corner pixel deleted) below them.
    """
    s = max(2, -(-(alpha + 2) // 8))
    k = 2
    h, w = k * (s + 1), k * 2 * s

    def full(a: npt.NDArray[np.int64], by: int, bx: int) -> None:
        a[by * k : (by + 1) * k, bx * k : (bx + 1) * k] = 1

    shared = np.zeros((h, w), dtype=np.int64)
    full(shared, s, s)
    shared[s * k, s * k] = 0
    for j in range(s - 1):
        full(shared, s, s + 1 + j)

    image1 = shared.copy()
    image2 = shared.copy()
    for i in range(s):
        full(image1, i, i)
        full(image2, i, (i + 1) % s)
    image1[0, 0] = 0
    image2[1, 2] = 0
    logger.debug("instability_pair: s=%d, %d points per set", s, int(image1.sum()))
    return InstabilityPair(
        first=make_dr_instance(image1, k),
        second=make_dr_instance(image2, k),
        image1=image1,
        image2=image2,
    )
