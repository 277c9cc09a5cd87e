"""Prouhet–Tarry–Escott solutions.

Two distinct integer multisets ``X``, ``Y`` of equal size form a solution of
degree ``k`` when their power sums agree for every exponent ``1..k``.
Projecting a switching component for ``m + 1`` planar directions onto a
line gives one of degree ``m``; the two colour classes themselves match in
every bivariate moment of total degree at most ``m``.
"""

import logging
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from discrete_tomo.config import get_settings
from discrete_tomo.core import Point, WeightedLatticeSet
from discrete_tomo.errors import (
    DimensionMismatchError,
    InvariantViolationError,
    UnverifiedPairError,
)
from discrete_tomo.switching import SwitchingPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PTEPair:
    x: tuple[int, ...]
    y: tuple[int, ...]
    degree: int

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {"X": list(self.x), "Y": list(self.y), "degree": self.degree}


@dataclass(frozen=True)
class PTEDerivation:
    """A projected pair, or ``degenerate`` when both projections coincide."""

    degenerate: bool
    pair: PTEPair | None = None

    def to_dict(self) -> dict[str, object]:
        """Serialise to a JSON-compatible dict."""
        return {
            "degenerate": self.degenerate,
            "pair": None if self.pair is None else self.pair.to_dict(),
        }


def _same_size(x: Sequence[object], y: Sequence[object]) -> None:
    if len(x) != len(y):
        raise DimensionMismatchError(f"multisets of size {len(x)} and {len(y)}")


def _power_sums_agree(x: Sequence[int], y: Sequence[int], j: int) -> bool:
    return sum(a**j for a in x) == sum(b**j for b in y)


def pte_verify(x: Sequence[int], y: Sequence[int], k: int) -> bool:
    """True iff ``X != Y`` and the power sums agree for every exponent ``1..k``.

    Sums are exact integers.  A size below ``k + 1`` is logged as a warning:
    no solution of that shape exists, so equal sums there point at bad input.
    """
    _same_size(x, y)
    if len(x) < k + 1:
        logger.warning("pte_verify: size %d is below k + 1 = %d", len(x), k + 1)
    if Counter(x) == Counter(y):
        return False
    return all(_power_sums_agree(x, y, j) for j in range(1, k + 1))


def pte_degree(x: Sequence[int], y: Sequence[int], limit: int | None = None) -> int:
    """Largest ``k`` up to *limit* with equal power sums; 0 if the plain sums differ.

    Distinct multisets of size ``n`` cannot agree beyond ``n - 1``, which is
    the default limit.
    """
    _same_size(x, y)
    cap = max(len(x) - 1, 0) if limit is None else limit
    k = 0
    while k < cap and _power_sums_agree(x, y, k + 1):
        k += 1
    return k


def project(psi: WeightedLatticeSet, c: Sequence[int]) -> list[int]:
    """Sorted multiset ``{c . x}`` over the points of *psi*, repeated by weight."""
    if len(c) != psi.dim:
        raise DimensionMismatchError(f"vector of length {len(c)} for points in Z^{psi.dim}")
    return sorted(sum(a * b for a, b in zip(p, c, strict=True)) for p in psi.multiset())


def pte_from_switching(pair: SwitchingPair, c: Sequence[int]) -> PTEDerivation:
    """Project a switching component for ``m + 1`` planar directions to a degree-``m`` pair."""
    if pair.plus.dim != 2:
        raise DimensionMismatchError("projection pairs are built from planar components")
    if not pair.is_valid():
        raise UnverifiedPairError("the pair does not share its X-rays along its directions")
    x = project(pair.plus, c)
    y = project(pair.minus, c)
    if x == y:
        logger.info("pte_from_switching: projections along %s coincide", tuple(c))
        return PTEDerivation(degenerate=True)
    result = PTEPair(tuple(x), tuple(y), len(pair.directions) - 1)
    if not pte_verify(result.x, result.y, result.degree):
        raise InvariantViolationError(f"projection along {tuple(c)} fails degree {result.degree}")
    return PTEDerivation(degenerate=False, pair=result)


def pte2_verify(x: Sequence[Point], y: Sequence[Point], k: int) -> bool:
    """True iff ``sum x1^a x2^b`` agree for all ``a + b <= k``."""
    _same_size(x, y)
    for total in range(k + 1):
        for a in range(total + 1):
            b = total - a
            if sum(p[0] ** a * p[1] ** b for p in x) != sum(q[0] ** a * q[1] ** b for q in y):
                return False
    return True


# Lazy-filled cache of parity splits, keyed by degree
_prouhet_cache: dict[int, PTEPair] = {}


def prouhet_solution(k: int) -> PTEPair:
    """Split ``0..2^(k+1) - 1`` by the parity of the binary digit sum."""
    if k < 1:
        raise ValueError("degree must be at least 1")
    settings = get_settings()
    settings.check_guard("prouhet degree", k, settings.max_prouhet_degree)
    if k not in _prouhet_cache:
        even: list[int] = []
        odd: list[int] = []
        for n in range(2 ** (k + 1)):
            (odd if n.bit_count() % 2 else even).append(n)
        _prouhet_cache[k] = PTEPair(tuple(even), tuple(odd), k)
    return _prouhet_cache[k]


def goldbach_pair(alpha: int, beta: int, gamma: int, delta: int) -> PTEPair:
    """The four-term degree-2 identity; the two sides may coincide for special inputs."""
    x = sorted([alpha + beta + delta, alpha + gamma + delta, beta + gamma + delta, delta])
    y = sorted([alpha + delta, beta + delta, gamma + delta, alpha + beta + gamma + delta])
    return PTEPair(tuple(x), tuple(y), 2)


def is_ideal(pair: PTEPair) -> bool:
    return len(pair.x) == pair.degree + 1


def lift(pair: PTEPair, d: int) -> tuple[list[Point], list[Point]]:
    """Diagonal copies ``(xi, ..., xi)`` in ``Z^d``, a solution there of the same degree."""
    if d < 1:
        raise ValueError("dimension must be positive")
    return [(a,) * d for a in pair.x], [(b,) * d for b in pair.y]
