"""Runtime settings, read once from ``TOMO_*`` environment variables."""

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from typing import Self

from discrete_tomo.errors import GuardExceededError, InstanceSchemaError

logger = logging.getLogger(__name__)

_TRUTHY = frozenset({"1", "true", "yes", "on"})
_FALSY = frozenset({"", "0", "false", "no", "off"})

_ENV_NAMES: dict[str, str] = {
    "max_grid_points": "TOMO_MAX_GRID_POINTS",
    "max_nearest_points": "TOMO_MAX_NEAREST_POINTS",
    "max_free_pixels": "TOMO_MAX_FREE_PIXELS",
    "max_track_particles": "TOMO_MAX_TRACK_PARTICLES",
    "max_track_frames": "TOMO_MAX_TRACK_FRAMES",
    "max_prouhet_degree": "TOMO_MAX_PROUHET_DEGREE",
    "cost_scale": "TOMO_COST_SCALE",
    "max_rounds": "TOMO_MAX_ROUNDS",
    "certificate_tolerance": "TOMO_CERTIFICATE_TOLERANCE",
    "volume_slack": "TOMO_VOLUME_SLACK",
    "guard_override": "TOMO_GUARD_OVERRIDE",
}


@dataclass(frozen=True)
class Settings:
    """Guards and numeric knobs shared by all solvers."""

    max_grid_points: int = 30
    max_nearest_points: int = 24
    max_free_pixels: int = 25
    max_track_particles: int = 8
    max_track_frames: int = 5
    max_prouhet_degree: int = 20
    cost_scale: int = 2**20
    max_rounds: int = 50
    certificate_tolerance: float = 2**-10
    volume_slack: float = 0.02
    guard_override: bool = False

    def check_guard(self, name: str, size: int, limit: int) -> None:
        """Raise :class:`GuardExceededError` when *size* is above *limit*.

        With ``guard_override`` set the search runs anyway and a warning is
        logged the first time each guard is crossed.
        """
        if size <= limit:
            return
        if self.guard_override:
            if name not in _warned_guards:
                _warned_guards.add(name)
                logger.warning("Guard %s lifted: running with %d > %d", name, size, limit)
            return
        raise GuardExceededError(name, size, limit)

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> "Self":
        """Build settings from *environ* (defaults to ``os.environ``)."""
        env = os.environ if environ is None else environ
        values: dict[str, object] = {}
        for f in fields(cls):
            var = _ENV_NAMES[f.name]
            raw = env.get(var)
            if raw is None:
                continue
            values[f.name] = _parse(var, raw.strip(), f.default)
        return cls(**values)  # type: ignore[arg-type]


def _parse(var: str, raw: str, default: object) -> object:
    if isinstance(default, bool):
        lowered = raw.lower()
        if lowered in _TRUTHY:
            return True
        if lowered in _FALSY:
            return False
        raise InstanceSchemaError(f"expected a boolean, got {raw!r}", field=var)
    try:
        value: int | float = int(raw) if isinstance(default, int) else float(raw)
    except ValueError:
        raise InstanceSchemaError(f"expected a number, got {raw!r}", field=var) from None
    if value < 0:
        raise InstanceSchemaError(f"expected a non-negative value, got {raw!r}", field=var)
    return value


_warned_guards: set[str] = set()

# Lazy-loaded process-wide settings
_settings: Settings | None = None


def get_settings() -> Settings:
    """Return the process-wide settings, reading the environment on first use."""
    global _settings  # noqa: PLW0603
    if _settings is None:
        _settings = Settings.from_env()
        logger.debug("Loaded settings: %s", _settings)
    return _settings


def reset_settings() -> None:
    """Forget cached settings so the next :func:`get_settings` re-reads the environment."""
    global _settings  # noqa: PLW0603
    _settings = None
    _warned_guards.clear()
