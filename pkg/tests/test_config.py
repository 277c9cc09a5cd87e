"""Tests for the ``TOMO_*`` settings layer and the exhaustive-search guards."""

import logging
from collections.abc import Generator

import pytest


@pytest.fixture(autouse=True)
def _reset_settings() -> Generator[None, None, None]:
    """Drop cached settings between tests."""
    from discrete_tomo.config import reset_settings

    reset_settings()
    yield
    reset_settings()


class TestFromEnv:
    """Settings.from_env parsing."""

    def test_defaults(self) -> None:
        from discrete_tomo.config import Settings

        s = Settings.from_env({})
        assert s.max_grid_points == 30
        assert s.max_nearest_points == 24
        assert s.max_free_pixels == 25
        assert s.max_track_particles == 8
        assert s.cost_scale == 2**20
        assert s.volume_slack == pytest.approx(0.02)
        assert s.guard_override is False

    def test_integer_override(self) -> None:
        from discrete_tomo.config import Settings

        s = Settings.from_env({"TOMO_MAX_GRID_POINTS": " 12 "})
        assert s.max_grid_points == 12

    def test_float_override(self) -> None:
        from discrete_tomo.config import Settings

        s = Settings.from_env({"TOMO_CERTIFICATE_TOLERANCE": "0.5"})
        assert s.certificate_tolerance == pytest.approx(0.5)

    @pytest.mark.parametrize("raw", ["1", "true", "YES", "on"])
    def test_truthy_override(self, raw: str) -> None:
        from discrete_tomo.config import Settings

        assert Settings.from_env({"TOMO_GUARD_OVERRIDE": raw}).guard_override is True

    def test_bad_boolean_names_the_variable(self) -> None:
        from discrete_tomo.config import Settings
        from discrete_tomo.errors import InstanceSchemaError

        with pytest.raises(InstanceSchemaError) as exc:
            Settings.from_env({"TOMO_GUARD_OVERRIDE": "maybe"})
        assert exc.value.field == "TOMO_GUARD_OVERRIDE"

    def test_non_numeric_rejected(self) -> None:
        from discrete_tomo.config import Settings
        from discrete_tomo.errors import InstanceSchemaError

        with pytest.raises(InstanceSchemaError):
            Settings.from_env({"TOMO_MAX_ROUNDS": "many"})

    def test_negative_rejected(self) -> None:
        from discrete_tomo.config import Settings
        from discrete_tomo.errors import InstanceSchemaError

        with pytest.raises(InstanceSchemaError):
            Settings.from_env({"TOMO_VOLUME_SLACK": "-0.1"})


class TestGetSettings:
    """Process-wide cache."""

    def test_cached_until_reset(self, monkeypatch: pytest.MonkeyPatch) -> None:
        from discrete_tomo.config import get_settings, reset_settings

        monkeypatch.setenv("TOMO_MAX_ROUNDS", "7")
        first = get_settings()
        assert first.max_rounds == 7
        monkeypatch.setenv("TOMO_MAX_ROUNDS", "9")
        assert get_settings() is first
        reset_settings()
        assert get_settings().max_rounds == 9


class TestCheckGuard:
    """Guards on exhaustive searches."""

    def test_within_limit(self) -> None:
        from discrete_tomo.config import Settings

        Settings().check_guard("grid points", 30, 30)

    def test_exceeded(self) -> None:
        from discrete_tomo.config import Settings
        from discrete_tomo.errors import GuardExceededError

        with pytest.raises(GuardExceededError) as exc:
            Settings().check_guard("grid points", 31, 30)
        assert exc.value.name == "grid points"
        assert exc.value.size == 31
        assert exc.value.limit == 30

    def test_override_warns_once(self, caplog: pytest.LogCaptureFixture) -> None:
        from discrete_tomo.config import Settings

        s = Settings(guard_override=True)
        with caplog.at_level(logging.WARNING, logger="discrete_tomo.config"):
            s.check_guard("frames", 9, 5)
            s.check_guard("frames", 10, 5)
        assert sum("frames" in r.getMessage() for r in caplog.records) == 1
