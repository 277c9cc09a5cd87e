"""Tests for GBPD labelling and volume-constrained grain fitting."""

from collections.abc import Generator

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _reset_settings() -> Generator[None, None, None]:
    """Drop cached settings between tests."""
    from discrete_tomo.config import reset_settings

    reset_settings()
    yield
    reset_settings()


def _labelling_cost(spec: object, labels: np.ndarray) -> float:
    from discrete_tomo.grains import GBPDSpec, ellipsoidal_costs, pixel_points

    assert isinstance(spec, GBPDSpec)
    costs = ellipsoidal_costs(spec, pixel_points(labels.shape))
    return float(np.take_along_axis(costs, labels.reshape(-1, 1), axis=1).sum())


class TestSpec:
    """Validation of sites, matrices and weights."""

    def test_defaults_to_voronoi(self) -> None:
        from discrete_tomo.grains import GBPDSpec

        spec = GBPDSpec(np.array([[0.0, 0.0], [3.0, 1.0]]))
        assert spec.size == 2
        assert spec.dim == 2
        np.testing.assert_array_equal(spec.matrices[1], np.eye(2))
        np.testing.assert_array_equal(spec.weights, [0.0, 0.0])

    @pytest.mark.parametrize(
        "matrix",
        [
            [[1.0, 0.0], [0.0, -1.0]],
            [[1.0, 1.0], [0.0, 1.0]],
            [[0.0, 0.0], [0.0, 1.0]],
        ],
    )
    def test_rejects_bad_matrices(self, matrix: list[list[float]]) -> None:
        from discrete_tomo.errors import NotPositiveDefiniteError
        from discrete_tomo.grains import GBPDSpec

        with pytest.raises(NotPositiveDefiniteError):
            GBPDSpec(np.array([[0.0, 0.0]]), np.array([matrix]))

    def test_rejects_duplicate_sites(self) -> None:
        from discrete_tomo.grains import GBPDSpec

        with pytest.raises(ValueError):
            GBPDSpec(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_rejects_shape_mismatch(self) -> None:
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.grains import GBPDSpec

        with pytest.raises(DimensionMismatchError):
            GBPDSpec(np.array([[0.0, 0.0], [1.0, 0.0]]), weights=np.zeros(3))

    def test_to_dict(self) -> None:
        from discrete_tomo.grains import GBPDSpec

        doc = GBPDSpec(np.array([[0.0, 1.0]]), weights=np.array([2.0])).to_dict()
        assert doc["sites"] == [[0.0, 1.0]]
        assert doc["matrices"] == [[[1.0, 0.0], [0.0, 1.0]]]
        assert doc["weights"] == [2.0]


class TestAssign:
    """Argmin labelling of pixels."""

    def test_ellipsoidal_costs(self) -> None:
        from discrete_tomo.grains import GBPDSpec, ellipsoidal_costs

        spec = GBPDSpec(np.array([[0.0, 0.0]]), np.array([[[4.0, 0.0], [0.0, 1.0]]]))
        np.testing.assert_allclose(ellipsoidal_costs(spec, [[1, 1], [0, 2]]), [[5.0], [4.0]])

    def test_weight_shifts_boundary(self) -> None:
        from discrete_tomo.grains import GBPDSpec, gbpd_assign

        spec = GBPDSpec(np.array([[0.0, 0.0], [10.0, 0.0]]), weights=np.array([25.0, 0.0]))
        labels = gbpd_assign(spec, (12, 1))
        assert labels[:, 0].tolist() == [0] * 7 + [1] * 5

    def test_ties_go_to_lowest_index(self) -> None:
        from discrete_tomo.grains import GBPDSpec, gbpd_assign

        spec = GBPDSpec(np.array([[0.0, 0.0], [2.0, 0.0]]))
        assert gbpd_assign(spec, (3, 1))[:, 0].tolist() == [0, 0, 1]

    def test_dimension_mismatch(self) -> None:
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.grains import GBPDSpec, gbpd_assign

        with pytest.raises(DimensionMismatchError):
            gbpd_assign(GBPDSpec(np.array([[0.0, 0.0]])), (2, 2, 2))


class TestVolumeBounds:
    """Count intervals around measured volumes."""

    def test_slack(self) -> None:
        from discrete_tomo.grains import volume_bounds

        assert volume_bounds([10, 7], 0.5) == ([5, 3], [15, 11])
        assert volume_bounds([10, 7], 0.0) == ([10, 7], [10, 7])

    def test_rejects_negative_slack(self) -> None:
        from discrete_tomo.grains import volume_bounds

        with pytest.raises(ValueError):
            volume_bounds([4], -0.1)


class TestFit:
    """Volume-constrained fits and their certificates."""

    def test_exact_counts(self) -> None:
        from discrete_tomo.grains import GBPDSpec, certificate_holds, gbpd_fit

        sites = np.array([[0.0, 0.0], [3.0, 3.0]])
        result = gbpd_fit(sites, (4, 4), [10, 6], [10, 6])
        assert result.feasible
        assert result.labels is not None
        assert result.offsets is not None
        assert result.counts == [10, 6]
        assert np.bincount(result.labels.ravel(), minlength=2).tolist() == [10, 6]
        assert certificate_holds(GBPDSpec(sites), result.labels, result.offsets)
        assert result.to_dict()["counts"] == [10, 6]

    def test_infeasible_bounds(self) -> None:
        from discrete_tomo.grains import gbpd_fit

        result = gbpd_fit(np.array([[0.0, 0.0], [3.0, 3.0]]), (4, 4), [10, 10], [12, 12])
        assert not result.feasible
        assert result.to_dict()["offsets"] is None

    def test_certificate_rejects_wrong_labels(self) -> None:
        from discrete_tomo.grains import GBPDSpec, certificate_holds

        spec = GBPDSpec(np.array([[0.0, 0.0], [3.0, 0.0]]))
        labels = np.array([[1], [1], [0], [0]])
        assert not certificate_holds(spec, labels, [0.0, 0.0])

    def test_recovers_random_diagram(self) -> None:
        from discrete_tomo.grains import certificate_holds, gbpd_assign, gbpd_fit, random_gbpd

        rng = np.random.default_rng(8)
        spec = random_gbpd(4, (16, 16), rng)
        truth = gbpd_assign(spec, (16, 16))
        counts = np.bincount(truth.ravel(), minlength=4).tolist()
        result = gbpd_fit(spec.sites, (16, 16), counts, counts, spec.matrices)
        assert result.feasible
        assert result.labels is not None
        assert result.offsets is not None
        assert result.counts == counts
        assert certificate_holds(spec, result.labels, result.offsets)
        assert result.cost == pytest.approx(_labelling_cost(spec, truth), abs=1e-3)

    @pytest.mark.slow
    def test_recovers_large_random_diagram(self) -> None:
        from discrete_tomo.grains import gbpd_assign, gbpd_fit, random_gbpd

        rng = np.random.default_rng(21)
        spec = random_gbpd(12, (128, 128), rng)
        truth = gbpd_assign(spec, (128, 128))
        counts = np.bincount(truth.ravel(), minlength=12).tolist()
        result = gbpd_fit(spec.sites, (128, 128), counts, counts, spec.matrices)
        assert result.feasible
        assert result.cost == pytest.approx(_labelling_cost(spec, truth), abs=0.1)


class TestRandomAndBoundaries:
    """Synthetic diagrams and cell outlines."""

    def test_random_gbpd(self) -> None:
        from discrete_tomo.grains import random_gbpd

        spec = random_gbpd(5, (10, 12), np.random.default_rng(0))
        assert spec.sites.shape == (5, 2)
        assert np.all(spec.sites[:, 0] < 10)
        assert np.all(spec.sites[:, 1] < 12)
        assert np.all(np.linalg.eigvalsh(spec.matrices) > 0)

    def test_random_gbpd_rejects(self) -> None:
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.grains import random_gbpd

        with pytest.raises(DimensionMismatchError):
            random_gbpd(2, (4, 4, 4), np.random.default_rng(0))
        with pytest.raises(ValueError):
            random_gbpd(0, (4, 4), np.random.default_rng(0))

    def test_vertical_boundary(self) -> None:
        from discrete_tomo.grains import cell_boundaries

        assert cell_boundaries([[0, 1], [0, 1]]) == [((0, 1), (1, 1)), ((1, 1), (2, 1))]

    def test_horizontal_boundary(self) -> None:
        from discrete_tomo.grains import cell_boundaries

        assert cell_boundaries([[0, 0], [1, 1]]) == [((1, 0), (1, 1)), ((1, 1), (1, 2))]

    def test_uniform_map_has_none(self) -> None:
        from discrete_tomo.grains import cell_boundaries

        assert cell_boundaries(np.zeros((3, 3), dtype=np.int64)) == []

    def test_rejects_spatial_maps(self) -> None:
        from discrete_tomo.errors import DimensionMismatchError
        from discrete_tomo.grains import cell_boundaries

        with pytest.raises(DimensionMismatchError):
            cell_boundaries(np.zeros((2, 2, 2)))
