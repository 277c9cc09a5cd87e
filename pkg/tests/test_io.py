"""Tests for the JSON, PGM, JSON-lines and SVG formats."""

import json
import logging
from collections.abc import Generator
from pathlib import Path

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _reset_settings() -> Generator[None, None, None]:
    """Drop cached settings between tests."""
    from discrete_tomo.config import reset_settings

    reset_settings()
    yield
    reset_settings()


ROW_DATA = {"direction": [0, 1], "lines": [{"anchor": [0, 0], "value": 2}]}
COLUMN_DATA = {
    "direction": [1, 0],
    "lines": [{"anchor": [0, 0], "value": 1}, {"anchor": [0, 1], "value": 1}],
}
INSTANCE_DOC = {"dim": 2, "directions": [[0, 1], [1, 0]], "data": [ROW_DATA, COLUMN_DATA]}


def _write(path: Path, doc: object) -> Path:
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


class TestJson:
    """Reading and writing JSON documents."""

    def test_syntax_error_reports_line(self, tmp_path: Path) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import read_json

        path = tmp_path / "bad.json"
        path.write_text('{\n  "dim": 2,\n  "directions": [\n}\n', encoding="utf-8")
        with pytest.raises(InstanceSchemaError) as exc_info:
            read_json(path)
        assert exc_info.value.line == 4
        assert "line 4" in str(exc_info.value)

    def test_dumps_is_stable(self) -> None:
        from discrete_tomo.io import dumps

        assert dumps({"b": 1, "a": [1]}) == '{\n  "a": [\n    1\n  ],\n  "b": 1\n}\n'

    def test_instance(self, tmp_path: Path) -> None:
        from discrete_tomo.core import WeightedLatticeSet, xray
        from discrete_tomo.io import parse_instance
        from discrete_tomo.recon2 import COLUMNS, ROWS

        instance = parse_instance(_write(tmp_path / "inst.json", INSTANCE_DOC))
        assert instance.m == 2
        assert instance.directions == (ROWS, COLUMNS)
        psi = WeightedLatticeSet.from_points([(0, 0), (0, 1)])
        assert instance.data == (xray(psi, ROWS), xray(psi, COLUMNS))

    def test_rewrite_is_byte_identical(self, tmp_path: Path) -> None:
        from discrete_tomo.io import parse_instance, write_instance

        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        write_instance(first, parse_instance(_write(tmp_path / "in.json", INSTANCE_DOC)))
        write_instance(second, parse_instance(first))
        assert first.read_bytes() == second.read_bytes()

    def test_set(self, tmp_path: Path) -> None:
        from discrete_tomo.io import parse_set, write_set

        points = [{"p": [0, 1], "w": 2}, {"p": [0, 1], "w": 1}, {"p": [3, 3], "w": 1}]
        doc = {"dim": 2, "points": points}
        psi = parse_set(_write(tmp_path / "set.json", doc))
        assert dict(psi.entries) == {(0, 1): 3, (3, 3): 1}
        out = tmp_path / "out.json"
        write_set(out, psi)
        assert json.loads(out.read_text(encoding="utf-8")) == psi.to_dict()

    @pytest.mark.parametrize(
        ("doc", "field"),
        [
            ({"directions": [], "data": []}, ""),
            ({**INSTANCE_DOC, "dim": "2"}, "dim"),
            ({**INSTANCE_DOC, "directions": [[0, 2], [1, 0]]}, "directions[0]"),
            ({**INSTANCE_DOC, "directions": [[0, -1], [1, 0]]}, "directions[0]"),
            ({**INSTANCE_DOC, "directions": [[0, 1, 0], [1, 0]]}, "directions[0]"),
            ({**INSTANCE_DOC, "directions": [[1, 0], [0, 1]]}, "data[0].direction"),
            ({**INSTANCE_DOC, "data": [ROW_DATA]}, ""),
        ],
    )
    def test_instance_schema_errors(self, tmp_path: Path, doc: object, field: str) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import parse_instance

        with pytest.raises(InstanceSchemaError) as exc_info:
            parse_instance(_write(tmp_path / "inst.json", doc))
        assert exc_info.value.field == field

    def test_repeated_direction(self, tmp_path: Path) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import parse_instance

        row = {"direction": [0, 1], "lines": [{"anchor": [0, 0], "value": 1}]}
        doc = {"dim": 2, "directions": [[0, 1], [0, 1]], "data": [row, row]}
        with pytest.raises(InstanceSchemaError) as exc_info:
            parse_instance(_write(tmp_path / "inst.json", doc))
        assert exc_info.value.field == "directions"

    def test_bad_line_value(self, tmp_path: Path) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import parse_instance

        doc = json.loads(json.dumps(INSTANCE_DOC))
        doc["data"][1]["lines"][1]["value"] = 1.5
        with pytest.raises(InstanceSchemaError) as exc_info:
            parse_instance(_write(tmp_path / "inst.json", doc))
        assert exc_info.value.field == "data[1].lines[1].value"

    def test_unequal_mass_warns(self, tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
        from discrete_tomo.io import parse_instance

        doc = json.loads(json.dumps(INSTANCE_DOC))
        doc["data"][0]["lines"][0]["value"] = 3
        with caplog.at_level(logging.WARNING, logger="discrete_tomo.io"):
            instance = parse_instance(_write(tmp_path / "inst.json", doc))
        assert not instance.mass_consistent
        assert "unequal total mass" in caplog.text

    def test_dr_instance(self) -> None:
        from discrete_tomo.io import dr_instance_from_dict
        from discrete_tomo.superres import make_dr_instance

        image = np.array([[1, 0], [0, 1]])
        inst = make_dr_instance(image, 2, epsilon=1, reliable=frozenset({(0, 0)}))
        back = dr_instance_from_dict(json.loads(json.dumps(inst.to_dict())))
        assert back.k == 2
        assert back.epsilon == 1
        assert back.reliable == frozenset({(0, 0)})
        np.testing.assert_array_equal(back.rho, inst.rho)

    def test_dr_instance_schema_error(self) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import dr_instance_from_dict

        with pytest.raises(InstanceSchemaError):
            dr_instance_from_dict({"k": 2, "rho": [[9]], "rows": [0, 0], "cols": [0, 0]})

    def test_pte_pair_and_gbpd_spec(self) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import gbpd_spec_from_dict, pte_pair_from_dict

        pair = pte_pair_from_dict({"X": [0, 3], "Y": [1, 2], "degree": 1})
        assert (pair.x, pair.y, pair.degree) == ((0, 3), (1, 2), 1)
        spec = gbpd_spec_from_dict({"sites": [[0, 0], [4, 4]], "weights": [1, 0]})
        assert spec.weights.tolist() == [1.0, 0.0]
        with pytest.raises(InstanceSchemaError):
            gbpd_spec_from_dict({"sites": [[0, 0], [0, 0]]})

    def test_frames(self) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import frames_from_json

        assert frames_from_json([[[0, 0], [1, 2]], [[3, 3], [4, 4]]]) == [
            [(0, 0), (1, 2)],
            [(3, 3), (4, 4)],
        ]
        with pytest.raises(InstanceSchemaError) as exc_info:
            frames_from_json([[[0, 0, 1]]])
        assert exc_info.value.field == "frames[0][0]"


# ---------------------------------------------------------------------------
# JSON lines
# ---------------------------------------------------------------------------


class TestTracksJsonl:
    """One JSON record per particle."""

    def test_records(self) -> None:
        from discrete_tomo.io import tracks_from_jsonl, tracks_to_jsonl
        from discrete_tomo.models import TrackSet

        tracks = TrackSet((((0, 0), (1, 1)), ((5, 0), (5, 2))))
        text = tracks_to_jsonl(tracks)
        first = json.loads(text.splitlines()[0])
        assert first == {"particle": 0, "points": [[0, 0], [1, 1]]}
        assert tracks_from_jsonl(text + "\n") == tracks

    def test_bad_line(self) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import tracks_from_jsonl

        with pytest.raises(InstanceSchemaError) as exc_info:
            tracks_from_jsonl('{"particle": 0, "points": [[0, 0]]}\n{oops\n')
        assert exc_info.value.line == 2

    def test_unequal_lengths(self) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import tracks_from_jsonl

        text = '{"points": [[0, 0]]}\n{"points": [[1, 1], [2, 2]]}\n'
        with pytest.raises(InstanceSchemaError):
            tracks_from_jsonl(text)


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------


class TestPgm:
    """Plain PGM rasters with JSON sidecars."""

    def test_format(self) -> None:
        from discrete_tomo.io import format_pgm

        assert format_pgm([[1, 0, 2], [0, 1, 0]]) == "P2\n3 2\n2\n1 0 2\n0 1 0\n"
        assert format_pgm(np.zeros((1, 2), dtype=np.int64)) == "P2\n2 1\n1\n0 0\n"

    def test_sidecar(self, tmp_path: Path) -> None:
        from discrete_tomo.io import read_pgm, write_pgm

        path = tmp_path / "image.pgm"
        write_pgm(path, [[1, 0], [0, 1]], sidecar={"k": 2})
        image, side = read_pgm(path)
        np.testing.assert_array_equal(image, [[1, 0], [0, 1]])
        assert side == {"k": 2}
        assert (tmp_path / "image.json").exists()

    def test_without_sidecar(self, tmp_path: Path) -> None:
        from discrete_tomo.io import read_pgm, write_pgm

        path = tmp_path / "plain.pgm"
        write_pgm(path, [[3]])
        _, side = read_pgm(path)
        assert side is None

    def test_comments(self) -> None:
        from discrete_tomo.io import parse_pgm

        text = "P2 # plain\n# size\n2 1\n1\n1 0\n"
        np.testing.assert_array_equal(parse_pgm(text), [[1, 0]])

    @pytest.mark.parametrize(
        ("text", "line"),
        [
            ("P5\n1 1\n1\n0\n", 1),
            ("P2\n2 x\n1\n0 0\n", 2),
            ("P2\n2 2\n1\n0 0\n1\n", 5),
            ("P2\n2 1\n1\n0 3\n", 4),
        ],
    )
    def test_errors_report_line(self, text: str, line: int) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import parse_pgm

        with pytest.raises(InstanceSchemaError) as exc_info:
            parse_pgm(text)
        assert exc_info.value.line == line

    def test_rejects_negative_values(self) -> None:
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import format_pgm

        with pytest.raises(InstanceSchemaError):
            format_pgm([[0, -1]])


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------


class TestSvg:
    """Drawings of sets and label maps."""

    def test_points(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet
        from discrete_tomo.io import points_svg

        black = WeightedLatticeSet.from_points([(0, 0), (1, 1)])
        white = WeightedLatticeSet.from_points([(0, 1), (1, 0)])
        svg = points_svg(black, white, scale=10)
        assert svg.startswith('<svg xmlns="http://www.w3.org/2000/svg" width="20" height="20"')
        assert svg.count('fill="black"') == 2
        assert svg.count('fill="white"') == 2
        assert '<circle cx="5" cy="5" r="3.5" fill="black"/>' in svg

    def test_points_rejects_spatial(self) -> None:
        from discrete_tomo.core import WeightedLatticeSet
        from discrete_tomo.errors import InstanceSchemaError
        from discrete_tomo.io import points_svg

        with pytest.raises(InstanceSchemaError):
            points_svg(WeightedLatticeSet.from_points([(0, 0, 0)]))

    def test_label_map(self) -> None:
        from discrete_tomo.io import label_map_svg

        svg = label_map_svg([[0, 1], [0, 1]], scale=2)
        assert 'width="4" height="4"' in svg
        assert svg.count("<line") == 2
        assert '<line x1="2" y1="0" x2="2" y2="2" stroke="black"/>' in svg
