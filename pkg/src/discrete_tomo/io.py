"""File formats: JSON documents, plain PGM rasters with JSON sidecars, JSON-lines tracks, SVG.

JSON is written with sorted keys, two-space indentation and a trailing
newline, so writing what was read reproduces the file byte for byte.
"""

import json
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from discrete_tomo.core import (
    DataFunction,
    Direction,
    Instance,
    WeightedLatticeSet,
    canonical_direction,
)
from discrete_tomo.errors import InstanceSchemaError, InvalidDirectionError, TomographyError
from discrete_tomo.grains import GBPDSpec, cell_boundaries
from discrete_tomo.models import TrackSet
from discrete_tomo.pte import PTEPair
from discrete_tomo.superres import DRInstance

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def dumps(document: object) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def write_json(path: Path, document: object) -> None:
    path.write_text(dumps(document), encoding="utf-8")


def read_json(path: Path) -> Any:
    """Parse *path*, reporting syntax errors with their line number."""
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceSchemaError(exc.msg, field=str(path), line=exc.lineno) from None


def _get(doc: Any, key: str, where: str) -> Any:
    if not isinstance(doc, Mapping):
        raise InstanceSchemaError("expected an object", field=where)
    if key not in doc:
        raise InstanceSchemaError(f"missing key {key!r}", field=where)
    return doc[key]


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceSchemaError(f"expected an integer, got {value!r}", field=where)
    return value


def _ints(value: Any, where: str, length: int | None = None) -> list[int]:
    if not isinstance(value, list):
        raise InstanceSchemaError("expected a list of integers", field=where)
    out = [_int(v, f"{where}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(out) != length:
        raise InstanceSchemaError(f"expected {length} entries, got {len(out)}", field=where)
    return out


def _list(value: Any, where: str) -> list[Any]:
    if not isinstance(value, list):
        raise InstanceSchemaError("expected a list", field=where)
    return value


def direction_from_json(value: Any, where: str, dim: int | None = None) -> Direction:
    """A reduced direction with its first nonzero entry positive."""
    v = _ints(value, where, dim)
    try:
        s = canonical_direction(v)
    except InvalidDirectionError as exc:
        raise InstanceSchemaError(str(exc), field=where) from None
    if list(s.v) != v:
        raise InstanceSchemaError(f"direction {v} is not canonical: {list(s.v)}", field=where)
    return s


def set_from_dict(doc: Any, where: str = "") -> WeightedLatticeSet:
    dim = _int(_get(doc, "dim", where), f"{where}.dim")
    entries: dict[tuple[int, ...], int] = {}
    for i, item in enumerate(_list(_get(doc, "points", where), f"{where}.points")):
        at = f"{where}.points[{i}]"
        p = tuple(_ints(_get(item, "p", at), f"{at}.p", dim))
        entries[p] = entries.get(p, 0) + _int(_get(item, "w", at), f"{at}.w")
    return WeightedLatticeSet(dim, entries)


def instance_from_dict(doc: Any) -> Instance:
    """Validate an instance document; unequal masses are logged, not rejected."""
    dim = _int(_get(doc, "dim", ""), "dim")
    dirs = [
        direction_from_json(v, f"directions[{i}]", dim)
        for i, v in enumerate(_list(_get(doc, "directions", ""), "directions"))
    ]
    data = _list(_get(doc, "data", ""), "data")
    if len(data) != len(dirs):
        raise InstanceSchemaError(f"{len(dirs)} directions but {len(data)} data functions")
    functions = []
    for i, (s, item) in enumerate(zip(dirs, data, strict=True)):
        at = f"data[{i}]"
        if direction_from_json(_get(item, "direction", at), f"{at}.direction", dim) != s:
            raise InstanceSchemaError(f"expected direction {list(s.v)}", field=f"{at}.direction")
        pairs = []
        for j, line in enumerate(_list(_get(item, "lines", at), f"{at}.lines")):
            where = f"{at}.lines[{j}]"
            anchor = _ints(_get(line, "anchor", where), f"{where}.anchor", dim)
            pairs.append((anchor, _int(_get(line, "value", where), f"{where}.value")))
        functions.append(DataFunction.from_anchors(s, pairs))
    try:
        instance = Instance(tuple(dirs), tuple(functions))
    except TomographyError as exc:
        raise InstanceSchemaError(str(exc), field="directions") from None
    if not instance.mass_consistent:
        logger.warning("Data functions carry unequal total mass: %s", instance.totals)
    return instance


def parse_instance(path: Path) -> Instance:
    return instance_from_dict(read_json(path))


def write_instance(path: Path, instance: Instance) -> None:
    write_json(path, instance.to_dict())


def parse_set(path: Path) -> WeightedLatticeSet:
    return set_from_dict(read_json(path))


def write_set(path: Path, psi: WeightedLatticeSet) -> None:
    write_json(path, psi.to_dict())


def dr_instance_from_dict(doc: Any) -> DRInstance:
    reliable = doc.get("reliable") if isinstance(doc, Mapping) else None
    blocks = None
    if reliable is not None:
        pairs = [_ints(b, f"reliable[{i}]", 2) for i, b in enumerate(_list(reliable, "reliable"))]
        blocks = frozenset((by, bx) for by, bx in pairs)
    rho = [_ints(row, f"rho[{i}]") for i, row in enumerate(_list(_get(doc, "rho", ""), "rho"))]
    try:
        return DRInstance(
            k=_int(_get(doc, "k", ""), "k"),
            rho=np.array(rho, dtype=np.int64).reshape(len(rho), -1 if rho else 0),
            rows=np.array(_ints(_get(doc, "rows", ""), "rows"), dtype=np.int64),
            cols=np.array(_ints(_get(doc, "cols", ""), "cols"), dtype=np.int64),
            epsilon=_int(doc.get("epsilon", 0), "epsilon"),
            reliable=blocks,
        )
    except (TomographyError, ValueError) as exc:
        if isinstance(exc, InstanceSchemaError):
            raise
        raise InstanceSchemaError(str(exc), field="rho") from None


def pte_pair_from_dict(doc: Any) -> PTEPair:
    return PTEPair(
        tuple(_ints(_get(doc, "X", ""), "X")),
        tuple(_ints(_get(doc, "Y", ""), "Y")),
        _int(_get(doc, "degree", ""), "degree"),
    )


def gbpd_spec_from_dict(doc: Any) -> GBPDSpec:
    try:
        return GBPDSpec(
            np.asarray(_get(doc, "sites", ""), dtype=np.float64),
            np.asarray(doc.get("matrices", []), dtype=np.float64),
            np.asarray(doc.get("weights", []), dtype=np.float64),
        )
    except (TomographyError, ValueError) as exc:
        if isinstance(exc, InstanceSchemaError):
            raise
        raise InstanceSchemaError(str(exc), field="sites") from None


# ---------------------------------------------------------------------------
# JSON lines
# ---------------------------------------------------------------------------


def tracks_to_jsonl(tracks: TrackSet) -> str:
    """One record per particle, ``{"particle": i, "points": [...]}``."""
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in tracks.to_records())


def tracks_from_jsonl(text: str) -> TrackSet:
    out: list[tuple[tuple[int, ...], ...]] = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InstanceSchemaError(exc.msg, line=n) from None
        points = _list(_get(record, "points", f"line {n}"), "points")
        out.append(tuple(tuple(_ints(p, f"points[{i}]")) for i, p in enumerate(points)))
    if len({len(track) for track in out}) > 1:
        raise InstanceSchemaError("tracks differ in length")
    return TrackSet(tuple(out))


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def format_pgm(image: npt.ArrayLike, maxval: int | None = None) -> str:
    a = np.asarray(image, dtype=np.int64)
    if a.ndim != 2:
        raise InstanceSchemaError(f"PGM images are 2-D, got shape {a.shape}")
    if a.size and a.min() < 0:
        raise InstanceSchemaError("PGM values must be nonnegative")
    top = max(1, int(a.max()) if a.size else 1) if maxval is None else maxval
    h, w = a.shape
    rows = [" ".join(str(int(v)) for v in row) for row in a]
    return "\n".join(["P2", f"{w} {h}", str(top), *rows]) + "\n"


def write_pgm(path: Path, image: npt.ArrayLike, sidecar: object | None = None) -> None:
    """Plain PGM, plus ``<name>.json`` holding *sidecar* when given."""
    path.write_text(format_pgm(image), encoding="utf-8")
    if sidecar is not None:
        write_json(sidecar_path(path), sidecar)


def parse_pgm(text: str) -> npt.NDArray[np.int64]:
    tokens: list[tuple[str, int]] = []
    for n, line in enumerate(text.splitlines(), start=1):
        tokens.extend((t, n) for t in line.split("#", 1)[0].split())
    if not tokens or tokens[0][0] != "P2":
        raise InstanceSchemaError("not a plain PGM (P2) file", line=tokens[0][1] if tokens else 1)
    try:
        w, h, top = (int(t) for t, _ in tokens[1:4])
    except ValueError:
        raise InstanceSchemaError("bad PGM header", line=tokens[1][1]) from None
    body = tokens[4:]
    if len(body) != w * h:
        raise InstanceSchemaError(
            f"expected {w * h} values, got {len(body)}", line=body[-1][1] if body else None
        )
    values = []
    for t, n in body:
        if not t.isdigit() or int(t) > top:
            raise InstanceSchemaError(f"bad pixel value {t!r}", line=n)
        values.append(int(t))
    return np.array(values, dtype=np.int64).reshape(h, w)


def read_pgm(path: Path) -> tuple[npt.NDArray[np.int64], Any]:
    """Image and sidecar document (None when there is no sidecar)."""
    image = parse_pgm(path.read_text(encoding="utf-8"))
    side = sidecar_path(path)
    return image, read_json(side) if side.exists() else None


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------


def _svg(width: int, height: int, body: Sequence[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def points_svg(
    black: WeightedLatticeSet, white: WeightedLatticeSet | None = None, scale: int = 20
) -> str:
    """Filled discs for *black*, open circles for *white*; ``(i, j)`` is drawn at row ``i``."""
    sets = [black] if white is None else [black, white]
    pts = [p for f in sets for p in f.support]
    if any(len(p) != 2 for p in pts):
        raise InstanceSchemaError("only planar sets can be drawn")
    if not pts:
        return _svg(scale, scale, [])
    i0 = min(p[0] for p in pts)
    j0 = min(p[1] for p in pts)
    h = (max(p[0] for p in pts) - i0 + 1) * scale
    w = (max(p[1] for p in pts) - j0 + 1) * scale
    r = scale * 0.35
    body = []
    for f, style in zip(sets, ('fill="black"', 'fill="white" stroke="black"'), strict=False):
        for i, j in sorted(f.support):
            cx = (j - j0 + 0.5) * scale
            cy = (i - i0 + 0.5) * scale
            body.append(f'<circle cx="{cx:g}" cy="{cy:g}" r="{r:g}" {style}/>')
    return _svg(w, h, body)


def label_map_svg(labels: npt.ArrayLike, scale: int = 4) -> str:
    """Cell boundaries of a planar label map as line segments."""
    lab = np.asarray(labels)
    h, w = lab.shape
    body = [
        f'<line x1="{a[1] * scale}" y1="{a[0] * scale}" x2="{b[1] * scale}" '
        f'y2="{b[0] * scale}" stroke="black"/>'
        for a, b in cell_boundaries(lab)
    ]
    return _svg(w * scale, h * scale, body)


def frames_from_json(doc: Any) -> list[list[tuple[int, ...]]]:
    """A list of frames, each a list of ``[x, y]`` points."""
    frames = []
    for t, frame in enumerate(_list(doc, "frames")):
        points = _list(frame, f"frames[{t}]")
        frames.append([tuple(_ints(p, f"frames[{t}][{i}]", 2)) for i, p in enumerate(points)])
    return frames
