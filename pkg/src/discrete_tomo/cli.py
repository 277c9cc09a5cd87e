"""The ``tomo`` command.

Exit status: 0 on success, 1 when the answer is infeasible, degenerate or
false, 2 on usage errors, exceeded guards and malformed input.
"""

import argparse
import logging
import os
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from discrete_tomo import __version__
from discrete_tomo import io as tio
from discrete_tomo.config import get_settings
from discrete_tomo.core import (
    Box,
    Direction,
    Instance,
    WeightedLatticeSet,
    directions_from,
    from_image,
    to_image,
    xray_difference,
)
from discrete_tomo.errors import InstanceSchemaError, TomographyError
from discrete_tomo.grains import (
    GBPDSpec,
    gbpd_assign,
    gbpd_fit,
    random_gbpd,
    volume_bounds,
)
from discrete_tomo.pte import (
    goldbach_pair,
    project,
    prouhet_solution,
    pte_degree,
    pte_from_switching,
    pte_verify,
)
from discrete_tomo.recon2 import (
    COLUMNS,
    ROWS,
    count_solutions_bruteforce,
    reconstruct_two_directions,
    switching_cycle,
)
from discrete_tomo.reconm import alternating_directions, reconstruct_bruteforce
from discrete_tomo.stability import (
    check_jump,
    jump_bound,
    stable_renyi_applies,
    stable_renyi_holds,
)
from discrete_tomo.superres import dr_bruteforce, dr_solve, make_dr_instance
from discrete_tomo.switching import (
    difference_profile,
    find_switch_in,
    renyi_uniqueness_check,
    zonotope_switching,
)
from discrete_tomo.tracking import (
    WEIGHT_MODELS,
    euclidean_cost,
    markov_track,
    rolling_horizon,
    simulate_scene,
    squared_cost,
)

logger = logging.getLogger(__name__)

OK, NEGATIVE, ERROR = 0, 1, 2

Handler = Callable[[argparse.Namespace], int]


# ---------------------------------------------------------------------------
# Argument types
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _directions(text: str) -> tuple[Direction, ...]:
    """``"1,0;0,1"`` -> two directions."""
    vectors = [_int_list(part) for part in text.split(";") if part.strip()]
    try:
        return directions_from(vectors)
    except TomographyError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _box(text: str) -> Box:
    """``"0,0:3,3"`` -> the inclusive box with those corners."""
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    try:
        return Box(tuple(_int_list(lo)), tuple(_int_list(hi)))
    except (TomographyError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _shape(text: str) -> tuple[int, int]:
    values = _int_list(text)
    if len(values) != 2 or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected H,W with positive entries, got {text!r}")
    return values[0], values[1]


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.output is None:
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")


def _emit_json(args: argparse.Namespace, document: object) -> None:
    _emit(args, tio.dumps(document))


def _fan_out(
    args: argparse.Namespace, paths: Sequence[Path], job: Callable[[Path], tuple[Any, int]]
) -> int:
    """Run *job* per file on ``--jobs`` threads; one document per file, in input order."""

    def guarded(path: Path) -> tuple[Any, int]:
        try:
            return job(path)
        except TomographyError as exc:
            logger.exception("Failed to process %s", path)
            return {"path": str(path), "error": str(exc)}, ERROR

    if args.jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(guarded, paths))
    else:
        results = [guarded(p) for p in paths]
    documents = [doc for doc, _ in results]
    _emit_json(args, documents[0] if len(documents) == 1 else documents)
    return max(code for _, code in results)


def _negative(message: str) -> int:
    print(message, file=sys.stderr)
    return NEGATIVE


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def cmd_xray(args: argparse.Namespace) -> int:
    psi = tio.parse_set(args.set) if args.set else from_image(tio.read_pgm(args.image)[0])
    _emit_json(args, Instance.from_set(psi, args.dirs).to_dict())
    return OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    def job(path: Path) -> tuple[Any, int]:
        instance = tio.parse_instance(path)
        if args.alternating:
            alt = alternating_directions(instance, max_rounds=args.rounds)
            doc = alt.to_dict() | {"feasible": alt.residual == 0}
            return doc, OK if alt.residual == 0 else NEGATIVE
        if instance.m == 2 and not args.brute:
            result = reconstruct_two_directions(instance)
        else:
            result = reconstruct_bruteforce(instance, args.box)
        return result.to_dict(), OK if result.feasible else NEGATIVE

    code = _fan_out(args, args.instance, job)
    return _negative("infeasible") if code == NEGATIVE else code


def cmd_unique(args: argparse.Namespace) -> int:
    psi = tio.parse_set(args.set)
    witness = None
    if len(args.dirs) == 2:
        cycle = switching_cycle(psi, args.dirs)
        unique = cycle is None
        interchange = find_switch_in(psi, args.dirs)
        if interchange is not None:
            cycle = (tuple(sorted(interchange[:2])), tuple(sorted(interchange[2:])))
        if cycle is not None:
            remove, add = cycle
            witness = {"remove": [list(p) for p in remove], "add": [list(p) for p in add]}
    else:
        box = args.box or psi.bounding_box()
        if box is None:
            raise InstanceSchemaError("the empty set needs an explicit --box", field="set")
        unique = renyi_uniqueness_check(psi, args.dirs, box)
    _emit_json(args, {"unique": unique, "switch": witness})
    return OK if unique else NEGATIVE


def cmd_count(args: argparse.Namespace) -> int:
    def job(path: Path) -> tuple[Any, int]:
        n = count_solutions_bruteforce(tio.parse_instance(path), args.box)
        return {"count": n}, OK if n else NEGATIVE

    return _fan_out(args, args.instance, job)


def cmd_switch(args: argparse.Namespace) -> int:
    pair = zonotope_switching(args.dirs, args.base)
    if args.svg:
        Path(args.svg).write_text(tio.points_svg(pair.plus, pair.minus), encoding="utf-8")
    _emit_json(args, pair.to_dict() | {"valid": pair.is_valid()})
    return OK


def cmd_dr(args: argparse.Namespace) -> int:
    if args.instance:
        inst = tio.dr_instance_from_dict(tio.read_json(args.instance))
    else:
        inst = make_dr_instance(tio.read_pgm(args.image)[0], args.k, args.epsilon)
    if args.brute:
        solutions = dr_bruteforce(inst)
        image = solutions[0] if solutions else None
        doc: dict[str, object] = {
            "feasible": bool(solutions),
            "solutions": len(solutions),
            "image": None if image is None else image.tolist(),
        }
    else:
        result = dr_solve(inst)
        image = result.image
        doc = result.to_dict()
    if args.pgm and image is not None:
        tio.write_pgm(Path(args.pgm), image, sidecar=inst.to_dict())
    _emit_json(args, doc)
    return OK if image is not None else _negative("infeasible")


def cmd_track_markov(args: argparse.Namespace) -> int:
    cost = {"euclidean": euclidean_cost, "squared": squared_cost}[args.cost]
    tracks = markov_track(tio.frames_from_json(tio.read_json(args.frames)), cost)
    _emit(args, tio.tracks_to_jsonl(tracks))
    return OK


def cmd_track_rolling(args: argparse.Namespace) -> int:
    truth = None
    if args.simulate:
        n, t = args.simulate
        truth = simulate_scene(n, t, np.random.default_rng(args.seed), args.max_speed)
        first = truth.frame(0)
        frames = [WeightedLatticeSet.from_points(truth.frame(tau), dim=2) for tau in range(1, t)]
        data = [Instance.from_set(f, (ROWS, COLUMNS)) for f in frames]
    else:
        if args.first is None:
            raise InstanceSchemaError("pass --first and --data, or --simulate", field="first")
        (first,) = tio.frames_from_json([tio.read_json(args.first)])
        data = [tio.parse_instance(p) for p in args.data]
    result = rolling_horizon(first, data, args.model)
    if not result.feasible or result.tracks is None:
        _emit_json(args, result.to_dict())
        return _negative(f"infeasible at frame {result.failed_step}")
    if truth is not None:
        recovered = result.tracks.canonical() == truth.canonical()
        logger.info("Simulated scene %s", "recovered" if recovered else "not recovered")
        if args.truth:
            Path(args.truth).write_text(tio.tracks_to_jsonl(truth), encoding="utf-8")
    _emit(args, tio.tracks_to_jsonl(result.tracks))
    return OK


def cmd_grains_assign(args: argparse.Namespace) -> int:
    spec = tio.gbpd_spec_from_dict(tio.read_json(args.spec))
    labels = gbpd_assign(spec, args.shape)
    counts = np.bincount(labels.ravel(), minlength=spec.size).tolist()
    if args.pgm:
        tio.write_pgm(Path(args.pgm), labels, sidecar=spec.to_dict() | {"volumes": counts})
    if args.svg:
        Path(args.svg).write_text(tio.label_map_svg(labels), encoding="utf-8")
    _emit_json(args, {"counts": counts})
    return OK


def cmd_grains_fit(args: argparse.Namespace) -> int:
    truth = None
    if args.random:
        spec = random_gbpd(args.random, args.shape, np.random.default_rng(args.seed))
        truth = gbpd_assign(spec, args.shape)
        volumes = np.bincount(truth.ravel(), minlength=spec.size).tolist()
        lower, upper = volumes, volumes
    else:
        if args.spec is None or args.volumes is None:
            raise InstanceSchemaError("pass --spec and --volumes, or --random", field="spec")
        spec = tio.gbpd_spec_from_dict(tio.read_json(args.spec))
        volumes = args.volumes
        lower, upper = volume_bounds(volumes, args.slack)
    result = gbpd_fit(spec.sites, args.shape, lower, upper, spec.matrices)
    doc = result.to_dict()
    if truth is not None and result.labels is not None:
        doc["agreement"] = float(np.mean(truth == result.labels))
    if args.pgm and result.labels is not None and result.offsets is not None:
        fitted = GBPDSpec(spec.sites, spec.matrices, result.offsets)
        tio.write_pgm(
            Path(args.pgm), result.labels, sidecar=fitted.to_dict() | {"volumes": result.counts}
        )
    _emit_json(args, doc)
    return OK if result.feasible else _negative("infeasible")


def cmd_pte_verify(args: argparse.Namespace) -> int:
    valid = pte_verify(args.x, args.y, args.k)
    _emit_json(args, {"valid": valid, "degree": pte_degree(args.x, args.y)})
    return OK if valid else NEGATIVE


def cmd_pte_project(args: argparse.Namespace) -> int:
    _emit_json(args, {"projection": project(tio.parse_set(args.set), args.c)})
    return OK


def cmd_pte_derive(args: argparse.Namespace) -> int:
    derivation = pte_from_switching(zonotope_switching(args.dirs, args.base), args.c)
    _emit_json(args, derivation.to_dict())
    return _negative("degenerate") if derivation.degenerate else OK


def cmd_pte_prouhet(args: argparse.Namespace) -> int:
    _emit_json(args, prouhet_solution(args.k).to_dict())
    return OK


def cmd_pte_goldbach(args: argparse.Namespace) -> int:
    a, b, g, d = args.values
    pair = goldbach_pair(a, b, g, d)
    _emit_json(args, pair.to_dict() | {"valid": pte_verify(pair.x, pair.y, 2)})
    return OK


def cmd_stability(args: argparse.Namespace) -> int:
    f1, f2 = tio.parse_set(args.first), tio.parse_set(args.second)
    doc: dict[str, object] = {
        "difference": xray_difference(f1, f2, args.dirs),
        "profile": difference_profile(f1, f2, args.dirs),
        "jumpBound": jump_bound(len(args.dirs)),
        "jumpHolds": check_jump(f1, f2, args.dirs) if len(f1) == len(f2) else None,
        "stableRenyiApplies": stable_renyi_applies(f1, f2, args.dirs),
        "stableRenyiHolds": stable_renyi_holds(f1, f2, args.dirs),
    }
    if args.image:
        h, w = args.image
        doc["images"] = [to_image(f1, (h, w)).tolist(), to_image(f2, (h, w)).tolist()]
    _emit_json(args, doc)
    return OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tomo", description="Discrete tomography toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    parser.add_argument("--jobs", type=int, default=1, help="threads across input files")
    parser.add_argument("--output", type=Path, help="write the result here instead of stdout")
    verbs = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    def verb(
        parent: Any, name: str, handler: Handler, help_text: str
    ) -> argparse.ArgumentParser:
        p: argparse.ArgumentParser = parent.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = verb(verbs, "xray", cmd_xray, "X-rays of a set or binary image")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--set", type=Path)
    src.add_argument("--image", type=Path, help="plain PGM")
    p.add_argument("--dirs", type=_directions, required=True, help='e.g. "1,0;0,1"')

    p = verb(verbs, "reconstruct", cmd_reconstruct, "a set with the given X-rays")
    p.add_argument("--instance", type=Path, nargs="+", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--brute", action="store_true", help="guarded exhaustive search")
    mode.add_argument("--alternating", action="store_true", help="alternating-direction heuristic")
    p.add_argument("--box", type=_box, help='search box "LO:HI", e.g. "0,0:3,3"')
    p.add_argument("--rounds", type=int, help="round cap for --alternating")

    p = verb(verbs, "unique", cmd_unique, "whether a set is determined by its X-rays")
    p.add_argument("--set", type=Path, required=True)
    p.add_argument("--dirs", type=_directions, required=True)
    p.add_argument("--box", type=_box)

    p = verb(verbs, "count", cmd_count, "number of binary solutions")
    p.add_argument("--instance", type=Path, nargs="+", required=True)
    p.add_argument("--box", type=_box)

    p = verb(verbs, "switch", cmd_switch, "switching component spanned by directions")
    p.add_argument("--dirs", type=_directions, required=True)
    p.add_argument("--base", type=_int_list)
    p.add_argument("--svg", type=Path)

    p = verb(verbs, "dr", cmd_dr, "double resolution / noisy superresolution")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", type=Path)
    src.add_argument("--image", type=Path, help="ground-truth binary PGM to measure")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--epsilon", type=int, default=0)
    p.add_argument("--brute", action="store_true")
    p.add_argument("--pgm", type=Path, help="write the solution image here")

    track = verb(verbs, "track", _usage, "particle tracking").add_subparsers(
        dest="mode", required=True, metavar="MODE"
    )
    p = verb(track, "markov", cmd_track_markov, "link known frames by matchings")
    p.add_argument("--frames", type=Path, required=True)
    p.add_argument("--cost", choices=("euclidean", "squared"), default="euclidean")
    p = verb(track, "rolling", cmd_track_rolling, "rolling horizon reconstruction")
    p.add_argument("--first", type=Path)
    p.add_argument("--data", type=Path, nargs="*", default=[])
    p.add_argument("--simulate", type=int, nargs=2, metavar=("N", "T"))
    p.add_argument("--max-speed", type=int, default=1)
    p.add_argument("--model", choices=sorted(WEIGHT_MODELS), default="nearest")
    p.add_argument("--truth", type=Path, help="with --simulate: ground-truth tracks")

    grains = verb(verbs, "grains", _usage, "power diagram grain maps").add_subparsers(
        dest="mode", required=True, metavar="MODE"
    )
    p = verb(grains, "assign", cmd_grains_assign, "label pixels by GBPD cell")
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--shape", type=_shape, required=True)
    p.add_argument("--pgm", type=Path)
    p.add_argument("--svg", type=Path)
    p = verb(grains, "fit", cmd_grains_fit, "volume-constrained assignment")
    p.add_argument("--spec", type=Path)
    p.add_argument("--shape", type=_shape, required=True)
    p.add_argument("--volumes", type=_int_list)
    p.add_argument("--slack", type=float)
    p.add_argument("--random", type=int, metavar="GRAINS", help="fit a random diagram")
    p.add_argument("--pgm", type=Path)

    pte = verb(verbs, "pte", _usage, "Prouhet-Tarry-Escott solutions").add_subparsers(
        dest="mode", required=True, metavar="MODE"
    )
    p = verb(pte, "verify", cmd_pte_verify, "check equal power sums")
    p.add_argument("--x", type=_int_list, required=True)
    p.add_argument("--y", type=_int_list, required=True)
    p.add_argument("--k", type=int, required=True)
    p = verb(pte, "project", cmd_pte_project, "project a set onto c")
    p.add_argument("--set", type=Path, required=True)
    p.add_argument("--c", type=_int_list, required=True)
    p = verb(pte, "derive", cmd_pte_derive, "solution from a switching component")
    p.add_argument("--dirs", type=_directions, required=True)
    p.add_argument("--c", type=_int_list, required=True)
    p.add_argument("--base", type=_int_list)
    p = verb(pte, "prouhet", cmd_pte_prouhet, "parity split of 0..2^(k+1)-1")
    p.add_argument("--k", type=int, required=True)
    p = verb(pte, "goldbach", cmd_pte_goldbach, "four-term degree-2 identity")
    p.add_argument("values", type=int, nargs=4, metavar="N")

    p = verb(verbs, "stability", cmd_stability, "X-ray difference of two sets")
    p.add_argument("--first", type=Path, required=True)
    p.add_argument("--second", type=Path, required=True)
    p.add_argument("--dirs", type=_directions, required=True)
    p.add_argument("--image", type=int, nargs=2, metavar=("H", "W"), help="also rasterise")
    return parser


def _usage(args: argparse.Namespace) -> int:
    return ERROR


def _configure_logging(verbose: int) -> None:
    if verbose:
        level = logging.DEBUG if verbose > 1 else logging.INFO
    else:
        level = getattr(logging, os.environ.get("TOMO_LOG_LEVEL", "WARNING").upper(), None)
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True
    )


def run(argv: Sequence[str] | None = None) -> int:
    """Parse *argv*, run the verb and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else ERROR
    _configure_logging(args.verbose)
    try:
        get_settings()
        handler: Handler = args.handler
        return handler(args)
    except (TomographyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


def main() -> None:
    raise SystemExit(run())
