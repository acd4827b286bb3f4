"""Command line interface.

Exit codes: 0 success, 1 usage error (bad flags or flag values), 2 data
error (unreadable input, failed validation, failed delivery). Logs go to
stderr; data products go to --out or stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import time
from typing import Optional, Sequence

from . import engine, exports, render
from .ingest import DEFAULT_BATCH_LIMIT, IngestServer, read_log
from .model import RoomGeometry, ValidationError
from .render import RenderSpec
from .resample import (
    DEFAULT_FRAMES_PER_MINUTE,
    FrameStore,
    MINUTE_MS,
    dataset_summary,
    resample,
    resample_by_room,
)
from .simulate import (
    PRESETS,
    EmitError,
    emit,
    run_scenario,
    scenario_from_json,
    scenario_to_json,
)

__all__ = ["main"]

log = logging.getLogger("proxilog")


class _UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this CLI reserves 2 for data errors
    def error(self, message):
        raise _UsageError(message, self)


def _build_parser():
    parser = _Parser(prog="proxilog", description=__doc__)
    parser.add_argument("--config", help="JSON file with default flag values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    subparsers = {}

    p = subparsers["serve"] = sub.add_parser("serve", help="run the ingest server")
    p.add_argument("--log", help="append-only JSONL log path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8977)
    p.add_argument("--batch-limit", type=int, default=DEFAULT_BATCH_LIMIT)

    p = subparsers["simulate"] = sub.add_parser(
        "simulate", help="run a scripted scenario and deliver its ticks"
    )
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", help="write canonical JSONL to this path")
    p.add_argument("--url", help="deliver to an ingest server URL")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_LIMIT)
    p.add_argument("--session-id")
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--write-scenario", help="write the scenario JSON and exit")

    p = subparsers["resample"] = sub.add_parser(
        "resample", help="decimate a tick log into fixed-rate frames"
    )
    p.add_argument("--in", dest="inp", help="tick log (JSONL)")
    p.add_argument("--out", help="output path ('-' for stdout)", default="-")
    p.add_argument("--per-minute", type=int, default=DEFAULT_FRAMES_PER_MINUTE)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--room", help="keep only this room's events")
    p.add_argument(
        "--include-lobby",
        action="store_true",
        help="keep pre-entry events (entered=false); dropped by default",
    )
    p.add_argument("--origin-ts", type=int, help="fixed epoch-ms frame origin")

    p = subparsers["analyze"] = sub.add_parser(
        "analyze", help="compute a metric over resampled frames"
    )
    p.add_argument("--frames", help="FrameStore JSON from the resample step")
    p.add_argument(
        "--metric",
        choices=(
            "summary",
            "pairwise",
            "nn",
            "nn-hist",
            "collision-rate",
            "occupancy",
            "quiver",
            "fov",
            "height-hist",
            "extent",
            "groups",
        ),
    )
    p.add_argument("--out", default="-")
    p.add_argument(
        "--zones",
        type=float,
        nargs=3,
        default=(engine.INTIMATE_MAX, engine.PERSONAL_MAX, engine.SOCIAL_MAX),
        metavar=("INTIMATE", "PERSONAL", "SOCIAL"),
    )
    p.add_argument("--bin-width", type=float, help="histogram bin width (m)")
    p.add_argument("--range-max", type=float, help="histogram upper edge (m)")
    p.add_argument("--cell-size", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=engine.DEFAULT_GROUP_EPS)
    p.add_argument("--min-size", type=int, default=engine.DEFAULT_GROUP_MIN_SIZE)
    p.add_argument("--half-angle-deg", type=float, default=45.0)
    p.add_argument("--target", type=float, nargs=2, metavar=("X", "Z"))
    p.add_argument("--quantile", type=float, default=0.95)
    p.add_argument("--min-magnitude", type=float, default=engine.DEFAULT_QUIVER_MIN_MAGNITUDE)
    p.add_argument("--room-x", type=float, help="room x extent (m)")
    p.add_argument("--room-z", type=float, help="room z extent (m)")

    p = subparsers["render"] = sub.add_parser(
        "render", help="render CSV products to SVG or PGM"
    )
    p.add_argument("--kind", choices=("heatmap", "quiver", "histogram"))
    p.add_argument("--format", choices=("svg", "pgm", "csv"), default="svg")
    p.add_argument("--out", default="-")
    p.add_argument("--grid", help="occupancy CSV")
    p.add_argument("--quiver", help="quiver CSV")
    p.add_argument("--hist", help="histogram CSV (may carry two series)")
    p.add_argument("--ramp", choices=("heat", "gray"), default="heat")
    p.add_argument("--cell-px", type=int, default=12)
    p.add_argument("--show-grid", action="store_true")
    p.add_argument("--labels", help="comma-separated series labels")
    p.add_argument(
        "--markers",
        help="'zones', 'none', or comma-separated boundary values in metres",
    )

    return parser, subparsers


def _apply_config(parser, subparsers, argv):
    """Fold --config file values in as defaults, then reparse."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise _DataError(f"config is not valid JSON: {exc}")
    if not isinstance(config, dict):
        raise _DataError("config must be a JSON object")
    if not args.command:
        parser.error("--config requires a subcommand")
    target = subparsers[args.command]
    known = {action.dest for action in target._actions}
    for key in config:
        if key not in known:
            target.error(f"unknown config key: {key}")
    target.set_defaults(**config)
    return parser.parse_args(argv)


class _DataError(Exception):
    pass


def _write_out(path: str, payload: "str | bytes") -> None:
    if path == "-":
        if isinstance(payload, bytes):
            sys.stdout.buffer.write(payload)
        else:
            sys.stdout.write(payload)
        return
    mode = "wb" if isinstance(payload, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(payload)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_serve(args, parser) -> int:
    if not args.log:
        parser.error("serve requires --log")
    server = IngestServer(
        args.log, host=args.host, port=args.port, batch_limit=args.batch_limit
    )
    server.start()
    print(f"listening on {server.url}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _load_scenario(args, parser):
    if bool(args.preset) == bool(args.scenario):
        parser.error("simulate needs exactly one of --preset or --scenario")
    if args.preset:
        build = PRESETS[args.preset]
        return build(seed=args.seed) if args.seed is not None else build()
    with open(args.scenario, "r", encoding="utf-8") as fh:
        scenario = scenario_from_json(fh.read())
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    return scenario


def _cmd_simulate(args, parser) -> int:
    scenario = _load_scenario(args, parser)
    if args.write_scenario:
        with open(args.write_scenario, "w", encoding="utf-8") as fh:
            fh.write(scenario_to_json(scenario))
        log.info("wrote scenario to %s", args.write_scenario)
        return 0
    if bool(args.out) == bool(args.url):
        parser.error("simulate needs exactly one of --out or --url")
    sink = args.out if args.out else args.url
    report = emit(
        run_scenario(scenario),
        sink,
        batch_size=args.batch_size,
        session_id=args.session_id,
        retries=args.retries,
    )
    print(json.dumps(dataclasses.asdict(report), separators=(",", ":")))
    return 0


def _cmd_resample(args, parser) -> int:
    per_minute = args.per_minute
    if per_minute is None or per_minute < 1 or MINUTE_MS % per_minute != 0:
        parser.error(
            f"--per-minute must be a positive divisor of {MINUTE_MS} ms, "
            f"got {per_minute}"
        )
    if not args.inp:
        parser.error("resample requires --in")
    session = read_log(args.inp)
    events = session.events
    if not args.include_lobby:
        events = [e for e in events if e.entered]
    if args.room is not None:
        events = [e for e in events if e.room_id == args.room]
    store = resample(events, frames_per_minute=per_minute, origin_ts=args.origin_ts)
    if args.format == "json":
        _write_out(args.out, store.to_json() + "\n")
    else:
        _write_out(args.out, exports.frames_to_csv(store))
    summary = dataset_summary(store)
    log.info(
        "resampled %d users / %d frames / %d poses",
        summary["users"],
        summary["frames"],
        summary["poses"],
    )
    return 0


def _load_frames(args, parser) -> FrameStore:
    if not args.frames:
        parser.error("analyze requires --frames")
    with open(args.frames, "r", encoding="utf-8") as fh:
        return FrameStore.from_json(fh.read())


def _room_from_flags(args, parser, store):
    if args.room_x is None or args.room_z is None:
        parser.error("this metric requires --room-x and --room-z")
    return RoomGeometry(
        room_id=store.room_id or "room", bounds_x=args.room_x, bounds_z=args.room_z
    )


def _cmd_analyze(args, parser) -> int:
    if not args.metric:
        parser.error("analyze requires --metric")
    store = _load_frames(args, parser)
    metric = args.metric
    if metric == "summary":
        payload = json.dumps(dataset_summary(store), separators=(",", ":")) + "\n"
    elif metric == "pairwise":
        payload = exports.pairwise_to_csv(engine.pairwise_frames(store))
    elif metric == "nn":
        payload = exports.nn_to_csv(engine.nearest_neighbour_series(store))
    elif metric == "nn-hist":
        hist = engine.zone_histogram(
            engine.nearest_neighbour_series(store),
            bin_width=args.bin_width or engine.DEFAULT_ZONE_BIN_WIDTH,
            range_max=args.range_max or engine.DEFAULT_ZONE_RANGE_MAX,
        )
        payload = exports.histograms_to_csv([hist])
    elif metric == "collision-rate":
        samples = engine.nearest_neighbour_series(store)
        rate = engine.intimate_collision_rate(samples, bound=args.zones[0])
        payload = (
            json.dumps(
                {"collision_rate": rate, "bound": args.zones[0], "samples": len(samples)},
                separators=(",", ":"),
            )
            + "\n"
        )
    elif metric == "occupancy":
        room = _room_from_flags(args, parser, store)
        grid = engine.occupancy(store, room, cell_size=args.cell_size)
        log.info("occupancy: %d poses, %d clipped", grid.total, grid.clipped)
        payload = exports.grid_to_csv(grid)
    elif metric == "quiver":
        room = _room_from_flags(args, parser, store)
        field = engine.quiver(
            store, room, cell_size=args.cell_size, min_magnitude=args.min_magnitude
        )
        payload = exports.quiver_to_csv(field)
    elif metric == "fov":
        if not args.target:
            parser.error("fov requires --target X Z")
        containment = engine.fov_containment(
            store, args.target, half_angle=math.radians(args.half_angle_deg)
        )
        payload = (
            json.dumps(
                {
                    "containment": containment,
                    "half_angle_deg": args.half_angle_deg,
                    "target": list(args.target),
                },
                separators=(",", ":"),
            )
            + "\n"
        )
    elif metric == "height-hist":
        hist = engine.height_histogram(
            store,
            bin_width=args.bin_width or engine.DEFAULT_HEIGHT_BIN_WIDTH,
            range_max=args.range_max or engine.DEFAULT_HEIGHT_RANGE_MAX,
        )
        payload = exports.histograms_to_csv([hist])
    elif metric == "extent":
        box = engine.occupied_extent(store, quantile=args.quantile)
        payload = (
            json.dumps(
                {
                    "x_lo": box.x_lo,
                    "x_hi": box.x_hi,
                    "z_lo": box.z_lo,
                    "z_hi": box.z_hi,
                    "width": box.width,
                    "depth": box.depth,
                    "quantile": box.quantile,
                },
                separators=(",", ":"),
            )
            + "\n"
        )
    elif metric == "groups":
        timeline = engine.group_timeline(store, eps=args.eps, min_size=args.min_size)
        payload = exports.clusters_to_csv(timeline)
    else:  # pragma: no cover - choices guard this
        parser.error(f"unknown metric {metric!r}")
    _write_out(args.out, payload)
    return 0


def _parse_markers(raw: Optional[str]):
    if raw is None or raw == "zones":
        return None  # renderer default: zone boundaries on distance charts
    if raw == "none":
        return ()
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError:
        raise _DataError(f"bad --markers value: {raw!r}")


def _cmd_render(args, parser) -> int:
    if not args.kind:
        parser.error("render requires --kind")
    spec = RenderSpec(
        format=args.format,
        ramp=args.ramp,
        cell_px=args.cell_px,
        show_grid=args.show_grid,
        zone_markers=_parse_markers(args.markers),
    )
    if args.kind == "heatmap":
        if not args.grid:
            parser.error("render --kind heatmap requires --grid")
        counts = exports.read_grid_csv(args.grid)
        payload = render.render_heatmap(counts, spec)
    elif args.kind == "quiver":
        if not args.quiver or not args.grid:
            parser.error("render --kind quiver requires --quiver and --grid")
        counts = exports.read_grid_csv(args.grid)
        direction, magnitude, defined = exports.read_quiver_csv(
            args.quiver, counts.shape
        )
        field = engine.QuiverField(
            room=RoomGeometry(
                room_id="from-csv",
                bounds_x=float(counts.shape[1]),
                bounds_z=float(counts.shape[0]),
            ),
            cell_size=1.0,
            counts=counts,
            direction=direction,
            magnitude=magnitude,
            defined=defined,
        )
        payload = render.render_quiver(field, spec, underlay=counts)
    else:
        if not args.hist:
            parser.error("render --kind histogram requires --hist")
        loaded = exports.read_histograms_csv(args.hist)
        series = [hist for _, hist in loaded]
        labels = [label or "value" for label, _ in loaded]
        if args.labels:
            labels = args.labels.split(",")
        payload = render.render_histogram(series, spec, labels=labels)
    _write_out(args.out, payload)
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "simulate": _cmd_simulate,
    "resample": _cmd_resample,
    "analyze": _cmd_analyze,
    "render": _cmd_render,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        args = _apply_config(parser, subparsers, argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
        if not args.command:
            parser.error("a subcommand is required")
        return _COMMANDS[args.command](args, subparsers[args.command])
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError, OSError, EmitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
