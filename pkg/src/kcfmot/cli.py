"""Command-line front end: ``track``, ``eval``, ``synth`` and ``render``.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
bad input data (unreadable frames, missing masks, malformed CSV rows).

Tracker parameters can come from four places, later ones winning: built-in
defaults, a named preset, a ``key=value`` config file, command-line flags.
Keys and flags carry the parameter names unchanged (``T_r``, ``lambda``, ...).
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from . import io as seqio
from . import metrics, synth
from .foreground import BlobParams, RunningAverage, fallback_subtract
from .kcf import KcfParams
from .metrics import TrajectoryFormatError
from .tracking import ConfigurationError, ManagerParams, MultiTracker

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# Region size / merge distance per named video setup.
PRESETS = {
    "sherbrooke": {"T_r": 23, "T_c": 44.0},
    "rouen": {"T_r": 41, "T_c": 63.0},
    "st-marc": {"T_r": 35, "T_c": 55.0},
    "rene-levesque": {"T_r": 20, "T_c": 24.0},
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    frames: str | None = None
    masks: str | None = None
    output: str = "tracks.csv"
    gt: str | None = None
    render: str | None = None
    match_threshold: float = metrics.DEFAULT_MATCH_THRESHOLD
    # blob analysis
    T_r: int = BlobParams.T_r
    T_c: float = BlobParams.T_c
    ratio_min: float = BlobParams.ratio_min
    ratio_max: float = BlobParams.ratio_max
    median_radius: int = BlobParams.median_radius
    close_radius: int = BlobParams.close_radius
    # correlation filter
    sigma_kernel: float = KcfParams.sigma_kernel
    lambda_: float = KcfParams.lambda_
    learning_rate: float = KcfParams.learning_rate
    output_sigma_factor: float = KcfParams.output_sigma_factor
    padding: float = KcfParams.padding
    cell: int = KcfParams.cell
    # manager
    T_ol: float = ManagerParams.T_ol
    T_oh: float = ManagerParams.T_oh
    invisible_max: int = ManagerParams.invisible_max
    min_lifetime: int = ManagerParams.min_lifetime
    redundancy_frames: int = ManagerParams.redundancy_frames

    def manager_params(self) -> ManagerParams:
        """Build validated parameter objects; bad values raise UsageError."""
        try:
            blob = BlobParams(self.T_r, self.T_c, self.ratio_min, self.ratio_max,
                              self.median_radius, self.close_radius)
            kp = KcfParams(self.sigma_kernel, self.lambda_, self.learning_rate,
                           self.output_sigma_factor, self.padding, self.cell)
            return ManagerParams(self.T_ol, self.T_oh, self.invisible_max, self.min_lifetime,
                                 self.redundancy_frames, blob, kp)
        except ValueError as exc:
            raise UsageError(f"invalid configuration: {exc}") from None


def _key(name: str) -> str:
    # "lambda" is a keyword in Python, the field is lambda_.
    return "lambda_" if name == "lambda" else name


def _public(name: str) -> str:
    return "lambda" if name == "lambda_" else name


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise UsageError(f"{_public(name)}: expected {kind}, got {raw!r}") from None
    return raw


def read_config_file(path: str | Path) -> dict:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        name = _key(k)
        if name not in _FIELD_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown key {k!r}")
        values[name] = _coerce(name, v)
    return values


def build_config(preset: str | None = None, config_file: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Resolve defaults < preset < config file < overrides."""
    values = {}
    if preset is not None:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        values.update(PRESETS[preset])
    if config_file is not None:
        values.update(read_config_file(config_file))
    values.update({_key(k): v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values)


# -- track ---------------------------------------------------------------------

def _load_frames(cfg: RunConfig):
    frames = seqio.list_sequence(cfg.frames)
    if not frames:
        raise DataError(f"no frames match {seqio.expand_pattern(cfg.frames)!r}")
    masks = None
    if cfg.masks is not None:
        pattern = seqio.expand_pattern(cfg.masks)
        masks = []
        for idx, _ in frames:
            path = pattern % idx
            if not Path(path).exists():
                raise DataError(f"frame {idx}: missing mask {path}")
            masks.append(path)
    return frames, masks


def _read_pair(frame_path: str, mask_path: str | None):
    try:
        frame = seqio.read_image(frame_path)
        mask = seqio.read_mask(mask_path) if mask_path is not None else None
    except OSError as exc:
        raise DataError(f"cannot read image: {exc}") from None
    return frame, mask


def run_track(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.frames is None:
        raise UsageError("track needs --frames")
    params = cfg.manager_params()
    frames, masks = _load_frames(cfg)
    tracker = MultiTracker(params)
    bg = None
    shape = None
    io_time = 0.0
    start = time.perf_counter()
    # Decode frame t+1 in a worker while frame t is processed; processing
    # order is unchanged, so results match a sequential run.
    with ThreadPoolExecutor(max_workers=1) as pool:
        pending = pool.submit(_read_pair, frames[0][1], masks[0] if masks else None)
        for k, (idx, _) in enumerate(frames):
            t0 = time.perf_counter()
            frame, mask = pending.result()
            io_time += time.perf_counter() - t0
            if k + 1 < len(frames):
                pending = pool.submit(_read_pair, frames[k + 1][1],
                                      masks[k + 1] if masks else None)
            if shape is None:
                shape = frame.shape[:2]
            elif frame.shape[:2] != shape:
                raise DataError(f"frame {idx}: size {frame.shape[:2]} differs from earlier frames")
            if mask is None:
                if bg is None:
                    bg = RunningAverage.from_frame(frame)
                mask, bg = fallback_subtract(frame, bg)
            try:
                tracker.process_frame(frame, mask)
            except ConfigurationError as exc:
                raise DataError(str(exc)) from None
    tracker.finish()
    records = tracker.trajectories()
    # Frame numbers in the CSV follow the file numbering.
    numbering = [idx for idx, _ in frames]
    records = [type(r)(numbering[r.frame], r.track_id, r.box, r.state) for r in records]
    wall = time.perf_counter() - start
    metrics.write_trajectories(cfg.output, records, with_class=False, with_state=True)

    n = len(frames)
    s = tracker.stats
    print(f"frames processed : {n}", file=out)
    print(f"tracks created   : {s['created']}", file=out)
    print(f"tracks finalized : {s['finalized']}", file=out)
    print(f"tracks discarded : {s['discarded']} (+{s['deleted_redundant']} redundant removed)",
          file=out)
    print(f"drift re-assigns : {s['reassigned']}", file=out)
    print(f"wall time        : {wall:.3f} s", file=out)
    print(f"throughput       : {n / wall if wall > 0 else float('inf'):.1f} FPS", file=out)
    stages = dict(tracker.timings)
    stages["io wait"] = io_time
    for name in ("foreground", "kcf", "association", "io wait"):
        print(f"  {name:<15}: {stages.get(name, 0.0):.3f} s", file=out)
    print(f"trajectories written to {cfg.output}", file=out)

    if cfg.render is not None:
        states = {(r.frame, r.track_id): str(r.state) for r in records}
        boxes = {(r.frame, r.track_id): r.box for r in records}
        _render_all(frames, boxes, states, Path(cfg.render))
    if cfg.gt is not None:
        gt = _read_csv(cfg.gt)
        hyp = metrics.TrajectorySet([metrics.TrajectoryRecord(r.frame, r.track_id, r.box)
                                     for r in records])
        print(metrics.format_table(metrics.per_class(gt, hyp, cfg.match_threshold)), file=out)
    return EXIT_OK


# -- eval ----------------------------------------------------------------------

def _read_csv(path: str) -> metrics.TrajectorySet:
    try:
        return metrics.read_trajectories(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except TrajectoryFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


def run_eval(gt_path: str, hyp_path: str, threshold: float, json_path: str | None,
             out=None) -> int:
    out = out or sys.stdout
    if threshold <= 0:
        raise UsageError("match_threshold must be > 0")
    gt = _read_csv(gt_path)
    hyp = _read_csv(hyp_path)
    scores = metrics.per_class(gt, hyp, threshold)
    if not gt.records:
        scores = {"all": metrics.evaluate(gt, hyp, threshold)}
        print("no ground truth: MOTA is undefined", file=out)
    print(metrics.format_table(scores), file=out)
    if json_path is None:
        json_path = str(Path(hyp_path).with_suffix(".eval.json"))
    Path(json_path).write_text(metrics.report_json(scores, threshold) + "\n")
    print(f"report written to {json_path}", file=out)
    return EXIT_OK


# -- synth ---------------------------------------------------------------------

def run_synth(name: str, seed: int | None, out_dir: str, out=None) -> int:
    out = out or sys.stdout
    catalog = synth.builtin_scenarios()
    if name not in catalog:
        lines = [f"unknown scenario {name!r}; available:"]
        lines += [f"  {n:<18} {s.width}x{s.height}, {s.frames} frames, {len(s.actors)} actor(s)"
                  for n, s in catalog.items()]
        raise UsageError("\n".join(lines))
    scenario = synth.get_scenario(name, seed)
    frames, masks, gt = synth.render(scenario)
    seqio.write_sequence(out_dir, frames, masks)
    metrics.write_trajectories(Path(out_dir) / "gt.csv", gt.records, with_class=True)
    print(f"wrote {len(frames)} frames of {name!r} (seed {scenario.seed}) to {out_dir}", file=out)
    return EXIT_OK


# -- render --------------------------------------------------------------------

PALETTE = [
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
    (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212),
    (0, 128, 128), (220, 190, 255), (170, 110, 40), (128, 0, 0), (170, 255, 195),
]


def _dashed_rect(draw: ImageDraw.ImageDraw, box, color, dash: int, width: int) -> None:
    x0, y0, x1, y1 = box.x, box.y, box.x2 - 1, box.y2 - 1
    edges = [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))]
    for (ax, ay), (bx, by) in edges:
        length = max(abs(bx - ax), abs(by - ay))
        for s in range(0, length + 1, 2 * dash):
            e = min(s + dash, length)
            fa, fb = s / max(length, 1), e / max(length, 1)
            draw.line([(ax + (bx - ax) * fa, ay + (by - ay) * fa),
                       (ax + (bx - ax) * fb, ay + (by - ay) * fb)], fill=color, width=width)


def draw_tracks(image: np.ndarray, items) -> np.ndarray:
    """Draw ``(track_id, box, state)`` items; the line style depends on the state."""
    img = Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).convert("RGB")
    draw = ImageDraw.Draw(img)
    for tid, box, state in items:
        color = PALETTE[tid % len(PALETTE)]
        rect = [box.x, box.y, box.x2 - 1, box.y2 - 1]
        if state == "Occluded":
            _dashed_rect(draw, box, color, dash=4, width=2)
        elif state == "Invisible":
            _dashed_rect(draw, box, color, dash=1, width=1)
        elif state == "NewObject":
            draw.rectangle(rect, outline=color, width=3)
        else:
            draw.rectangle(rect, outline=color, width=2)
        draw.text((box.x + 2, max(box.y - 11, 0)), str(tid), fill=color)
    return np.asarray(img)


def _render_all(frames, boxes: dict, states: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    by_frame: dict[int, list] = {}
    for (f, tid), box in boxes.items():
        by_frame.setdefault(f, []).append((tid, box, states.get((f, tid), "Tracked")))
    for idx, path in frames:
        frame, _ = _read_pair(path, None)
        items = sorted(by_frame.get(idx, []), key=lambda it: it[0])
        image = draw_tracks(frame, items) if items else frame
        seqio.write_image(out_dir / (seqio.FILE_PATTERN % idx), image)


def _read_states(path: str) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if "state" not in (reader.fieldnames or []):
            return {}
        return {(int(float(r["frame"])), int(float(r["id"]))): r["state"] for r in reader}


def run_render(frames_pattern: str, csv_path: str, out_dir: str, out=None) -> int:
    out = out or sys.stdout
    frames = seqio.list_sequence(frames_pattern)
    if not frames:
        raise DataError(f"no frames match {seqio.expand_pattern(frames_pattern)!r}")
    traj = _read_csv(csv_path)
    available = {idx for idx, _ in frames}
    missing = sorted({r.frame for r in traj.records} - available)
    if missing:
        raise DataError(f"trajectories reference missing frame(s) starting at {missing[0]}")
    boxes = {(r.frame, r.id): r.box for r in traj.records}
    _render_all(frames, boxes, _read_states(csv_path), Path(out_dir))
    print(f"rendered {len(frames)} frames to {out_dir}", file=out)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_PARAM_HELP = {
    "T_r": "minimum region area in pixels",
    "T_c": "centroid distance below which regions merge",
    "ratio_min": "minimum region width/height",
    "ratio_max": "maximum region width/height",
    "median_radius": "binary median filter radius",
    "close_radius": "closing structuring element radius",
    "sigma_kernel": "Gaussian kernel bandwidth",
    "lambda": "ridge regularizer",
    "learning_rate": "model interpolation factor",
    "output_sigma_factor": "regression target width relative to object size",
    "padding": "search window padding factor",
    "cell": "feature cell size in pixels",
    "T_ol": "lower area-ratio bound for keeping the filter box",
    "T_oh": "upper area-ratio bound for keeping the filter box",
    "invisible_max": "invisible frames tolerated before a track is closed",
    "min_lifetime": "tracks shorter than this are discarded",
    "redundancy_frames": "frames two trackers must look redundant before one is removed",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kcfmot", description="Track objects through frame sequences and score the result.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    tr = sub.add_parser("track", help="track objects through a frame sequence")
    tr.add_argument("--frames", help="frame directory or printf pattern (e.g. in/%%06d.png)")
    tr.add_argument("--masks", help="foreground mask directory or pattern; "
                                    "a running-average subtractor is used when omitted")
    tr.add_argument("--output", help="trajectory CSV to write (default tracks.csv)")
    tr.add_argument("--gt", help="ground-truth CSV to score against after tracking")
    tr.add_argument("--render", metavar="DIR", help="also write annotated frames here")
    tr.add_argument("--match_threshold", type=float, help="metric match distance in pixels")
    tr.add_argument("--preset", choices=sorted(PRESETS), help="named blob parameter set")
    tr.add_argument("--config", help="key=value parameter file")
    for name, text in _PARAM_HELP.items():
        kind = _FIELD_TYPES[_key(name)]
        tr.add_argument(f"--{name}", dest=_key(name), type=int if kind == "int" else float,
                        help=text)

    ev = sub.add_parser("eval", help="score trajectories with CLEAR MOT")
    ev.add_argument("--gt", required=True, help="ground-truth CSV")
    ev.add_argument("--hyp", required=True, help="tracker output CSV")
    ev.add_argument("--match_threshold", type=float, default=metrics.DEFAULT_MATCH_THRESHOLD)
    ev.add_argument("--json", help="JSON report path (default <hyp>.eval.json)")

    sy = sub.add_parser("synth", help="write a built-in synthetic scenario")
    sy.add_argument("name", help="scenario name")
    sy.add_argument("--seed", type=int)
    sy.add_argument("--out", required=True, help="output directory")

    rd = sub.add_parser("render", help="draw trajectories onto frames")
    rd.add_argument("--frames", required=True)
    rd.add_argument("--trajectories", required=True, help="trajectory CSV")
    rd.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "track":
            overrides = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
            cfg = build_config(args.preset, args.config, overrides)
            return run_track(cfg)
        if args.command == "eval":
            return run_eval(args.gt, args.hyp, args.match_threshold, args.json)
        if args.command == "synth":
            return run_synth(args.name, args.seed, args.out)
        if args.command == "render":
            return run_render(args.frames, args.trajectories, args.out)
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"kcfmot: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, seqio.SequenceError) as exc:
        print(f"kcfmot: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
