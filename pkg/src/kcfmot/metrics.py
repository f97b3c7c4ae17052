"""CLEAR MOT evaluation (MOTA, MOTP) with centroid-distance matching.

Trajectory files are CSV with the header ``frame,id,x,y,w,h`` plus an
optional ``class`` column; unknown extra columns (such as ``state`` in tracker
output) are ignored.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BoundingBox, distance

DEFAULT_MATCH_THRESHOLD = 50.0
KNOWN_CLASSES = ("car", "pedestrian", "cyclist")
REQUIRED_COLUMNS = ("frame", "id", "x", "y", "w", "h")


class TrajectoryFormatError(ValueError):
    """A trajectory CSV row that cannot be parsed."""


@dataclass(frozen=True)
class TrajectoryRecord:
    frame: int
    id: int
    box: BoundingBox
    label: str | None = None


@dataclass
class TrajectorySet:
    records: list[TrajectoryRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen = set()
        for r in self.records:
            if r.frame < 0:
                raise ValueError(f"negative frame index {r.frame}")
            key = (r.frame, r.id)
            if key in seen:
                raise ValueError(f"duplicate record for frame {r.frame}, id {r.id}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.records)

    def by_frame(self) -> dict[int, list[TrajectoryRecord]]:
        frames = defaultdict(list)
        for r in self.records:
            frames[r.frame].append(r)
        return frames

    def ids(self) -> set[int]:
        return {r.id for r in self.records}

    def filter(self, keep) -> "TrajectorySet":
        return TrajectorySet([r for r in self.records if keep(r)])


@dataclass
class MotScore:
    misses: int = 0
    false_positives: int = 0
    id_switches: int = 0
    matches: int = 0
    total_gt: int = 0
    distance_sum: float = 0.0

    @property
    def has_ground_truth(self) -> bool:
        return self.total_gt > 0

    @property
    def mota(self) -> float | None:
        """None when there is no ground truth to score against."""
        if self.total_gt == 0:
            return None
        return 1.0 - (self.misses + self.false_positives + self.id_switches) / self.total_gt

    @property
    def motp(self) -> float:
        return self.distance_sum / self.matches if self.matches else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mota"] = self.mota
        d["motp"] = self.motp
        return d


def _match_frame(gts, hyps, prev_match: dict[int, int], threshold: float):
    """Pairs ``(gt_record, hyp_record, distance)`` for one frame."""
    pairs = []
    hyp_by_id = {h.id: h for h in hyps}
    used_h = set()
    free_g = []
    for g in gts:
        hid = prev_match.get(g.id)
        h = hyp_by_id.get(hid) if hid is not None else None
        if h is not None and h.id not in used_h:
            d = distance(g.box.centroid, h.box.centroid)
            if d < threshold:
                pairs.append((g, h, d))
                used_h.add(h.id)
                continue
        free_g.append(g)
    free_h = [h for h in hyps if h.id not in used_h]
    if free_g and free_h:
        cost = np.array([[distance(g.box.centroid, h.box.centroid) for h in free_h] for g in free_g])
        big = threshold * 10.0 + cost.max() + 1.0
        rows, cols = linear_sum_assignment(np.where(cost < threshold, cost, big))
        for r, c in zip(rows, cols):
            if cost[r, c] < threshold:
                pairs.append((free_g[r], free_h[c], float(cost[r, c])))
    return pairs


def match_events(gt: TrajectorySet, hyp: TrajectorySet, match_threshold: float = DEFAULT_MATCH_THRESHOLD):
    """Per-frame matching; yields ``(frame, pairs, switched_gt_ids, gts, hyps)``."""
    gt_frames, hyp_frames = gt.by_frame(), hyp.by_frame()
    prev_match: dict[int, int] = {}
    last_hyp: dict[int, int] = {}
    for f in sorted(set(gt_frames) | set(hyp_frames)):
        gts = sorted(gt_frames.get(f, []), key=lambda r: r.id)
        hyps = sorted(hyp_frames.get(f, []), key=lambda r: r.id)
        pairs = _match_frame(gts, hyps, prev_match, match_threshold)
        switched = set()
        prev_match = {}
        for g, h, _ in pairs:
            if g.id in last_hyp and last_hyp[g.id] != h.id:
                switched.add(g.id)
            last_hyp[g.id] = h.id
            prev_match[g.id] = h.id
        yield f, pairs, switched, gts, hyps


def evaluate(gt: TrajectorySet, hyp: TrajectorySet,
             match_threshold: float = DEFAULT_MATCH_THRESHOLD) -> MotScore:
    """CLEAR MOT tallies for ``hyp`` against ``gt``.

    Matches from the previous frame are kept while still within the
    threshold; remaining objects are paired by an optimal assignment on
    centroid distance.  An identity switch is counted when a ground-truth
    object is matched to a different hypothesis than at its previous match.
    """
    score = MotScore()
    for _, pairs, switched, gts, hyps in match_events(gt, hyp, match_threshold):
        score.total_gt += len(gts)
        score.matches += len(pairs)
        score.misses += len(gts) - len(pairs)
        score.false_positives += len(hyps) - len(pairs)
        score.id_switches += len(switched)
        score.distance_sum += sum(d for _, _, d in pairs)
    return score


def normalize_label(label: str | None) -> str:
    if label is None:
        return "other"
    label = label.strip().lower()
    return label if label in KNOWN_CLASSES else "other"


def per_class(gt: TrajectorySet, hyp: TrajectorySet,
              match_threshold: float = DEFAULT_MATCH_THRESHOLD) -> dict[str, MotScore]:
    """Scores per ground-truth class plus an ``"all"`` entry.

    Hypotheses carry no class.  For each class, hypothesis records that the
    global matching paired with ground truth of a different class are set
    aside; everything else, including unmatched hypotheses, takes part.
    """
    owner: dict[tuple[int, int], str] = {}
    for f, pairs, _, _, _ in match_events(gt, hyp, match_threshold):
        for g, h, _ in pairs:
            owner[(f, h.id)] = normalize_label(g.label)

    results = {}
    for cls in sorted({normalize_label(r.label) for r in gt.records}):
        gt_c = gt.filter(lambda r: normalize_label(r.label) == cls)
        hyp_c = hyp.filter(lambda r: owner.get((r.frame, r.id), cls) == cls)
        results[cls] = evaluate(gt_c, hyp_c, match_threshold)
    results["all"] = evaluate(gt, hyp, match_threshold)
    return results


# -- CSV ----------------------------------------------------------------------

def _parse_int(value: str, name: str, lineno: int) -> int:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise TrajectoryFormatError(f"line {lineno}: bad {name} value {value!r}") from None
    if not math.isfinite(f) or f != int(f):
        raise TrajectoryFormatError(f"line {lineno}: {name} must be an integer, got {value!r}")
    return int(f)


def read_trajectories(path: str | Path) -> TrajectorySet:
    """Parse a trajectory CSV; raises TrajectoryFormatError with the line number."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise TrajectoryFormatError(f"line 1: missing column(s) {', '.join(missing)}")
        reader.fieldnames = header
        records = []
        seen = set()
        for row in reader:
            lineno = reader.line_num
            if None in row or any(row.get(c) is None for c in REQUIRED_COLUMNS):
                raise TrajectoryFormatError(f"line {lineno}: wrong number of fields")
            vals = {c: _parse_int(row[c], c, lineno) for c in REQUIRED_COLUMNS}
            if vals["frame"] < 0:
                raise TrajectoryFormatError(f"line {lineno}: negative frame")
            try:
                box = BoundingBox(vals["x"], vals["y"], vals["w"], vals["h"])
            except ValueError as exc:
                raise TrajectoryFormatError(f"line {lineno}: {exc}") from None
            key = (vals["frame"], vals["id"])
            if key in seen:
                raise TrajectoryFormatError(f"line {lineno}: duplicate frame/id {key}")
            seen.add(key)
            label = row.get("class")
            records.append(TrajectoryRecord(vals["frame"], vals["id"], box, label or None))
    return TrajectorySet(records)


def write_trajectories(path: str | Path, records: Iterable, with_class: bool | None = None,
                       with_state: bool | None = None) -> None:
    """Write records (TrajectoryRecord or tracker FrameRecord) as CSV.

    By default tracker records get a ``state`` column and ground truth gets
    ``class`` when any record carries a label.
    """
    records = list(records)
    has_state = with_state if with_state is not None else any(hasattr(r, "state") for r in records)
    if with_class is None:
        with_class = any(getattr(r, "label", None) for r in records)
    header = list(REQUIRED_COLUMNS)
    if with_class:
        header.append("class")
    if has_state:
        header.append("state")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in records:
            rid = r.id if hasattr(r, "id") else r.track_id
            row = [r.frame, rid, *r.box.as_tuple()]
            if with_class:
                row.append(getattr(r, "label", None) or "")
            if has_state:
                row.append(str(r.state))
            w.writerow(row)


# -- reports ------------------------------------------------------------------

def format_table(scores: dict[str, MotScore]) -> str:
    lines = [f"{'Type':<12} {'MOTA':>8} {'MOTP':>8} {'Miss':>6} {'FP':>6} {'IDSW':>6} {'GT':>7}"]
    for name, s in scores.items():
        mota = "n/a" if s.mota is None else f"{s.mota:.3f}"
        lines.append(
            f"{name:<12} {mota:>8} {s.motp:>8.2f} {s.misses:>6} {s.false_positives:>6} "
            f"{s.id_switches:>6} {s.total_gt:>7}"
        )
    return "\n".join(lines)


def report_json(scores: dict[str, MotScore], match_threshold: float) -> str:
    payload = {
        "match_threshold": match_threshold,
        "results": {
            k: {**v.to_dict(), "status": "ok" if v.has_ground_truth else "no ground truth"}
            for k, v in scores.items()
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True)
