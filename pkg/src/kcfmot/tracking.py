"""Multi-object tracking: arbitrate between correlation filters and foreground blobs.

Every frame, each live track's filter is run on the new frame, giving one
tracker output box per track.  Tracker outputs and candidate regions are then
paired by box overlap and every region falls in one of four cases:

* one tracker output      -> ``Tracked``: take the region box, unless the
  output/region area ratio says the region shrank through fragmentation;
* several outputs         -> ``Occluded``: each track keeps its own filter
  box, and pairs of trackers that look redundant are counted and pruned;
* no output               -> ``NewObject``: first try to hand the region to
  a drifted tracker from an occlusion group, otherwise start a new track;

and every output overlapping no region makes its track ``Invisible``.
Tracks invisible for too long are closed; short-lived ones are dropped and
the rest get their interior gaps interpolated.
"""

from __future__ import annotations

import enum
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field, replace

import numpy as np

from . import kcf
from .features import ColorNamesTable, TrackerLost, load_color_names
from .foreground import BlobParams, CandidateRegion, as_mask, clean, components, refine
from .geometry import BoundingBox, overlap
from .kcf import KcfModel, KcfParams, Response

log = logging.getLogger(__name__)


class TrackState(enum.Enum):
    TRACKED = "Tracked"
    OCCLUDED = "Occluded"
    NEW_OBJECT = "NewObject"
    INVISIBLE = "Invisible"

    def __str__(self) -> str:
        return self.value


class ConfigurationError(ValueError):
    """Inputs that can never be tracked, such as a mask/frame size mismatch."""


@dataclass(frozen=True)
class ManagerParams:
    T_ol: float = 1.4
    T_oh: float = 1.8
    invisible_max: int = 8
    min_lifetime: int = 6
    redundancy_frames: int = 8
    blob: BlobParams = field(default_factory=BlobParams)
    kcf: KcfParams = field(default_factory=KcfParams)

    def __post_init__(self) -> None:
        if not 1.0 < self.T_ol < self.T_oh:
            raise ValueError("need 1 < T_ol < T_oh")
        for name in ("invisible_max", "min_lifetime", "redundancy_frames"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(eq=False)
class Track:
    id: int
    birth_frame: int
    model: KcfModel | None = None
    kcf_box: BoundingBox | None = None
    boxes: dict[int, BoundingBox] = field(default_factory=dict)
    states: dict[int, TrackState] = field(default_factory=dict)
    group: int | None = None
    invisible_count: int = 0

    @property
    def lifetime(self) -> int:
        """Number of frames with a recorded box."""
        return len(self.boxes)

    def record(self, frame: int, box: BoundingBox, state: TrackState) -> None:
        self.boxes[frame] = box
        self.states[frame] = state
        if state is not TrackState.INVISIBLE:
            self.invisible_count = 0


@dataclass(frozen=True)
class TrackerOutput:
    track_id: int
    box: BoundingBox
    response: Response | None = None


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    track_id: int
    box: BoundingBox
    state: TrackState


@dataclass
class Association:
    """Result of pairing regions with tracker outputs for one frame.

    ``assigned[i]`` lists indices into the outputs whose best-overlapping
    region is ``i``; ``touched[i]`` says whether any output overlaps region
    ``i`` at all; ``unmatched`` lists outputs overlapping no region.
    """

    assigned: list[list[int]]
    touched: list[bool]
    unmatched: list[int]

    def region_state(self, i: int) -> TrackState | None:
        n = len(self.assigned[i])
        if n == 1:
            return TrackState.TRACKED
        if n > 1:
            return TrackState.OCCLUDED
        if not self.touched[i]:
            return TrackState.NEW_OBJECT
        # Overlapped only by outputs that belong to another region, e.g. a
        # small fragment next to the fragment its tracker follows.
        return None


def classify(cors: list[CandidateRegion], outputs: list[TrackerOutput]) -> Association:
    """Pair every tracker output with the region it overlaps most (ties: lower index)."""
    assigned: list[list[int]] = [[] for _ in cors]
    touched = [False] * len(cors)
    unmatched = []
    for j, out in enumerate(outputs):
        best, best_ov = None, 0.0
        for i, cor in enumerate(cors):
            ov = overlap(out.box, cor.box)
            if ov > 0.0:
                touched[i] = True
                if ov > best_ov:
                    best, best_ov = i, ov
        if best is None:
            unmatched.append(j)
        else:
            assigned[best].append(j)
    return Association(assigned, touched, unmatched)


def prefer_tracker_box(out_box: BoundingBox, cor_box: BoundingBox, p: ManagerParams) -> bool:
    """True when the filter box should be trusted over a shrunken region box."""
    rho = out_box.area / cor_box.area
    return p.T_ol <= rho <= p.T_oh


def looks_redundant(box_m: BoundingBox, box_n: BoundingBox, cor_box: BoundingBox) -> bool:
    """Two trackers inside one region whose boxes together exceed the region area."""
    return box_m.area + box_n.area > cor_box.area


def newer_of(a: Track, b: Track) -> Track:
    """The more recently created track; ties go to the larger id."""
    return max(a, b, key=lambda t: (t.birth_frame, t.id))


def invisible_verdict(track: Track, p: ManagerParams) -> str:
    """``"keep"``, ``"finalize"`` or ``"discard"`` for a track that is currently invisible."""
    if track.invisible_count <= p.invisible_max:
        return "keep"
    return "discard" if track.lifetime < p.min_lifetime else "finalize"


def _lerp_box(a: BoundingBox, b: BoundingBox, t: float) -> BoundingBox:
    vals = [int(np.floor(u + t * (v - u) + 0.5)) for u, v in zip(a.as_tuple(), b.as_tuple())]
    return BoundingBox(*vals)


def interpolate(track: Track) -> Track:
    """Fill interior frame gaps with componentwise linear interpolation."""
    frames = sorted(track.boxes)
    boxes = dict(track.boxes)
    states = {f: s for f, s in track.states.items() if f in boxes}
    for f0, f1 in zip(frames, frames[1:]):
        gap = f1 - f0
        for f in range(f0 + 1, f1):
            boxes[f] = _lerp_box(track.boxes[f0], track.boxes[f1], (f - f0) / gap)
            states[f] = TrackState.INVISIBLE
    return replace(
        track,
        boxes=dict(sorted(boxes.items())),
        states=dict(sorted(states.items())),
    )


class MultiTracker:
    """Online tracker; feed frames in order with :meth:`process_frame`.

    Closed tracks accumulate in :attr:`finished`; call :meth:`finish` after
    the last frame to close the tracks that are still live.
    """

    def __init__(
        self,
        params: ManagerParams | None = None,
        table: ColorNamesTable | None = None,
    ) -> None:
        self.params = params or ManagerParams()
        self.table = table or load_color_names()
        self.frame_index = 0
        self.tracks: dict[int, Track] = {}
        self.finished: list[Track] = []
        self.groups: dict[int, set[int]] = {}
        self.redundancy: dict[tuple[int, int], int] = {}
        self.stats = {"created": 0, "finalized": 0, "discarded": 0, "deleted_redundant": 0,
                      "reassigned": 0}
        self.timings = defaultdict(float)
        self._next_id = 1
        self._next_group = 1
        self._frame_shape: tuple[int, int] | None = None

    # -- per-frame pipeline -------------------------------------------------

    def process_frame(self, frame: np.ndarray, mask: np.ndarray) -> list[FrameRecord]:
        frame = np.asarray(frame)
        mask = as_mask(mask)
        if mask.shape != frame.shape[:2]:
            raise ConfigurationError(
                f"frame {self.frame_index}: mask {mask.shape} does not match frame {frame.shape[:2]}"
            )
        t0 = time.perf_counter()
        cors = refine(components(clean(mask, self.params.blob)), self.params.blob)
        t1 = time.perf_counter()
        outputs = self.step_trackers(frame)
        t2 = time.perf_counter()
        records = self.associate(frame, cors, outputs)
        t3 = time.perf_counter()
        self.timings["foreground"] += t1 - t0
        self.timings["kcf"] += t2 - t1
        self.timings["association"] += t3 - t2
        return records

    def step_trackers(self, frame: np.ndarray) -> list[TrackerOutput]:
        """Run every live filter on ``frame`` (tracks in id order).

        A filter whose search window left the frame yields no output.
        """
        outputs = []
        for tid in sorted(self.tracks):
            track = self.tracks[tid]
            try:
                box, resp = kcf.locate(track.model, frame, track.kcf_box, self.table)
            except TrackerLost:
                continue
            outputs.append(TrackerOutput(tid, box, resp))
        return outputs

    def associate(
        self,
        frame: np.ndarray,
        cors: list[CandidateRegion],
        outputs: list[TrackerOutput],
    ) -> list[FrameRecord]:
        """Apply the four state handlers for the current frame and advance to the next."""
        t = self.frame_index
        self._frame_shape = frame.shape[:2]
        assoc = classify(cors, outputs)
        assigned = [list(a) for a in assoc.assigned]
        seen_pairs: set[tuple[int, int]] = set()
        handled: set[int] = set()

        for i, cor in enumerate(cors):
            if assoc.region_state(i) is TrackState.NEW_OBJECT:
                self._handle_new(frame, t, cor, cors, outputs, assigned, handled)

        for i, cor in enumerate(cors):
            idx = [j for j in assigned[i] if outputs[j].track_id in self.tracks]
            if len(idx) == 1:
                self._update_tracked(frame, t, self.tracks[outputs[idx[0]].track_id], cor, outputs[idx[0]])
                handled.add(outputs[idx[0]].track_id)
            elif len(idx) > 1:
                ids = self._update_occluded(frame, t, cor, [outputs[j] for j in idx], seen_pairs)
                handled.update(ids)

        for pair in list(self.redundancy):
            if pair not in seen_pairs:
                del self.redundancy[pair]

        by_id = {o.track_id: o for o in outputs}
        for tid in sorted(self.tracks):
            if tid in handled:
                continue
            self._handle_invisible(t, self.tracks[tid], by_id.get(tid))

        records = []
        for tid in sorted(self.tracks):
            track = self.tracks[tid]
            state = track.states.get(t)
            if state is None:
                continue
            box = track.boxes.get(t, track.kcf_box)
            records.append(FrameRecord(t, tid, box, state))
        self.frame_index += 1
        return records

    # -- state handlers -----------------------------------------------------

    def _clip(self, box: BoundingBox) -> BoundingBox:
        if self._frame_shape is None:
            return box
        h, w = self._frame_shape
        return box.clip(w, h) or box

    def _reinit(self, frame: np.ndarray, track: Track, box: BoundingBox) -> None:
        track.model = kcf.init_model(frame, box, self.params.kcf, self.table)
        track.kcf_box = box

    def _update_tracked(self, frame, t, track: Track, cor: CandidateRegion, out: TrackerOutput) -> None:
        if prefer_tracker_box(out.box, cor.box, self.params):
            track.model = kcf.update_at(track.model, frame, out.box, self.table)
            track.kcf_box = out.box
            track.record(t, self._clip(out.box), TrackState.TRACKED)
        else:
            self._reinit(frame, track, cor.box)
            track.record(t, cor.box, TrackState.TRACKED)
        self._leave_group(track)

    def _update_occluded(self, frame, t, cor: CandidateRegion, outs: list[TrackerOutput],
                         seen_pairs: set) -> list[int]:
        outs = sorted(outs, key=lambda o: o.track_id)
        tracks = [self.tracks[o.track_id] for o in outs]
        for track, out in zip(tracks, outs):
            track.model = kcf.update_at(track.model, frame, out.box, self.table)
            track.kcf_box = out.box
            track.record(t, self._clip(out.box), TrackState.OCCLUDED)
        self._join_group(tracks)
        ids = [tr.id for tr in tracks]

        doomed: list[Track] = []
        for a in range(len(outs)):
            for b in range(a + 1, len(outs)):
                pair = (outs[a].track_id, outs[b].track_id)
                if not looks_redundant(outs[a].box, outs[b].box, cor.box):
                    self.redundancy.pop(pair, None)
                    continue
                seen_pairs.add(pair)
                self.redundancy[pair] = self.redundancy.get(pair, 0) + 1
                if self.redundancy[pair] >= self.params.redundancy_frames:
                    ta, tb = tracks[a], tracks[b]
                    if {ta.id, tb.id} & {d.id for d in doomed}:
                        continue
                    doomed.append(newer_of(ta, tb))

        if doomed:
            for track in doomed:
                log.debug("frame %d: dropping redundant track %d", t, track.id)
                self._drop(track)
                self.stats["deleted_redundant"] += 1
            gone = {d.id for d in doomed}
            survivors = [tr for tr in tracks if tr.id not in gone]
            for track in survivors:
                self._reinit(frame, track, cor.box)
                state = TrackState.OCCLUDED if len(survivors) > 1 else TrackState.TRACKED
                track.record(t, cor.box, state)
                if len(survivors) == 1:
                    self._leave_group(track)
        return ids

    def _handle_new(self, frame, t, cor: CandidateRegion, cors, outputs, assigned, handled) -> None:
        drifted = self._find_drifted(cor, cors, outputs, assigned)
        if drifted is not None:
            i, j = drifted
            assigned[i].remove(j)
            track = self.tracks[outputs[j].track_id]
            log.debug("frame %d: re-assigning drifted track %d", t, track.id)
            self._reinit(frame, track, cor.box)
            track.record(t, cor.box, TrackState.TRACKED)
            self._leave_group(track)
            handled.add(track.id)
            self.stats["reassigned"] += 1
            return
        track = Track(self._next_id, t)
        self._next_id += 1
        self._reinit(frame, track, cor.box)
        track.record(t, cor.box, TrackState.NEW_OBJECT)
        self.tracks[track.id] = track
        handled.add(track.id)
        self.stats["created"] += 1

    def _find_drifted(self, orphan: CandidateRegion, cors, outputs, assigned):
        """Look for a region holding several trackers of one occlusion group.

        Only regions whose padded box reaches the orphan are searched.  Returns
        ``(region index, output index)`` of the worst-matching tracker, or None.
        """
        best = None
        for i, cor in enumerate(cors):
            idx = [j for j in assigned[i] if outputs[j].track_id in self.tracks]
            if len(idx) < 2:
                continue
            by_group = defaultdict(list)
            for j in idx:
                g = self.tracks[outputs[j].track_id].group
                if g is not None:
                    by_group[g].append(j)
            cands = [js for js in by_group.values() if len(js) >= 2]
            if not cands:
                continue
            cx, cy = cor.box.centroid
            w = int(round(cor.box.w * (1.0 + self.params.kcf.padding)))
            h = int(round(cor.box.h * (1.0 + self.params.kcf.padding)))
            if overlap(BoundingBox.from_center(cx, cy, w, h), orphan.box) == 0.0:
                continue
            for js in cands:
                for j in js:
                    ov = overlap(outputs[j].box, cor.box)
                    key = (ov, -outputs[j].track_id)
                    if best is None or key < best[0]:
                        best = (key, i, j)
        return None if best is None else (best[1], best[2])

    def _handle_invisible(self, t, track: Track, out: TrackerOutput | None) -> None:
        # The search stays at the last confirmed position: over empty
        # background the filter peak is arbitrary and would wander off.
        track.invisible_count += 1
        track.states[t] = TrackState.INVISIBLE
        verdict = invisible_verdict(track, self.params)
        if verdict == "finalize":
            self._finalize(track)
        elif verdict == "discard":
            self._drop(track)
            self.stats["discarded"] += 1

    # -- groups and lifecycle -----------------------------------------------

    def _join_group(self, tracks: list[Track]) -> None:
        gids = sorted({tr.group for tr in tracks if tr.group is not None})
        if gids:
            gid = gids[0]
            for other in gids[1:]:
                for tid in self.groups.pop(other, set()):
                    if tid in self.tracks:
                        self.tracks[tid].group = gid
                        self.groups.setdefault(gid, set()).add(tid)
        else:
            gid = self._next_group
            self._next_group += 1
        members = self.groups.setdefault(gid, set())
        for tr in tracks:
            tr.group = gid
            members.add(tr.id)

    def _leave_group(self, track: Track) -> None:
        if track.group is None:
            return
        members = self.groups.get(track.group)
        if members is not None:
            members.discard(track.id)
            if not members:
                del self.groups[track.group]
        track.group = None

    def _drop(self, track: Track) -> None:
        self._leave_group(track)
        self.tracks.pop(track.id, None)
        for pair in [p for p in self.redundancy if track.id in p]:
            del self.redundancy[pair]

    def _finalize(self, track: Track) -> None:
        self._drop(track)
        self.finished.append(interpolate(track))
        self.stats["finalized"] += 1

    def finish(self) -> list[Track]:
        """Close all live tracks and return every finished track, ordered by id."""
        for tid in sorted(self.tracks):
            track = self.tracks[tid]
            if track.lifetime < self.params.min_lifetime:
                self._drop(track)
                self.stats["discarded"] += 1
            else:
                self._finalize(track)
        return sorted(self.finished, key=lambda tr: tr.id)

    def trajectories(self) -> list[FrameRecord]:
        """Records of all finished tracks, sorted by frame then id."""
        recs = [
            FrameRecord(f, tr.id, box, tr.states.get(f, TrackState.TRACKED))
            for tr in self.finished
            for f, box in tr.boxes.items()
        ]
        return sorted(recs, key=lambda r: (r.frame, r.track_id))


def track_sequence(frames, masks, params: ManagerParams | None = None,
                   table: ColorNamesTable | None = None) -> tuple[MultiTracker, list[FrameRecord]]:
    """Track a whole in-memory sequence; returns the tracker and the final trajectories."""
    tracker = MultiTracker(params, table)
    for frame, mask in zip(frames, masks):
        tracker.process_frame(frame, mask)
    tracker.finish()
    return tracker, tracker.trajectories()
