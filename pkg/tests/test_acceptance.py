"""Acceptance criteria, each checked at its stated tolerance.

Every test appends one PASS/FAIL line to the summary printed at the end of
the pytest run (see conftest.py), then asserts.
"""

import time

import numpy as np
import pytest
from scipy import ndimage

from conftest import ACCEPTANCE_LINES
from oracles import brute_force_correlation, dense_ridge_response

from kcfmot import kcf, synth
from kcfmot.features import load_color_names
from kcfmot.foreground import CandidateRegion
from kcfmot.geometry import BoundingBox
from kcfmot.kcf import KcfParams, detect, gaussian_correlation, gaussian_label, train
from kcfmot.metrics import TrajectoryRecord, TrajectorySet, evaluate, match_events
from kcfmot.tracking import MultiTracker, TrackerOutput, TrackState, track_sequence


def report(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"AC{number:02d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    assert ok, f"{title}: {detail}"


def as_hypotheses(records):
    return TrajectorySet([TrajectoryRecord(r.frame, r.track_id, r.box) for r in records])


# -- 1 ---------------------------------------------------------------------------------

def test_ac01_kernel_correlation_oracle():
    g = np.random.default_rng(2024)
    worst, fast_time = 0.0, 0.0
    for rows in range(4, 9):
        for cols in range(4, 9):
            for channels in (1, 3, 11):
                x = g.standard_normal((rows, cols, channels))
                z = g.standard_normal((rows, cols, channels))
                sigma = float(g.uniform(0.3, 1.5))
                t0 = time.perf_counter()
                k = gaussian_correlation(x, z, sigma)
                fast_time += time.perf_counter() - t0
                worst = max(worst, float(np.abs(k - brute_force_correlation(x, z, sigma)).max()))
    ok = worst <= 1e-8 and fast_time < 1.0
    report(1, "kernel correlation vs brute-force cyclic shifts", ok,
           f"max abs error {worst:.2e} (tol 1e-08), 75 cases in {fast_time:.3f} s (< 1 s)")


# -- 2 ---------------------------------------------------------------------------------

def test_ac02_ridge_regression_oracle():
    g = np.random.default_rng(7)
    params = KcfParams(lambda_=1e-4)
    worst = 0.0
    for channels in (1, 2):
        x = g.standard_normal((8, 8, channels))
        model = train(x, params)
        y = gaussian_label(8, 8, kcf.label_sigma(model.target_size, params))
        for z in (x, g.standard_normal((8, 8, channels))):
            expected = dense_ridge_response(x, y, z, params.sigma_kernel, params.lambda_)
            worst = max(worst, float(np.abs(detect(model, z).map - expected).max()))
    report(2, "train+detect vs dense 64x64 kernel ridge regression", worst <= 1e-6,
           f"max abs error {worst:.2e} (tol 1e-06)")


# -- 3 ---------------------------------------------------------------------------------

MOTIONS = [(1, 0), (2, 0), (3, 0), (4, 0), (0, 1), (0, 3), (-2, 1), (3, -2), (-4, -4), (1, 4)]


def test_ac03_translation_recovery():
    table = load_color_names()
    good = total = 0
    for i, (vx, vy) in enumerate(MOTIONS):
        a = synth.Actor(1, "car", synth.ORANGE, (28, 20),
                        synth.linear_path(0, 160 - 12 * vx, 120 - 12 * vy, vx, vy, 24))
        frames, _, gt = synth.render(synth.Scenario(f"m{i}", 320, 240, 25, (a,)))
        truth = {r.frame: r.box for r in gt.records}
        model = kcf.init_model(frames[0], truth[0], KcfParams(), table)
        box = truth[0]
        for t in range(1, len(frames)):
            new_box, _, model = kcf.step(model, frames[t], box, table)
            dx, dy = new_box.x - box.x, new_box.y - box.y
            tx, ty = truth[t].x - truth[t - 1].x, truth[t].y - truth[t - 1].y
            good += abs(dx - tx) <= 1 and abs(dy - ty) <= 1
            total += 1
            box = new_box
    rate = good / total
    report(3, "per-frame displacement of 1-4 px recovered within +-1 px", rate >= 0.95,
           f"{good}/{total} frames = {rate:.1%} (need >= 95%)")


# -- 4 ---------------------------------------------------------------------------------

def test_ac04_area_ratio_branch_table():
    # Region area 100; tracker box areas chosen to hit each ratio exactly.
    cases = {1.0: (10, 10), 1.39: (139, 1), 1.4: (14, 10), 1.6: (16, 10),
             1.8: (18, 10), 1.81: (181, 1), 2.0: (20, 10)}
    expect_filter = {1.4, 1.6, 1.8}
    frame = np.full((300, 400, 3), 90, np.uint8)
    frame[40:50, 40:50] = (200, 40, 40)
    chosen = {}
    for rho, (w, h) in cases.items():
        mt = MultiTracker()
        region = BoundingBox(40, 40, 10, 10)
        cor = CandidateRegion(region, 100, region.centroid)
        mt.associate(frame, [cor], [])
        # Offset by a pixel so the two candidate sources are distinguishable.
        to = BoundingBox(41, 40, w, h)
        assert to.area / region.area == rho
        mt.associate(frame, [cor], [TrackerOutput(1, to)])
        recorded = mt.tracks[1].boxes[1]
        chosen[rho] = "KCF" if recorded == to else "COR" if recorded == region else "?"
    ok = all((chosen[r] == "KCF") == (r in expect_filter) for r in cases)
    table = ", ".join(f"{r}->{chosen[r]}" for r in cases)
    report(4, "area-ratio branch with T_ol=1.4, T_oh=1.8 inclusive", ok, table)


# -- 5 ---------------------------------------------------------------------------------

def _merged_frames(masks):
    return [t for t, m in enumerate(masks)
            if ndimage.label(m, structure=np.ones((3, 3), bool))[1] == 1]


def test_ac05_crossing():
    frames, masks, gt = synth.render(synth.get_scenario("crossing"))
    tracker, recs = track_sequence(frames, masks)
    score = evaluate(gt, as_hypotheses(recs))
    merged = _merged_frames(masks)
    entry, exit_ = merged[0], merged[-1]

    def near_boundary(t):
        return abs(t - entry) <= 2 or abs(t - exit_) <= 2

    miss_frames = [f for f, pairs, _, gts, _ in match_events(gt, as_hypotheses(recs))
                   if len(pairs) < len(gts)]
    stray_misses = [f for f in miss_frames if not near_boundary(f)]
    states = {(r.frame, r.track_id): r.state for r in recs}
    ids = sorted({r.track_id for r in recs})
    unflagged = [t for t in merged if not near_boundary(t)
                 and any(states.get((t, i)) is not TrackState.OCCLUDED for i in ids)]
    ok = (score.mota == 1.0 and score.id_switches == 0 and not stray_misses
          and not unflagged and len(ids) == 2)
    report(5, "crossing scenario", ok,
           f"MOTA {score.mota:.3f}, id switches {score.id_switches}, misses outside +-2 frames "
           f"{len(stray_misses)}, merged frames {entry}-{exit_} not flagged Occluded {len(unflagged)}")


# -- 6 ---------------------------------------------------------------------------------

def test_ac06_fragmentation():
    frames, masks, gt = synth.render(synth.get_scenario("fragmentation"))
    tracker, recs = track_sequence(frames, masks)
    ids = sorted({r.track_id for r in recs})
    ok = tracker.stats["finalized"] == 1 and ids == [1]
    report(6, "fragmentation scenario yields one track", ok,
           f"finalized {tracker.stats['finalized']}, ids in output {ids}")


# -- 7 ---------------------------------------------------------------------------------

def _run(actors, frames=60):
    s = synth.Scenario("lifecycle", 320, 240, frames, tuple(actors))
    fr, ms, gt = synth.render(s)
    return (*track_sequence(fr, ms), gt)


def test_ac07_lifecycle_rules():
    # (a) 9 invisible frames end the track; the object returns under a new id.
    a = synth.Actor(1, "car", synth.RED, (30, 20), ((0, 100, 120),), visible=((0, 29), (39, 59)))
    _, recs, _ = _run([a])
    first = [r.frame for r in recs if r.track_id == 1]
    ended = max(first) == 29 and len({r.track_id for r in recs}) == 2

    # (b) a 5-frame flicker leaves no output.
    steady = synth.Actor(1, "car", synth.RED, (30, 20), ((0, 100, 120),))
    flicker = synth.Actor(2, "car", synth.BLUE, (24, 24), ((0, 220, 60),), visible=((10, 14),))
    tracker, recs, _ = _run([steady, flicker])
    flicker_silent = {r.track_id for r in recs} == {1} and tracker.stats["discarded"] == 1

    # (c) a 3-frame interior gap is filled on the exact straight line.
    mover = synth.Actor(1, "car", synth.RED, (30, 20), synth.linear_path(0, 60, 120, 2, 0, 59),
                        visible=((0, 19), (23, 59)))
    _, recs, _ = _run([mover])
    boxes = {r.frame: r.box for r in recs if r.track_id == 1}
    b0, b1 = boxes.get(19), boxes.get(23)
    on_line = b0 is not None and b1 is not None and all(
        boxes.get(f) == BoundingBox(*[int(np.floor(u + (f - 19) / 4 * (v - u) + 0.5))
                                      for u, v in zip(b0.as_tuple(), b1.as_tuple())])
        for f in (20, 21, 22))
    report(7, "lifecycle: 9-frame loss ends track, 5-frame flicker dropped, 3-frame gap interpolated",
           ended and flicker_silent and on_line,
           f"terminated={ended}, flicker dropped={flicker_silent}, gap on line={on_line}")


# -- 8 ---------------------------------------------------------------------------------

def test_ac08_redundancy_deletion():
    frames, masks, gt = synth.render(synth.get_scenario("fragmented-start"))
    tracker = MultiTracker()
    counts, deleted_at = [], None
    for t, (f, m) in enumerate(zip(frames, masks)):
        tracker.process_frame(f, m)
        if deleted_at is None and tracker.stats["deleted_redundant"]:
            deleted_at = t
        counts.append(tracker.redundancy.get((1, 2), 0))
    tracker.finish()
    ids = sorted({r.track_id for r in tracker.trajectories()})
    run_before = 0
    if deleted_at is not None:
        for c in reversed(counts[:deleted_at]):
            if c == 0:
                break
            run_before += 1
    exactly_eight = deleted_at is not None and run_before == 7 and counts[deleted_at - 1] == 7

    pf, pm, _ = synth.render(synth.get_scenario("platoon"))
    platoon, _ = track_sequence(pf, pm)
    platoon_kept = platoon.stats["deleted_redundant"] == 0
    ok = exactly_eight and ids == [1] and platoon_kept
    report(8, "redundant tracker removed after exactly 8 qualifying frames; platoon untouched", ok,
           f"deletion on qualifying frame {run_before + 1 if deleted_at is not None else None}, "
           f"surviving ids {ids}, platoon deletions {platoon.stats['deleted_redundant']}")


# -- 9 ---------------------------------------------------------------------------------

def test_ac09_metrics_examples():
    def rec(f, i, x):
        return TrajectoryRecord(f, i, BoundingBox(x, 0, 10, 10))

    gt = TrajectorySet([rec(f, 1, 5 * f) for f in range(1, 11)])
    perfect = evaluate(gt, gt)
    missed = evaluate(gt, gt.filter(lambda r: r.frame != 6))
    split = evaluate(gt, TrajectorySet([rec(r.frame, 1 if r.frame <= 5 else 2, r.box.x)
                                        for r in gt.records]))
    negative = evaluate(TrajectorySet([rec(0, 1, 0)]),
                        TrajectorySet([rec(0, 1, 500), rec(0, 2, 900), rec(0, 3, 1300)]))
    ok = (perfect.mota == 1.0 and perfect.motp == 0.0
          and missed.mota == pytest.approx(0.9, abs=1e-12) and missed.misses == 1
          and split.id_switches == 1 and split.mota == pytest.approx(0.9, abs=1e-12)
          and split.motp == 0.0 and negative.mota == -3.0)
    report(9, "metrics hand-computed examples", ok,
           f"perfect {perfect.mota}/{perfect.motp}, one miss {missed.mota:.3f}, "
           f"id split {split.mota:.3f} ({split.id_switches} switch), unclamped {negative.mota}")


# -- 10 --------------------------------------------------------------------------------

def test_ac10_throughput():
    s = synth.get_scenario("highway")
    frames, masks, gt = synth.render(s)
    t0 = time.perf_counter()
    tracker, recs = track_sequence(frames, masks)
    wall = time.perf_counter() - t0
    fps = len(frames) / wall
    concurrent = max(sum(1 for r in recs if r.frame == f) for f in range(len(frames)))
    ok = fps >= 10.0 and concurrent == 5
    report(10, f"throughput at {s.width}x{s.height}", ok,
           f"{fps:.1f} FPS over {len(frames)} frames with {concurrent} concurrent tracks (need >= 10)")


# -- 11 --------------------------------------------------------------------------------

def test_ac11_dataset_reproduction():
    ACCEPTANCE_LINES.append(
        "AC11 SKIP  dataset reproduction: conditional criterion, the real video dataset is not available"
    )
    pytest.skip("real video sequences and their foreground masks are not available")
