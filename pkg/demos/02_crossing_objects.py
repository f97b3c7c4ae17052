"""Two cars cross; their masks merge for a few frames.

While merged the blob cannot tell the objects apart, so each track keeps
the box from its own filter and is marked Occluded.  Afterwards both ids
continue, which the CLEAR MOT score confirms.
"""

from collections import Counter

from kcfmot import synth
from kcfmot.metrics import TrajectoryRecord, TrajectorySet, evaluate
from kcfmot.tracking import TrackState, track_sequence

frames, masks, gt = synth.render(synth.get_scenario("crossing"))
tracker, records = track_sequence(frames, masks)

occluded = sorted({r.frame for r in records if r.state is TrackState.OCCLUDED})
print("frames with occluded tracks:", occluded[0], "to", occluded[-1])
print("states:", dict(Counter(str(r.state) for r in records)))

hyp = TrajectorySet([TrajectoryRecord(r.frame, r.track_id, r.box) for r in records])
score = evaluate(gt, hyp)
print(f"MOTA {score.mota:.3f}  MOTP {score.motp:.2f} px  id switches {score.id_switches}")
