"""Follow one object with a single correlation filter.

A rectangle drifts across a flat scene.  We train a filter on the first
frame and step it through the rest, printing the displacement it finds
next to the true one.
"""

import numpy as np

from kcfmot import kcf, synth
from kcfmot.features import load_color_names

actor = synth.Actor(1, "car", synth.ORANGE, (32, 22), synth.linear_path(0, 80, 100, 3, 1, 29))
frames, masks, gt = synth.render(synth.Scenario("demo", 320, 240, 30, (actor,)))
truth = {r.frame: r.box for r in gt.records}

table = load_color_names()
model = kcf.init_model(frames[0], truth[0], kcf.KcfParams(), table)
box = truth[0]

errors = []
for t in range(1, len(frames)):
    new_box, response, model = kcf.step(model, frames[t], box, table)
    found = (new_box.x - box.x, new_box.y - box.y)
    true = (truth[t].x - truth[t - 1].x, truth[t].y - truth[t - 1].y)
    errors.append(np.hypot(found[0] - true[0], found[1] - true[1]))
    print(f"frame {t:2d}  found {found}  true {true}  peak {response.peak_value:.3f}")
    box = new_box

print(f"mean displacement error: {np.mean(errors):.2f} px")
