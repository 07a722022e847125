"""Switch tracker parts off and compare accuracy.

The detector output here wobbles a few pixels around fixed true lanes.  Merging
stored and detected lines smooths the wobble; a zero match distance never
matches, so every frame starts from fresh lanes.
"""

from lanetrack import PipelineConfig, TrackerConfig, accuracy, render, run_sequence
from lanetrack.synth import jittered_scenario
from lanetrack.tracker import lane_polyline

VARIANTS = {
    "default": TrackerConfig(),
    "no merge": TrackerConfig(merge_enabled=False),
    "match_k=0": TrackerConfig(match_k=0.0),
    "match_k=3": TrackerConfig(match_k=3.0),
    "alpha=0.25": TrackerConfig(alpha=0.25),
    "alpha=1.0": TrackerConfig(alpha=1.0),
}


def score(sc, tcfg):
    maps, gt = [], {}
    for f in range(sc.frames):
        pm, g = render(sc, f)
        maps.append(pm)
        gt[f] = g
    res = run_sequence(maps, PipelineConfig(tracker=tcfg))
    pred = {r.frame: [lane_polyline(ln) for ln in (r.left, r.right) if ln] for r in res}
    return accuracy(gt, pred, [0.5]).at(0.5)


scenes = [jittered_scenario(frames=40, jitter=j, seed=s) for j in (6.0, 8.0) for s in range(3)]
print(f"{'variant':12s} " + " ".join(f"scene{i}" for i in range(len(scenes))) + "   mean")
for name, tcfg in VARIANTS.items():
    accs = [score(sc, tcfg) for sc in scenes]
    print(f"{name:12s} " + " ".join(f"{a:6.3f}" for a in accs) + f"  {sum(accs) / len(accs):.3f}")
