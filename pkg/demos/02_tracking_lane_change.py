"""Track the ego lane through a lane change.

At frame 15 the ego markings jump 150 px to the right while the old left
marking stays visible at lower confidence.  The stored lane weights decide
when the output moves over to the new markings.
"""

from lanetrack import LanePipeline, render
from lanetrack.synth import lane_change_scenario

sc = lane_change_scenario(frames=30, switch=15, shift=150.0)
pipe = LanePipeline(*sc.canvas)

print("frame  left_x  right_x  stored lanes (id: weight)")
for f in range(sc.frames):
    pm, _ = render(sc, f)
    res = pipe.process(pm)
    bx = pipe.tracker.bottom_x
    left = f"{bx(res.left):7.1f}" if res.left else "   none"
    right = f"{bx(res.right):7.1f}" if res.right else "   none"
    stored = " ".join(f"{ln.id}:{ln.omega_ewma:.0f}" for ln in res.all_lanes)
    print(f"{f:5d} {left}  {right}  {stored}")

# the ghost lane on the old left marking keeps getting matched, but its
# weight decays toward its lower per-frame weight and the new lane overtakes it
print("stage time totals (ms):", {k: round(1e3 * v, 2) for k, v in pipe.timings.items()})
