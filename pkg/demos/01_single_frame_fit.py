"""Fit one lane from a synthetic probability map.

Render a slanted Gaussian marking, pull lane points out of it, estimate the
per-point positional spread and fit a weighted line.
"""

import numpy as np

from lanetrack import detect_lane, render
from lanetrack.synth import straight_scenario

# one lane, 4 px wide, a little noise
sc = straight_scenario(frames=1, sigma=4.0, bottoms=(220.0,), noise=0.05, seed=7)
pm, gt = render(sc, 0)
print("map shape (channels, height, width):", pm.values.shape)

lane = detect_lane(pm, channel=0)
print(f"{lane.n_f} points, rms confidence {lane.c_f:.3f}")
print(f"lane sigma {lane.sigma:.2f} px (rendered with 4.0)")

# fitted line x = m*y + b against the scripted one
m_true, b_true = sc.lanes[0].line(0)
print(f"fit   m={lane.fit.m:+.4f} b={lane.fit.b:8.2f}")
print(f"truth m={m_true:+.4f} b={b_true:8.2f}")

# Hesse form is what the tracker stores and blends
print(f"hesse r={lane.fit.r:.2f} theta={lane.fit.theta:.4f} rad")

# the bottom-row crossing is what decides left versus right
print("x at bottom row:", round(lane.fit.x_at(287), 2), "truth", gt[0][-1, 0])

# the least certain points get the least weight
worst = np.argsort(lane.sigmas)[-3:]
for i in worst:
    print(f"  y={lane.y[i]:6.1f} c={lane.c[i]:.2f} sigma={lane.sigmas[i]:.2f}")
