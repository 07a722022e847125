"""Synthetic probability-map sequences with known ground truth.

Each scripted lane is a straight line ``x = m*y + b`` whose parameters may
change at keyframes.  Its cross-section is a Gaussian in the perpendicular
distance to the centreline, scaled by the lane's peak confidence, so a
vertical lane has a per-row profile ``peak * exp(-(x - xc)**2 / (2 sigma**2))``.
Overlapping lanes in a channel combine by per-pixel max.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .evaluator import write_lanes
from .probmap_io import ProbabilityMap, save_map


@dataclass(frozen=True)
class ScriptedLane:
    # (frame, m, b) keyframes; parameters hold until the next keyframe
    path: tuple[tuple[int, float, float], ...]
    sigma: float = 3.0
    peak: float = 0.9
    channel: int = 0
    appear: int = 0
    disappear: int | None = None
    ground_truth: bool = True
    rendered: bool = True

    def __post_init__(self):
        path = tuple(sorted((int(f), float(m), float(b)) for f, m, b in self.path))
        if not path:
            raise ValueError("a scripted lane needs at least one keyframe")
        object.__setattr__(self, "path", path)
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not 0 < self.peak <= 1:
            raise ValueError("peak must be in (0, 1]")

    def visible(self, frame: int) -> bool:
        return frame >= self.appear and (self.disappear is None or frame < self.disappear)

    def line(self, frame: int) -> tuple[float, float]:
        m, b = self.path[0][1:]
        for f, mk, bk in self.path:
            if f <= frame:
                m, b = mk, bk
        return m, b


@dataclass(frozen=True)
class Scenario:
    frames: int
    canvas: tuple[int, int] = (800, 288)
    lanes: tuple[ScriptedLane, ...] = field(default_factory=tuple)
    noise: float = 0.0
    dropout: float = 0.0
    seed: int = 0
    horizon: float = 0.35

    def __post_init__(self):
        object.__setattr__(self, "canvas", tuple(int(v) for v in self.canvas))
        object.__setattr__(self, "lanes", tuple(
            ln if isinstance(ln, ScriptedLane) else ScriptedLane(**ln) for ln in self.lanes))
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if not 0 <= self.dropout <= 1:
            raise ValueError("dropout must be in [0, 1]")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")

    @property
    def channels(self) -> int:
        return max((ln.channel for ln in self.lanes), default=0) + 1

    @property
    def top_row(self) -> int:
        return math.ceil(self.horizon * self.canvas[1])


def render(sc: Scenario, frame: int) -> tuple[ProbabilityMap, list[np.ndarray]]:
    """Map and ground-truth polylines for one frame; deterministic in ``(seed, frame)``."""
    if not 0 <= frame < sc.frames:
        raise IndexError(f"frame {frame} outside [0, {sc.frames})")
    W, H = sc.canvas
    rng = np.random.default_rng([sc.seed, frame])
    vals = np.zeros((sc.channels, H, W))
    top = sc.top_row
    ys = np.arange(top, H, dtype=np.float64)
    xs = np.arange(W, dtype=np.float64)
    gts = []
    for lane in sc.lanes:
        if not lane.visible(frame):
            continue
        m, b = lane.line(frame)
        if lane.ground_truth:
            gts.append(centerline(m, b, top, H - 1))
        if not lane.rendered:
            continue
        d = (xs[None, :] - (m * ys[:, None] + b)) / math.hypot(1.0, m)
        prof = lane.peak * np.exp(-0.5 * (d / lane.sigma) ** 2)
        if sc.dropout > 0:
            prof[rng.random(ys.size) < sc.dropout] = 0.0
        np.maximum(vals[lane.channel, top:], prof, out=vals[lane.channel, top:])
    if sc.noise > 0:
        vals += rng.uniform(-sc.noise, sc.noise, size=vals.shape)
        np.clip(vals, 0.0, 1.0, out=vals)
    return ProbabilityMap(vals.astype(np.float32)), gts


def centerline(m: float, b: float, y0: float, y1: float, step: int = 10) -> np.ndarray:
    ys = np.arange(y1, y0, -step, dtype=np.float64)[::-1]
    if ys.size == 0 or ys[0] != y0:
        ys = np.concatenate([[float(y0)], ys])
    return np.column_stack([m * ys + b, ys])


def write_sequence(sc: Scenario, outdir) -> None:
    """``<index>.lpm`` maps and ``<index>.lines.txt`` ground truth, five-digit indices."""
    os.makedirs(outdir, exist_ok=True)
    for f in range(sc.frames):
        pm, gts = render(sc, f)
        save_map(pm, os.path.join(outdir, f"{f:05d}.lpm"))
        write_lanes(os.path.join(outdir, f"{f:05d}.lines.txt"), gts)


# -- scenario files --------------------------------------------------------

def scenario_to_dict(sc: Scenario) -> dict:
    d = asdict(sc)
    d["canvas"] = list(sc.canvas)
    d["lanes"] = []
    for ln in sc.lanes:
        rec = asdict(ln)
        rec["path"] = [list(k) for k in ln.path]
        d["lanes"].append(rec)
    return d


def scenario_from_dict(doc: dict) -> Scenario:
    known = {"frames", "canvas", "lanes", "noise", "dropout", "seed", "horizon"}
    extra = set(doc) - known
    if extra:
        raise ValueError(f"unknown scenario keys: {sorted(extra)}")
    lane_keys = set(ScriptedLane.__dataclass_fields__)
    lanes = []
    for rec in doc.get("lanes", []):
        bad = set(rec) - lane_keys
        if bad:
            raise ValueError(f"unknown lane keys: {sorted(bad)}")
        lanes.append(ScriptedLane(**rec))
    return Scenario(**{**doc, "lanes": tuple(lanes)})


def load_scenario(path) -> Scenario:
    with open(path) as f:
        return scenario_from_dict(yaml.safe_load(f) or {})


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(scenario_to_dict(sc), f, sort_keys=False)


# -- canned scenarios ------------------------------------------------------

VANISH = (400.0, 90.0)


def lane_through(x_bottom: float, height: int = 288, vanish=VANISH) -> tuple[float, float]:
    """(m, b) of the line from the vanishing point to ``x_bottom`` on the last row."""
    vx, vy = vanish
    m = (x_bottom - vx) / (height - 1 - vy)
    return m, vx - m * vy


def straight_scenario(frames=10, sigma=3.0, peak=0.9, noise=0.0, dropout=0.0, seed=0,
                      bottoms=(200.0, 600.0)) -> Scenario:
    lanes = tuple(
        ScriptedLane(path=((0, *lane_through(xb)),), sigma=sigma, peak=peak, channel=i)
        for i, xb in enumerate(bottoms))
    return Scenario(frames, (800, 288), lanes, noise, dropout, seed)


def lane_change_scenario(frames=30, switch=15, shift=150.0, ghost_peak=0.5, seed=0,
                         noise=0.0) -> Scenario:
    """Ego markings jump ``shift`` px right at ``switch``; the old left marking lingers dimmer.

    Channels 0/1 carry the ego pair; channel 2 carries the stale left marking
    after the jump (not ground truth).
    """
    old_l, old_r = 100.0, 550.0
    new_l, new_r = old_l + shift, old_r + shift
    lanes = (
        ScriptedLane(path=((0, *lane_through(old_l)), (switch, *lane_through(new_l))), channel=0),
        ScriptedLane(path=((0, *lane_through(old_r)), (switch, *lane_through(new_r))), channel=1),
        ScriptedLane(path=((0, *lane_through(old_l)),), channel=2, peak=ghost_peak,
                     appear=switch, ground_truth=False),
    )
    return Scenario(frames, (800, 288), lanes, noise, 0.0, seed)


def jittered_scenario(frames=40, jitter=4.0, slope_jitter=0.02, noise=0.1, dropout=0.2,
                      seed=0, bottoms=(200.0, 600.0)) -> Scenario:
    """Fixed true lanes observed through a detector whose output wobbles frame to frame.

    The truth is ground truth only (not drawn); the drawn copy in the same
    channel is offset by ``N(0, jitter)`` px and its slope by ``N(0, slope_jitter)``
    each frame.
    """
    rng = np.random.default_rng(seed)
    lanes = []
    for ch, xb in enumerate(bottoms):
        m, b = lane_through(xb)
        lanes.append(ScriptedLane(path=((0, m, b),), channel=ch, rendered=False))
        keys = []
        for f in range(frames):
            dm = rng.normal(scale=slope_jitter)
            # pivot the slope change about the bottom row so jitter stays local
            keys.append((f, m + dm, b - dm * 287 + rng.normal(scale=jitter)))
        lanes.append(ScriptedLane(path=tuple(keys), channel=ch, ground_truth=False))
    return Scenario(frames, (800, 288), tuple(lanes), noise, dropout, seed)
