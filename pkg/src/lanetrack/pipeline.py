"""Per-frame processing: extraction, variance, weighted fit, tracking."""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .lane_fitter import DetectedLane, FitError, fit_weighted, rms
from .point_extractor import ExtractionConfig, extract_points, unit_normal
from .probmap_io import ProbabilityMap
from .tracker import FrameResult, Tracker, TrackerConfig
from .variance_estimator import VarianceConfig, estimate_sigmas, lane_sigma

STAGES = ("extraction", "variance", "fit", "track")


@dataclass(frozen=True)
class PipelineConfig:
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    variance: VarianceConfig = field(default_factory=VarianceConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    min_points: int = 3


class _Timer:
    def __init__(self, sink):
        self.sink = sink

    def __call__(self, stage):
        return _Stage(self.sink, stage)


class _Stage:
    def __init__(self, sink, stage):
        self.sink, self.stage = sink, stage

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        if self.sink is not None:
            self.sink[self.stage] += time.perf_counter() - self.t0


def detect_lane(pm: ProbabilityMap, channel: int, cfg: PipelineConfig | None = None,
                timings=None) -> DetectedLane | None:
    """Fit one channel. Returns None when too few usable points remain."""
    cfg = cfg or PipelineConfig()
    clock = _Timer(timings)
    with clock("extraction"):
        raw = extract_points(pm, channel, cfg.extraction)
        if len(raw) < max(cfg.min_points, 2):
            return None
        try:
            guide = fit_weighted(raw.x, raw.y, raw.c, np.ones_like(raw.c))
        except FitError:
            return None
    with clock("variance"):
        sig = estimate_sigmas(pm, channel, raw.x, raw.y, raw.c, unit_normal(guide.m), cfg.variance)
    with clock("fit"):
        try:
            fit = fit_weighted(raw.x, raw.y, raw.c, sig)
        except FitError:
            return None
        lane = DetectedLane(
            channel=channel, x=raw.x, y=raw.y, c=raw.c, sigmas=sig, fit=fit,
            c_f=rms(raw.c), n_f=len(raw), sigma=lane_sigma(sig))
    return lane


def detect_frame(pm: ProbabilityMap, cfg: PipelineConfig | None = None,
                 timings=None) -> list[DetectedLane]:
    lanes = []
    for ch in range(pm.channels):
        d = detect_lane(pm, ch, cfg, timings)
        if d is not None:
            lanes.append(d)
    return lanes


class LanePipeline:
    """Detection plus tracking over an ordered stream of maps."""

    def __init__(self, width: int, height: int, cfg: PipelineConfig | None = None):
        self.cfg = cfg or PipelineConfig()
        self.tracker = Tracker(width, height, self.cfg.tracker)
        self.timings = defaultdict(float)
        self.frame = 0

    def process(self, pm: ProbabilityMap) -> FrameResult:
        if (pm.width, pm.height) != (self.tracker.width, self.tracker.height):
            raise ValueError(
                f"map size {pm.width}x{pm.height} differs from stream size "
                f"{self.tracker.width}x{self.tracker.height}")
        dets = detect_frame(pm, self.cfg, self.timings)
        with _Timer(self.timings)("track"):
            res = self.tracker.step(self.frame, dets)
        self.frame += 1
        return res


def run_sequence(maps, cfg: PipelineConfig | None = None) -> list[FrameResult]:
    maps = list(maps)
    if not maps:
        return []
    pipe = LanePipeline(maps[0].width, maps[0].height, cfg)
    return [pipe.process(m) for m in maps]
