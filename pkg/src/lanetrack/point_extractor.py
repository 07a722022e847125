"""Candidate lane points from one probability-map channel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lane_fitter import FitError, fit_weighted
from .probmap_io import ProbabilityMap, sample_many


@dataclass(frozen=True)
class ExtractionConfig:
    row_stride: int = 4
    min_confidence: float = 0.3
    # None -> 15 px at 800 px map width, scaled with width
    normal_halfwidth: float | None = None
    horizon_frac: float = 0.35
    refine_step: float = 0.5

    def __post_init__(self):
        if self.row_stride < 1:
            raise ValueError("row_stride must be >= 1")
        if not 0 < self.min_confidence < 1:
            raise ValueError("min_confidence must be in (0, 1)")
        if not 0 <= self.horizon_frac < 1:
            raise ValueError("horizon_frac must be in [0, 1)")
        if self.normal_halfwidth is not None and self.normal_halfwidth < 0:
            raise ValueError("normal_halfwidth must be >= 0")
        if self.refine_step <= 0:
            raise ValueError("refine_step must be > 0")

    def halfwidth_for(self, width: int) -> float:
        if self.normal_halfwidth is not None:
            return float(self.normal_halfwidth)
        return 15.0 * width / 800.0


@dataclass(frozen=True, eq=False)
class RawLanePoints:
    """Extracted points of one channel, ordered by increasing y."""

    channel: int
    x: np.ndarray
    y: np.ndarray
    c: np.ndarray

    def __len__(self):
        return int(self.x.size)


def scan_rows(height: int, cfg: ExtractionConfig) -> np.ndarray:
    """Rows visited by the extractor, bottom first."""
    top = math.ceil(cfg.horizon_frac * height)
    return np.arange(height - 1, top - 1, -cfg.row_stride)


def unit_normal(m: float) -> tuple[float, float]:
    """Unit normal of ``x = m*y + b``."""
    n = math.hypot(1.0, m)
    return 1.0 / n, -m / n


def row_argmax(pm: ProbabilityMap, channel: int, cfg: ExtractionConfig):
    rows = scan_rows(pm.height, cfg)
    block = pm.values[channel, rows]
    cols = block.argmax(axis=1)
    conf = block[np.arange(rows.size), cols].astype(np.float64)
    keep = conf >= cfg.min_confidence
    order = np.argsort(rows[keep], kind="stable")
    return (cols[keep][order].astype(np.float64),
            rows[keep][order].astype(np.float64),
            conf[keep][order])


def refine_along_normal(pm, channel, x, y, c, m, halfwidth, step):
    """Move each point to the best sample within +-halfwidth along the normal.

    Offset 0 is always a candidate and wins ties, so confidence never drops.
    """
    nx, ny = unit_normal(m)
    k = int(math.floor(halfwidth / step))
    offs = np.arange(-k, k + 1) * step
    # nearest-to-zero first so argmax ties resolve toward the original point
    offs = offs[np.argsort(np.abs(offs), kind="stable")]
    px = x[:, None] + offs[None, :] * nx
    py = y[:, None] + offs[None, :] * ny
    ok = (px >= 0) & (px <= pm.width - 1) & (py >= 0) & (py <= pm.height - 1)
    vals = np.where(ok, sample_many(pm, channel, np.clip(px, 0, pm.width - 1),
                                    np.clip(py, 0, pm.height - 1)), -1.0)
    best = vals.argmax(axis=1)
    idx = np.arange(x.size)
    nc = vals[idx, best]
    # the stored grid value at offset 0 is authoritative
    better = nc > c
    return (np.where(better, px[idx, best], x),
            np.where(better, py[idx, best], y),
            np.where(better, nc, c))


def extract_points(pm: ProbabilityMap, channel: int,
                   cfg: ExtractionConfig | None = None) -> RawLanePoints:
    cfg = cfg or ExtractionConfig()
    if not 0 <= channel < pm.channels:
        raise IndexError(f"channel {channel} out of range")
    x, y, c = row_argmax(pm, channel, cfg)
    if x.size >= 2:
        try:
            fit = fit_weighted(x, y, c, np.ones_like(c))
        except FitError:
            fit = None
        if fit is not None:
            x, y, c = refine_along_normal(pm, channel, x, y, c, fit.m,
                                          cfg.halfwidth_for(pm.width), cfg.refine_step)
            order = np.argsort(y, kind="stable")
            x, y, c = x[order], y[order], c[order]
            keep = np.ones(y.size, dtype=bool)
            keep[1:] = np.diff(y) > 0
            x, y, c = x[keep], y[keep], c[keep]
    return RawLanePoints(channel, x, y, c)
