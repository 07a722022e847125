"""Positional standard deviation of lane points from the confidence profile.

Along the lane normal the confidence is modelled as a Gaussian centred on
the detected point, so it falls to ``exp(-1/2) * c_d`` one standard
deviation away.  Each side is walked until the profile drops to that level;
the two crossing distances are averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lane_fitter import rms
from .probmap_io import ProbabilityMap, sample_many

EDGE_RATIO = math.exp(-0.5)


@dataclass(frozen=True)
class VarianceConfig:
    sigma_step: float = 0.25
    # None -> 5% of the map width
    sigma_cap: float | None = None

    def __post_init__(self):
        if self.sigma_step <= 0:
            raise ValueError("sigma_step must be > 0")
        if self.sigma_cap is not None and self.sigma_cap <= 0:
            raise ValueError("sigma_cap must be > 0")

    def cap_for(self, width: int) -> float:
        if self.sigma_cap is not None:
            return float(self.sigma_cap)
        return 0.05 * width


def _side_distances(pm, channel, x, y, c, nx, ny, sign, step, cap, chunk=32):
    """Crossing distance per point on one side; nan where the raster edge blocks.

    Walks in chunks of ``chunk`` steps and only carries unresolved points on.
    """
    k_total = int(math.ceil(cap / step))
    thr = EDGE_RATIO * c
    out = np.full(x.size, cap)
    todo = np.arange(x.size)
    s_last = c.copy()
    k0 = 0
    while todo.size and k0 < k_total:
        k1 = min(k0 + chunk, k_total)
        d = np.arange(k0 + 1, k1 + 1) * step
        px = x[todo, None] + sign * d[None, :] * nx
        py = y[todo, None] + sign * d[None, :] * ny
        ok = (px >= 0) & (px <= pm.width - 1) & (py >= 0) & (py <= pm.height - 1)
        vals = sample_many(pm, channel, np.clip(px, 0, pm.width - 1),
                           np.clip(py, 0, pm.height - 1))
        n = k1 - k0
        below = (vals <= thr[todo, None]) & ok
        first_below = np.where(below.any(axis=1), below.argmax(axis=1), n)
        first_out = np.where((~ok).any(axis=1), (~ok).argmax(axis=1), n)
        crossed = (first_below < n) & (first_below <= first_out)
        if crossed.any():
            rows = todo[crossed]
            j = first_below[crossed]
            vc = vals[crossed]
            s_cur = vc[np.arange(j.size), j]
            s_prev = np.where(j > 0, vc[np.arange(j.size), np.maximum(j - 1, 0)], s_last[rows])
            frac = (s_prev - thr[rows]) / (s_prev - s_cur)
            out[rows] = np.minimum((k0 + j) * step + step * frac, cap)
        blocked = (first_out < n) & ~crossed
        out[todo[blocked]] = np.nan
        going = ~crossed & ~blocked
        s_last[todo[going]] = vals[going, -1]
        todo = todo[going]
        k0 = k1
    return out


def estimate_sigmas(pm: ProbabilityMap, channel: int, x, y, c, normal,
                    cfg: VarianceConfig | None = None) -> np.ndarray:
    """Per-point sigma for arrays of points sharing one unit normal."""
    cfg = cfg or VarianceConfig()
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    if np.any(c <= 0):
        raise ValueError("point confidence must be > 0")
    nx, ny = normal
    cap = cfg.cap_for(pm.width)
    plus = _side_distances(pm, channel, x, y, c, nx, ny, 1.0, cfg.sigma_step, cap)
    minus = _side_distances(pm, channel, x, y, c, nx, ny, -1.0, cfg.sigma_step, cap)
    both = np.stack([plus, minus])
    valid = ~np.isnan(both)
    nvalid = valid.sum(axis=0)
    total = np.where(valid, both, 0.0).sum(axis=0)
    return np.where(nvalid > 0, total / np.maximum(nvalid, 1), cap)


def estimate_point_sigma(pm: ProbabilityMap, channel: int, x: float, y: float, c: float,
                         normal, cfg: VarianceConfig | None = None) -> float:
    return float(estimate_sigmas(pm, channel, [x], [y], [c], normal, cfg)[0])


def lane_sigma(sigmas) -> float:
    """RMS of the per-point standard deviations."""
    if len(sigmas) == 0:
        raise ValueError("lane_sigma needs at least one point")
    return rms(sigmas)
