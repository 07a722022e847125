"""Cross-frame lane tracking.

Each stored lane carries an exponentially weighted moving average of its
per-frame weights (no bias correction, so a new lane starts at
``alpha * omega``).  Detections are associated to stored lanes by the RMS
horizontal distance between the two lines, gated at ``match_k`` lane
standard deviations.  Matched lanes have their Hesse parameters blended in
proportion to ``omega/sigma`` of the detection and ``Omega/sigma`` of the
stored lane.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .lane_fitter import DetectedLane, LineFit, align_theta, canonical_hesse, from_hesse

STATE_VERSION = 1


@dataclass(frozen=True)
class TrackerConfig:
    alpha: float = 0.5
    psi_active: float = 2.0
    psi_nonactive: float = 1.0
    match_k: float = 2.0
    # None -> 0.02 * psi_active
    prune_weight: float | None = None
    horizon_frac: float = 0.35
    merge_enabled: bool = True

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not self.psi_active >= self.psi_nonactive > 0:
            raise ValueError("need psi_active >= psi_nonactive > 0")
        if self.match_k < 0:
            raise ValueError("match_k must be >= 0")
        if self.prune_weight is not None and self.prune_weight <= 0:
            raise ValueError("prune_weight must be > 0")
        if not 0 <= self.horizon_frac < 1:
            raise ValueError("horizon_frac must be in [0, 1)")

    @property
    def prune(self) -> float:
        return 0.02 * self.psi_active if self.prune_weight is None else self.prune_weight


@dataclass
class TrackedLane:
    id: int
    r: float
    theta: float
    sigma: float
    omega_ewma: float
    last_seen: int
    active: bool
    y_span: tuple[float, float]

    @property
    def line(self) -> tuple[float, float]:
        return from_hesse(self.r, self.theta)


@dataclass(frozen=True)
class FrameResult:
    frame: int
    left: TrackedLane | None
    right: TrackedLane | None
    all_lanes: list[TrackedLane] = field(default_factory=list)


# -- pure helpers ----------------------------------------------------------

def _mb(lane) -> tuple[float, float]:
    if isinstance(lane, LineFit):
        return lane.m, lane.b
    if isinstance(lane, DetectedLane):
        return lane.fit.m, lane.fit.b
    if isinstance(lane, TrackedLane):
        return lane.line
    m, b = lane
    return float(m), float(b)


def line_distance(a, b, y_range) -> float:
    """RMS horizontal gap between two lines ``x = m*y + b`` over ``[y0, y1]``.

    Closed form of ``sqrt(1/(y1-y0) * integral (dm*y + db)**2 dy)``.
    """
    y0, y1 = float(y_range[0]), float(y_range[1])
    if not y1 > y0:
        raise ValueError(f"empty y range ({y0}, {y1})")
    ma, ba = _mb(a)
    mb, bb = _mb(b)
    dm = ma - mb
    db = ba - bb
    sq = dm * dm * (y1 * y1 + y1 * y0 + y0 * y0) / 3.0 + dm * db * (y1 + y0) + db * db
    return math.sqrt(max(sq, 0.0))


def frame_weight(lane: DetectedLane, active: bool, cfg: TrackerConfig) -> float:
    psi = cfg.psi_active if active else cfg.psi_nonactive
    return psi * lane.c_f * lane.n_f


def update_weight(omega_f: float, prev: float | None, alpha: float) -> float:
    """One EWMA step; ``prev=None`` is a lane seen for the first time."""
    return alpha * omega_f + (1.0 - alpha) * (0.0 if prev is None else prev)


def merge_share(omega_f, sigma_f, omega_prev, sigma_prev) -> float:
    """Share of the merged parameters taken from the current detection."""
    num = omega_f * sigma_prev
    return num / (num + omega_prev * sigma_f)


def merge(r_f, theta_f, sigma_f, omega_f, r_prev, theta_prev, sigma_prev, omega_prev):
    """Blend detected and stored Hesse parameters. Returns canonical ``(r, theta, sigma, zeta)``."""
    r_f, theta_f = align_theta(r_f, theta_f, theta_prev)
    z = merge_share(omega_f, sigma_f, omega_prev, sigma_prev)
    # prev + z*(new - prev): same convex blend, exact when new == prev
    r = r_prev + z * (r_f - r_prev)
    th = theta_prev + z * (theta_f - theta_prev)
    s = sigma_prev + z * (sigma_f - sigma_prev)
    r, th = canonical_hesse(r, th)
    return r, th, s, z


# -- tracker ---------------------------------------------------------------

class Tracker:
    """Stateful tracker for one stream; call :meth:`step` once per frame, in order."""

    def __init__(self, width: int, height: int, cfg: TrackerConfig | None = None):
        self.width = int(width)
        self.height = int(height)
        self.cfg = cfg or TrackerConfig()
        self.lanes: list[TrackedLane] = []
        self.next_id = 0

    # geometry
    def bottom_x(self, lane) -> float:
        m, b = _mb(lane)
        return m * (self.height - 1) + b

    def is_left(self, lane) -> bool:
        # crossings outside [0, W) fall on the side of the nearer edge, which
        # the half-width comparison already gives
        return self.bottom_x(lane) < self.width / 2.0

    def distance_range(self, span_a, span_b) -> tuple[float, float]:
        lo = max(span_a[0], span_b[0])
        hi = min(span_a[1], span_b[1])
        if hi > lo:
            return lo, hi
        return self.cfg.horizon_frac * self.height, self.height - 1.0

    def distance(self, det: DetectedLane, lane: TrackedLane) -> float:
        return line_distance(det, lane, self.distance_range(det.fit.y_span, lane.y_span))

    def classify_active(self, detections) -> list[bool]:
        """Per side, flag the detection whose bottom crossing is nearest the image centre."""
        centre = self.width / 2.0
        flags = [False] * len(detections)
        for want_left in (True, False):
            best, best_gap = None, math.inf
            for i, d in enumerate(detections):
                if self.is_left(d) != want_left:
                    continue
                gap = abs(self.bottom_x(d) - centre)
                if gap < best_gap:
                    best, best_gap = i, gap
            if best is not None:
                flags[best] = True
        return flags

    def associate(self, detections) -> dict[int, int]:
        """Greedy one-to-one matching by ascending distance. Returns det index -> lane index."""
        k = self.cfg.match_k
        cands = []
        for i, d in enumerate(detections):
            for j, lane in enumerate(self.lanes):
                dist = self.distance(d, lane)
                if dist <= k * max(d.sigma, lane.sigma):
                    cands.append((dist, i, lane.id, j))
        cands.sort()
        pairs: dict[int, int] = {}
        used = set()
        for _, i, _, j in cands:
            if i in pairs or j in used:
                continue
            pairs[i] = j
            used.add(j)
        return pairs

    def match(self, det: DetectedLane) -> TrackedLane | None:
        pairs = self.associate([det])
        return self.lanes[pairs[0]] if pairs else None

    def select(self) -> tuple[TrackedLane | None, TrackedLane | None]:
        left = right = None
        for lane in self.lanes:
            if self.is_left(lane):
                if left is None or _beats(lane, left):
                    left = lane
            elif right is None or _beats(lane, right):
                right = lane
        return left, right

    def step(self, frame: int, detections) -> FrameResult:
        cfg = self.cfg
        a = cfg.alpha
        detections = list(detections)
        flags = self.classify_active(detections)
        pairs = self.associate(detections)
        matched = set(pairs.values())

        for j, lane in enumerate(self.lanes):
            if j not in matched:
                lane.omega_ewma = (1.0 - a) * lane.omega_ewma

        new_lanes = []
        for i, d in enumerate(detections):
            w = frame_weight(d, flags[i], cfg)
            if i in pairs:
                lane = self.lanes[pairs[i]]
                if cfg.merge_enabled:
                    lane.r, lane.theta, lane.sigma, _ = merge(
                        d.fit.r, d.fit.theta, d.sigma, w,
                        lane.r, lane.theta, lane.sigma, lane.omega_ewma)
                else:
                    lane.r, lane.theta, lane.sigma = d.fit.r, d.fit.theta, d.sigma
                lane.omega_ewma = update_weight(w, lane.omega_ewma, a)
                lane.last_seen = frame
                lane.active = flags[i]
                lane.y_span = d.fit.y_span
            else:
                new_lanes.append(TrackedLane(
                    id=self.next_id, r=d.fit.r, theta=d.fit.theta, sigma=d.sigma,
                    omega_ewma=update_weight(w, None, a), last_seen=frame,
                    active=flags[i], y_span=d.fit.y_span))
                self.next_id += 1

        self.lanes = [ln for ln in self.lanes + new_lanes if ln.omega_ewma >= cfg.prune]
        left, right = self.select()
        snapshot = {ln.id: replace(ln) for ln in self.lanes}
        return FrameResult(
            frame,
            snapshot[left.id] if left is not None else None,
            snapshot[right.id] if right is not None else None,
            list(snapshot.values()),
        )

    # checkpointing
    def to_dict(self) -> dict:
        return {
            "version": STATE_VERSION,
            "width": self.width,
            "height": self.height,
            "config": asdict(self.cfg),
            "next_id": self.next_id,
            "lanes": [{**asdict(ln), "y_span": list(ln.y_span)} for ln in self.lanes],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Tracker":
        if doc.get("version") != STATE_VERSION:
            raise ValueError(f"unsupported tracker state version {doc.get('version')!r}")
        t = cls(doc["width"], doc["height"], TrackerConfig(**doc["config"]))
        t.next_id = int(doc["next_id"])
        names = {f.name for f in fields(TrackedLane)}
        for rec in doc["lanes"]:
            rec = {k: v for k, v in rec.items() if k in names}
            rec["y_span"] = tuple(rec["y_span"])
            t.lanes.append(TrackedLane(**rec))
        return t

    def save_state(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)

    @classmethod
    def load_state(cls, path) -> "Tracker":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _beats(a: TrackedLane, b: TrackedLane) -> bool:
    if a.omega_ewma != b.omega_ewma:
        return a.omega_ewma > b.omega_ewma
    return a.id < b.id


def lane_polyline(lane: TrackedLane, row_step: int = 10) -> np.ndarray:
    """Sample a tracked lane as ``(x, y)`` rows every ``row_step`` rows over its span."""
    m, b = lane.line
    y0, y1 = lane.y_span
    ys = np.arange(y1, y0, -row_step, dtype=np.float64)[::-1]
    if ys.size == 0 or ys[0] != y0:
        ys = np.concatenate([[y0], ys])
    return np.column_stack([m * ys + b, ys])
