"""Weighted straight-line fits and Hesse normal form.

Lanes are near-vertical in image space, so lines are parametrised as
``x = m*y + b`` (x regressed on y).  The Hesse form ``x cos(t) + y sin(t) = r``
is canonical with ``r >= 0`` and ``t`` in ``[0, 2*pi)``; when ``r == 0`` the
angle is restricted to ``[0, pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class FitError(ValueError):
    """Degenerate design matrix (e.g. all points on one row)."""


@dataclass(frozen=True)
class LineFit:
    m: float
    b: float
    r: float
    theta: float
    y_span: tuple[float, float]

    def x_at(self, y):
        return self.m * np.asarray(y, dtype=np.float64) + self.b


@dataclass(frozen=True)
class LanePoint:
    x: float
    y: float
    c: float
    sigma: float


@dataclass(frozen=True, eq=False)
class DetectedLane:
    """One frame's fitted lane for one channel.

    Point data are kept as parallel arrays; ``points`` builds
    :class:`LanePoint` records on demand.
    """

    channel: int
    x: np.ndarray
    y: np.ndarray
    c: np.ndarray
    sigmas: np.ndarray
    fit: LineFit
    c_f: float
    n_f: int
    sigma: float

    @property
    def points(self) -> list[LanePoint]:
        return [LanePoint(*map(float, t)) for t in zip(self.x, self.y, self.c, self.sigmas)]


def canonical_hesse(r: float, theta: float) -> tuple[float, float]:
    if r < 0:
        r, theta = -r, theta + math.pi
    theta = math.fmod(theta, TWO_PI)
    if theta < 0:
        theta += TWO_PI
    if theta >= TWO_PI:
        theta = 0.0
    if r == 0 and theta >= math.pi:
        theta -= math.pi
    return r, theta


def to_hesse(m: float, b: float) -> tuple[float, float]:
    n = math.hypot(1.0, m)
    # x - m*y = b  ->  unit normal (1, -m)/n
    return canonical_hesse(b / n, math.atan2(-m, 1.0))


def from_hesse(r: float, theta: float) -> tuple[float, float]:
    """Inverse of :func:`to_hesse`. Horizontal lines have no ``x = m*y + b`` form."""
    c = math.cos(theta)
    if abs(c) < 1e-12:
        raise FitError("horizontal line cannot be written as x = m*y + b")
    return -math.tan(theta), r / c


def align_theta(r: float, theta: float, ref_theta: float) -> tuple[float, float]:
    """Re-express ``(r, theta)`` on the branch whose angle lies within pi/2 of ``ref_theta``.

    Equivalent forms are ``(r*(-1)**k, theta + k*pi)``; the result may carry a
    negative ``r`` and is only meant for local arithmetic.
    """
    k = math.floor((ref_theta - theta) / math.pi + 0.5)
    theta = theta + k * math.pi
    if k % 2:
        r = -r
    return r, theta


def fit_weighted(x, y, c, sigma) -> LineFit:
    """Weighted least squares fit of ``x = m*y + b`` with weights ``c / sigma**2``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(c, dtype=np.float64) / np.asarray(sigma, dtype=np.float64) ** 2
    if x.size < 2:
        raise FitError(f"need at least 2 points, got {x.size}")
    if not np.all(w > 0):
        raise FitError("weights must be positive")
    sw = w.sum()
    ybar = (w * y).sum() / sw
    xbar = (w * x).sum() / sw
    dy = y - ybar
    syy = (w * dy * dy).sum()
    spread = np.ptp(y)
    if spread == 0 or syy <= 1e-12 * sw * spread * spread:
        raise FitError("points do not span more than one row")
    m = float((w * dy * (x - xbar)).sum() / syy)
    b = float(xbar - m * ybar)
    r, theta = to_hesse(m, b)
    return LineFit(m, b, r, theta, (float(y.min()), float(y.max())))


def rms(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("RMS of an empty sequence")
    return float(np.sqrt(np.mean(v * v)))
