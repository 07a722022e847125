"""Probability-map rasters: loading, saving and sub-pixel sampling.

Two on-disk formats are understood:

* ``LPM1`` binary raster (little-endian): the 4 magic bytes ``b"LPM1"``,
  then ``u32 width``, ``u32 height``, ``u32 channels``, followed by
  ``width * height * channels`` float32 confidences, channel-major then
  row-major.  Lossless; this is the authoritative format.
* binary PGM (``P5``), one file per channel, maxval 255.  Values are scaled
  to [0, 1] by division by 255.
"""

from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAGIC = b"LPM1"
HEADER = struct.Struct("<4sIII")


class FormatError(ValueError):
    """Raised for malformed map files. ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int | None = None, path=None):
        self.offset = offset
        self.path = path
        where = f" at byte offset {offset}" if offset is not None else ""
        src = f"{path}: " if path is not None else ""
        super().__init__(f"{src}{message}{where}")


class RangeError(ValueError):
    """Raised when sampling outside the raster."""


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Per-channel confidence raster of one frame.

    ``values`` has shape ``(channels, height, width)``; it is copied to
    float32 and frozen on construction.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float32, copy=True)
        if v.ndim == 2:
            v = v[None]
        if v.ndim != 3:
            raise ValueError(f"expected (channels, height, width), got shape {v.shape}")
        c, h, w = v.shape
        if c < 1 or h < 2 or w < 2:
            raise ValueError(f"map must have >= 1 channel and be at least 2x2, got {v.shape}")
        bad = ~((v >= 0.0) & (v <= 1.0))
        if bad.any():
            idx = int(np.flatnonzero(bad.ravel())[0])
            raise ValueError(f"confidence {v.ravel()[idx]!r} outside [0, 1] at flat index {idx}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def __eq__(self, other):
        if not isinstance(other, ProbabilityMap):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    __hash__ = None


# -- binary raster ---------------------------------------------------------

def save_map(m: ProbabilityMap, path) -> None:
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, m.width, m.height, m.channels))
        f.write(np.ascontiguousarray(m.values, dtype="<f4").tobytes())


def _parse_lpm(data: bytes, path) -> ProbabilityMap:
    if len(data) < HEADER.size:
        raise FormatError("truncated header", len(data), path)
    magic, w, h, c = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0, path)
    if w < 2 or h < 2:
        raise FormatError(f"raster must be at least 2x2, got {w}x{h}", 4, path)
    if c < 1:
        raise FormatError("channel count must be >= 1", 12, path)
    expected = w * h * c * 4
    body = len(data) - HEADER.size
    if body != expected:
        # offset of the first missing or surplus byte
        raise FormatError(
            f"size mismatch: header declares {w}x{h}x{c} ({w * h * c} values) "
            f"but body holds {body} bytes",
            HEADER.size + min(body, expected),
            path,
        )
    v = np.frombuffer(data, dtype="<f4", offset=HEADER.size).reshape(c, h, w)
    bad = ~((v >= 0.0) & (v <= 1.0))
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise FormatError(
            f"value {v.ravel()[idx]!r} outside [0, 1]", HEADER.size + 4 * idx, path
        )
    return ProbabilityMap(v)


# -- PGM -------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _parse_pgm(data: bytes, path) -> np.ndarray:
    pos = 0
    fields = []
    for _ in range(4):
        mt = _PGM_TOKEN.match(data, pos)
        if mt is None:
            raise FormatError("truncated PGM header", pos, path)
        fields.append((mt.group(1), mt.start(1)))
        pos = mt.end(1)
    (magic, _), *nums = fields
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (magic {magic!r})", 0, path)
    vals = []
    for tok, off in nums:
        if not tok.isdigit():
            raise FormatError(f"bad PGM header field {tok!r}", off, path)
        vals.append(int(tok))
    w, h, maxval = vals
    if maxval != 255:
        raise FormatError(f"PGM maxval must be 255, got {maxval}", nums[2][1], path)
    if w < 2 or h < 2:
        raise FormatError(f"raster must be at least 2x2, got {w}x{h}", nums[0][1], path)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after PGM header", pos, path)
    pos += 1
    body = len(data) - pos
    if body != w * h:
        raise FormatError(
            f"size mismatch: header declares {w}x{h} but body holds {body} bytes",
            pos + min(body, w * h),
            path,
        )
    return np.frombuffer(data, dtype=np.uint8, offset=pos).reshape(h, w)


def save_pgm(m: ProbabilityMap, channel: int, path) -> None:
    """Write one channel as an 8-bit PGM (lossy: rounds to the nearest 1/255)."""
    plane = np.rint(np.asarray(m.values[channel], dtype=np.float64) * 255.0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (m.width, m.height))
        f.write(plane.tobytes())


def load_pgm_channels(paths: Sequence) -> ProbabilityMap:
    """Stack one PGM per channel into a single map."""
    if not paths:
        raise ValueError("need at least one PGM path")
    planes = []
    for p in paths:
        with open(p, "rb") as f:
            planes.append(_parse_pgm(f.read(), p))
    shapes = {pl.shape for pl in planes}
    if len(shapes) != 1:
        raise FormatError(f"channel rasters differ in size: {sorted(shapes)}", None, paths[0])
    return ProbabilityMap(np.stack(planes).astype(np.float32) / np.float32(255.0))


def load_map(path) -> ProbabilityMap:
    """Load an ``LPM1`` raster or a single-channel PGM, chosen by magic bytes."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] == MAGIC:
        return _parse_lpm(data, path)
    if data[:2] == b"P5":
        return ProbabilityMap(_parse_pgm(data, path).astype(np.float32) / np.float32(255.0))
    raise FormatError(f"unrecognised file type (leading bytes {data[:4]!r})", 0, os.fspath(path))


# -- sampling --------------------------------------------------------------

def sample_many(m: ProbabilityMap, channel: int, xs, ys) -> np.ndarray:
    """Bilinear samples at arrays of in-bounds coordinates (no bounds check)."""
    plane = m.values[channel]
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    x0 = np.minimum(np.floor(xs).astype(np.intp), m.width - 2)
    y0 = np.minimum(np.floor(ys).astype(np.intp), m.height - 2)
    fx = xs - x0
    fy = ys - y0
    # float64 differences of float32 values are exact, so grid points reproduce
    v00 = plane[y0, x0].astype(np.float64)
    v01 = plane[y0, x0 + 1].astype(np.float64)
    v10 = plane[y0 + 1, x0].astype(np.float64)
    v11 = plane[y0 + 1, x0 + 1].astype(np.float64)
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def in_bounds(m: ProbabilityMap, xs, ys) -> np.ndarray:
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    return (xs >= 0) & (xs <= m.width - 1) & (ys >= 0) & (ys <= m.height - 1)


def sample(m: ProbabilityMap, channel: int, x: float, y: float) -> float:
    if not 0 <= channel < m.channels:
        raise RangeError(f"channel {channel} out of range [0, {m.channels})")
    if not (0 <= x <= m.width - 1 and 0 <= y <= m.height - 1):
        raise RangeError(f"({x}, {y}) outside raster {m.width}x{m.height}")
    return float(sample_many(m, channel, x, y))
