"""``lanetrack`` command line: track, eval, synth, bench.

Exit codes: 0 success, 1 usage error, 2 data or format error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import re
import sys
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import yaml

from .evaluator import DEFAULT_THRESHOLDS, accuracy, read_lane_dir, write_lanes
from .pipeline import STAGES, LanePipeline, PipelineConfig, detect_frame
from .point_extractor import ExtractionConfig
from .probmap_io import FormatError, load_map, load_pgm_channels
from .synth import load_scenario, write_sequence
from .tracker import Tracker, TrackerConfig, lane_polyline
from .variance_estimator import VarianceConfig

log = logging.getLogger("lanetrack")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    # tracker
    alpha: float = 0.5
    psi_active: float = 2.0
    psi_nonactive: float = 1.0
    match_k: float = 2.0
    prune_weight: float | None = None
    merge_enabled: bool = True
    # extraction / variance
    horizon_frac: float = 0.35
    row_stride: int = 4
    min_confidence: float = 0.3
    normal_halfwidth: float | None = None
    sigma_step: float = 0.25
    sigma_cap: float | None = None
    min_points: int = 3
    # io
    input: str | None = None
    output: str | None = None
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    seed: int | None = None
    reps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        # validate by building the component configs
        self.pipeline()

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            extraction=ExtractionConfig(self.row_stride, self.min_confidence,
                                        self.normal_halfwidth, self.horizon_frac),
            variance=VarianceConfig(self.sigma_step, self.sigma_cap),
            tracker=TrackerConfig(self.alpha, self.psi_active, self.psi_nonactive, self.match_k,
                                  self.prune_weight, self.horizon_frac, self.merge_enabled),
            min_points=self.min_points,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = list(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


def load_config(path) -> RunConfig:
    with open(path) as f:
        doc = yaml.safe_load(f) or {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a key-value mapping")
    return RunConfig.from_dict(doc)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


# -- frame discovery -------------------------------------------------------

_LPM = re.compile(r"^(\d+)\.lpm$")
_PGM = re.compile(r"^(\d+)(?:_(\d+))?\.pgm$")


def list_frames(directory) -> list[tuple[int, list[str]]]:
    """Ordered ``(index, paths)``; PGM frames may be split ``<index>_<channel>.pgm``."""
    if not os.path.isdir(directory):
        raise DataError(f"{directory}: not a directory")
    frames: dict[int, dict[int, str]] = defaultdict(dict)
    for name in os.listdir(directory):
        path = os.path.join(directory, name)
        if mt := _LPM.match(name):
            frames[int(mt.group(1))][-1] = path
        elif mt := _PGM.match(name):
            frames[int(mt.group(1))][int(mt.group(2) or 0)] = path
    out = []
    for idx in sorted(frames):
        parts = frames[idx]
        if -1 in parts:
            if len(parts) > 1:
                raise DataError(f"frame {idx}: both .lpm and .pgm files present")
            out.append((idx, [parts[-1]]))
        else:
            chans = sorted(parts)
            if chans != list(range(len(chans))):
                raise DataError(f"frame {idx}: PGM channels {chans} are not contiguous from 0")
            out.append((idx, [parts[c] for c in chans]))
    if not out:
        raise DataError(f"{directory}: no frames found")
    idxs = [i for i, _ in out]
    missing = sorted(set(range(idxs[0], idxs[-1] + 1)) - set(idxs))
    if missing:
        raise DataError(f"{directory}: missing frame indices {missing[:10]}")
    return out


def load_frame(paths):
    if len(paths) == 1:
        return load_map(paths[0])
    return load_pgm_channels(paths)


# -- subcommands -----------------------------------------------------------

def cmd_track(cfg: RunConfig, load_state=None, save_state=None) -> int:
    if not cfg.input or not cfg.output:
        raise UsageError("track needs --input and --output")
    frames = list_frames(cfg.input)
    os.makedirs(cfg.output, exist_ok=True)
    pipe = None
    for idx, paths in frames:
        pm = load_frame(paths)
        if pipe is None:
            pipe = LanePipeline(pm.width, pm.height, cfg.pipeline())
            pipe.frame = idx
            if load_state:
                pipe.tracker = Tracker.load_state(load_state)
                pipe.tracker.cfg = cfg.pipeline().tracker
        res = pipe.process(pm)
        lanes = [lane_polyline(ln) for ln in (res.left, res.right) if ln is not None]
        write_lanes(os.path.join(cfg.output, f"{idx:05d}.lines.txt"), lanes)
    if save_state:
        pipe.tracker.save_state(save_state)
    return 0


def cmd_eval(gt_dir, pred_dir, thresholds, output=None, canvas=(800, 288), image_width=None) -> int:
    if not os.path.isdir(gt_dir):
        raise DataError(f"{gt_dir}: not a directory")
    scale = canvas[0] / image_width if image_width else 1.0
    gts = read_lane_dir(gt_dir, scale=scale)
    preds = read_lane_dir(pred_dir, scale=scale) if os.path.isdir(pred_dir) else {}
    for f in sorted(set(gts) - set(preds)):
        log.warning("frame %d: no prediction file", f)
    report = accuracy(gts, preds, thresholds, canvas)
    if output:
        report.write_csv(output)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["threshold", "n_tp", "n_gt", "accuracy"])
        for row in report.rows:
            w.writerow([f"{row.iou_threshold:g}", row.n_tp, row.n_gt, repr(row.accuracy)])
    return 0


def cmd_synth(scenario_path, output, seed=None) -> int:
    sc = load_scenario(scenario_path)
    if seed is not None:
        sc = replace(sc, seed=seed)
    write_sequence(sc, output)
    return 0


def bench(maps, cfg: PipelineConfig, reps: int) -> dict[str, np.ndarray]:
    """Per-frame stage times in seconds, ``frames * reps`` samples per stage."""
    samples = {s: [] for s in (*STAGES, "total")}
    for _ in range(reps):
        tracker = Tracker(maps[0].width, maps[0].height, cfg.tracker)
        for f, pm in enumerate(maps):
            t = defaultdict(float)
            t0 = time.perf_counter()
            dets = detect_frame(pm, cfg, t)
            t1 = time.perf_counter()
            tracker.step(f, dets)
            t2 = time.perf_counter()
            t["track"] += t2 - t1
            for s in STAGES:
                samples[s].append(t[s])
            samples["total"].append(t2 - t0)
    return {s: np.asarray(v) for s, v in samples.items()}


def write_bench_csv(samples, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["stage", "mean_ms", "p95_ms", "frames"])
    for stage, v in samples.items():
        w.writerow([stage, f"{1e3 * v.mean():.4f}", f"{1e3 * np.percentile(v, 95):.4f}", v.size])


def cmd_bench(cfg: RunConfig) -> int:
    if not cfg.input:
        raise UsageError("bench needs --input")
    if cfg.reps < 1:
        raise UsageError("--reps must be >= 1")
    maps = [load_frame(p) for _, p in list_frames(cfg.input)]
    samples = bench(maps, cfg.pipeline(), cfg.reps)
    if cfg.output:
        with open(cfg.output, "w", newline="") as f:
            write_bench_csv(samples, f)
    else:
        write_bench_csv(samples, sys.stdout)
    return 0


# -- argument parsing ------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv_floats(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}")


def _size(text):
    mt = re.fullmatch(r"(\d+)x(\d+)", text)
    if not mt:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")
    return int(mt.group(1)), int(mt.group(2))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lanetrack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def tracking_flags(sp):
        sp.add_argument("--config")
        sp.add_argument("--input")
        sp.add_argument("--output")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--match-k", type=float)
        sp.add_argument("--no-merge", action="store_true")

    t = sub.add_parser("track", help="track lanes over a directory of per-frame maps")
    tracking_flags(t)
    t.add_argument("--load-state", help="resume from a saved tracker state")
    t.add_argument("--save-state", help="write the tracker state after the last frame")

    e = sub.add_parser("eval", help="IoU accuracy of predicted lanes against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--thresholds", type=_csv_floats, default=DEFAULT_THRESHOLDS)
    e.add_argument("--output")
    e.add_argument("--canvas", type=_size, default=(800, 288))
    e.add_argument("--image-width", type=float,
                   help="width of the image the lane files are expressed in")

    s = sub.add_parser("synth", help="render a scenario file to maps and ground truth")
    s.add_argument("--scenario", "--config", dest="scenario", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--seed", type=int)

    b = sub.add_parser("bench", help="per-stage timing over a directory of maps")
    tracking_flags(b)
    b.add_argument("--reps", type=int)
    return p


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    for flag, key in (("input", "input"), ("output", "output"), ("alpha", "alpha"),
                      ("match_k", "match_k"), ("reps", "reps")):
        val = getattr(args, flag, None)
        if val is not None:
            over[key] = val
    if args.no_merge:
        over["merge_enabled"] = False
    return replace(cfg, **over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "track":
            return cmd_track(_run_config(args), args.load_state, args.save_state)
        if args.command == "bench":
            return cmd_bench(_run_config(args))
        if args.command == "eval":
            return cmd_eval(args.gt, args.pred, args.thresholds, args.output,
                            args.canvas, args.image_width)
        if args.command == "synth":
            return cmd_synth(args.scenario, args.output, args.seed)
    except UsageError as exc:
        print(f"lanetrack: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FormatError, ValueError, OSError, yaml.YAMLError) as exc:
        print(f"lanetrack: error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
