"""Lane tracking post-processor for lane-detection probability maps."""

from .evaluator import AccuracyReport, LanePolyline, accuracy, lane_iou, rasterize
from .lane_fitter import DetectedLane, FitError, LanePoint, LineFit, fit_weighted, from_hesse, to_hesse
from .pipeline import LanePipeline, PipelineConfig, detect_frame, detect_lane, run_sequence
from .point_extractor import ExtractionConfig, RawLanePoints, extract_points
from .probmap_io import FormatError, ProbabilityMap, RangeError, load_map, sample, save_map
from .synth import Scenario, ScriptedLane, jittered_scenario, render
from .tracker import (FrameResult, TrackedLane, Tracker, TrackerConfig, frame_weight,
                      line_distance, merge, merge_share, update_weight)
from .variance_estimator import VarianceConfig, estimate_point_sigma, lane_sigma

__version__ = "0.1.0"
