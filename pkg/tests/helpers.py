import numpy as np

from lanetrack.lane_fitter import DetectedLane, LineFit, to_hesse


def make_det(m=0.0, b=400.0, sigma=3.0, c_f=0.9, n_f=40, y_span=(101.0, 287.0), channel=0):
    """Synthetic detection with given line and aggregate stats."""
    r, th = to_hesse(m, b)
    ys = np.linspace(*y_span, n_f)
    return DetectedLane(
        channel=channel, x=m * ys + b, y=ys, c=np.full(n_f, c_f), sigmas=np.full(n_f, sigma),
        fit=LineFit(m, b, r, th, tuple(y_span)), c_f=c_f, n_f=n_f, sigma=sigma)
