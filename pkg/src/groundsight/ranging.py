"""Scalar ground-distance estimation and its error statistics.

The residue-masked depth map reduces to the median of the valid pixels in
the region of interest (median rather than mean: leftover misclassified
straw pixels must not drag the estimate). A frame whose visible-soil
fraction falls below a threshold is flagged invalid instead of producing a
number; a stream smoother can carry the last good value across such frames.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import pnm
from .depth import Roi, VerticalDepthMap, full_roi
from .errors import ConfigInvalid, InsufficientData, UnorderedTimestamps

DEFAULT_MIN_SOIL_FRACTION = 0.05


@dataclass(frozen=True)
class GroundDistanceEstimate:
    distance_mm: float | None
    valid: bool
    soil_pixel_count: int
    soil_fraction: float
    timestamp_ms: float
    extrapolated: bool = False


@dataclass(frozen=True)
class ErrorStatistics:
    mean_mm: float
    sample_std_mm: float
    ci95_low_mm: float
    ci95_high_mm: float
    n: int


def estimate_distance(z_map: VerticalDepthMap, roi: Roi | None = None,
                      min_soil_fraction: float = DEFAULT_MIN_SOIL_FRACTION,
                      aggregator: str = "median") -> GroundDistanceEstimate:
    """Reduce the masked depth map to one distance over the roi.

    Valid only when the fraction of valid (soil) pixels in the roi (the
    whole frame when omitted) reaches `min_soil_fraction`; a fully covered
    frame yields an invalid estimate.
    """
    if not 0.0 <= min_soil_fraction <= 1.0:
        raise ConfigInvalid("min_soil_fraction must be within [0, 1]")
    if aggregator not in ("median", "mean"):
        raise ConfigInvalid(f"unknown aggregator {aggregator!r}")
    if roi is None:
        roi = full_roi(z_map)
    roi.check_within(z_map.width, z_map.height)
    sy, sx = roi.slices()
    vals = z_map.z_mm[sy, sx][z_map.valid[sy, sx]]
    count = int(vals.size)
    fraction = count / roi.area
    if count == 0 or fraction < min_soil_fraction:
        return GroundDistanceEstimate(
            distance_mm=None, valid=False, soil_pixel_count=count,
            soil_fraction=fraction, timestamp_ms=z_map.timestamp_ms)
    reduce = np.median if aggregator == "median" else np.mean
    return GroundDistanceEstimate(
        distance_mm=float(reduce(vals)), valid=True, soil_pixel_count=count,
        soil_fraction=fraction, timestamp_ms=z_map.timestamp_ms)


def smooth_stream(estimates: Sequence[GroundDistanceEstimate],
                  window: int) -> list[GroundDistanceEstimate]:
    """Moving median over the last `window` valid estimates.

    Invalid inputs carry the previous smoothed value forward, flagged
    extrapolated; leading invalid frames stay invalid. Window 1 passes
    valid frames through untouched.
    """
    if window < 1:
        raise ConfigInvalid("window must be >= 1")
    last_ts = -math.inf
    recent: deque[float] = deque(maxlen=window)
    carried: float | None = None
    out: list[GroundDistanceEstimate] = []
    for est in estimates:
        if est.timestamp_ms <= last_ts:
            raise UnorderedTimestamps(
                f"timestamp {est.timestamp_ms} after {last_ts}")
        last_ts = est.timestamp_ms
        if est.valid:
            recent.append(est.distance_mm)
            carried = float(np.median(recent))
            out.append(GroundDistanceEstimate(
                distance_mm=carried, valid=True,
                soil_pixel_count=est.soil_pixel_count,
                soil_fraction=est.soil_fraction,
                timestamp_ms=est.timestamp_ms))
        elif carried is not None:
            out.append(GroundDistanceEstimate(
                distance_mm=carried, valid=True,
                soil_pixel_count=est.soil_pixel_count,
                soil_fraction=est.soil_fraction,
                timestamp_ms=est.timestamp_ms, extrapolated=True))
        else:
            out.append(est)
    return out


def error_statistics(errors: Iterable[float]) -> ErrorStatistics:
    """Mean, sample std (n-1), and Student-t 95% confidence interval."""
    vals = np.asarray(list(errors), dtype=float)
    n = vals.size
    if n < 2:
        raise InsufficientData(f"need at least 2 errors, got {n}")
    mean = float(vals.mean())
    std = float(vals.std(ddof=1))
    half = stats.t.ppf(0.975, n - 1) * std / math.sqrt(n)
    return ErrorStatistics(mean_mm=mean, sample_std_mm=std,
                           ci95_low_mm=mean - half, ci95_high_mm=mean + half,
                           n=int(n))


# -- export -------------------------------------------------------------------

ESTIMATE_CSV_HEADER = ("timestamp_ms", "distance_mm", "valid", "soil_fraction")


def estimates_to_csv(estimates: Sequence[GroundDistanceEstimate]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ESTIMATE_CSV_HEADER)
    for e in estimates:
        writer.writerow([
            f"{e.timestamp_ms:.3f}",
            "" if e.distance_mm is None else f"{e.distance_mm:.4f}",
            int(e.valid),
            f"{e.soil_fraction:.6f}",
        ])
    return buf.getvalue()


def write_estimates_csv(path, estimates: Sequence[GroundDistanceEstimate]):
    pnm.atomic_write_text(path, estimates_to_csv(estimates))


def statistics_summary(st: ErrorStatistics) -> str:
    return json.dumps({
        "mean_mm": st.mean_mm,
        "sample_std_mm": st.sample_std_mm,
        "ci95_low_mm": st.ci95_low_mm,
        "ci95_high_mm": st.ci95_high_mm,
        "n": st.n,
    }, indent=2) + "\n"
