"""Streaming composition of decode -> align -> segment -> mask -> estimate.

A frame source (directory replay or live simulator) feeds paired frames in
timestamp order; every pair yields exactly one estimate and one per-stage
latency record. Timing instrumentation never perturbs the numeric results:
running the stages by hand on the same inputs gives bit-identical values.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pnm
from .align import RgbFrame, build_alignment_map, warp_rgb_to_depth
from .calib import RigCalibration, TofConstants
from .depth import DepthFrame, Roi, decode_vertical, read_depth_frame
from .errors import ConfigInvalid, PairingError, SourceExhausted
from .ranging import (
    DEFAULT_MIN_SOIL_FRACTION,
    GroundDistanceEstimate,
    estimate_distance,
    smooth_stream,
)
from .segment import (
    DEFAULT_DILATION_RADIUS,
    BinaryMask,
    ColorClassifierConfig,
    apply_mask,
    classify_residue,
    dilate,
)
from .simscene import SceneSpec, render_sequence

DEFAULT_FRAME_PERIOD_MS = 50.0  # 20 fps camera default


@dataclass(frozen=True)
class PipelineConfig:
    rig: RigCalibration
    tof: TofConstants
    classifier: ColorClassifierConfig = ColorClassifierConfig()
    dilation_radius: int = DEFAULT_DILATION_RADIUS
    roi: Roi | None = None  # None = full depth frame
    min_soil_fraction: float = DEFAULT_MIN_SOIL_FRACTION
    aggregator: str = "median"
    smoothing_window: int = 1
    external_mask: BinaryMask | None = None
    mask_enabled: bool = True  # False: skip residue masking (diagnostics)

    def __post_init__(self):
        if self.dilation_radius < 0:
            raise ConfigInvalid("dilation_radius must be >= 0")
        if self.smoothing_window < 1:
            raise ConfigInvalid("smoothing_window must be >= 1")
        if self.classifier.mode == "external-mask" and self.external_mask is None:
            raise ConfigInvalid("external-mask mode needs an external mask")


@dataclass(frozen=True)
class FrameMetrics:
    frame_index: int
    decode_us: float
    align_us: float
    segment_us: float
    estimate_us: float
    end_to_end_us: float


def process_pair(depth_frame: DepthFrame, rgb_frame: RgbFrame,
                 config: PipelineConfig, amap=None):
    """Run all stages on one frame pair; returns (estimate, FrameMetrics-less
    stage durations in us)."""
    if amap is None:
        amap = build_alignment_map(config.rig)
    d = config.rig.depth_intrinsics

    t0 = time.perf_counter_ns()
    z_map = decode_vertical(depth_frame, d, config.tof)
    t1 = time.perf_counter_ns()
    aligned = warp_rgb_to_depth(rgb_frame, z_map, amap)
    t2 = time.perf_counter_ns()
    if config.mask_enabled:
        if config.classifier.mode == "external-mask":
            mask = config.external_mask
        else:
            mask = classify_residue(aligned, config.classifier)
        mask = dilate(mask, config.dilation_radius)
        masked = apply_mask(z_map, mask)
    else:
        masked = z_map
    t3 = time.perf_counter_ns()
    roi = config.roi or Roi(0, 0, d.width, d.height)
    est = estimate_distance(masked, roi, config.min_soil_fraction,
                            config.aggregator)
    t4 = time.perf_counter_ns()

    stage_us = ((t1 - t0) / 1e3, (t2 - t1) / 1e3,
                (t3 - t2) / 1e3, (t4 - t3) / 1e3, (t4 - t0) / 1e3)
    return est, stage_us


def run_pipeline(source, config: PipelineConfig):
    """Consume a frame source; one estimate plus one metrics record per pair."""
    amap = build_alignment_map(config.rig)
    estimates: list[GroundDistanceEstimate] = []
    metrics: list[FrameMetrics] = []
    for index, (depth_frame, rgb_frame) in enumerate(source):
        est, (dec, ali, seg, rng, e2e) = process_pair(
            depth_frame, rgb_frame, config, amap)
        estimates.append(est)
        metrics.append(FrameMetrics(
            frame_index=index, decode_us=dec, align_us=ali,
            segment_us=seg, estimate_us=rng, end_to_end_us=e2e))
    if not estimates:
        raise SourceExhausted("frame source produced no pairs")
    if config.smoothing_window > 1:
        estimates = smooth_stream(estimates, config.smoothing_window)
    return estimates, metrics


# -- frame sources ------------------------------------------------------------

def simulator_source(spec: SceneSpec, rig: RigCalibration, tof: TofConstants,
                     speed_mm_per_frame: float, frames: int,
                     frame_period_ms: float = DEFAULT_FRAME_PERIOD_MS):
    """Yield (DepthFrame, RgbFrame) pairs straight off the scene renderer."""
    for depth_frame, rgb_frame, _ in render_sequence(
            spec, speed_mm_per_frame, frames, rig, tof, frame_period_ms):
        yield depth_frame, rgb_frame


def directory_source(path, frame_period_ms: float = DEFAULT_FRAME_PERIOD_MS):
    """Replay `<stem>_depth.*` / `<stem>_rgb.*` pairs in lexicographic stem
    order; an unpaired file is an error, never a silent skip."""
    path = Path(path)
    depth_files = {}
    rgb_files = {}
    for f in sorted(path.iterdir()):
        if f.stem.endswith("_depth"):
            depth_files[f.stem[:-6]] = f
        elif f.stem.endswith("_rgb"):
            rgb_files[f.stem[:-4]] = f
    if not depth_files and not rgb_files:
        raise SourceExhausted(f"no frame pairs in {path}")
    unpaired = set(depth_files) ^ set(rgb_files)
    if unpaired:
        raise PairingError(
            f"unpaired frame stems in {path}: {sorted(unpaired)}")
    for index, stem in enumerate(sorted(depth_files)):
        ts = index * frame_period_ms
        depth_frame = read_depth_frame(depth_files[stem], timestamp_ms=ts)
        rgb = pnm.read_pnm(rgb_files[stem])
        yield depth_frame, RgbFrame(pixels=rgb, timestamp_ms=ts)


# -- benchmarking ---------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkReport:
    frames: int
    fps: float
    stage_p50_us: dict = field(default_factory=dict)
    stage_p95_us: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "frames": self.frames,
            "fps": self.fps,
            "stage_p50_us": self.stage_p50_us,
            "stage_p95_us": self.stage_p95_us,
        }, indent=2) + "\n"


_STAGES = ("decode", "align", "segment", "estimate", "end_to_end")


def benchmark(source, config: PipelineConfig, warmup: int, frames: int):
    """Throughput over the post-warmup frames of a materialized source.

    Frames are rendered/loaded up front so the camera stand-in never counts
    against the processing budget. Returns (BenchmarkReport, estimates);
    estimate values are deterministic, timings of course are not.
    """
    if frames < 1:
        raise ConfigInvalid("frames must be >= 1")
    if not 0 <= warmup <= frames:
        raise ConfigInvalid("warmup must be within 0..frames")
    pairs = list(itertools.islice(source, frames))
    if len(pairs) < frames:
        raise SourceExhausted(
            f"source ended after {len(pairs)} of {frames} frames")
    amap = build_alignment_map(config.rig)

    estimates = []
    records = []
    wall_start = None
    for index, (depth_frame, rgb_frame) in enumerate(pairs):
        if index == warmup:
            wall_start = time.perf_counter_ns()
        est, stage_us = process_pair(depth_frame, rgb_frame, config, amap)
        estimates.append(est)
        if index >= warmup:
            records.append(stage_us)
    measured = frames - warmup
    if measured == 0:
        return BenchmarkReport(frames=0, fps=0.0), estimates
    elapsed_s = (time.perf_counter_ns() - wall_start) / 1e9
    arr = np.asarray(records)
    p50 = {s: float(np.percentile(arr[:, i], 50)) for i, s in enumerate(_STAGES)}
    p95 = {s: float(np.percentile(arr[:, i], 95)) for i, s in enumerate(_STAGES)}
    report = BenchmarkReport(frames=measured,
                             fps=measured / elapsed_s if elapsed_s > 0 else 0.0,
                             stage_p50_us=p50, stage_p95_us=p95)
    return report, estimates


# -- metrics export -------------------------------------------------------------

METRICS_CSV_HEADER = ("frame_index", "decode_us", "align_us", "segment_us",
                      "estimate_us", "end_to_end_us")


def metrics_to_csv(metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_CSV_HEADER)
    for m in metrics:
        writer.writerow([m.frame_index, f"{m.decode_us:.1f}",
                         f"{m.align_us:.1f}", f"{m.segment_us:.1f}",
                         f"{m.estimate_us:.1f}", f"{m.end_to_end_us:.1f}"])
    return buf.getvalue()


def write_metrics_csv(path, metrics):
    pnm.atomic_write_text(path, metrics_to_csv(metrics))
