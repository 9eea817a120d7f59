"""Synthetic scene generator standing in for the physical camera rig.

A scene is a piecewise-constant soil height profile along the platform's
motion axis, plus straw cylinders scattered on top. Rendering produces the
exact (DepthFrame, RgbFrame) pair the real cameras would deliver: vertical
distances are converted back to raw radial gray counts through the depth
codec, and the color image is synthesized at native RGB resolution through
the rig's reprojection geometry so the alignment path is genuinely
exercised. Ground truth ships alongside every frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .align import RgbFrame, build_alignment_map
from .calib import RigCalibration, TofConstants
from .depth import VerticalDepthMap, encode_gray
from .errors import SpecOutOfRange

DEFAULT_SOIL_COLOR = (60, 45, 30)
DEFAULT_STRAW_COLOR = (210, 190, 110)


@dataclass(frozen=True)
class Straw:
    """One straw cylinder lying on the soil, platform coordinates (mm)."""

    center_x_mm: float
    center_y_mm: float
    angle_deg: float
    length_mm: float
    diameter_mm: float
    layer: int = 0

    def __post_init__(self):
        if self.diameter_mm <= 0 or self.length_mm <= 0:
            raise SpecOutOfRange("straw length and diameter must be positive")
        if self.layer < 0:
            raise SpecOutOfRange("straw layer must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    """Parametric ground truth: soil profile, straw scatter, colors, noise."""

    camera_distance_mm: float
    soil_profile: tuple = ((4000.0, 0.0),)  # (length_mm, thickness_mm) segments
    straws: tuple = ()
    soil_color: tuple = DEFAULT_SOIL_COLOR
    straw_color: tuple = DEFAULT_STRAW_COLOR
    color_jitter: int = 10
    noise_sigma_mm: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.camera_distance_mm <= 0:
            raise SpecOutOfRange("camera_distance_mm must be positive")
        profile = tuple((float(l), float(t)) for l, t in self.soil_profile)
        if not profile or any(l <= 0 for l, _ in profile):
            raise SpecOutOfRange("profile segments need positive lengths")
        object.__setattr__(self, "soil_profile", profile)
        object.__setattr__(self, "straws", tuple(self.straws))
        object.__setattr__(self, "soil_color", tuple(int(c) for c in self.soil_color))
        object.__setattr__(self, "straw_color", tuple(int(c) for c in self.straw_color))

    @property
    def profile_length_mm(self) -> float:
        return sum(l for l, _ in self.soil_profile)

    def to_json(self) -> str:
        return json.dumps({
            "camera_distance_mm": self.camera_distance_mm,
            "soil_profile": list(self.soil_profile),
            "straws": [[s.center_x_mm, s.center_y_mm, s.angle_deg,
                        s.length_mm, s.diameter_mm, s.layer]
                       for s in self.straws],
            "soil_color": list(self.soil_color),
            "straw_color": list(self.straw_color),
            "color_jitter": self.color_jitter,
            "noise_sigma_mm": self.noise_sigma_mm,
            "seed": self.seed,
        }, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        doc = json.loads(text)
        return cls(
            camera_distance_mm=doc["camera_distance_mm"],
            soil_profile=tuple(tuple(seg) for seg in doc.get("soil_profile",
                                                             [[4000.0, 0.0]])),
            straws=tuple(Straw(*row) for row in doc.get("straws", [])),
            soil_color=tuple(doc.get("soil_color", DEFAULT_SOIL_COLOR)),
            straw_color=tuple(doc.get("straw_color", DEFAULT_STRAW_COLOR)),
            color_jitter=doc.get("color_jitter", 10),
            noise_sigma_mm=doc.get("noise_sigma_mm", 0.0),
            seed=doc.get("seed", 0),
        )

    @classmethod
    def from_file(cls, path) -> "SceneSpec":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class GroundTruth:
    """What the pipeline should recover, straw-free."""

    true_distance_mm: float     # median straw-free surface distance in view
    residue_footprint: np.ndarray  # bool, depth grid
    coverage_fraction: float

    def __post_init__(self):
        fp = np.asarray(self.residue_footprint, dtype=bool)
        fp.setflags(write=False)
        object.__setattr__(self, "residue_footprint", fp)


def _wrap_centered(values: np.ndarray, period: float) -> np.ndarray:
    return (values + period / 2.0) % period - period / 2.0


def _thickness_at(spec: SceneSpec, x_mm: np.ndarray) -> np.ndarray:
    lengths = np.array([l for l, _ in spec.soil_profile])
    thick = np.array([t for _, t in spec.soil_profile])
    edges = np.cumsum(lengths)
    xm = np.mod(x_mm, edges[-1])
    idx = np.searchsorted(edges, xm, side="right")
    return thick[np.minimum(idx, len(thick) - 1)]


def _straw_height(spec: SceneSpec, x1d: np.ndarray, y1d: np.ndarray):
    """Max straw stack height per pixel plus the residue footprint.

    Each straw touches only its bounding box of grid columns/rows, so dense
    scatters over a long platform stay cheap; most straws are skipped
    entirely when outside the camera window.
    """
    period = spec.profile_length_mm
    shape = (y1d.size, x1d.size)
    height = np.zeros(shape)
    footprint = np.zeros(shape, dtype=bool)
    for s in spec.straws:
        half = (s.length_mm + s.diameter_mm) / 2.0
        dxc = _wrap_centered(x1d - s.center_x_mm, period)
        cols = np.abs(dxc) <= half
        if not cols.any():
            continue
        dyc = y1d - s.center_y_mm
        rows = np.abs(dyc) <= half
        if not rows.any():
            continue
        dx = dxc[cols][None, :]
        dy = dyc[rows][:, None]
        ca = np.cos(np.deg2rad(s.angle_deg))
        sa = np.sin(np.deg2rad(s.angle_deg))
        along = dx * ca + dy * sa
        across = -dx * sa + dy * ca
        inside = (np.abs(along) <= s.length_mm / 2.0) & \
                 (np.abs(across) <= s.diameter_mm / 2.0)
        if not inside.any():
            continue
        bulge = s.diameter_mm * np.sqrt(
            np.clip(1.0 - (2.0 * across / s.diameter_mm) ** 2, 0.0, 1.0))
        h = np.where(inside, s.layer * s.diameter_mm + bulge, 0.0)
        sub = np.ix_(rows, cols)
        height[sub] = np.maximum(height[sub], h)
        footprint[sub] |= inside
    return height, footprint


def _frame_rng(spec: SceneSpec, platform_offset_mm: float) -> np.random.Generator:
    key = int(round(platform_offset_mm * 1000.0)) & 0xFFFFFFFF
    return np.random.default_rng([spec.seed & 0xFFFFFFFF, key])


@lru_cache(maxsize=8)
def _scene_geometry(spec: SceneSpec, platform_offset_mm: float,
                    intr) -> tuple:
    """Noise-free surface geometry on the depth grid; cached because static
    scenes re-render the same straw field for every frame."""
    scale = spec.camera_distance_mm / intr.focal_px  # mm of ground per px
    x1d = (np.arange(intr.width, dtype=np.float64) - intr.cx) * scale \
        + platform_offset_mm
    y1d = (np.arange(intr.height, dtype=np.float64) - intr.cy) * scale
    soil_dist = np.broadcast_to(
        spec.camera_distance_mm - _thickness_at(spec, x1d)[None, :],
        (intr.height, intr.width)).copy()
    straw_h, footprint = _straw_height(spec, x1d, y1d)
    for arr in (soil_dist, straw_h, footprint):
        arr.setflags(write=False)
    return soil_dist, straw_h, footprint


def render_pair(spec: SceneSpec, platform_offset_mm: float,
                rig: RigCalibration, tof: TofConstants,
                timestamp_ms: float = 0.0):
    """Render one (DepthFrame, RgbFrame, GroundTruth) at the given offset.

    Deterministic: identical (spec, seed, offset) give bit-identical frames.
    """
    d = rig.depth_intrinsics
    soil_dist, straw_h, footprint = _scene_geometry(
        spec, float(platform_offset_mm), d)
    top = soil_dist - straw_h
    if top.min() <= 0:
        raise SpecOutOfRange("scene surface reaches the camera plane")
    if soil_dist.min() < tof.range_min_mm or soil_dist.max() > tof.range_max_mm:
        raise SpecOutOfRange("soil surface outside the sensor working range")

    rng = _frame_rng(spec, platform_offset_mm)
    z = top if spec.noise_sigma_mm == 0 else \
        top + rng.normal(0.0, spec.noise_sigma_mm, size=top.shape)
    z_map = VerticalDepthMap(z_mm=z, valid=np.ones(z.shape, dtype=bool),
                             timestamp_ms=timestamp_ms)
    depth_frame = encode_gray(z_map, d, tof)

    color_grid = np.where(footprint[..., None],
                          np.asarray(spec.straw_color, dtype=np.int16),
                          np.asarray(spec.soil_color, dtype=np.int16))
    if spec.color_jitter > 0:
        jitter = rng.integers(-spec.color_jitter, spec.color_jitter + 1,
                              size=color_grid.shape, dtype=np.int16)
        color_grid = color_grid + jitter
    color_grid = np.clip(color_grid, 0, 255).astype(np.uint8)

    rgb = _render_native_rgb(color_grid, z, rig, spec.camera_distance_mm,
                             timestamp_ms)
    truth = GroundTruth(true_distance_mm=float(np.median(soil_dist)),
                        residue_footprint=footprint,
                        coverage_fraction=float(footprint.mean()))
    return depth_frame, rgb, truth


@lru_cache(maxsize=4)
def _affine_inverse_indices(coeff_key: bytes, depth_shape: tuple,
                            rgb_shape: tuple) -> tuple:
    """Depth-grid indices sampled by each RGB pixel when the map carries no
    parallax term (w14 = w24 = 0): purely affine, independent of depth."""
    (w11, w12, w13, _), (w21, w22, w23, _) = np.frombuffer(
        coeff_key).reshape(2, 4)
    inv = np.linalg.inv(np.array([[w11, w12], [w21, w22]]))
    u = np.arange(rgb_shape[1], dtype=np.float64)[None, :]
    v = np.arange(rgb_shape[0], dtype=np.float64)[:, None]
    x = inv[0, 0] * (u - w13) + inv[0, 1] * (v - w23)
    y = inv[1, 0] * (u - w13) + inv[1, 1] * (v - w23)
    xi = np.clip(np.rint(x).astype(np.intp), 0, depth_shape[1] - 1)
    yi = np.clip(np.rint(y).astype(np.intp), 0, depth_shape[0] - 1)
    return yi, xi


def _render_native_rgb(color_grid: np.ndarray, z_field: np.ndarray,
                       rig: RigCalibration, nominal_z_mm: float,
                       timestamp_ms: float) -> RgbFrame:
    """Inverse-warp the depth-grid colors to native RGB geometry.

    Each RGB pixel is traced back to the depth pixel that would sample it.
    With parallax (nonzero in-plane translation) the depth lookup is iterated
    to fixed point; the surface is a shallow heightfield, so two refinements
    suffice.
    """
    amap = build_alignment_map(rig)
    (w11, w12, w13, w14), (w21, w22, w23, w24) = amap.coefficients
    c = rig.rgb_intrinsics
    h, w = color_grid.shape[:2]
    if w14 == 0.0 and w24 == 0.0:
        yi, xi = _affine_inverse_indices(
            amap.coefficients.tobytes(), (h, w), (c.height, c.width))
        return RgbFrame(pixels=color_grid[yi, xi], timestamp_ms=timestamp_ms)
    inv = np.linalg.inv(np.array([[w11, w12], [w21, w22]]))
    u = np.arange(c.width, dtype=np.float64)[None, :]
    v = np.arange(c.height, dtype=np.float64)[:, None]
    z = np.full((c.height, c.width), float(nominal_z_mm))
    for _ in range(3):
        rhs_u = u - w13 - w14 / z
        rhs_v = v - w23 - w24 / z
        x = inv[0, 0] * rhs_u + inv[0, 1] * rhs_v
        y = inv[1, 0] * rhs_u + inv[1, 1] * rhs_v
        xi = np.clip(np.rint(x).astype(np.intp), 0, w - 1)
        yi = np.clip(np.rint(y).astype(np.intp), 0, h - 1)
        z = z_field[yi, xi]
    return RgbFrame(pixels=color_grid[yi, xi], timestamp_ms=timestamp_ms)


def render_sequence(spec: SceneSpec, speed_mm_per_frame: float, frames: int,
                    rig: RigCalibration, tof: TofConstants,
                    frame_period_ms: float = 50.0):
    """Emulate the rotating platform: offsets advance by `speed` per frame,
    wrapping at the profile length."""
    if frames < 1:
        raise SpecOutOfRange("need at least one frame")
    period = spec.profile_length_mm
    out = []
    for k in range(frames):
        offset = (k * speed_mm_per_frame) % period
        out.append(render_pair(spec, offset, rig, tof,
                               timestamp_ms=k * frame_period_ms))
    return out


def scatter_straws(target_coverage: float, region,
                   seed: int = 0, diameter_range=(5.0, 5.0),
                   length_range=(80.0, 120.0), max_layer: int = 0,
                   raster_mm: float = 2.0) -> tuple:
    """Random uniform straw scatter reaching (at least) the target coverage.

    `region` is (x_min, x_max, y_min, y_max) in platform mm. Coverage is
    tracked on a raster of the region, so the achieved on-grid fraction may
    differ by a pixel-boundary band.
    """
    if not 0.0 <= target_coverage < 1.0:
        raise SpecOutOfRange("target_coverage must be in [0, 1)")
    if target_coverage == 0.0:
        return ()
    x0, x1, y0, y1 = region
    rng = np.random.default_rng(seed)
    nx = max(2, int((x1 - x0) / raster_mm))
    ny = max(2, int((y1 - y0) / raster_mm))
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    covered = np.zeros((ny, nx), dtype=bool)
    total = covered.size
    hit = 0
    straws = []
    for _ in range(200_000):
        if hit / total >= target_coverage:
            break
        s = Straw(
            center_x_mm=float(rng.uniform(x0, x1)),
            center_y_mm=float(rng.uniform(y0, y1)),
            angle_deg=float(rng.uniform(0.0, 180.0)),
            length_mm=float(rng.uniform(*length_range)),
            diameter_mm=float(rng.uniform(*diameter_range)),
            layer=int(rng.integers(0, max_layer + 1)),
        )
        straws.append(s)
        half = (s.length_mm + s.diameter_mm) / 2.0
        cols = np.abs(xs - s.center_x_mm) <= half
        rows = np.abs(ys - s.center_y_mm) <= half
        if not cols.any() or not rows.any():
            continue
        dx = (xs[cols] - s.center_x_mm)[None, :]
        dy = (ys[rows] - s.center_y_mm)[:, None]
        ca = np.cos(np.deg2rad(s.angle_deg))
        sa = np.sin(np.deg2rad(s.angle_deg))
        inside = (np.abs(dx * ca + dy * sa) <= s.length_mm / 2.0) & \
                 (np.abs(-dx * sa + dy * ca) <= s.diameter_mm / 2.0)
        sub = np.ix_(rows, cols)
        before = covered[sub]
        hit += int((inside & ~before).sum())
        covered[sub] = before | inside
    else:
        raise SpecOutOfRange(
            f"could not reach coverage {target_coverage} in the straw budget")
    return tuple(straws)
