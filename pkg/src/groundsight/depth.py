"""Raw TOF gray-value frames and their conversion to vertical ground distance.

The sensor reports per-pixel radial distance as a 16-bit gray value g; the
vertical (optical-axis) distance is

    z = g * mu / sqrt(((u - cx)/f)^2 + ((v - cy)/f)^2 + 1) - z_offset

with 1-based pixel coordinates u, v. Internal arrays are 0-based; the +1 is
applied inside decode/encode. g = 0 is reserved as "no return" and always
invalid, as is any z outside the sensor's working range.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import pnm
from .calib import CameraIntrinsics, TofConstants
from .errors import DimensionMismatch, RangeExceeded, RoiOutOfBounds


@dataclass(frozen=True)
class DepthFrame:
    """One raw frame off the depth camera: radial-distance gray counts."""

    gray: np.ndarray  # uint16, (height, width)
    timestamp_ms: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.gray, dtype=np.uint16)
        g.setflags(write=False)
        object.__setattr__(self, "gray", g)

    @property
    def width(self) -> int:
        return self.gray.shape[1]

    @property
    def height(self) -> int:
        return self.gray.shape[0]


@dataclass(frozen=True)
class VerticalDepthMap:
    """Per-pixel vertical distance in mm; consult `valid` before reading z."""

    z_mm: np.ndarray   # float64, (height, width); NaN where invalid
    valid: np.ndarray  # bool, (height, width)
    timestamp_ms: float = 0.0

    def __post_init__(self):
        z = np.asarray(self.z_mm, dtype=np.float64)
        v = np.asarray(self.valid, dtype=bool)
        if z.shape != v.shape:
            raise DimensionMismatch("z and validity shapes differ")
        z.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "z_mm", z)
        object.__setattr__(self, "valid", v)

    @property
    def width(self) -> int:
        return self.z_mm.shape[1]

    @property
    def height(self) -> int:
        return self.z_mm.shape[0]


@dataclass(frozen=True)
class Roi:
    """Rectangle in pixel coordinates: origin (x, y), size (width, height)."""

    x: int
    y: int
    width: int
    height: int

    def check_within(self, img_width: int, img_height: int):
        if (self.x < 0 or self.y < 0 or self.width <= 0 or self.height <= 0
                or self.x + self.width > img_width
                or self.y + self.height > img_height):
            raise RoiOutOfBounds(
                f"roi {self} does not fit a {img_width}x{img_height} image")

    def slices(self):
        return slice(self.y, self.y + self.height), slice(self.x, self.x + self.width)

    @property
    def area(self) -> int:
        return self.width * self.height


@lru_cache(maxsize=4)
def angular_factor(intr: CameraIntrinsics) -> np.ndarray:
    """Per-pixel radial-to-vertical factor, 1-based coordinates."""
    u = np.arange(1, intr.width + 1, dtype=np.float64)
    v = np.arange(1, intr.height + 1, dtype=np.float64)
    du = (u - intr.cx) / intr.focal_px
    dv = (v - intr.cy) / intr.focal_px
    factor = np.sqrt(du[None, :] ** 2 + dv[:, None] ** 2 + 1.0)
    factor.setflags(write=False)
    return factor


def decode_vertical(frame: DepthFrame, intr: CameraIntrinsics,
                    tof: TofConstants) -> VerticalDepthMap:
    """Convert gray counts to vertical distance; flags no-return and
    out-of-range pixels invalid."""
    if frame.width != intr.width or frame.height != intr.height:
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs intrinsics "
            f"{intr.width}x{intr.height}")
    factor = angular_factor(intr)
    z = frame.gray.astype(np.float64) * tof.gray_scale_mm / factor - tof.z_offset_mm
    valid = (frame.gray > 0) & (z >= tof.range_min_mm) & (z <= tof.range_max_mm)
    z = np.where(valid, z, np.nan)
    return VerticalDepthMap(z_mm=z, valid=valid, timestamp_ms=frame.timestamp_ms)


def encode_gray(z_map: VerticalDepthMap, intr: CameraIntrinsics,
                tof: TofConstants) -> DepthFrame:
    """Exact inverse of decode_vertical: vertical distance back to gray counts.

    Invalid pixels encode as the g = 0 sentinel; a valid z whose gray count
    would exceed 65535 raises RangeExceeded.
    """
    if z_map.width != intr.width or z_map.height != intr.height:
        raise DimensionMismatch(
            f"map {z_map.width}x{z_map.height} vs intrinsics "
            f"{intr.width}x{intr.height}")
    factor = angular_factor(intr)
    with np.errstate(invalid="ignore"):
        g = np.rint((z_map.z_mm + tof.z_offset_mm) * factor / tof.gray_scale_mm)
    g = np.where(z_map.valid, g, 0.0)
    if np.any(g > 65535):
        raise RangeExceeded("vertical distance maps above 65535 gray counts")
    g = np.clip(g, 0, 65535)
    g[z_map.valid & (g < 1)] = 1
    return DepthFrame(gray=g.astype(np.uint16), timestamp_ms=z_map.timestamp_ms)


@dataclass(frozen=True)
class DepthStats:
    count: int
    min_mm: float | None = None
    max_mm: float | None = None
    median_mm: float | None = None


def depth_stats(z_map: VerticalDepthMap, roi: Roi) -> DepthStats:
    """Summary over valid pixels inside the roi; count 0 means an empty summary."""
    roi.check_within(z_map.width, z_map.height)
    sy, sx = roi.slices()
    vals = z_map.z_mm[sy, sx][z_map.valid[sy, sx]]
    if vals.size == 0:
        return DepthStats(count=0)
    return DepthStats(count=int(vals.size), min_mm=float(vals.min()),
                      max_mm=float(vals.max()), median_mm=float(np.median(vals)))


def full_roi(z_map: VerticalDepthMap) -> Roi:
    return Roi(0, 0, z_map.width, z_map.height)


# -- persistence ------------------------------------------------------------

def write_depth_frame(path, frame: DepthFrame):
    pnm.write_pgm16(path, frame.gray)


def read_depth_frame(path, timestamp_ms: float = 0.0) -> DepthFrame:
    img = pnm.read_pnm(path)
    if img.ndim != 2 or img.dtype != np.uint16:
        raise DimensionMismatch("depth frames must be 16-bit single channel")
    return DepthFrame(gray=img, timestamp_ms=timestamp_ms)


def export_point_cloud(z_map: VerticalDepthMap, intr: CameraIntrinsics, path):
    """Dump the valid pixels as 'x y z' text lines (mm) for external viewers."""
    rows, cols = np.nonzero(z_map.valid)
    z = z_map.z_mm[rows, cols]
    x = (cols - intr.cx) * z / intr.focal_px
    y = (rows - intr.cy) * z / intr.focal_px
    buf = io.StringIO()
    for xi, yi, zi in zip(x, y, z):
        buf.write(f"{xi:.3f} {yi:.3f} {zi:.3f}\n")
    pnm.atomic_write_text(path, buf.getvalue())
