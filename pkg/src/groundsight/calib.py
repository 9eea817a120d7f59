"""Camera parameters and pinhole projection primitives.

Calibration is ingested from an INI-style profile, never estimated: the
shipped ``blaze101.profile`` carries the published constants of the depth
camera this toolkit targets. All lengths are millimetres, all pixel
quantities pixels.
"""

from __future__ import annotations

import configparser
import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CalibrationError,
    MissingField,
    NonOrthonormalRotation,
    NonPositiveDepth,
    OutOfRangePrincipalPoint,
)

ORTHONORMALITY_TOL = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters of one camera (single focal length, in pixels)."""

    focal_px: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.focal_px <= 0:
            raise CalibrationError("focal_px must be positive")
        if self.width <= 0 or self.height <= 0:
            raise CalibrationError("image dimensions must be positive")
        if not (0 < self.cx < self.width):
            raise OutOfRangePrincipalPoint(
                f"cx={self.cx} outside (0, {self.width})")
        if not (0 < self.cy < self.height):
            raise OutOfRangePrincipalPoint(
                f"cy={self.cy} outside (0, {self.height})")


@dataclass(frozen=True)
class TofConstants:
    """Sensor-specific constants of the time-of-flight depth encoding."""

    gray_scale_mm: float   # mm of radial distance per 16-bit gray count
    z_offset_mm: float     # sensor-plane to mounting-surface offset
    range_min_mm: float
    range_max_mm: float

    def __post_init__(self):
        if self.gray_scale_mm <= 0:
            raise CalibrationError("gray_scale_mm must be positive")
        if self.range_min_mm >= self.range_max_mm:
            raise CalibrationError("range_min_mm must be below range_max_mm")


@dataclass(frozen=True)
class RigCalibration:
    """Extrinsics between the depth and RGB cameras plus both intrinsics.

    ``rotation`` and ``translation`` take a point from depth-camera
    coordinates into RGB-camera coordinates (translation in mm).
    """

    rotation: np.ndarray
    translation: np.ndarray
    depth_intrinsics: CameraIntrinsics
    rgb_intrinsics: CameraIntrinsics

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        err = np.abs(r.T @ r - np.eye(3)).max()
        if err > ORTHONORMALITY_TOL:
            raise NonOrthonormalRotation(
                f"rotation: |R'R - I|_max = {err:.3g}")
        if abs(np.linalg.det(r) - 1.0) > ORTHONORMALITY_TOL:
            raise NonOrthonormalRotation(
                f"rotation: det(R) = {np.linalg.det(r):.12f}, expected 1")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)


def project(point_3d, intr: CameraIntrinsics):
    """Project a 3D point (mm, camera frame) to continuous pixel coordinates."""
    p = np.asarray(point_3d, dtype=float)
    z = p[..., 2]
    if np.any(z <= 0):
        raise NonPositiveDepth("cannot project points with z <= 0")
    u = intr.focal_px * p[..., 0] / z + intr.cx
    v = intr.focal_px * p[..., 1] / z + intr.cy
    return u, v


def backproject(pixel, z, intr: CameraIntrinsics):
    """Lift a pixel at known depth z (mm) back to a 3D point; inverse of project."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise NonPositiveDepth("cannot backproject with z <= 0")
    u = np.asarray(pixel[0], dtype=float)
    v = np.asarray(pixel[1], dtype=float)
    x = (u - intr.cx) * z / intr.focal_px
    y = (v - intr.cy) * z / intr.focal_px
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


_REQUIRED = {
    "depth_camera": ("focal_px", "cx", "cy", "width", "height"),
    "rgb_camera": ("focal_px", "cx", "cy", "width", "height"),
    "tof": ("gray_scale_mm", "z_offset_mm", "range_min_mm", "range_max_mm"),
    "extrinsics": ("rotation", "translation"),
}


def _section(parser, name):
    if not parser.has_section(name):
        raise MissingField(f"missing section [{name}]")
    got = parser[name]
    for key in _REQUIRED[name]:
        if key not in got:
            raise MissingField(f"missing field [{name}] {key}")
    return got


def _intrinsics(sec) -> CameraIntrinsics:
    return CameraIntrinsics(
        focal_px=float(sec["focal_px"]),
        cx=float(sec["cx"]),
        cy=float(sec["cy"]),
        width=int(sec["width"]),
        height=int(sec["height"]),
    )


def load_calibration(source) -> tuple[RigCalibration, TofConstants]:
    """Parse a rig profile (INI text, path, or file object).

    Raises MissingField / NonOrthonormalRotation / OutOfRangePrincipalPoint
    naming the offending field; never returns a partially built object.
    """
    parser = configparser.ConfigParser()
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str) and "\n" not in source and "[" not in source:
        text = Path(source).read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    parser.read_string(text)

    depth_intr = _intrinsics(_section(parser, "depth_camera"))
    rgb_intr = _intrinsics(_section(parser, "rgb_camera"))

    tof_sec = _section(parser, "tof")
    tof = TofConstants(
        gray_scale_mm=float(tof_sec["gray_scale_mm"]),
        z_offset_mm=float(tof_sec["z_offset_mm"]),
        range_min_mm=float(tof_sec["range_min_mm"]),
        range_max_mm=float(tof_sec["range_max_mm"]),
    )

    ext = _section(parser, "extrinsics")
    rotation = np.array(ext["rotation"].split(), dtype=float)
    if rotation.size != 9:
        raise MissingField(
            f"[extrinsics] rotation needs 9 values, got {rotation.size}")
    translation = np.array(ext["translation"].split(), dtype=float)
    if translation.size != 3:
        raise MissingField(
            f"[extrinsics] translation needs 3 values, got {translation.size}")

    rig = RigCalibration(
        rotation=rotation.reshape(3, 3),
        translation=translation,
        depth_intrinsics=depth_intr,
        rgb_intrinsics=rgb_intr,
    )
    return rig, tof


def default_profile_path() -> Path:
    """Path of the shipped blaze101.profile (packaged default rig)."""
    return Path(importlib.resources.files("groundsight") / "profiles" / "blaze101.profile")


def load_default_calibration() -> tuple[RigCalibration, TofConstants]:
    return load_calibration(default_profile_path())
