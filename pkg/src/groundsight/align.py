"""Mapping RGB pixels onto the depth grid.

A depth pixel (x, y) carrying vertical distance z lands in the RGB image at

    u = x*w11 + y*w12 + w13 + w14/z
    v = x*w21 + y*w22 + w23 + w24/z

The eight coefficients are identified symbolically from the full 3D
reprojection chain (backproject in the depth camera, rigid transform,
project in the RGB camera). Rigs whose rotation introduces terms this form
cannot carry (out-of-plane rotation beyond a 0.5 px budget, significant
z-translation) are rejected rather than silently approximated. The chain
itself is kept available as `oracle_reproject` so the closed form can always
be checked against independent geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calib import RigCalibration, backproject, project
from .depth import VerticalDepthMap
from .errors import (
    DegenerateCalibration,
    DimensionMismatch,
    NonPositiveDepth,
    PointBehindCamera,
)

APPROXIMATION_BUDGET_PX = 0.5
_VALIDATION_Z_MM = (300.0, 380.0, 480.0, 640.0, 900.0, 1350.0, 2000.0)


@dataclass(frozen=True)
class RgbFrame:
    pixels: np.ndarray  # uint8, (height, width, 3)
    timestamp_ms: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.uint8)
        if p.ndim != 3 or p.shape[2] != 3:
            raise DimensionMismatch("RGB frame must be (h, w, 3)")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class AlignedRgbFrame:
    """RGB resampled onto the depth grid; source_valid marks pixels that
    actually received an in-bounds RGB sample."""

    pixels: np.ndarray        # uint8, (height, width, 3) at depth resolution
    source_valid: np.ndarray  # bool
    timestamp_ms: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.uint8)
        v = np.asarray(self.source_valid, dtype=bool)
        if p.shape[:2] != v.shape:
            raise DimensionMismatch("pixel/validity shapes differ")
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "pixels", p)
        object.__setattr__(self, "source_valid", v)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class AlignmentMap:
    """Coefficients (w11..w14; w21..w24) of the affine-plus-inverse-depth map."""

    coefficients: np.ndarray  # float64, (2, 4)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64).reshape(2, 4)
        if not np.all(np.isfinite(c)):
            raise DegenerateCalibration("non-finite alignment coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def dump(self) -> str:
        names = ("w11", "w12", "w13", "w14"), ("w21", "w22", "w23", "w24")
        lines = []
        for row, labels in zip(self.coefficients, names):
            lines.extend(f"{n} = {v:.9g}" for n, v in zip(labels, row))
        return "\n".join(lines) + "\n"


def oracle_reproject(rig: RigCalibration, x, y, z):
    """Full 3D reprojection of a depth pixel into the RGB image.

    Independent of AlignmentMap; used to validate and to cross-check it.
    """
    p = backproject((x, y), z, rig.depth_intrinsics)
    q = p @ rig.rotation.T + rig.translation
    if np.any(q[..., 2] <= 0):
        raise PointBehindCamera("transformed point has z <= 0 in RGB frame")
    return project(q, rig.rgb_intrinsics)


def build_alignment_map(rig: RigCalibration) -> AlignmentMap:
    """Identify the eight coefficients against the reprojection chain.

    With the depth camera's (f_d, cxd, cyd), the RGB camera's (f_c, cxc, cyc),
    rotation rows r_i and translation t, and assuming the third rotation row
    is ~(0,0,1) and t_z ~ 0, the chain collapses exactly to the runtime form.
    The constructed map is then validated against `oracle_reproject` on a
    grid spanning the frame and the working depth range; residuals above the
    0.5 px budget reject the rig.
    """
    d, c = rig.depth_intrinsics, rig.rgb_intrinsics
    r = rig.rotation
    t = rig.translation
    r33 = r[2, 2]
    if r33 <= 0:
        raise DegenerateCalibration("rotation points the cameras apart")

    coeff = np.empty((2, 4))
    for i, (center, t_i) in enumerate(((c.cx, t[0]), (c.cy, t[1]))):
        w1 = c.focal_px * r[i, 0] / (d.focal_px * r33)
        w2 = c.focal_px * r[i, 1] / (d.focal_px * r33)
        w3 = center + c.focal_px * r[i, 2] / r33 - w1 * d.cx - w2 * d.cy
        w4 = c.focal_px * t_i / r33
        coeff[i] = (w1, w2, w3, w4)
    amap = AlignmentMap(coefficients=coeff)

    xs = np.linspace(0, d.width - 1, 17)
    ys = np.linspace(0, d.height - 1, 13)
    gx, gy = np.meshgrid(xs, ys)
    worst = 0.0
    for z in _VALIDATION_Z_MM:
        ua, va = apply_alignment(amap, gx, gy, z)
        uo, vo = oracle_reproject(rig, gx, gy, np.full_like(gx, z))
        worst = max(worst, float(np.abs(ua - uo).max()), float(np.abs(va - vo).max()))
    if worst > APPROXIMATION_BUDGET_PX:
        raise DegenerateCalibration(
            f"reprojection chain not representable: residual {worst:.3g} px "
            f"exceeds {APPROXIMATION_BUDGET_PX} px")
    return amap


def apply_alignment(amap: AlignmentMap, x, y, z):
    """Evaluate the runtime mapping; z in mm must be positive."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise NonPositiveDepth("alignment requires z > 0")
    (w11, w12, w13, w14), (w21, w22, w23, w24) = amap.coefficients
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = x * w11 + y * w12 + w13 + w14 / z
    v = x * w21 + y * w22 + w23 + w24 / z
    return u, v


def warp_rgb_to_depth(rgb: RgbFrame, z_map: VerticalDepthMap,
                      amap: AlignmentMap) -> AlignedRgbFrame:
    """Resample the RGB frame onto the depth grid by nearest-neighbor lookup.

    Depth pixels that are invalid or whose mapped coordinates fall outside
    the RGB frame come out black with source_valid = 0.
    """
    h, w = z_map.z_mm.shape
    out = np.zeros((h, w, 3), dtype=np.uint8)
    valid = np.zeros((h, w), dtype=bool)
    rows, cols = np.nonzero(z_map.valid)
    if rows.size:
        z = z_map.z_mm[rows, cols]
        u, v = apply_alignment(amap, cols.astype(float), rows.astype(float), z)
        ui = np.rint(u).astype(np.int64)
        vi = np.rint(v).astype(np.int64)
        inb = (ui >= 0) & (ui < rgb.width) & (vi >= 0) & (vi < rgb.height)
        out[rows[inb], cols[inb]] = rgb.pixels[vi[inb], ui[inb]]
        valid[rows[inb], cols[inb]] = True
    return AlignedRgbFrame(pixels=out, source_valid=valid,
                           timestamp_ms=z_map.timestamp_ms)
