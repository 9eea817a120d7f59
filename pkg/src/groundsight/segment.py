"""Soil / residue classification on the aligned RGB frame.

Residue is detected by a bright + excess-yellow rule (straw is bright and
yellow against dark soil), grown by a square dilation to cover mixed edge
pixels, then subtracted from the depth map's validity mask. Both thresholds
and the radius are configurable; an external-mask mode lets a precomputed
mask replace the color rule entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import pnm
from .align import AlignedRgbFrame
from .depth import VerticalDepthMap
from .errors import ConfigInvalid, DimensionMismatch

DEFAULT_BRIGHTNESS_THRESHOLD = 120.0
DEFAULT_EXCESS_YELLOW_THRESHOLD = 40.0
DEFAULT_DILATION_RADIUS = 2


@dataclass(frozen=True)
class ColorClassifierConfig:
    brightness_threshold: float = DEFAULT_BRIGHTNESS_THRESHOLD
    excess_yellow_threshold: float = DEFAULT_EXCESS_YELLOW_THRESHOLD
    mode: str = "threshold"  # "threshold" | "external-mask"

    def __post_init__(self):
        if not 0 <= self.brightness_threshold <= 255:
            raise ConfigInvalid("brightness_threshold outside 0..255")
        if self.mode not in ("threshold", "external-mask"):
            raise ConfigInvalid(f"unknown classifier mode {self.mode!r}")


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel soil(1) / residue-or-invalid(0) classification, depth grid."""

    bits: np.ndarray  # bool

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def soil_fraction(self) -> float:
        return float(self.bits.mean())


def classify_residue(frame: AlignedRgbFrame,
                     cfg: ColorClassifierConfig) -> BinaryMask:
    """Per-pixel soil/residue rule; pixels without a valid RGB sample are 0."""
    rgb = frame.pixels.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    brightness = (r + g + b) / 3.0
    excess_yellow = r + g - 2.0 * b
    residue = (brightness >= cfg.brightness_threshold) & \
              (excess_yellow >= cfg.excess_yellow_threshold)
    return BinaryMask(bits=~residue & frame.source_valid)


def dilate(mask: BinaryMask, radius: int) -> BinaryMask:
    """Grow the residue (0) region by a square element of half-width `radius`.

    Pixels beyond the image border count as soil, so the frame edge never
    spuriously erodes. Radius 0 is the identity.
    """
    if radius < 0:
        raise ConfigInvalid("dilation radius must be >= 0")
    if radius == 0:
        return mask
    bits = ndimage.minimum_filter(mask.bits.astype(np.uint8),
                                  size=2 * radius + 1,
                                  mode="constant", cval=1)
    return BinaryMask(bits=bits.astype(bool))


def apply_mask(z_map: VerticalDepthMap, mask: BinaryMask) -> VerticalDepthMap:
    """AND the mask into the depth map's validity; z values untouched."""
    if (mask.height, mask.width) != z_map.z_mm.shape:
        raise DimensionMismatch(
            f"mask {mask.width}x{mask.height} vs map {z_map.width}x{z_map.height}")
    return VerticalDepthMap(z_mm=z_map.z_mm, valid=z_map.valid & mask.bits,
                            timestamp_ms=z_map.timestamp_ms)


def write_mask(path, mask: BinaryMask):
    """Persist as 8-bit PGM: 0 = residue/invalid, 255 = soil."""
    pnm.write_pgm8(path, np.where(mask.bits, 255, 0).astype(np.uint8))


def read_mask(path) -> BinaryMask:
    img = pnm.read_pnm(path)
    if img.ndim != 2:
        raise DimensionMismatch("mask files must be single channel")
    return BinaryMask(bits=img > 127)
