"""Minimal binary PNM codec (P5 grayscale 8/16-bit, P6 color 8-bit).

16-bit samples are big-endian as the format dictates. Writes are atomic
(temp file + rename) so a crashed run never leaves a truncated image.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import GroundSightError


class PnmFormatError(GroundSightError):
    pass


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode())


def _header(magic: bytes, width: int, height: int, maxval: int) -> bytes:
    return b"%s\n%d %d\n%d\n" % (magic, width, height, maxval)


def write_pgm16(path, image: np.ndarray):
    """Write a 16-bit single-channel image as binary PGM (P5, maxval 65535)."""
    img = np.ascontiguousarray(image, dtype=np.uint16)
    if img.ndim != 2:
        raise PnmFormatError("expected a 2-D array")
    data = _header(b"P5", img.shape[1], img.shape[0], 65535)
    data += img.astype(">u2").tobytes()
    atomic_write_bytes(path, data)


def write_pgm8(path, image: np.ndarray):
    """Write an 8-bit single-channel image as binary PGM (P5, maxval 255)."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if img.ndim != 2:
        raise PnmFormatError("expected a 2-D array")
    atomic_write_bytes(path, _header(b"P5", img.shape[1], img.shape[0], 255) + img.tobytes())


def write_ppm(path, image: np.ndarray):
    """Write an 8-bit RGB image as binary PPM (P6)."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise PnmFormatError("expected an (h, w, 3) array")
    atomic_write_bytes(path, _header(b"P6", img.shape[1], img.shape[0], 255) + img.tobytes())


def _read_tokens(data: bytes, count: int):
    """Yield header tokens, skipping whitespace and # comments; return end offset."""
    tokens = []
    i = 0
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise PnmFormatError("truncated header")
        tokens.append(data[start:i])
    return tokens, i + 1  # single whitespace after maxval


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM/PPM; returns uint8 or uint16 array, (h,w) or (h,w,3)."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P5", b"P6"):
        raise PnmFormatError(f"unsupported magic {data[:2]!r}")
    color = data[:2] == b"P6"
    tokens, offset = _read_tokens(data[2:], 3)
    width, height, maxval = (int(t) for t in tokens)
    offset += 2
    channels = 3 if color else 1
    if maxval == 255:
        dtype, itemsize = np.uint8, 1
    elif maxval == 65535:
        if color:
            raise PnmFormatError("16-bit PPM not supported")
        dtype, itemsize = ">u2", 2
    else:
        raise PnmFormatError(f"unsupported maxval {maxval}")
    need = width * height * channels * itemsize
    raw = data[offset : offset + need]
    if len(raw) != need:
        raise PnmFormatError("truncated pixel data")
    arr = np.frombuffer(raw, dtype=dtype)
    if dtype == ">u2":
        arr = arr.astype(np.uint16)
    shape = (height, width, 3) if color else (height, width)
    return arr.reshape(shape)
