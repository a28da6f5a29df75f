"""Minimal binary PGM (P5) and PBM (P4) readers/writers used across the pipeline."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from evbelt.errors import DataError

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def _read_tokens(raw: bytes, count: int):
    """Pull whitespace/comment-separated header tokens, return (tokens, offset)."""
    tokens = []
    pos = 0
    for _ in range(count):
        m = _TOKEN.match(raw, pos)
        if not m:
            raise DataError("truncated netpbm header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos + 1  # single whitespace byte after last header token


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM into a (H, W) uint8 array."""
    raw = Path(path).read_bytes()
    tokens, offset = _read_tokens(raw, 4)
    if tokens[0] != b"P5":
        raise DataError(f"{path}: expected P5 PGM, got {tokens[0]!r}")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise DataError(f"{path}: only maxval 255 supported, got {maxval}")
    data = np.frombuffer(raw, np.uint8, count=width * height, offset=offset)
    if data.size != width * height:
        raise DataError(f"{path}: pixel payload truncated")
    return data.reshape(height, width).copy()


def write_pgm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise DataError("PGM image must be 2-D")
    if image.dtype != np.uint8:
        if image.min() < 0 or image.max() > 255:
            raise DataError("PGM values must fit in [0, 255]")
        image = image.astype(np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_pbm(path) -> np.ndarray:
    """Read a binary PBM into a (H, W) bool array (True = black/foreground)."""
    raw = Path(path).read_bytes()
    tokens, offset = _read_tokens(raw, 3)
    if tokens[0] != b"P4":
        raise DataError(f"{path}: expected P4 PBM, got {tokens[0]!r}")
    width, height = int(tokens[1]), int(tokens[2])
    row_bytes = (width + 7) // 8
    data = np.frombuffer(raw, np.uint8, count=row_bytes * height, offset=offset)
    if data.size != row_bytes * height:
        raise DataError(f"{path}: bitmap payload truncated")
    bits = np.unpackbits(data.reshape(height, row_bytes), axis=1)[:, :width]
    return bits.astype(bool)


def write_pbm(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise DataError("PBM mask must be 2-D")
    h, w = mask.shape
    packed = np.packbits(mask.astype(np.uint8), axis=1)
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode("ascii"))
        fh.write(packed.tobytes())
