"""Idealized DVS simulator: grayscale frame sequences to event streams.

Per pixel, a reference log-intensity level tracks emitted events.  When the
log intensity of the next frame departs from the reference by at least one
contrast threshold, floor(|d| / theta) events fire with timestamps spread
evenly inside the inter-frame interval, and the reference advances by the
emitted amount so sub-threshold residuals carry over.  No leak events,
noise, or refractory period: the model is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from evbelt.errors import DataError
from evbelt.events import EventStream
from evbelt.pgm import read_pgm


@dataclass(frozen=True)
class SimConfig:
    """Contrast thresholds (log-intensity units) and log-domain offset."""

    theta_on: float = 0.2
    theta_off: float = 0.2
    eps: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.theta_on <= 0 or self.theta_off <= 0:
            raise DataError("contrast thresholds must be strictly positive")
        if self.eps <= 0:
            raise DataError("log-domain offset eps must be strictly positive")


@dataclass
class FrameSequence:
    """Grayscale frames at a fixed interval, values in [0, 255]."""

    width: int
    height: int
    frame_interval: int  # microseconds
    frames: np.ndarray  # (N, height, width) float or uint8

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 3 or self.frames.shape[0] < 1:
            raise DataError("frames must be a non-empty (N, H, W) array")
        if self.frames.shape[1:] != (self.height, self.width):
            raise DataError(
                f"frame shape {self.frames.shape[1:]} does not match "
                f"{self.height}x{self.width}"
            )
        if self.frame_interval <= 0:
            raise DataError("frame_interval must be positive")
        if self.frames.min() < 0 or self.frames.max() > 255:
            raise DataError("intensities must lie in [0, 255]")

    def __len__(self) -> int:
        return self.frames.shape[0]


def load_pgm_dir(path, frame_interval_us: int) -> FrameSequence:
    """Load all ``*.pgm`` files in a directory, lexicographic order."""
    files = sorted(Path(path).glob("*.pgm"))
    if not files:
        raise DataError(f"{path}: no .pgm frames found")
    frames = [read_pgm(f) for f in files]
    h, w = frames[0].shape
    for f, arr in zip(files, frames):
        if arr.shape != (h, w):
            raise DataError(f"{f}: frame size {arr.shape[::-1]} differs from first frame {(w, h)}")
    return FrameSequence(width=w, height=h, frame_interval=frame_interval_us, frames=np.stack(frames))


def simulate(seq: FrameSequence, cfg: SimConfig | None = None) -> EventStream:
    """Convert a frame sequence into a canonically ordered event stream."""
    cfg = cfg or SimConfig()
    log_frames = np.log(seq.frames.astype(np.float64) + cfg.eps)
    ref = log_frames[0].copy()
    delta = int(seq.frame_interval)

    ts_parts = []
    xs_parts = []
    ys_parts = []
    ps_parts = []
    for k in range(len(seq) - 1):
        d = log_frames[k + 1] - ref
        theta = np.where(d > 0, cfg.theta_on, cfg.theta_off)
        n = np.floor(np.abs(d) / theta).astype(np.int64)
        ref += n * theta * np.sign(d)
        active = n > 0
        if not active.any():
            continue
        counts = n[active]
        ys, xs = np.nonzero(active)
        pol = (d[active] > 0).astype(np.uint8)
        total = int(counts.sum())
        # i = 1..count within each pixel's burst
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        i = np.arange(total, dtype=np.int64) - starts + 1
        per_event_n = np.repeat(counts, counts)
        offs = np.floor(i * delta / (per_event_n + 1) + 0.5).astype(np.uint64)
        ts_parts.append(np.uint64(k * delta) + offs)
        xs_parts.append(np.repeat(xs, counts))
        ys_parts.append(np.repeat(ys, counts))
        ps_parts.append(np.repeat(pol, counts))

    if not ts_parts:
        return EventStream(seq.width, seq.height)
    return EventStream(
        seq.width,
        seq.height,
        t=np.concatenate(ts_parts),
        x=np.concatenate(xs_parts),
        y=np.concatenate(ys_parts),
        p=np.concatenate(ps_parts),
    )
