"""Render event streams into 2D frames: fixed-duration, fixed-count, and
ROI-gated accumulation.

A frame is the per-pixel sum of signed polarities (+1 ON, -1 OFF) of the
events it covers.  The three strategies differ only in where frame
boundaries fall:

  - fixed duration: boundaries every ``duration`` microseconds
  - fixed count: boundaries every ``n`` events
  - ROI-gated count: boundaries every ``n`` events *inside* a region of
    interest; all events are still rendered into the open frame

Count-based trailing partial frames are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from evbelt.errors import DataError
from evbelt.events import EventStream
from evbelt.pgm import write_pgm


@dataclass(frozen=True)
class Roi:
    """Rectangle, inclusive-exclusive pixel bounds."""

    x0: int
    y0: int
    x1: int
    y1: int

    def validate(self, width: int, height: int) -> None:
        if not (0 <= self.x0 < self.x1 <= width) or not (0 <= self.y0 < self.y1 <= height):
            raise DataError(f"roi {self} invalid for {width}x{height} sensor")

    def contains(self, x, y):
        return (x >= self.x0) & (x < self.x1) & (y >= self.y0) & (y < self.y1)

    @classmethod
    def full(cls, width: int, height: int) -> "Roi":
        return cls(0, 0, width, height)


@dataclass
class EventFrame:
    """Signed accumulation image with its time span and trigger count.

    ``t_end`` is exclusive for fixed-duration frames and equals the last
    event's timestamp for count-based frames.  ``roi_count`` is the number
    of events that advanced the frame trigger (all events for duration
    mode, exactly n for the count modes).
    """

    width: int
    height: int
    values: np.ndarray  # (height, width) int32
    t_start: int
    t_end: int
    event_count: int
    roi_count: int

    def __eq__(self, other):
        if not isinstance(other, EventFrame):
            return NotImplemented
        return (
            (self.width, self.height, self.t_start, self.t_end, self.event_count, self.roi_count)
            == (other.width, other.height, other.t_start, other.t_end, other.event_count, other.roi_count)
            and bool(np.array_equal(self.values, other.values))
        )


def _render_slice(stream: EventStream, lo: int, hi: int) -> np.ndarray:
    """Signed per-pixel sum of events[lo:hi]."""
    values = np.zeros(stream.height * stream.width, dtype=np.int64)
    if hi > lo:
        flat = stream.y[lo:hi].astype(np.int64) * stream.width + stream.x[lo:hi].astype(np.int64)
        signed = np.where(stream.p[lo:hi] == 1, 1, -1)
        values = np.bincount(flat, weights=signed, minlength=values.size).astype(np.int64)
    return values.reshape(stream.height, stream.width).astype(np.int32)


def accumulate_fixed_duration(stream: EventStream, duration: int) -> list[EventFrame]:
    """One frame per ``duration``-microsecond window, up to the last event.

    Windows inside the covered span with zero events are still emitted so
    frame spacing stays uniform; nothing is emitted past the window that
    holds the last event.
    """
    if duration <= 0:
        raise DataError("duration must be positive")
    if len(stream) == 0:
        return []
    windows = (stream.t // np.uint64(duration)).astype(np.int64)
    last = int(windows[-1])
    bounds = np.searchsorted(windows, np.arange(last + 2))
    frames = []
    for k in range(last + 1):
        lo, hi = int(bounds[k]), int(bounds[k + 1])
        frames.append(
            EventFrame(
                width=stream.width,
                height=stream.height,
                values=_render_slice(stream, lo, hi),
                t_start=k * duration,
                t_end=(k + 1) * duration,
                event_count=hi - lo,
                roi_count=hi - lo,
            )
        )
    return frames


def accumulate_fixed_count(stream: EventStream, n: int) -> list[EventFrame]:
    """Consecutive groups of exactly ``n`` events; trailing partial dropped."""
    if n < 1:
        raise DataError("event count per frame must be >= 1")
    num = len(stream) // n
    frames = []
    for k in range(num):
        lo, hi = k * n, (k + 1) * n
        frames.append(
            EventFrame(
                width=stream.width,
                height=stream.height,
                values=_render_slice(stream, lo, hi),
                t_start=int(stream.t[lo]),
                t_end=int(stream.t[hi - 1]),
                event_count=n,
                roi_count=n,
            )
        )
    return frames


def accumulate_roi_count(stream: EventStream, n: int, roi: Roi) -> list[EventFrame]:
    """Close a frame whenever ``n`` events landed inside ``roi``.

    All events are rendered into the open frame; only in-ROI events advance
    the trigger counter.  The event that completes the count closes the
    frame and is included in it.  The trailing partial frame is dropped.
    """
    if n < 1:
        raise DataError("event count per frame must be >= 1")
    roi.validate(stream.width, stream.height)
    if len(stream) == 0:
        return []
    inside = roi.contains(stream.x.astype(np.int64), stream.y.astype(np.int64))
    cum = np.cumsum(inside)
    total = int(cum[-1])
    num = total // n
    if num == 0:
        return []
    closes = np.searchsorted(cum, np.arange(1, num + 1) * n, side="left")
    frames = []
    lo = 0
    for k in range(num):
        hi = int(closes[k]) + 1
        frames.append(
            EventFrame(
                width=stream.width,
                height=stream.height,
                values=_render_slice(stream, lo, hi),
                t_start=int(stream.t[lo]),
                t_end=int(stream.t[hi - 1]),
                event_count=hi - lo,
                roi_count=n,
            )
        )
        lo = hi
    return frames


def render_gray(frame: EventFrame, clip: int = 3) -> np.ndarray:
    """Map signed values to bytes: 128 neutral, +clip -> 255, -clip -> 1."""
    if clip < 1:
        raise DataError("clip must be >= 1")
    clamped = np.clip(frame.values, -clip, clip).astype(np.float64)
    return (128 + np.floor(127.0 * clamped / clip + 0.5)).astype(np.uint8)


def frame_midpoint_us(frame: EventFrame) -> int:
    return (frame.t_start + frame.t_end) // 2


def midpoint_source_index(frame: EventFrame, interval_us: int, num_source_frames: int) -> int:
    """Ground-truth frame index whose interval holds this frame's midpoint."""
    idx = frame_midpoint_us(frame) // interval_us
    return int(min(max(idx, 0), num_source_frames - 1))


def write_frames_dir(frames: list[EventFrame], outdir, clip: int = 3, labels=None) -> None:
    """Emit numbered PGM frames plus a ``frames.json`` index.

    ``labels``, when given, is a per-frame class list written alongside as
    ``labels.csv`` (frame_index,class).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    index = []
    for i, frame in enumerate(frames):
        write_pgm(outdir / f"frame_{i:05d}.pgm", render_gray(frame, clip))
        index.append(
            {
                "index": i,
                "t_start_us": frame.t_start,
                "t_end_us": frame.t_end,
                "event_count": frame.event_count,
                "roi_event_count": frame.roi_count,
            }
        )
    with open(outdir / "frames.json", "w") as fh:
        json.dump(index, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if labels is not None:
        if len(labels) != len(frames):
            raise DataError("labels length does not match frame count")
        with open(outdir / "labels.csv", "w") as fh:
            fh.write("frame_index,class\n")
            for i, cls in enumerate(labels):
                fh.write(f"{i},{int(cls)}\n")


def read_frames_index(path) -> list[dict]:
    with open(Path(path) / "frames.json") as fh:
        return json.load(fh)
