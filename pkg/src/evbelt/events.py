"""Event data model, stream container, and text/binary codecs.

An event is one polarity change reported by a sensor pixel: a microsecond
timestamp, the pixel coordinate, and a polarity (ON = brightness increase,
OFF = decrease).  Streams keep events in canonical order: non-decreasing
timestamp, ties broken by (y, x, p) ascending.

File formats (bit-exact):
  - text ``.evt``: one ``t,x,y,p`` line per event, p in {0, 1}
  - binary ``.evb``: little-endian, magic ``EVB1``, width u16, height u16,
    count u64, then per event t u64, x u16, y u16, p u8
"""

from __future__ import annotations

import enum
import struct
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from evbelt.errors import DataError

BINARY_MAGIC = b"EVB1"
HEADER_BYTES = 16
EVENT_BYTES = 13

# Packed little-endian record layout of one event in the binary format.
EVENT_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1")])

U64_MAX = np.iinfo(np.uint64).max
U16_MAX = np.iinfo(np.uint16).max


class Polarity(enum.IntEnum):
    OFF = 0
    ON = 1


class Event(NamedTuple):
    """One brightness-change report: timestamp (us), pixel, polarity."""

    t: int
    x: int
    y: int
    p: Polarity


class EventStream:
    """Time-ordered event collection with fixed sensor geometry.

    Events are stored as column arrays (t, x, y, p) in canonical order and
    are immutable after construction; streams are safe to share across
    threads for reading.
    """

    __slots__ = ("width", "height", "t", "x", "y", "p")

    def __init__(self, width: int, height: int, t=None, x=None, y=None, p=None):
        if not (0 < width <= U16_MAX) or not (0 < height <= U16_MAX):
            raise DataError(f"invalid sensor geometry {width}x{height}")
        self.width = int(width)
        self.height = int(height)
        t = np.asarray([] if t is None else t, dtype=np.uint64)
        x = np.asarray([] if x is None else x, dtype=np.uint16)
        y = np.asarray([] if y is None else y, dtype=np.uint16)
        p = np.asarray([] if p is None else p, dtype=np.uint8)
        if not (t.shape == x.shape == y.shape == p.shape) or t.ndim != 1:
            raise DataError("event columns must be 1-D and equally sized")
        self._validate_bounds(x, y, p)
        order = _canonical_order(t, x, y, p)
        if order is not None:
            t, x, y, p = t[order], x[order], y[order], p[order]
        self.t = t
        self.x = x
        self.y = y
        self.p = p
        for arr in (self.t, self.x, self.y, self.p):
            arr.setflags(write=False)

    def _validate_bounds(self, x, y, p) -> None:
        bad = np.nonzero((x >= self.width) | (y >= self.height))[0]
        if bad.size:
            i = int(bad[0])
            raise DataError(
                f"event {i} at ({int(x[i])},{int(y[i])}) outside "
                f"{self.width}x{self.height} sensor"
            )
        bad = np.nonzero(p > 1)[0]
        if bad.size:
            raise DataError(f"event {int(bad[0])} has polarity {int(p[bad[0]])}, expected 0 or 1")

    def __len__(self) -> int:
        return self.t.shape[0]

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), Polarity(int(self.p[i])))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and len(self) == len(other)
            and bool(np.array_equal(self.t, other.t))
            and bool(np.array_equal(self.x, other.x))
            and bool(np.array_equal(self.y, other.y))
            and bool(np.array_equal(self.p, other.p))
        )

    def __repr__(self) -> str:
        return f"EventStream({self.width}x{self.height}, {len(self)} events)"

    @classmethod
    def from_events(cls, width: int, height: int, events: Iterable[Event]) -> "EventStream":
        recs = list(events)
        return cls(
            width,
            height,
            t=[e[0] for e in recs],
            x=[e[1] for e in recs],
            y=[e[2] for e in recs],
            p=[int(e[3]) for e in recs],
        )

    def signed_polarity(self) -> np.ndarray:
        """Polarity as int8 in {-1, +1} (ON = +1)."""
        return np.where(self.p == 1, 1, -1).astype(np.int8)


def _canonical_order(t, x, y, p):
    """Return a sorting index for (t, y, x, p) order, or None if already sorted."""
    if t.shape[0] < 2:
        return None
    # Cheap pre-check: most streams arrive already canonical.
    if _is_canonical(t, x, y, p):
        return None
    return np.lexsort((p, x, y, t))


def _is_canonical(t, x, y, p) -> bool:
    if t.shape[0] < 2:
        return True
    a, b = slice(None, -1), slice(1, None)
    lt = t[a] < t[b]
    eq = t[a] == t[b]
    if not np.all(lt | eq):
        return False
    # Within equal timestamps require (y, x, p) non-decreasing lexicographically.
    ylt = y[a] < y[b]
    yeq = y[a] == y[b]
    xlt = x[a] < x[b]
    xeq = x[a] == x[b]
    ple = p[a] <= p[b]
    ok_ties = ylt | (yeq & (xlt | (xeq & ple)))
    return bool(np.all(lt | ok_ties))


def parse_text(text: str, width: int, height: int) -> EventStream:
    """Parse ``t,x,y,p`` lines into a canonically sorted stream.

    Lines may arrive unsorted; empty lines are ignored.  Raises DataError
    naming the 1-based line number of the first malformed record.
    """
    ts: list[int] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataError(f"line {lineno}: expected 4 comma-separated fields, got {len(parts)}")
        try:
            t, x, y, p = (int(s) for s in parts)
        except ValueError:
            raise DataError(f"line {lineno}: non-integer field in {line!r}") from None
        if t < 0 or t > U64_MAX:
            raise DataError(f"line {lineno}: timestamp {t} outside unsigned 64-bit range")
        if p not in (0, 1):
            raise DataError(f"line {lineno}: polarity {p} not in {{0,1}}")
        if not (0 <= x < width) or not (0 <= y < height):
            raise DataError(f"line {lineno}: pixel ({x},{y}) outside {width}x{height} sensor")
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ps.append(p)
    return EventStream(width, height, t=ts, x=xs, y=ys, p=ps)


def write_text(stream: EventStream) -> str:
    """Render a stream as ``t,x,y,p`` lines in canonical order."""
    if len(stream) == 0:
        return ""
    lines = [
        f"{int(t)},{int(x)},{int(y)},{int(p)}"
        for t, x, y, p in zip(stream.t, stream.x, stream.y, stream.p)
    ]
    return "\n".join(lines) + "\n"


def encode_binary(stream: EventStream) -> bytes:
    """Serialize a stream to the ``EVB1`` binary layout."""
    header = struct.pack("<4sHHQ", BINARY_MAGIC, stream.width, stream.height, len(stream))
    recs = np.empty(len(stream), dtype=EVENT_DTYPE)
    recs["t"] = stream.t
    recs["x"] = stream.x
    recs["y"] = stream.y
    recs["p"] = stream.p
    return header + recs.tobytes()


def decode_binary(payload: bytes) -> EventStream:
    """Decode the ``EVB1`` binary layout; exact inverse of encode_binary."""
    if len(payload) < HEADER_BYTES:
        raise DataError(f"payload truncated: {len(payload)} bytes, header needs {HEADER_BYTES}")
    if payload[:4] != BINARY_MAGIC:
        raise DataError(f"bad magic {payload[:4]!r}, expected {BINARY_MAGIC!r}")
    width = int(np.frombuffer(payload, "<u2", count=1, offset=4)[0])
    height = int(np.frombuffer(payload, "<u2", count=1, offset=6)[0])
    count = int(np.frombuffer(payload, "<u8", count=1, offset=8)[0])
    body = len(payload) - HEADER_BYTES
    if body != count * EVENT_BYTES:
        if body < count * EVENT_BYTES:
            raise DataError(f"payload truncated: {count} events declared, body holds {body} bytes")
        raise DataError(f"declared count {count} does not match body of {body} bytes")
    recs = np.frombuffer(payload, EVENT_DTYPE, count=count, offset=HEADER_BYTES)
    return EventStream(width, height, t=recs["t"], x=recs["x"], y=recs["y"], p=recs["p"])


def read_stream(path, width: int | None = None, height: int | None = None) -> EventStream:
    """Load a stream from ``.evb`` binary or ``.evt`` text (sniffed by magic).

    Text input carries no geometry, so width/height are required for it.
    """
    raw = Path(path).read_bytes()
    if raw[:4] == BINARY_MAGIC:
        return decode_binary(raw)
    if width is None or height is None:
        raise DataError(f"{path}: text event input needs explicit sensor width/height")
    return parse_text(raw.decode("ascii"), width, height)


def write_stream(path, stream: EventStream) -> None:
    """Write ``.evb`` binary or ``.evt`` text depending on the suffix."""
    path = Path(path)
    if path.suffix == ".evt":
        path.write_text(write_text(stream))
    else:
        path.write_bytes(encode_binary(stream))
