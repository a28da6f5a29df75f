"""Accumulation strategies vs hand cases and a brute-force replay oracle."""

import numpy as np
import pytest

from evbelt.accumulate import (
    EventFrame,
    Roi,
    accumulate_fixed_count,
    accumulate_fixed_duration,
    accumulate_roi_count,
    render_gray,
)
from evbelt.errors import DataError
from evbelt.events import Event, EventStream


def make_stream(events, width=8, height=8):
    return EventStream.from_events(width, height, [Event(*e) for e in events])


def random_stream(rng, width=8, height=8, n=None):
    n = int(rng.integers(0, 400)) if n is None else n
    return EventStream(
        width,
        height,
        t=np.sort(rng.integers(0, 5000, size=n).astype(np.uint64)),
        x=rng.integers(0, width, size=n),
        y=rng.integers(0, height, size=n),
        p=rng.integers(0, 2, size=n),
    )


# Brute-force oracles: replay events one at a time.

def replay_duration(stream, duration):
    if len(stream) == 0:
        return []
    last = int(stream.t[-1]) // duration
    frames = [np.zeros((stream.height, stream.width), dtype=np.int64) for _ in range(last + 1)]
    counts = [0] * (last + 1)
    for e in stream:
        k = e.t // duration
        frames[k][e.y, e.x] += 1 if e.p == 1 else -1
        counts[k] += 1
    return [
        (vals, k * duration, (k + 1) * duration, counts[k])
        for k, vals in enumerate(frames)
    ]


def replay_count(stream, n, roi=None):
    frames = []
    vals = np.zeros((stream.height, stream.width), dtype=np.int64)
    trigger = 0
    total = 0
    t_first = None
    for e in stream:
        if t_first is None:
            t_first = e.t
        vals[e.y, e.x] += 1 if e.p == 1 else -1
        total += 1
        if roi is None or (roi.x0 <= e.x < roi.x1 and roi.y0 <= e.y < roi.y1):
            trigger += 1
        if trigger == n:
            frames.append((vals, t_first, e.t, total))
            vals = np.zeros((stream.height, stream.width), dtype=np.int64)
            trigger = 0
            total = 0
            t_first = None
    return frames


def assert_matches_oracle(frames, oracle):
    assert len(frames) == len(oracle)
    for got, (vals, t_start, t_end, count) in zip(frames, oracle):
        assert np.array_equal(got.values, vals)
        assert got.t_start == t_start
        assert got.t_end == t_end
        assert got.event_count == count


class TestFixedDuration:
    def test_empty_stream(self):
        assert accumulate_fixed_duration(make_stream([]), 10) == []

    def test_hand_accumulation(self):
        s = make_stream([(0, 0, 0, 1), (5, 0, 0, 1), (9, 0, 0, 1)])
        frames = accumulate_fixed_duration(s, 10)
        assert len(frames) == 1
        assert frames[0].values[0, 0] == 3
        assert (frames[0].t_start, frames[0].t_end) == (0, 10)

    def test_polarity_cancellation(self):
        s = make_stream([(1, 0, 0, 1), (2, 0, 0, 0)])
        frames = accumulate_fixed_duration(s, 10)
        assert len(frames) == 1
        assert frames[0].values[0, 0] == 0
        assert frames[0].event_count == 2

    def test_empty_interior_windows_emitted(self):
        s = make_stream([(1, 0, 0, 1), (35, 1, 1, 1)])
        frames = accumulate_fixed_duration(s, 10)
        assert len(frames) == 4
        assert frames[1].event_count == 0
        assert frames[2].event_count == 0

    def test_matches_oracle_random(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            s = random_stream(rng)
            dur = int(rng.integers(1, 300))
            assert_matches_oracle(accumulate_fixed_duration(s, dur), replay_duration(s, dur))


class TestFixedCount:
    def test_trailing_partial_dropped(self):
        s = make_stream([(1, 0, 0, 1), (2, 1, 0, 1), (3, 2, 0, 1)])
        frames = accumulate_fixed_count(s, 2)
        assert len(frames) == 1
        assert frames[0].event_count == 2
        assert (frames[0].t_start, frames[0].t_end) == (1, 2)

    def test_n_equals_one(self):
        s = make_stream([(1, 0, 0, 1), (2, 1, 0, 0)])
        frames = accumulate_fixed_count(s, 1)
        assert len(frames) == 2
        assert frames[0].values[0, 0] == 1
        assert frames[1].values[0, 1] == -1
        for f in frames:
            assert np.abs(f.values).sum() == 1

    def test_exact_multiple_gives_k_frames(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            k, n = int(rng.integers(1, 6)), int(rng.integers(1, 9))
            s = random_stream(rng, n=k * n)
            frames = accumulate_fixed_count(s, n)
            assert len(frames) == k
            assert all(f.event_count == n for f in frames)

    def test_matches_oracle_random(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            s = random_stream(rng)
            n = int(rng.integers(1, 50))
            assert_matches_oracle(accumulate_fixed_count(s, n), replay_count(s, n))


class TestRoiCount:
    def test_no_events_in_roi(self):
        s = make_stream([(1, 6, 6, 1), (2, 7, 7, 1)])
        assert accumulate_roi_count(s, 1, Roi(0, 0, 2, 2)) == []

    def test_hand_walk_of_trigger(self):
        roi = Roi(0, 0, 2, 2)
        # A(in), B(out), C(in), D(out); n=2 closes at C, D is trailing remainder.
        s = make_stream([(1, 0, 0, 1), (2, 5, 5, 1), (3, 1, 1, 1), (4, 6, 6, 1)])
        frames = accumulate_roi_count(s, 2, roi)
        assert len(frames) == 1
        assert frames[0].event_count == 3
        assert frames[0].roi_count == 2
        assert (frames[0].t_start, frames[0].t_end) == (1, 3)
        assert frames[0].values[5, 5] == 1  # out-of-ROI events are rendered

    def test_full_sensor_roi_degenerates_to_fixed_count(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            s = random_stream(rng)
            n = int(rng.integers(1, 40))
            full = accumulate_roi_count(s, n, Roi.full(s.width, s.height))
            assert full == accumulate_fixed_count(s, n)

    def test_matches_oracle_random(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            s = random_stream(rng)
            n = int(rng.integers(1, 20))
            roi = Roi(1, 1, 5, 6)
            assert_matches_oracle(accumulate_roi_count(s, n, roi), replay_count(s, n, roi))

    def test_invalid_roi(self):
        with pytest.raises(DataError):
            accumulate_roi_count(make_stream([(1, 0, 0, 1)]), 1, Roi(0, 0, 9, 9))


class TestPartitionInvariant:
    def test_each_event_in_exactly_one_frame(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            s = random_stream(rng, n=240)
            for frames, dropped in [
                (accumulate_fixed_duration(s, 500), 0),
                (accumulate_fixed_count(s, 50), len(s) % 50),
            ]:
                assert sum(f.event_count for f in frames) == len(s) - dropped
                on = int((s.p == 1).sum())
                off = len(s) - on
                if not dropped:
                    assert sum(int(f.values.sum()) for f in frames) == on - off


class TestRenderGray:
    def zero_frame(self):
        return EventFrame(4, 4, np.zeros((4, 4), dtype=np.int32), 0, 10, 0, 0)

    def test_all_zero_maps_to_128(self):
        assert np.all(render_gray(self.zero_frame()) == 128)

    def test_endpoints(self):
        f = self.zero_frame()
        f.values[0, 0] = 3
        f.values[0, 1] = -3
        f.values[0, 2] = 99
        f.values[0, 3] = -99
        img = render_gray(f, clip=3)
        assert img[0, 0] == 255
        assert img[0, 1] == 1
        assert img[0, 2] == 255  # clamped
        assert img[0, 3] == 1

    def test_half_clip(self):
        f = self.zero_frame()
        f.values[0, 0] = 2
        assert render_gray(f, clip=4)[0, 0] == 192
