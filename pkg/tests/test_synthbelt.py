"""Scene generator: determinism, label structure, masks, visibility proxy."""

import numpy as np
import pytest

from evbelt.accumulate import EventFrame, Roi
from evbelt.errors import DataError
from evbelt.simulate import SimConfig, simulate
from evbelt.synthbelt import (
    BELT_PRESENT_CLASSES,
    CLASS_UNFASTENED,
    GroundTruth,
    SceneConfig,
    generate_scene,
    load_scene,
    save_scene,
    visibility_comparison,
    visibility_rate,
)


def run_lengths(labels):
    runs = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[i - 1]:
            runs.append((int(labels[start]), i - start))
            start = i
    return runs


def test_same_seed_is_bit_identical():
    cfg = SceneConfig(seed=42)
    seq_a, truth_a = generate_scene(cfg)
    seq_b, truth_b = generate_scene(cfg)
    assert np.array_equal(seq_a.frames, seq_b.frames)
    assert np.array_equal(truth_a.labels, truth_b.labels)
    assert np.array_equal(truth_a.belt_mask, truth_b.belt_mask)


def test_label_cycle_structure():
    cfg = SceneConfig(seed=1, num_cycles=2)
    _, truth = generate_scene(cfg)
    runs = run_lengths(truth.labels)
    assert [cls for cls, _ in runs] == [1, 2, 0, 3, 1, 2, 0, 3]
    counts = {c: sum(1 for cls, _ in runs if cls == c) for c in range(4)}
    assert counts == {0: 2, 1: 2, 2: 2, 3: 2}


def test_mask_empty_exactly_on_unfastened_frames():
    _, truth = generate_scene(SceneConfig(seed=3))
    for k in range(len(truth.labels)):
        empty = not truth.belt_mask[k].any()
        assert empty == (int(truth.labels[k]) == CLASS_UNFASTENED)


def test_static_unfastened_segment_emits_no_events():
    cfg = SceneConfig(seed=5, head_motion_amp=0.0, background_burst_prob=0.0)
    seq, truth = generate_scene(cfg)
    first_run = cfg.static_len  # recording opens with an unfastened run
    segment = seq.frames[:first_run]
    assert all(np.array_equal(segment[0], f) for f in segment[1:])
    from evbelt.simulate import FrameSequence

    stream = simulate(FrameSequence(seq.width, seq.height, seq.frame_interval, segment))
    assert len(stream) == 0


def test_head_stays_out_of_torso_roi():
    cfg = SceneConfig(seed=2, background_burst_prob=0.0)
    seq, truth = generate_scene(cfg)
    roi = truth.torso_roi
    stream = simulate(seq)
    inside = roi.contains(stream.x.astype(int), stream.y.astype(int))
    # Events inside the ROI during beltless frames would be head spill.
    unfastened = truth.labels == CLASS_UNFASTENED
    for e_idx in np.nonzero(inside)[0][:2000]:
        src = int(stream.t[e_idx] // truth.frame_interval)
        assert not unfastened[min(src, len(truth.labels) - 1)]


class TestVisibilityRate:
    def make_truth(self, mask):
        return GroundTruth(
            labels=np.zeros(4, dtype=np.int64),
            belt_mask=np.stack([mask] * 4),
            torso_roi=Roi(0, 0, 8, 8),
            frame_interval=100,
        )

    def frame(self, values, t0, t1):
        return EventFrame(8, 8, values, t0, t1, int(np.abs(values).sum()), 0)

    def test_all_zero_frames_score_zero(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[2, 2:6] = True
        truth = self.make_truth(mask)
        frames = [self.frame(np.zeros((8, 8), np.int32), 0, 100)]
        assert visibility_rate(frames, truth, 0.5) == 0.0

    def test_full_coverage_counts(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[2, 2:6] = True
        truth = self.make_truth(mask)
        values = np.zeros((8, 8), np.int32)
        values[mask] = 1
        assert visibility_rate([self.frame(values, 0, 100)], truth, 0.5) == 1.0

    def test_midpoint_past_truth_is_error(self):
        truth = self.make_truth(np.ones((8, 8), dtype=bool))
        with pytest.raises(DataError):
            visibility_rate([self.frame(np.zeros((8, 8), np.int32), 900, 1000)], truth)

    def test_bad_tau_rejected(self):
        truth = self.make_truth(np.ones((8, 8), dtype=bool))
        with pytest.raises(DataError):
            visibility_rate([], truth, coverage_tau=1.5)


def test_ordering_holds_on_reference_seed():
    seq, truth = generate_scene(SceneConfig(seed=42))
    stream = simulate(seq, SimConfig())
    comp = visibility_comparison(stream, truth)
    v = comp["visibility"]
    assert v["roi"] >= v["count"] >= v["duration"]
    assert comp["frames_per_method"] == 75


def test_scene_round_trip(tmp_path):
    cfg = SceneConfig(seed=9, num_cycles=1)
    seq, truth = generate_scene(cfg)
    save_scene(tmp_path, seq, truth, cfg)
    seq2, truth2 = load_scene(tmp_path)
    assert np.array_equal(seq.frames, seq2.frames)
    assert seq2.frame_interval == seq.frame_interval
    assert np.array_equal(truth.labels, truth2.labels)
    assert np.array_equal(truth.belt_mask, truth2.belt_mask)
    assert truth2.torso_roi == truth.torso_roi


def test_config_validation():
    with pytest.raises(DataError):
        SceneConfig(width=32)
    with pytest.raises(DataError):
        SceneConfig(background_burst_prob=1.5)
