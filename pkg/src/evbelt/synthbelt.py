"""Procedural cabin scenes with ground-truth belt masks and class labels.

Each recording is a grayscale frame sequence of a schematic cabin: a dark
textured background, a bright torso panel (the ROI), a bobbing head
ellipse above it, and a bright diagonal belt stripe.  Labels cycle through
unfastened (1) -> fastening (2) -> fastened (0) -> unfastening (3).  The
stripe sweeps shoulder-to-hip during fastening, retracts during
unfastening, and carries a small body-coupled sway while fastened so the
static belt still emits events.  Motion comes in active and quiet spells,
and occasional single-frame brightness flickers flood the dark background
with events while leaving the bright torso and belt silent; these two
traits are what separate the three accumulation strategies.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from evbelt.accumulate import (
    EventFrame,
    Roi,
    accumulate_fixed_count,
    accumulate_fixed_duration,
    accumulate_roi_count,
)
from evbelt.errors import DataError
from evbelt.events import EventStream
from evbelt.pgm import read_pbm, read_pgm, write_pbm, write_pgm
from evbelt.simulate import FrameSequence

CLASS_FASTENED = 0
CLASS_UNFASTENED = 1
CLASS_FASTENING = 2
CLASS_UNFASTENING = 3

BELT_PRESENT_CLASSES = (CLASS_FASTENED, CLASS_FASTENING, CLASS_UNFASTENING)

# One label cycle in emission order.
CYCLE = (CLASS_UNFASTENED, CLASS_FASTENING, CLASS_FASTENED, CLASS_UNFASTENING)

# Activity envelope shape: fraction of full motion speed during quiet
# spells, and the sine threshold that sets the active-duty fraction.
_QUIET_SCALE = 0.10
_ACTIVE_GATE = 0.3
_SPELL_PERIOD = 43.0


@dataclass(frozen=True)
class SceneConfig:
    width: int = 96
    height: int = 96
    frame_interval: int = 10_000  # microseconds
    num_cycles: int = 2
    head_motion_amp: float = 3.0
    background_burst_prob: float = 0.015
    seed: int = 0
    static_len: int = 25  # frames per fastened/unfastened segment
    action_len: int = 25  # frames per fastening/unfastening segment
    belt_sway_amp: float = 2.5
    flicker_amp: float = 11.0

    def __post_init__(self):
        if not (0.0 <= self.background_burst_prob <= 1.0):
            raise DataError("background_burst_prob must be a probability")
        if self.width < 64 or self.height < 64:
            raise DataError("scene dimensions must be at least 64")
        if self.num_cycles < 1 or self.static_len < 1 or self.action_len < 1:
            raise DataError("cycle and segment counts must be >= 1")


@dataclass
class GroundTruth:
    labels: np.ndarray  # (N,) int, classes 0..3
    belt_mask: np.ndarray  # (N, H, W) bool
    torso_roi: Roi
    frame_interval: int  # microseconds


def _label_track(cfg: SceneConfig) -> np.ndarray:
    lens = {
        CLASS_UNFASTENED: cfg.static_len,
        CLASS_FASTENING: cfg.action_len,
        CLASS_FASTENED: cfg.static_len,
        CLASS_UNFASTENING: cfg.action_len,
    }
    track = []
    for _ in range(cfg.num_cycles):
        for cls in CYCLE:
            track.extend([cls] * lens[cls])
    return np.array(track, dtype=np.int64)


def _ellipse_coverage(xg, yg, cx, cy, rx, ry):
    """Soft-edged ellipse: 1 inside, 0 outside, ~1 px linear falloff."""
    r = np.sqrt(((xg - cx) / rx) ** 2 + ((yg - cy) / ry) ** 2)
    edge = min(rx, ry)
    return np.clip((1.0 - r) * edge + 0.5, 0.0, 1.0)


def _segment_coverage(xg, yg, ax, ay, bx, by, halfwidth):
    """Soft-edged thick line segment from A to B."""
    vx, vy = bx - ax, by - ay
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0:
        d = np.sqrt((xg - ax) ** 2 + (yg - ay) ** 2)
    else:
        s = np.clip(((xg - ax) * vx + (yg - ay) * vy) / seg_len2, 0.0, 1.0)
        d = np.sqrt((xg - (ax + s * vx)) ** 2 + (yg - (ay + s * vy)) ** 2)
    return np.clip(halfwidth + 0.5 - d, 0.0, 1.0)


def _rect_coverage(xg, yg, x0, y0, x1, y1):
    cov_x = np.clip(np.minimum(xg - x0, x1 - xg) + 0.5, 0.0, 1.0)
    cov_y = np.clip(np.minimum(yg - y0, y1 - yg) + 0.5, 0.0, 1.0)
    return cov_x * cov_y


def generate_scene(cfg: SceneConfig) -> tuple[FrameSequence, GroundTruth]:
    """Render one labeled recording; bit-identical for equal configs."""
    rng = np.random.default_rng(cfg.seed)
    w, h = cfg.width, cfg.height
    labels = _label_track(cfg)
    n = labels.shape[0]
    yg, xg = np.mgrid[0:h, 0:w].astype(np.float64)

    # Static layers: textured dark background, bright torso panel.
    background = 42.0 + rng.integers(-10, 18, size=(h, w)).astype(np.float64)
    torso = Roi(
        x0=int(0.30 * w), y0=int(0.46 * h), x1=int(0.78 * w), y1=int(0.97 * h)
    )
    torso_cov = _rect_coverage(xg, yg, torso.x0, torso.y0, torso.x1 - 1, torso.y1 - 1)
    base = background * (1.0 - torso_cov) + 122.0 * torso_cov

    # Head bobs above the torso; belt runs shoulder to hip inside it.
    head_cx, head_cy = 0.54 * w, 0.26 * h
    head_rx, head_ry = 0.15 * w, 0.11 * h
    shoulder = np.array([0.335 * w, 0.48 * h])
    hip = np.array([0.72 * w, 0.93 * h])
    belt_halfwidth = 2.0
    belt_axis = (hip - shoulder) / np.linalg.norm(hip - shoulder)
    tex_phases = rng.uniform(0, 2 * np.pi, size=2)

    # Activity envelope: alternating active and quiet spells. Motion phases
    # advance with the envelope, so quiet spells only drift sub-threshold.
    spell_phase = rng.uniform(0, 2 * np.pi)
    spell = _QUIET_SCALE + (1.0 - _QUIET_SCALE) * (
        np.sin(2 * np.pi * np.arange(n) / _SPELL_PERIOD + spell_phase) > _ACTIVE_GATE
    )
    phase = np.concatenate([[0.0], np.cumsum(spell)])[:n]
    head_phase = phase + rng.uniform(0, 7)
    sway_phase = phase + rng.uniform(0, 7)
    slide_phase = phase + rng.uniform(0, 29)

    flicker = rng.random(n) < cfg.background_burst_prob

    # Per-segment sweep progress for the action classes.
    seg_pos = np.zeros(n, dtype=np.int64)
    run_start = 0
    for i in range(1, n + 1):
        if i == n or labels[i] != labels[i - 1]:
            seg_pos[run_start:i] = np.arange(i - run_start)
            run_start = i
    seg_lens = {CLASS_FASTENING: cfg.action_len, CLASS_UNFASTENING: cfg.action_len}

    frames = np.empty((n, h, w), dtype=np.uint8)
    masks = np.zeros((n, h, w), dtype=bool)
    for k in range(n):
        img = base.copy()
        hx = head_cx + cfg.head_motion_amp * np.sin(2 * np.pi * head_phase[k] / 9.0)
        hy = head_cy + 0.5 * cfg.head_motion_amp * np.sin(2 * np.pi * head_phase[k] / 13.0)
        head_cov = _ellipse_coverage(xg, yg, hx, hy, head_rx, head_ry)
        img = img * (1.0 - head_cov) + 152.0 * head_cov

        cls = int(labels[k])
        if cls in BELT_PRESENT_CLASSES:
            if cls == CLASS_FASTENED:
                u = 1.0
            elif cls == CLASS_FASTENING:
                u = (seg_pos[k] + 1) / seg_lens[cls]
            else:
                u = 1.0 - (seg_pos[k] + 1) / (seg_lens[cls] + 1)
            sway = cfg.belt_sway_amp * np.array(
                [np.sin(2 * np.pi * sway_phase[k] / 13.0), np.cos(2 * np.pi * sway_phase[k] / 17.0)]
            )
            a = shoulder + sway
            b = shoulder + sway + u * (hip - shoulder)
            belt_cov = _segment_coverage(xg, yg, a[0], a[1], b[0], b[1], belt_halfwidth)
            # Webbing weave slides along the strap, lighting up interior
            # pixels, not just the strap edges.
            slide = 9.0 * np.sin(2 * np.pi * slide_phase[k] / 29.0)
            s = (xg - a[0]) * belt_axis[0] + (yg - a[1]) * belt_axis[1] - slide
            weave = 24.0 * np.sin(2 * np.pi * s / 4.3 + tex_phases[0]) + 12.0 * np.sin(
                2 * np.pi * s / 9.7 + tex_phases[1]
            )
            img = img * (1.0 - belt_cov) + (214.0 + weave) * belt_cov
            masks[k] = belt_cov > 0.5

        if flicker[k]:
            img = img + cfg.flicker_amp
        frames[k] = np.clip(np.round(img), 0, 255).astype(np.uint8)

    seq = FrameSequence(width=w, height=h, frame_interval=cfg.frame_interval, frames=frames)
    truth = GroundTruth(
        labels=labels, belt_mask=masks, torso_roi=torso, frame_interval=cfg.frame_interval
    )
    return seq, truth


def visibility_rate(frames: list[EventFrame], truth: GroundTruth, coverage_tau: float = 0.3) -> float:
    """Fraction of belt-present frames whose accumulation covers the mask.

    A frame counts as belt-visible when at least ``coverage_tau`` of the
    ground-truth belt-mask pixels (mask taken at the frame's midpoint time)
    carry a nonzero accumulated value.  Frames whose midpoint falls in a
    beltless class are excluded from the denominator.
    """
    if not (0.0 < coverage_tau < 1.0):
        raise DataError("coverage_tau must lie in (0, 1)")
    num_source = truth.labels.shape[0]
    present = 0
    visible = 0
    for frame in frames:
        mid = (frame.t_start + frame.t_end) // 2
        idx = int(mid // truth.frame_interval)
        if idx >= num_source:
            raise DataError(f"frame midpoint {mid}us is past the ground truth span")
        if int(truth.labels[idx]) not in BELT_PRESENT_CLASSES:
            continue
        mask = truth.belt_mask[idx]
        present += 1
        covered = int(np.count_nonzero(frame.values[mask]))
        if covered >= coverage_tau * int(mask.sum()):
            visible += 1
    return visible / present if present else 0.0


def visibility_comparison(
    stream: EventStream,
    truth: GroundTruth,
    target_frames: int = 75,
    coverage_tau: float = 0.3,
) -> dict:
    """Run all three accumulators calibrated to the same frame count.

    Mirrors the frame-count-matched comparison of the three strategies:
    duration, event count, and ROI-gated count are each tuned so the
    recording yields at least ``target_frames`` frames, then truncated to
    exactly that many before scoring belt visibility.
    """
    if len(stream) == 0:
        raise DataError("cannot compare accumulators on an empty stream")
    t_last = int(stream.t[-1])
    duration = max(1, t_last // target_frames)
    count = max(1, len(stream) // target_frames)
    roi = truth.torso_roi
    roi_events = int(roi.contains(stream.x.astype(np.int64), stream.y.astype(np.int64)).sum())
    roi_count = max(1, roi_events // target_frames)

    by_method = {
        "duration": accumulate_fixed_duration(stream, duration)[:target_frames],
        "count": accumulate_fixed_count(stream, count)[:target_frames],
        "roi": accumulate_roi_count(stream, roi_count, roi)[:target_frames],
    }
    for name, frames in by_method.items():
        if len(frames) != target_frames:
            raise DataError(f"{name} accumulation yielded {len(frames)} frames, wanted {target_frames}")
    return {
        "frames_per_method": target_frames,
        "params": {"duration_us": duration, "count": count, "roi_count": roi_count},
        "visibility": {
            name: visibility_rate(frames, truth, coverage_tau) for name, frames in by_method.items()
        },
    }


def save_scene(outdir, seq: FrameSequence, truth: GroundTruth, cfg: SceneConfig | None = None) -> None:
    """Write frames as PGM, labels.csv, roi.json, and per-frame PBM masks."""
    outdir = Path(outdir)
    (outdir / "frames").mkdir(parents=True, exist_ok=True)
    (outdir / "masks").mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        write_pgm(outdir / "frames" / f"frame_{i:05d}.pgm", seq.frames[i])
        write_pbm(outdir / "masks" / f"mask_{i:05d}.pbm", truth.belt_mask[i])
    with open(outdir / "labels.csv", "w") as fh:
        fh.write("frame_index,class\n")
        for i, cls in enumerate(truth.labels):
            fh.write(f"{i},{int(cls)}\n")
    roi = truth.torso_roi
    with open(outdir / "roi.json", "w") as fh:
        json.dump({"x0": roi.x0, "y0": roi.y0, "x1": roi.x1, "y1": roi.y1}, fh, sort_keys=True)
        fh.write("\n")
    meta = {"frame_interval_us": seq.frame_interval, "width": seq.width, "height": seq.height}
    if cfg is not None:
        meta["config"] = asdict(cfg)
    with open(outdir / "scene.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_scene(scene_dir) -> tuple[FrameSequence, GroundTruth]:
    scene_dir = Path(scene_dir)
    with open(scene_dir / "scene.json") as fh:
        meta = json.load(fh)
    interval = int(meta["frame_interval_us"])
    frame_files = sorted((scene_dir / "frames").glob("*.pgm"))
    if not frame_files:
        raise DataError(f"{scene_dir}: no frames found")
    frames = np.stack([read_pgm(f) for f in frame_files])
    labels = read_labels_csv(scene_dir / "labels.csv", len(frame_files))
    mask_files = sorted((scene_dir / "masks").glob("*.pbm"))
    masks = np.stack([read_pbm(f) for f in mask_files]) if mask_files else np.zeros(frames.shape, bool)
    with open(scene_dir / "roi.json") as fh:
        r = json.load(fh)
    seq = FrameSequence(meta["width"], meta["height"], interval, frames)
    truth = GroundTruth(
        labels=labels,
        belt_mask=masks,
        torso_roi=Roi(r["x0"], r["y0"], r["x1"], r["y1"]),
        frame_interval=interval,
    )
    return seq, truth


def read_labels_csv(path, expected: int | None = None) -> np.ndarray:
    labels = {}
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "frame_index,class":
            raise DataError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            idx_s, cls_s = line.split(",")
            labels[int(idx_s)] = int(cls_s)
    if expected is not None and len(labels) != expected:
        raise DataError(f"{path}: {len(labels)} labels for {expected} frames")
    out = np.zeros(len(labels), dtype=np.int64)
    for i, cls in labels.items():
        if not (0 <= i < len(labels)):
            raise DataError(f"{path}: frame index {i} out of range")
        out[i] = cls
    return out
