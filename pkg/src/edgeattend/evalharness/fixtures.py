"""Deterministic scenario-fixture generator.

Builds the bundled fixtures: synthetic frames with pattern-coded faces, a
scripted detection track per face, per-detection ground-truth labels, and
a shared 77-identity reference gallery. The four accessory/occlusion
scenarios reproduce the published confusion counts when replayed with the
noise-free pattern backends; the fifth (calibration) fixture spreads match
distances for threshold sweeps.

Re-running the generator reproduces every file byte-for-byte apart from
gallery enrollment timestamps.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..backends import (
    DEFAULT_DIMENSION,
    MAX_PATTERNS,
    identity_base_vector,
    paint_face,
)
from ..gallery import Gallery, cosine_distance
from ..vision import ImageBuffer, detection_to_json

FRAME_W = 160
FRAME_H = 120
FACE_SIZE = 40
FRAME_DT_MS = 200
GALLERY_IDS = 77
# Pattern indexes 77..79 stay unenrolled; scenarios use them as "occluded
# face" stand-ins whose embeddings sit far from every enrolled identity.
DISTRACTORS = (77, 78, 79)


def student_id(index: int) -> str:
    return f"s{index:02d}"


def build_gallery(directory: Path, size: int = GALLERY_IDS, dimension: int = DEFAULT_DIMENSION) -> Gallery:
    gallery = Gallery(dimension)
    for k in range(size):
        gallery.enroll(student_id(k), f"Student {k:02d}", identity_base_vector(k, dimension), enrolled_at=0.0)
    gallery.save(directory)
    return gallery


def _walk_positions(
    n: int,
    seed: int,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    step: float = 6.0,
) -> list[tuple[float, float]]:
    rng = np.random.default_rng(seed)
    x = rng.uniform(*x_range)
    y = rng.uniform(*y_range)
    out = []
    for _ in range(n):
        out.append((float(x), float(y)))
        x = float(np.clip(x + rng.uniform(-step, step), *x_range))
        y = float(np.clip(y + rng.uniform(-step, step), *y_range))
    return out


def build_scenario(
    directory: Path,
    name: str,
    plan: list[list[tuple[int, str, int]]],
    gallery_rel: str,
    seed: int,
    dimension: int = DEFAULT_DIMENSION,
    frame_w: int = FRAME_W,
    frame_h: int = FRAME_H,
) -> None:
    """Write one fixture. ``plan`` holds, per frame, (pattern_index,
    truth_label, texture) triples, one per face. Faces walk inside disjoint
    vertical lanes so painted squares never overlap."""
    from PIL import Image

    directory.mkdir(parents=True, exist_ok=True)
    n_faces = max((len(f) for f in plan), default=0)
    margin = FACE_SIZE * 1.25 / 2 + 2
    lane_w = frame_w / max(n_faces, 1)
    if lane_w < 2 * margin + 1 or frame_h < 2 * margin + 1:
        raise ValueError("frame too small for the requested face count")
    walks = [
        _walk_positions(
            len(plan),
            seed + 31 * i,
            (i * lane_w + margin, (i + 1) * lane_w - margin),
            (margin, frame_h - margin),
        )
        for i in range(n_faces)
    ]

    frames_meta = []
    script = []
    labels = []
    for f, faces in enumerate(plan):
        img = ImageBuffer.filled(frame_w, frame_h, channels=1, value=0)
        dets = []
        frame_labels = []
        for i, (pattern, truth, texture) in enumerate(faces):
            cx, cy = walks[i][f]
            det = paint_face(img, cx, cy, FACE_SIZE, pattern, texture=texture)
            dets.append(detection_to_json(det))
            frame_labels.append(truth)
        file_name = f"f{f:04d}.png"
        Image.fromarray(img.pixels[:, :, 0]).save(directory / file_name)
        frames_meta.append({"file": file_name, "t_ms": f * FRAME_DT_MS})
        script.append(dets)
        labels.append(frame_labels)

    manifest = {
        "name": name,
        "dimension": dimension,
        "gallery": gallery_rel,
        "backends": {"detector": "scripted", "embedder": "pattern"},
        "frames": frames_meta,
        "script": script,
        "labels": labels,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=1))


def _single_track_plan(
    subject: int, clean: int, occluded: int, distractor: int, seed: int
) -> list[list[tuple[int, str, int]]]:
    """Shuffle clean and occluded appearances of one subject into a single
    continuous track."""
    rng = np.random.default_rng(seed)
    kinds = [True] * clean + [False] * occluded
    rng.shuffle(kinds)
    truth = student_id(subject)
    return [
        [(subject if is_clean else distractor, truth, f)]
        for f, is_clean in enumerate(kinds)
    ]


def build_all(root: str | Path, dimension: int = DEFAULT_DIMENSION) -> list[Path]:
    """Generate the bundled fixture set under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    gallery = build_gallery(root / "gallery", GALLERY_IDS, dimension)

    # The generator's premise: occlusion stand-ins and unenrolled subjects
    # must be rejected at the default threshold no matter which identity is
    # nearest.
    for d in (*DISTRACTORS, 50):
        assert d < MAX_PATTERNS
        nearest = min(
            cosine_distance(identity_base_vector(d, dimension), identity_base_vector(k, dimension))
            for k in range(GALLERY_IDS)
            if k != d
        )
        if nearest <= 0.6:
            raise AssertionError(f"distractor {d} too close to the gallery ({nearest:.3f})")

    built = []
    # Published confusion rows: (subject, correct, unknown, distractor).
    table = [
        ("scenario1", 1, 14, 3, 78),
        ("scenario2", 2, 3, 9, 77),
        ("scenario3", 3, 2, 10, 79),
    ]
    for i, (name, subject, clean, occluded, distractor) in enumerate(table):
        plan = _single_track_plan(subject, clean, occluded, distractor, seed=100 + i)
        build_scenario(root / name, name, plan, "../gallery", seed=200 + i, dimension=dimension)
        built.append(root / name)

    # scenario4: a subject absent from the gallery; every decision must be
    # Unknown.
    plan4 = [[(50, "unenrolled", f)] for f in range(24)]
    sub_gallery_dir = root / "gallery7"
    sub = Gallery(dimension)
    for k in range(7):
        rec = gallery.get(student_id(k))
        sub.enroll(rec.student_id, rec.display_name, rec.embeddings[0], enrolled_at=0.0)
    sub.save(sub_gallery_dir)
    build_scenario(root / "scenario4", "scenario4", plan4, "../gallery7", seed=203, dimension=dimension)
    built.append(root / "scenario4")

    # calibration: two subjects plus an unenrolled walk-in, textured frames
    # so a noisy embedder spreads the distance distribution.
    plan5: list[list[tuple[int, str, int]]] = []
    for f in range(30):
        faces = [(1, student_id(1), f + 1), (4, student_id(4), 2 * f + 3)]
        if f % 3 == 0:
            faces.append((78, "unenrolled", 3 * f + 1))
        plan5.append(faces)
    build_scenario(
        root / "calibration",
        "calibration",
        plan5,
        "../gallery",
        seed=204,
        dimension=dimension,
        frame_w=360,
        frame_h=160,
    )
    built.append(root / "calibration")

    grid_spec = {
        "fixtures": ["scenario1", "scenario2", "scenario3", "scenario4"],
        "detectors": ["scripted", "none"],
        "recognizers": ["pattern", "pattern:0.45"],
        "metrics": ["cosine", "euclidean"],
        "gallery_sizes": [7, 77],
        "threshold": 0.4,
    }
    (root / "grid.json").write_text(json.dumps(grid_spec, indent=1))
    return built
