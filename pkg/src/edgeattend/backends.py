"""Inference backend interfaces and deterministic test doubles.

Real neural detectors/embedders plug in behind the same two-method
surface (bytes in, structured results out). The mocks here make the whole
pipeline runnable and exactly reproducible without model files:

* faces in synthetic frames are flat-painted squares whose gray value
  encodes a pattern index;
* the mock embedder recovers that index from the aligned chip and returns
  a seeded unit vector for it, optionally perturbed by a deterministic,
  chip-content-keyed noise vector.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, runtime_checkable

import numpy as np

from .align import LandmarkTemplate
from .gallery import Embedding
from .vision import BoundingBox, Detection, ImageBuffer, Landmarks5

DEFAULT_DIMENSION = 64
DEFAULT_SEED = 7

# Gray values 16, 19, ... 253 encode pattern indexes 0..79.
PALETTE_BASE = 16
PALETTE_STEP = 3
MAX_PATTERNS = 80


@runtime_checkable
class DetectorBackend(Protocol):
    def detect(self, img: ImageBuffer) -> list[Detection]: ...


@runtime_checkable
class EmbedderBackend(Protocol):
    def embed(self, chip: ImageBuffer) -> Embedding: ...

    def dimension(self) -> int: ...


def pattern_value(index: int) -> int:
    """Gray level encoding a pattern index."""
    if not 0 <= index < MAX_PATTERNS:
        raise ValueError(f"pattern index out of range: {index}")
    return PALETTE_BASE + PALETTE_STEP * index


def pattern_index(value: float) -> int | None:
    """Inverse of pattern_value, tolerant to +-1 gray level; None if unpaved."""
    k = round((value - PALETTE_BASE) / PALETTE_STEP)
    if 0 <= k < MAX_PATTERNS and abs(value - pattern_value(k)) <= 1:
        return k
    return None


def identity_base_vector(index: int, dimension: int = DEFAULT_DIMENSION, seed: int = DEFAULT_SEED) -> Embedding:
    """Deterministic unit reference vector for a pattern index."""
    rng = np.random.default_rng([seed, index])
    v = rng.standard_normal(dimension)
    return (v / np.linalg.norm(v)).astype(np.float32)


def _hash_vector(data: bytes, dimension: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(data, digest_size=8).digest()
    rng = np.random.default_rng([seed, int.from_bytes(digest, "little")])
    v = rng.standard_normal(dimension)
    return v / np.linalg.norm(v)


def synthetic_detection(cx: float, cy: float, size: float, score: float = 0.9) -> Detection:
    """Detection whose landmarks are the canonical template scaled into a
    square box, so alignment maps the chip exactly onto the box."""
    bbox = BoundingBox(cx - size / 2, cy - size / 2, size, size)
    tpl = LandmarkTemplate()
    f = size / tpl.chip_size
    pts = [(bbox.x + x * f, bbox.y + y * f) for x, y in tpl.points]
    return Detection(bbox=bbox, landmarks=Landmarks5.from_array(pts), score=score)


def paint_face(
    img: ImageBuffer,
    cx: float,
    cy: float,
    size: float,
    index: int,
    texture: int = 0,
) -> Detection:
    """Paint a pattern square (with a sampling margin) and return its
    detection. ``texture`` perturbs a corner block by +-2 gray levels so
    otherwise-identical chips differ per frame without moving the median."""
    value = pattern_value(index)
    side = size * 1.25
    x0 = max(int(cx - side / 2), 0)
    y0 = max(int(cy - side / 2), 0)
    x1 = min(int(cx + side / 2) + 1, img.width)
    y1 = min(int(cy + side / 2) + 1, img.height)
    img.pixels[y0:y1, x0:x1, :] = value
    if texture:
        tv = value + 2 if texture % 2 else value - 2
        ts = max(int(size / 8), 2)
        tx = x0 + 2 + (texture % 5)
        ty = y0 + 2 + (texture // 5 % 5)
        img.pixels[ty : ty + ts, tx : tx + ts, :] = np.uint8(np.clip(tv, 0, 255))
    return synthetic_detection(cx, cy, size)


class ScriptedDetector:
    """Replays a fixed per-frame detection script; frames beyond the script
    yield no detections."""

    def __init__(self, script: list[list[Detection]]) -> None:
        self.script = script
        self._frame = 0

    def detect(self, img: ImageBuffer) -> list[Detection]:
        dets = self.script[self._frame] if self._frame < len(self.script) else []
        self._frame += 1
        return list(dets)

    def reset(self) -> None:
        self._frame = 0


class PatternDetector:
    """Finds the painted square in a synthetic frame (enrollment photos)."""

    def __init__(self, min_size: int = 8) -> None:
        self.min_size = min_size

    def detect(self, img: ImageBuffer) -> list[Detection]:
        mask = img.pixels.max(axis=2) > 0
        ys, xs = np.nonzero(mask)
        if ys.size == 0:
            return []
        side = max(xs.max() - xs.min() + 1, ys.max() - ys.min() + 1)
        if side < self.min_size:
            return []
        cx = (xs.min() + xs.max() + 1) / 2
        cy = (ys.min() + ys.max() + 1) / 2
        return [synthetic_detection(cx, cy, side / 1.25)]


class PatternEmbedder:
    """Deterministic embedder for pattern chips.

    The chip's central median gray level selects the identity base vector;
    unpainted chips hash to a far-away junk vector. ``noise`` blends in a
    unit vector keyed on the chip bytes, spreading match distances while
    keeping embed() a pure function of its input.
    """

    def __init__(
        self,
        dim: int = DEFAULT_DIMENSION,
        seed: int = DEFAULT_SEED,
        noise: float = 0.0,
    ) -> None:
        self._dim = dim
        self.seed = seed
        self.noise = noise

    def dimension(self) -> int:
        return self._dim

    def embed(self, chip: ImageBuffer) -> Embedding:
        h, w = chip.height, chip.width
        core = chip.pixels[h // 4 : h - h // 4, w // 4 : w - w // 4, :]
        index = pattern_index(float(np.median(core)))
        if index is None:
            return _hash_vector(chip.pixels.tobytes(), self._dim, self.seed).astype(np.float32)
        base = identity_base_vector(index, self._dim, self.seed).astype(np.float64)
        if self.noise > 0.0:
            base = base + self.noise * _hash_vector(chip.pixels.tobytes(), self._dim, self.seed + 1)
            base = base / np.linalg.norm(base)
        return base.astype(np.float32)
