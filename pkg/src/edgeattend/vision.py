"""Image and detection value types shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from . import kernels

Point = tuple[float, float]

LANDMARK_NAMES = ("left_eye", "right_eye", "nose", "mouth_left", "mouth_right")


class ImageBuffer:
    """8-bit image, 1 (gray) or 3 (RGB) channels, row-major pixel data."""

    __slots__ = ("pixels",)

    def __init__(self, width: int, height: int, channels: int, data) -> None:
        if width < 1 or height < 1:
            raise ValueError("image dimensions must be >= 1")
        if channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        arr = np.ascontiguousarray(data, dtype=np.uint8)
        if arr.size != width * height * channels:
            raise ValueError(
                f"data length {arr.size} != width*height*channels "
                f"{width * height * channels}"
            )
        self.pixels = arr.reshape(height, width, channels)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageBuffer":
        """Wrap an (h, w) or (h, w, c) uint8 array."""
        a = np.asarray(arr, dtype=np.uint8)
        if a.ndim == 2:
            a = a[:, :, None]
        h, w, c = a.shape
        return cls(w, h, c, a)

    @classmethod
    def filled(cls, width: int, height: int, channels: int = 1, value: int = 0) -> "ImageBuffer":
        return cls.from_array(np.full((height, width, channels), value, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def data(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def copy(self) -> "ImageBuffer":
        return ImageBuffer.from_array(self.pixels.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box; (x, y) is the top-left corner in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError("bounding box extent must be positive")

    def centroid(self) -> Point:
        return (self.x + self.w / 2, self.y + self.h / 2)

    def shifted(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)


@dataclass(frozen=True)
class Landmarks5:
    """Five facial key points in pixel coordinates, fixed order."""

    left_eye: Point
    right_eye: Point
    nose: Point
    mouth_left: Point
    mouth_right: Point

    def __post_init__(self) -> None:
        if not np.isfinite(self.as_array()).all():
            raise ValueError("landmark coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.left_eye, self.right_eye, self.nose, self.mouth_left, self.mouth_right],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, pts) -> "Landmarks5":
        a = np.asarray(pts, dtype=np.float64)
        if a.shape != (5, 2):
            raise ValueError("expected 5 points")
        return cls(*[(float(p[0]), float(p[1])) for p in a])


@dataclass(frozen=True)
class Detection:
    """One detected face: box, five landmarks, confidence."""

    bbox: BoundingBox
    landmarks: Landmarks5
    score: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError("score must lie in [0, 1]")


def centroid(bbox: BoundingBox) -> Point:
    """Center of a bounding box: (x + w/2, y + h/2)."""
    return bbox.centroid()


def downscale(img: ImageBuffer, factor: float) -> ImageBuffer:
    """Area-average (box) resample to floor(dims / factor).

    Pixel values stay in [0, 255]; constant images are fixed points up to
    rounding.
    """
    if factor <= 1:
        raise ValueError("factor must be > 1")
    out_w = int(img.width / factor)
    out_h = int(img.height / factor)
    if out_w < 1 or out_h < 1:
        raise ValueError("resolution too small")
    return ImageBuffer.from_array(kernels.box_downscale(img.pixels, float(factor)))


def detection_to_json(det: Detection) -> dict[str, Any]:
    """Wire shape: {"bbox":[x,y,w,h],"landmarks":[[x,y]*5],"score":s}."""
    return {
        "bbox": [det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h],
        "landmarks": [[float(x), float(y)] for x, y in det.landmarks.as_array()],
        "score": det.score,
    }


def detection_from_json(obj: dict[str, Any]) -> Detection:
    x, y, w, h = obj["bbox"]
    return Detection(
        bbox=BoundingBox(float(x), float(y), float(w), float(h)),
        landmarks=Landmarks5.from_array(obj["landmarks"]),
        score=float(obj["score"]),
    )
