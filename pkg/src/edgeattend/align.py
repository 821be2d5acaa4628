"""Landmark alignment: similarity-transform estimation, face-chip warping,
and the enrollment sharpening filter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .vision import ImageBuffer, Landmarks5

# Canonical five-point template for a 112x112 chip (widely used alignment
# convention; configurable).
DEFAULT_TEMPLATE_POINTS = (
    (38.3, 51.7),
    (73.5, 51.5),
    (56.0, 71.7),
    (41.5, 92.4),
    (70.7, 92.2),
)

_SPREAD_EPS = 1e-6


class DegenerateLandmarksError(ValueError):
    pass


@dataclass(frozen=True)
class SimilarityTransform:
    """Uniform scale + proper rotation + translation (no reflection)."""

    scale: float
    rotation: float
    translation: tuple[float, float]

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def matrix(self) -> np.ndarray:
        """2x3 matrix [sR | t]."""
        c = math.cos(self.rotation)
        s = math.sin(self.rotation)
        tx, ty = self.translation
        return np.array(
            [
                [self.scale * c, -self.scale * s, tx],
                [self.scale * s, self.scale * c, ty],
            ],
            dtype=np.float64,
        )

    def apply(self, pts: np.ndarray) -> np.ndarray:
        m = self.matrix()
        p = np.asarray(pts, dtype=np.float64)
        return p @ m[:, :2].T + m[:, 2]

    def inverse_coeffs(self) -> tuple[float, float, float, float, float, float]:
        """Output->source coefficients (a, b, tx, c, d, ty) for the warp kernel."""
        cos = math.cos(self.rotation) / self.scale
        sin = math.sin(self.rotation) / self.scale
        tx, ty = self.translation
        # inverse linear part is (1/s) * R(-theta)
        a, b = cos, sin
        c, d = -sin, cos
        return (a, b, -(a * tx + b * ty), c, d, -(c * tx + d * ty))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "SimilarityTransform":
        m = np.asarray(m, dtype=np.float64)
        lin = m[:2, :2]
        det = float(np.linalg.det(lin))
        if det <= 0:
            raise ValueError("linear part must be a positive-scale rotation")
        n0 = float(np.linalg.norm(lin[:, 0]))
        n1 = float(np.linalg.norm(lin[:, 1]))
        if abs(n0 - n1) > 1e-9 * max(n0, 1.0) or abs(float(lin[:, 0] @ lin[:, 1])) > 1e-9 * max(n0 * n1, 1.0):
            raise ValueError("linear part is not a similarity")
        return cls(
            scale=math.sqrt(det),
            rotation=math.atan2(lin[1, 0], lin[0, 0]),
            translation=(float(m[0, 2]), float(m[1, 2])),
        )


@dataclass(frozen=True)
class LandmarkTemplate:
    """Canonical landmark positions inside a square chip."""

    points: tuple[tuple[float, float], ...] = DEFAULT_TEMPLATE_POINTS
    chip_size: int = 112

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (5, 2):
            raise ValueError("template needs exactly 5 points")
        if not ((pts >= 0) & (pts < self.chip_size)).all():
            raise ValueError("template points must lie inside the chip")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)

    def scaled(self, chip_size: int) -> "LandmarkTemplate":
        f = chip_size / self.chip_size
        return LandmarkTemplate(
            points=tuple((x * f, y * f) for x, y in self.points), chip_size=chip_size
        )


def _as_points(obj) -> np.ndarray:
    if isinstance(obj, Landmarks5):
        return obj.as_array()
    if isinstance(obj, LandmarkTemplate):
        return obj.as_array()
    return np.asarray(obj, dtype=np.float64)


def estimate_similarity(src, dst) -> SimilarityTransform:
    """Least-squares similarity transform mapping src points onto dst.

    Closed form over centroids and the 2-D dot/cross covariance terms;
    minimizes sum ||s*R*src_i + t - dst_i||^2 with s > 0 and R a proper
    rotation (reflections excluded).

    Raises:
        DegenerateLandmarksError: if the source points are (near-)coincident
            or the correspondence carries no rotational information.
    """
    p = _as_points(src)
    q = _as_points(dst)
    if p.shape != q.shape or p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("need matching (n, 2) point sets")
    mean_p = p.mean(axis=0)
    mean_q = q.mean(axis=0)
    pc = p - mean_p
    qc = q - mean_q
    var_p = float((pc * pc).sum())
    if math.sqrt(var_p) <= _SPREAD_EPS:
        raise DegenerateLandmarksError("degenerate landmarks")
    dot = float((pc * qc).sum())
    cross = float((pc[:, 0] * qc[:, 1] - pc[:, 1] * qc[:, 0]).sum())
    mag = math.hypot(dot, cross)
    if mag <= 0:
        raise DegenerateLandmarksError("degenerate landmarks")
    theta = math.atan2(cross, dot)
    scale = mag / var_p
    c, s = math.cos(theta), math.sin(theta)
    rot_mean = np.array([c * mean_p[0] - s * mean_p[1], s * mean_p[0] + c * mean_p[1]])
    t = mean_q - scale * rot_mean
    return SimilarityTransform(scale=scale, rotation=theta, translation=(float(t[0]), float(t[1])))


def residual(tf: SimilarityTransform, src, dst) -> float:
    """Sum of squared point errors of a transform on a correspondence."""
    p = _as_points(src)
    q = _as_points(dst)
    d = tf.apply(p) - q
    return float((d * d).sum())


def warp_crop(img: ImageBuffer, tf: SimilarityTransform, chip_size: int) -> ImageBuffer:
    """Resample the face chip: output pixel p reads the source at tf^-1(p),
    bilinear, black outside the frame."""
    if chip_size < 16:
        raise ValueError("chip_size must be >= 16")
    out = kernels.warp_affine(img.pixels, np.array(tf.inverse_coeffs()), chip_size, chip_size)
    return ImageBuffer.from_array(out)


def align_chip(
    img: ImageBuffer, landmarks: Landmarks5, template: LandmarkTemplate | None = None
) -> ImageBuffer:
    """estimate_similarity + warp_crop in one step (the pipeline's align stage)."""
    tpl = template or LandmarkTemplate()
    tf = estimate_similarity(landmarks, tpl)
    return warp_crop(img, tf, tpl.chip_size)


def unsharp_mask(img: ImageBuffer, radius: int = 2, amount: float = 1.0) -> ImageBuffer:
    """Sharpen: clamp(img + amount * (img - gaussian_blur(img, radius))).

    Applied to reference photos at enrollment; amount 0 is the identity.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if amount < 0:
        raise ValueError("amount must be >= 0")
    if amount == 0:
        return img.copy()
    blur = kernels.gaussian_blur(img.pixels, int(radius)).astype(np.float64)
    sharp = img.pixels.astype(np.float64) + amount * (img.pixels.astype(np.float64) - blur)
    return ImageBuffer.from_array(np.clip(np.floor(sharp + 0.5), 0, 255).astype(np.uint8))
