"""Identity gallery: embedding storage, distance computation, the
recognize/unknown decision, and the evaluation metrics.

Matching is read-mostly: lookups run against an immutable snapshot of the
record map, and enrollment swaps in a rebuilt map atomically, so a reader
never observes a partially updated gallery.
"""

from __future__ import annotations

import base64
import json
import re
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

Embedding = np.ndarray

_SAFE_ID = re.compile(r"^[A-Za-z0-9_\-]+$")


def _validate_id(student_id: str) -> str:
    if not _SAFE_ID.match(student_id):
        raise ValueError(f"student_id must match [A-Za-z0-9_-]+: {student_id!r}")
    return student_id


def as_embedding(vec, dimension: int | None = None) -> Embedding:
    """Coerce to a finite float32 vector, optionally checking its dimension."""
    a = np.asarray(vec, dtype=np.float32).reshape(-1)
    if not np.isfinite(a).all():
        raise ValueError("embedding components must be finite")
    if dimension is not None and a.shape[0] != dimension:
        raise ValueError(f"expected dimension {dimension}, got {a.shape[0]}")
    return a


def cosine_distance(a: Embedding, b: Embedding) -> float:
    """1 - cos(a, b), in [0, 2]. Undefined for zero vectors."""
    av = np.asarray(a, dtype=np.float64).reshape(-1)
    bv = np.asarray(b, dtype=np.float64).reshape(-1)
    if av.shape != bv.shape:
        raise ValueError("dimension mismatch")
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise ValueError("undefined cosine")
    return float(1.0 - (av @ bv) / (na * nb))


def euclidean_distance(a: Embedding, b: Embedding) -> float:
    av = np.asarray(a, dtype=np.float64).reshape(-1)
    bv = np.asarray(b, dtype=np.float64).reshape(-1)
    if av.shape != bv.shape:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(av - bv))


METRICS = {"cosine": cosine_distance, "euclidean": euclidean_distance}


@dataclass(frozen=True)
class MatchResult:
    """Outcome of a gallery lookup. ``best_student_id`` is the argmin
    identity even when the decision is Unknown."""

    known: bool
    best_student_id: str
    best_distance: float

    @property
    def student_id(self) -> str | None:
        return self.best_student_id if self.known else None


@dataclass(frozen=True)
class IdentityRecord:
    student_id: str
    display_name: str
    embeddings: tuple[Embedding, ...]
    enrolled_at: float

    def __post_init__(self) -> None:
        _validate_id(self.student_id)
        if len(self.embeddings) < 1:
            raise ValueError("an identity needs at least one embedding")


@dataclass(frozen=True)
class ConfusionCounts:
    """Raw decision outcomes: correct/incorrect identifications, unknowns,
    and the total number of scored detections."""

    correct: int
    incorrect: int
    unknown: int
    detected: int

    def __post_init__(self) -> None:
        if min(self.correct, self.incorrect, self.unknown, self.detected) < 0:
            raise ValueError("counts must be non-negative")
        if self.correct + self.incorrect + self.unknown != self.detected:
            raise ValueError("correct + incorrect + unknown must equal detected")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.correct + other.correct,
            self.incorrect + other.incorrect,
            self.unknown + other.unknown,
            self.detected + other.detected,
        )


@dataclass(frozen=True)
class Metrics:
    acc: float
    far: float
    frr: float


def metrics_exact(c: ConfusionCounts, enrolled: bool = True) -> tuple[Fraction, Fraction, Fraction]:
    """(acc, far, frr) as exact fractions.

    For enrolled subjects: acc = correct/detected, frr = unknown/detected.
    For unenrolled subjects an Unknown answer is the correct one, so it
    counts toward accuracy and FRR is 0 by definition.
    """
    if c.detected == 0:
        raise ValueError("no decisions")
    d = c.detected
    far = Fraction(c.incorrect, d)
    if enrolled:
        acc = Fraction(c.correct, d)
        frr = Fraction(c.unknown, d)
    else:
        acc = Fraction(c.correct + c.unknown, d)
        frr = Fraction(0)
    return acc, far, frr


def metrics(c: ConfusionCounts, enrolled: bool = True) -> Metrics:
    acc, far, frr = metrics_exact(c, enrolled)
    return Metrics(acc=float(acc), far=float(far), frr=float(frr))


class Gallery:
    """Enrolled identities and their reference embeddings."""

    def __init__(self, dimension: int) -> None:
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self._records: dict[str, IdentityRecord] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, student_id: str) -> bool:
        return student_id in self._records

    @property
    def records(self) -> dict[str, IdentityRecord]:
        return dict(self._records)

    def get(self, student_id: str) -> IdentityRecord | None:
        return self._records.get(student_id)

    def enroll(
        self,
        student_id: str,
        display_name: str,
        vector: Embedding,
        enrolled_at: float | None = None,
    ) -> IdentityRecord:
        """Add an identity, or append a reference embedding to an existing one."""
        vec = as_embedding(vector, self.dimension)
        existing = self._records.get(student_id)
        if existing is None:
            rec = IdentityRecord(
                student_id=_validate_id(student_id),
                display_name=display_name,
                embeddings=(vec,),
                enrolled_at=enrolled_at if enrolled_at is not None else time.time(),
            )
        else:
            rec = IdentityRecord(
                student_id=existing.student_id,
                display_name=display_name or existing.display_name,
                embeddings=existing.embeddings + (vec,),
                enrolled_at=existing.enrolled_at,
            )
        # Copy-and-swap keeps concurrent match() calls on a stable snapshot.
        records = dict(self._records)
        records[student_id] = rec
        self._records = records
        return rec

    def match(self, probe: Embedding, metric: str = "cosine", threshold: float = 0.4) -> MatchResult:
        """Nearest enrolled identity; Known iff the minimum distance is
        within the threshold. Ties go to the lexicographically smallest id."""
        records = self._records
        if not records:
            raise LookupError("no enrolled identities")
        distance = METRICS[metric]
        vec = np.asarray(probe, dtype=np.float64).reshape(-1)
        if vec.shape[0] != self.dimension:
            raise ValueError(f"expected dimension {self.dimension}, got {vec.shape[0]}")
        if not np.isfinite(vec).all():
            raise ValueError("embedding components must be finite")
        best: tuple[float, str] | None = None
        for sid in records:
            for ref in records[sid].embeddings:
                cand = (distance(vec, ref), sid)
                if best is None or cand < best:
                    best = cand
        best_distance, best_sid = best
        return MatchResult(
            known=best_distance <= threshold,
            best_student_id=best_sid,
            best_distance=best_distance,
        )

    # -- persistence: one JSON document per identity under a gallery directory

    def save(self, directory: str | Path) -> None:
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        (path / "meta.json").write_text(json.dumps({"dimension": self.dimension}))
        for sid, rec in self._records.items():
            doc = {
                "student_id": rec.student_id,
                "display_name": rec.display_name,
                "dimension": self.dimension,
                "enrolled_at": rec.enrolled_at,
                "embeddings": [
                    base64.b64encode(np.asarray(e, dtype="<f4").tobytes()).decode("ascii")
                    for e in rec.embeddings
                ],
            }
            (path / f"{sid}.json").write_text(json.dumps(doc))

    @classmethod
    def load(cls, directory: str | Path) -> "Gallery":
        path = Path(directory)
        meta = json.loads((path / "meta.json").read_text())
        gal = cls(dimension=int(meta["dimension"]))
        for doc_path in sorted(path.glob("*.json")):
            if doc_path.name == "meta.json":
                continue
            doc = json.loads(doc_path.read_text())
            if int(doc["dimension"]) != gal.dimension:
                raise ValueError(
                    f"{doc_path.name}: dimension {doc['dimension']} != gallery {gal.dimension}"
                )
            vecs = tuple(
                np.frombuffer(base64.b64decode(b), dtype="<f4").astype(np.float32)
                for b in doc["embeddings"]
            )
            rec = IdentityRecord(
                student_id=doc["student_id"],
                display_name=doc["display_name"],
                embeddings=vecs,
                enrolled_at=float(doc["enrolled_at"]),
            )
            records = dict(gal._records)
            records[rec.student_id] = rec
            gal._records = records
        return gal
