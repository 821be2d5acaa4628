"""Evaluation harness: replay scenario fixtures through configurable
backend/metric/threshold combinations and aggregate ACC/FAR/FRR.

Decisions are scored per recognition attempt (the "detected faces"
denominator), against the per-detection ground-truth labels carried by the
fixture. Attempt distances do not depend on the threshold, so sweeps and
repeated scorings reuse one collected decision set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from ..backends import PatternDetector, PatternEmbedder, ScriptedDetector
from ..gallery import ConfusionCounts, Gallery, MatchResult, metrics
from ..pipeline import PipelineConfig, RecognitionPipeline
from ..vision import Detection, ImageBuffer, detection_from_json

UNENROLLED = "unenrolled"
_UNLIMITED = 10**9


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    detector: str = "scripted"
    embedder: str = "pattern"
    metric: str = "cosine"
    threshold: float = 0.4
    gallery_dir: str | None = None
    gallery_size: int | None = None

    def resolve_detector(self, fixture: "ScenarioFixture"):
        if self.detector == "scripted":
            return ScriptedDetector(fixture.script)
        if self.detector == "pattern":
            return PatternDetector()
        if self.detector == "none":
            return ScriptedDetector([])
        raise FixtureError(f"unknown detector backend {self.detector!r}")

    def resolve_embedder(self, dimension: int):
        name, _, noise = self.embedder.partition(":")
        if name == "pattern":
            return PatternEmbedder(dim=dimension, noise=float(noise) if noise else 0.0)
        raise FixtureError(f"unknown embedder backend {self.embedder!r}")


@dataclass
class ScenarioFixture:
    """On-disk scenario: frames + scripted detections + per-detection labels
    + a reference gallery."""

    name: str
    directory: Path
    frames: list[tuple[ImageBuffer, int]]
    script: list[list[Detection]]
    labels: list[list[str]]
    gallery_dir: Path
    dimension: int

    @classmethod
    def load(cls, directory: str | Path) -> "ScenarioFixture":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        script = [[detection_from_json(d) for d in frame] for frame in manifest["script"]]
        labels = [list(frame) for frame in manifest["labels"]]
        if len(script) != len(labels) or any(len(s) != len(l) for s, l in zip(script, labels)):
            raise FixtureError("every scripted detection needs a ground-truth label")
        import numpy as np
        from PIL import Image

        frames = []
        for entry in manifest["frames"]:
            with Image.open(directory / entry["file"]) as im:
                frames.append((ImageBuffer.from_array(np.asarray(im, dtype=np.uint8)), int(entry["t_ms"])))
        if len(frames) != len(script):
            raise FixtureError("frame count != script length")
        return cls(
            name=manifest.get("name", directory.name),
            directory=directory,
            frames=frames,
            script=script,
            labels=labels,
            gallery_dir=(directory / manifest["gallery"]).resolve(),
            dimension=int(manifest.get("dimension", 64)),
        )


@dataclass(frozen=True)
class DecisionRecord:
    """One recognition attempt: what the gallery said vs. who it really was."""

    truth: str
    enrolled: bool
    best_student_id: str
    best_distance: float


@dataclass(frozen=True)
class ScenarioReport:
    name: str
    config: EvalConfig
    gallery_size: int
    counts: ConfusionCounts
    enrolled_counts: ConfusionCounts
    unenrolled_counts: ConfusionCounts
    acc: float
    far: float
    frr: float

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "detector": self.config.detector,
            "embedder": self.config.embedder,
            "metric": self.config.metric,
            "threshold": self.config.threshold,
            "gallery_size": self.gallery_size,
            "counts": {
                "correct": self.counts.correct,
                "incorrect": self.counts.incorrect,
                "unknown": self.counts.unknown,
                "detected": self.counts.detected,
            },
            "acc": self.acc,
            "far": self.far,
            "frr": self.frr,
        }


def _load_gallery(fixture: ScenarioFixture, config: EvalConfig) -> Gallery:
    gallery = Gallery.load(config.gallery_dir or fixture.gallery_dir)
    if config.gallery_size is not None:
        subset = Gallery(gallery.dimension)
        for sid in sorted(gallery.records)[: config.gallery_size]:
            rec = gallery.get(sid)
            for vec in rec.embeddings:
                subset.enroll(sid, rec.display_name, vec, enrolled_at=rec.enrolled_at)
        return subset
    return gallery


def collect_decisions(
    fixture: ScenarioFixture, config: EvalConfig
) -> tuple[list[DecisionRecord], Gallery]:
    """Replay the fixture once, recording every recognition attempt.

    The pipeline runs with voting disabled (unreachable vote_k) so each
    scripted detection is scored, mirroring a detected-faces denominator.
    """
    gallery = _load_gallery(fixture, config)
    truth_by_det: dict[int, str] = {}
    for dets, labels in zip(fixture.script, fixture.labels):
        for det, label in zip(dets, labels):
            truth_by_det[id(det)] = label

    records: list[DecisionRecord] = []

    def listener(track_id: int, det: Detection, result: MatchResult) -> None:
        truth = truth_by_det.get(id(det), UNENROLLED)
        records.append(
            DecisionRecord(
                truth=truth,
                enrolled=truth in gallery,
                best_student_id=result.best_student_id,
                best_distance=result.best_distance,
            )
        )

    pipeline = RecognitionPipeline(
        detector=config.resolve_detector(fixture),
        embedder=config.resolve_embedder(gallery.dimension),
        gallery=gallery,
        config=PipelineConfig(vote_k=_UNLIMITED, max_attempts=_UNLIMITED),
        threshold=config.threshold,
        metric=config.metric,
        decision_listener=listener,
        allow_empty_gallery=True,
    )
    for frame, t in fixture.frames:
        pipeline.process_frame(frame, t)
    if pipeline.errors:
        raise FixtureError(f"{pipeline.errors} backend errors while replaying {fixture.name}")
    return records, gallery


def score_decisions(
    records: list[DecisionRecord], threshold: float
) -> tuple[ConfusionCounts, ConfusionCounts]:
    """(enrolled, unenrolled) raw confusion counts at a threshold."""
    e_correct = e_incorrect = e_unknown = 0
    u_incorrect = u_unknown = 0
    for r in records:
        known = r.best_distance <= threshold
        if r.enrolled:
            if not known:
                e_unknown += 1
            elif r.best_student_id == r.truth:
                e_correct += 1
            else:
                e_incorrect += 1
        else:
            if known:
                u_incorrect += 1
            else:
                u_unknown += 1
    enrolled = ConfusionCounts(e_correct, e_incorrect, e_unknown, e_correct + e_incorrect + e_unknown)
    unenrolled = ConfusionCounts(0, u_incorrect, u_unknown, u_incorrect + u_unknown)
    return enrolled, unenrolled


def combined_metrics(
    enrolled: ConfusionCounts, unenrolled: ConfusionCounts
) -> tuple[float, float, float]:
    """ACC/FAR/FRR over a mix of enrolled and unenrolled probes.

    Pure-enrolled and pure-unenrolled inputs reduce to the single-subject
    metric definitions.
    """
    detected = enrolled.detected + unenrolled.detected
    if detected == 0:
        raise ValueError("no decisions")
    if unenrolled.detected == 0:
        m = metrics(enrolled, enrolled=True)
        return m.acc, m.far, m.frr
    if enrolled.detected == 0:
        m = metrics(unenrolled, enrolled=False)
        return m.acc, m.far, m.frr
    acc = Fraction(enrolled.correct + unenrolled.unknown, detected)
    far = Fraction(enrolled.incorrect + unenrolled.incorrect, detected)
    frr = Fraction(enrolled.unknown, enrolled.detected)
    return float(acc), float(far), float(frr)


def _report(
    fixture_name: str,
    config: EvalConfig,
    gallery: Gallery,
    records: list[DecisionRecord],
    threshold: float,
) -> ScenarioReport:
    enrolled, unenrolled = score_decisions(records, threshold)
    acc, far, frr = combined_metrics(enrolled, unenrolled)
    return ScenarioReport(
        name=fixture_name,
        config=config,
        gallery_size=len(gallery),
        counts=enrolled + unenrolled,
        enrolled_counts=enrolled,
        unenrolled_counts=unenrolled,
        acc=acc,
        far=far,
        frr=frr,
    )


def run_scenario(fixture: ScenarioFixture, config: EvalConfig | None = None) -> ScenarioReport:
    """Score one fixture under one configuration."""
    config = config or EvalConfig()
    records, gallery = collect_decisions(fixture, config)
    return _report(fixture.name, config, gallery, records, config.threshold)


def threshold_sweep(
    fixture: ScenarioFixture, config: EvalConfig, thresholds: list[float]
) -> list[ScenarioReport]:
    """Metrics across an ascending threshold sweep (the operating-point
    experiment)."""
    if len(thresholds) < 2:
        raise ValueError("need at least 2 thresholds")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly ascending")
    records, gallery = collect_decisions(fixture, config)
    return [_report(fixture.name, config, gallery, records, t) for t in thresholds]


@dataclass(frozen=True)
class GridSpec:
    detectors: tuple[str, ...]
    recognizers: tuple[str, ...]
    metrics: tuple[str, ...]
    gallery_sizes: tuple[int, ...]
    fixtures: tuple[str, ...]
    threshold: float = 0.4

    def __post_init__(self) -> None:
        if not (self.detectors and self.recognizers and self.metrics and self.gallery_sizes):
            raise ValueError("grid axes must be non-empty")

    @classmethod
    def load(cls, path: str | Path) -> "GridSpec":
        obj = json.loads(Path(path).read_text())
        base = Path(path).parent
        return cls(
            detectors=tuple(obj["detectors"]),
            recognizers=tuple(obj["recognizers"]),
            metrics=tuple(obj["metrics"]),
            gallery_sizes=tuple(int(g) for g in obj["gallery_sizes"]),
            fixtures=tuple(str(base / f) for f in obj["fixtures"]),
            threshold=float(obj.get("threshold", 0.4)),
        )


@dataclass
class GridResult:
    spec: GridSpec
    cells: dict[tuple[str, str, str, int], dict[str, Any]] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "threshold": self.spec.threshold,
            "cells": [
                {
                    "detector": d,
                    "recognizer": r,
                    "metric": m,
                    "gallery_size": g,
                    **payload,
                }
                for (d, r, m, g), payload in self.cells.items()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any], spec: GridSpec) -> "GridResult":
        result = cls(spec=spec)
        for cell in obj["cells"]:
            key = (cell["detector"], cell["recognizer"], cell["metric"], cell["gallery_size"])
            result.cells[key] = {
                k: v for k, v in cell.items() if k not in ("detector", "recognizer", "metric", "gallery_size")
            }
        return result

    def render_text(self) -> str:
        """Detectors as rows, recognizers as columns, metric as sub-row."""
        lines = []
        for g in self.spec.gallery_sizes:
            lines.append(f"gallery size {g}")
            header = ["detector/metric"] + list(self.spec.recognizers)
            widths = [max(20, len(h) + 2) for h in header]
            lines.append("".join(h.ljust(w) for h, w in zip(header, widths)))
            for d in self.spec.detectors:
                for m in self.spec.metrics:
                    row = [f"{d}/{m}"]
                    for r in self.spec.recognizers:
                        cell = self.cells.get((d, r, m, g), {})
                        if cell.get("error"):
                            row.append("ERR")
                        elif cell.get("acc") is None:
                            row.append("n/a")
                        else:
                            row.append(f"{cell['acc'] * 100:.2f}%")
                    lines.append("".join(v.ljust(w) for v, w in zip(row, widths)))
            lines.append("")
        return "\n".join(lines)


def run_grid(spec: GridSpec) -> GridResult:
    """One run_scenario aggregate per (detector, recognizer, metric,
    gallery size) cell; per-cell failures are recorded in-cell."""
    fixtures = [ScenarioFixture.load(f) for f in spec.fixtures]
    result = GridResult(spec=spec)
    for d in spec.detectors:
        for r in spec.recognizers:
            for m in spec.metrics:
                for g in spec.gallery_sizes:
                    key = (d, r, m, g)
                    try:
                        enrolled = ConfusionCounts(0, 0, 0, 0)
                        unenrolled = ConfusionCounts(0, 0, 0, 0)
                        for fixture in fixtures:
                            config = EvalConfig(
                                detector=d,
                                embedder=r,
                                metric=m,
                                threshold=spec.threshold,
                                gallery_size=g,
                            )
                            records, _gallery = collect_decisions(fixture, config)
                            e, u = score_decisions(records, spec.threshold)
                            enrolled += e
                            unenrolled += u
                        detected = enrolled.detected + unenrolled.detected
                        if detected == 0:
                            # distinct from zero accuracy: nothing was detected
                            result.cells[key] = {"acc": None, "detected": 0}
                        else:
                            acc, far, frr = combined_metrics(enrolled, unenrolled)
                            result.cells[key] = {
                                "acc": acc,
                                "far": far,
                                "frr": frr,
                                "detected": detected,
                            }
                    except Exception as err:
                        result.cells[key] = {"error": str(err)}
    return result
