"""Score-weighted non-maxima suppression over multi-view detection candidates.

Candidates are visited in strictly score-descending order (ties broken by
ascending cell index), and one is kept only if its projected rectangle
overlaps every already-kept candidate by at most the threshold in every view.
Overlap in ANY single view above the threshold suppresses, which prevents
ground-plane duplicates that coincide in just one camera.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import CropRect


@dataclass(frozen=True)
class DetectionCandidate:
    """A scored ground cell with its per-view crop rectangles."""

    cell: int
    score: float
    rects: tuple  # per view: CropRect or None (out of FOV)

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ConfigError(f"score {self.score} outside [0, 1]")


def iou(a, b) -> float:
    """Intersection-over-union of two axis-aligned rectangles (x0, y0, x1, y1)."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def _rect_tuple(rect):
    if rect is None:
        return None
    if isinstance(rect, CropRect):
        return (rect.x0, rect.y0, rect.x1, rect.y1) if rect.visible else None
    return tuple(rect)


def max_view_overlap(a: DetectionCandidate, b: DetectionCandidate) -> float:
    """Max IoU across views; views invisible on either side contribute 0."""
    worst = 0.0
    for ra, rb in zip(a.rects, b.rects):
        ta, tb = _rect_tuple(ra), _rect_tuple(rb)
        if ta is None or tb is None:
            continue
        worst = max(worst, iou(ta, tb))
    return worst


def score_weighted_nms(
    candidates: list[DetectionCandidate],
    overlap_threshold: float,
    min_cell_distance: float = 0.0,
    grid=None,
) -> list[DetectionCandidate]:
    """Greedy selection in score order; returns kept candidates in that order.

    min_cell_distance (meters) optionally also suppresses candidates whose
    ground-plane centers fall closer than the given distance to a kept one;
    it requires the grid and is off (0.0) by default.
    """
    if not 0.0 <= overlap_threshold <= 1.0:
        raise ConfigError(f"overlap threshold {overlap_threshold} outside [0, 1]")
    if min_cell_distance > 0.0 and grid is None:
        raise ConfigError("min_cell_distance requires the ground grid")

    order = sorted(candidates, key=lambda c: (-c.score, c.cell))
    kept: list[DetectionCandidate] = []
    for cand in order:
        suppressed = any(max_view_overlap(cand, k) > overlap_threshold for k in kept)
        if not suppressed and min_cell_distance > 0.0:
            cc = grid.cell_center(cand.cell)[:2]
            for k in kept:
                if np.linalg.norm(cc - grid.cell_center(k.cell)[:2]) < min_cell_distance:
                    suppressed = True
                    break
        if not suppressed:
            kept.append(cand)
    return kept


# -- detection JSON lines -----------------------------------------------------


def detection_to_json(frame_id: int, cand: DetectionCandidate) -> str:
    rects = []
    for rect in cand.rects:
        t = _rect_tuple(rect)
        rects.append(None if t is None else [float(v) for v in t])
    return json.dumps(
        {"frame": frame_id, "cell": cand.cell, "score": cand.score, "rects": rects}
    )


def detection_from_json(line: str) -> tuple[int, DetectionCandidate]:
    obj = json.loads(line)
    rects = tuple(
        None if r is None else CropRect(r[0], r[1], r[2], r[3], visible=True)
        for r in obj["rects"]
    )
    return int(obj["frame"]), DetectionCandidate(int(obj["cell"]), float(obj["score"]), rects)


def write_detections(path, rows: list[tuple[int, DetectionCandidate]]):
    with open(path, "w") as f:
        for frame_id, cand in rows:
            f.write(detection_to_json(frame_id, cand))
            f.write("\n")


def read_detections(path) -> list[tuple[int, DetectionCandidate]]:
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(detection_from_json(line))
    return rows
