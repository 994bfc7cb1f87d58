"""Detection evaluation: matching, MODA, MODP, precision/recall, ROC/AUC.

Matching is an optimal one-to-one assignment (Hungarian) between detections
and ground truth, restricted to pairs within the match radius; it maximizes
the number of matches first and minimizes total ground distance among those.
Matched pairs score 1 - distance/radius in ground mode, or the IoU itself in
bbox mode.  MODP averages per-frame mean localization scores over frames with
at least one match; frames with zero matches are excluded and counted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, NoGroundTruth, NoMatches, SingleClass, UndefinedMetric
from .geometry import GroundGrid
from .nms import iou


@dataclass(frozen=True)
class MatchConfig:
    mode: str = "ground_distance"  # or "bbox_iou"
    radius: float = 0.5  # meters in ground mode, IoU threshold in bbox mode

    def __post_init__(self):
        if self.mode not in ("ground_distance", "bbox_iou"):
            raise ConfigError(f"unknown match mode {self.mode!r}")
        if self.radius <= 0:
            raise ConfigError("match radius must be positive")
        if self.mode == "bbox_iou" and self.radius > 1:
            raise ConfigError("bbox_iou threshold must lie in (0, 1]")


@dataclass
class FrameEval:
    """Per-frame TP/FP/FN bookkeeping plus localization scores of the matches."""

    frame_id: int
    tp: int
    fp: int
    fn: int
    matched_scores: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.tp != len(self.matched_scores):
            raise ConfigError("tp must equal the number of matched scores")

    @property
    def gt_count(self) -> int:
        return self.tp + self.fn

    def to_dict(self) -> dict:
        return {
            "frame": self.frame_id,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "matched_scores": [float(s) for s in self.matched_scores],
        }


def _pair_scores(dets, gts, grid: GroundGrid | None, cfg: MatchConfig):
    """(feasible, quality) matrices: quality in [0,1], feasible where matchable."""
    n, m = len(dets), len(gts)
    quality = np.zeros((n, m))
    cost = np.zeros((n, m))
    if cfg.mode == "ground_distance":
        if grid is None:
            raise ConfigError("ground_distance matching requires the grid")
        dpos = np.array([grid.cell_center(int(c))[:2] for c, _ in dets]).reshape(n, 2)
        gpos = np.array([grid.cell_center(int(c))[:2] for c in gts]).reshape(m, 2)
        dist = np.linalg.norm(dpos[:, None, :] - gpos[None, :, :], axis=2)
        feasible = dist <= cfg.radius
        cost = dist
        quality = 1.0 - dist / cfg.radius
    else:
        for i, (box, _) in enumerate(dets):
            for j, gbox in enumerate(gts):
                ov = iou(box, gbox)
                quality[i, j] = ov
                cost[i, j] = 1.0 - ov
        feasible = quality >= cfg.radius
    return feasible, cost, quality


def match_frame(dets, gts, grid: GroundGrid | None, cfg: MatchConfig, frame_id: int = 0) -> FrameEval:
    """Assign detections to ground truth and tally TP/FP/FN for one frame.

    dets: list of (cell_or_box, score); gts: list of cells (or boxes in bbox
    mode).  Assignment maximizes match count, then minimizes total cost; the
    big-M trick makes a single Hungarian solve realize that lexicographic
    objective.
    """
    n, m = len(dets), len(gts)
    if n == 0 or m == 0:
        return FrameEval(frame_id, tp=0, fp=n, fn=m)
    feasible, cost, quality = _pair_scores(dets, gts, grid, cfg)
    big = cost[feasible].sum() + 1.0 if feasible.any() else 1.0
    padded = np.where(feasible, cost, big)
    rows, cols = linear_sum_assignment(padded)
    matched_scores = [float(quality[i, j]) for i, j in zip(rows, cols) if feasible[i, j]]
    tp = len(matched_scores)
    return FrameEval(frame_id, tp=tp, fp=n - tp, fn=m - tp, matched_scores=matched_scores)


def moda(frames: list[FrameEval]) -> float:
    """1 - (missed + false positives) / ground truth, summed over frames."""
    gt_total = sum(f.gt_count for f in frames)
    if gt_total == 0:
        raise NoGroundTruth("MODA undefined without ground-truth objects")
    errors = sum(f.fn + f.fp for f in frames)
    return 1.0 - errors / gt_total


def modp(frames: list[FrameEval]) -> float:
    """Mean over frames-with-matches of their mean localization score."""
    per_frame = [np.mean(f.matched_scores) for f in frames if f.tp > 0]
    if not per_frame:
        raise NoMatches("MODP undefined without matched detections")
    return float(np.mean(per_frame))


def frames_without_matches(frames: list[FrameEval]) -> int:
    return sum(1 for f in frames if f.tp == 0)


def precision_recall(frames: list[FrameEval]) -> tuple[float, float]:
    """P = TP/(TP+FP), R = TP/(TP+FN) over summed counts."""
    tp = sum(f.tp for f in frames)
    fp = sum(f.fp for f in frames)
    fn = sum(f.fn for f in frames)
    if tp + fp == 0:
        raise UndefinedMetric("precision undefined: no detections")
    if tp + fn == 0:
        raise UndefinedMetric("recall undefined: no ground truth")
    return tp / (tp + fp), tp / (tp + fn)


def roc_auc(scores) -> tuple[np.ndarray, float]:
    """ROC sweep over unique thresholds plus trapezoid AUC.

    scores: iterable of (score, label).  Returns (points, auc) where points
    rows are (threshold, tpr, fpr) for threshold descending, starting from a
    synthetic (inf, 0, 0).  Ties are grouped per threshold, so the trapezoid
    AUC equals the tie-corrected Mann-Whitney statistic.
    """
    arr = np.asarray([(float(s), int(l)) for s, l in scores])
    if arr.size == 0:
        raise SingleClass("ROC needs scored samples")
    s, y = arr[:, 0], arr[:, 1]
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    ctp = np.cumsum(y == 1)
    cfp = np.cumsum(y == 0)
    # last index of each run of tied scores = cumulative counts at >= threshold
    last = np.nonzero(np.diff(s))[0]
    idx = np.concatenate([last, [len(s) - 1]])
    thresholds = np.concatenate([[np.inf], s[idx]])
    tpr = np.concatenate([[0.0], ctp[idx]]) / n_pos
    fpr = np.concatenate([[0.0], cfp[idx]]) / n_neg
    auc = float(np.trapezoid(tpr, fpr))
    points = np.stack([thresholds, tpr, fpr], axis=1)
    return points, auc


def write_roc_csv(path, points: np.ndarray):
    with open(path, "w") as f:
        f.write("threshold,tpr,fpr\n")
        for t, tpr, fpr in points:
            f.write(f"{t},{tpr},{fpr}\n")


def evaluation_report(frames: list[FrameEval], cfg: MatchConfig) -> dict:
    """Aggregate report; metric fields are null where undefined."""
    report: dict = {
        "match_mode": cfg.mode,
        "match_radius": cfg.radius,
        "frames_without_matches": frames_without_matches(frames),
    }
    try:
        report["moda"] = moda(frames)
    except NoGroundTruth:
        report["moda"] = None
    try:
        report["modp"] = modp(frames)
    except NoMatches:
        report["modp"] = None
    try:
        p, r = precision_recall(frames)
        report["precision"], report["recall"] = p, r
    except UndefinedMetric:
        report["precision"] = report["recall"] = None
    report["frames"] = [f.to_dict() for f in frames]
    return report


def write_report(path, report: dict):
    with open(path, "w") as f:
        json.dump(report, f, indent=1)
        f.write("\n")
