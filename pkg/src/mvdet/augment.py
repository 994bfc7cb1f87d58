"""Occlusion augmentation ("input dropout") and ratio-controlled sampling.

A small table of rectangular masks in normalized patch coordinates; mask 1 is
"no occlusion".  Applying a mask replaces the covered pixels with white noise
uniform over the normalized value range, on positives and negatives alike so
the noise itself carries no class information.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientPositives

# Pixel values are normalized to this range throughout the pipeline.
VALUE_RANGE = (0.0, 1.0)

N_MASKS = 7


@dataclass(frozen=True)
class OcclusionMask:
    """Rectangle in normalized [0,1]^2 patch coordinates with edge jitter."""

    mask_id: int
    base_rect: tuple[float, float, float, float]
    jitter: float

    def __post_init__(self):
        x0, y0, x1, y1 = self.base_rect
        if not (0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1):
            raise ConfigError(f"mask rect {self.base_rect} outside [0,1]^2")
        if self.jitter < 0:
            raise ConfigError("jitter must be nonnegative")


# Mask shapes: 1 no occlusion, then left half, right half, bottom half,
# top third, bottom-left quadrant, bottom-right quadrant, each with +/-10%
# edge jitter.
DEFAULT_MASKS: tuple[OcclusionMask, ...] = (
    OcclusionMask(1, (0.0, 0.0, 0.0, 0.0), 0.0),
    OcclusionMask(2, (0.0, 0.0, 0.5, 1.0), 0.1),
    OcclusionMask(3, (0.5, 0.0, 1.0, 1.0), 0.1),
    OcclusionMask(4, (0.0, 0.5, 1.0, 1.0), 0.1),
    OcclusionMask(5, (0.0, 0.0, 1.0, 1.0 / 3.0), 0.1),
    OcclusionMask(6, (0.0, 0.5, 0.5, 1.0), 0.1),
    OcclusionMask(7, (0.5, 0.5, 1.0, 1.0), 0.1),
)


def load_mask_table(path) -> tuple[OcclusionMask, ...]:
    """Read a JSON mask table: list of {"mask_id", "rect", "jitter"}."""
    with open(path) as f:
        raw = json.load(f)
    try:
        masks = tuple(
            OcclusionMask(int(m["mask_id"]), tuple(float(v) for v in m["rect"]), float(m["jitter"]))
            for m in raw
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad mask table: {e}") from e
    ids = sorted(m.mask_id for m in masks)
    if ids != list(range(1, len(masks) + 1)):
        raise ConfigError("mask ids must be 1..N without gaps")
    return tuple(sorted(masks, key=lambda m: m.mask_id))


def choose_mask(rng: np.random.Generator, n_masks: int = N_MASKS) -> int:
    """Uniform draw over {1..n_masks}; label-blind by construction."""
    return int(rng.integers(1, n_masks + 1))


def apply_input_dropout(
    patch: np.ndarray,
    mask_id: int,
    rng: np.random.Generator,
    masks: tuple[OcclusionMask, ...] = DEFAULT_MASKS,
    value_range: tuple[float, float] = VALUE_RANGE,
) -> np.ndarray:
    """Replace the jittered mask rectangle with uniform white noise.

    Mask 1 returns the input unchanged.  For the rest, each rectangle edge is
    jittered by U(-j, +j) and clipped to [0,1]; pixels outside the rectangle
    are untouched (the result is a copy).
    """
    if not 1 <= mask_id <= len(masks):
        raise ConfigError(f"mask_id {mask_id} outside 1..{len(masks)}")
    mask = masks[mask_id - 1]
    x0, y0, x1, y1 = mask.base_rect
    if (x1 - x0) * (y1 - y0) == 0.0:
        return patch
    if mask.jitter:
        jx0, jy0, jx1, jy1 = rng.uniform(-mask.jitter, mask.jitter, size=4)
        x0 = min(max(x0 + jx0, 0.0), 1.0)
        y0 = min(max(y0 + jy0, 0.0), 1.0)
        x1 = min(max(x1 + jx1, 0.0), 1.0)
        y1 = min(max(y1 + jy1, 0.0), 1.0)
    h, w = patch.shape[:2]
    c0, c1 = int(round(x0 * w)), int(round(x1 * w))
    r0, r1 = int(round(y0 * h)), int(round(y1 * h))
    out = patch.copy()
    if r1 > r0 and c1 > c0:
        lo, hi = value_range
        out[r0:r1, c0:c1] = rng.uniform(lo, hi, size=out[r0:r1, c0:c1].shape)
    return out


@dataclass(frozen=True)
class SamplerConfig:
    batch_size: int
    r: float
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 < self.r <= 1.0:
            raise ConfigError("positive fraction r must lie in (0, 1]")

    @property
    def positives_per_batch(self) -> int:
        # Nearest integer, half away from zero, at least one positive.
        return max(1, int(np.floor(self.r * self.batch_size + 0.5)))


class MinibatchSampler:
    """Yields index batches with a forced positive ratio.

    Per batch: exactly cfg.positives_per_batch positives (drawn from a
    reshuffled positive cycle) and the rest negatives.  Negatives are drawn
    without replacement within one epoch; the epoch ends when the negative
    pool is exhausted (the final batch may carry fewer negatives).
    """

    def __init__(self, labels: np.ndarray, cfg: SamplerConfig):
        labels = np.asarray(labels)
        self.cfg = cfg
        self._pos = np.flatnonzero(labels == 1)
        self._neg = np.flatnonzero(labels == 0)
        if len(self._pos) == 0:
            raise InsufficientPositives("dataset has no positive samples")
        if len(self._neg) == 0:
            raise ConfigError("dataset has no negative samples")
        if cfg.positives_per_batch >= cfg.batch_size:
            raise ConfigError("batch has no room for negatives at this ratio")
        self._rng = np.random.default_rng(cfg.seed)
        self._pos_cycle: list[int] = []

    def _next_positives(self, n: int) -> list[int]:
        out: list[int] = []
        while len(out) < n:
            if not self._pos_cycle:
                self._pos_cycle = list(self._rng.permutation(self._pos))
            out.append(int(self._pos_cycle.pop()))
        return out

    def epoch(self):
        """Iterate index arrays for one epoch over the negative pool."""
        n_pos = self.cfg.positives_per_batch
        n_neg = self.cfg.batch_size - n_pos
        neg_order = self._rng.permutation(self._neg)
        for start in range(0, len(neg_order), n_neg):
            negs = neg_order[start:start + n_neg]
            batch = np.array(self._next_positives(n_pos) + [int(i) for i in negs])
            yield self._rng.permutation(batch)

    def batches_per_epoch(self) -> int:
        n_neg = self.cfg.batch_size - self.cfg.positives_per_batch
        return int(np.ceil(len(self._neg) / n_neg))


def sample_minibatch(labels: np.ndarray, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    """One-off balanced batch (with-replacement negatives); convenience only.

    Training loops should use MinibatchSampler, which owns the per-epoch
    without-replacement negative pool.
    """
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) == 0:
        raise InsufficientPositives("dataset has no positive samples")
    n_pos = cfg.positives_per_batch
    n_neg = cfg.batch_size - n_pos
    picked = np.concatenate([rng.choice(pos, n_pos), rng.choice(neg, n_neg, replace=False)])
    return rng.permutation(picked)
