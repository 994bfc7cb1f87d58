"""Multi-view detection core: samples, model, training, and frame detection.

The model is C per-view embeddings (copies of the first d layers of one
monocular network) whose features are concatenated, in ascending camera_id
order, into one vector classified by a small MLP head ending in log-softmax.
Keeping the embeddings frozen trains only the head, the low-capacity regime
suited to small multi-view datasets; unfreezing lets per-view weights diverge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import nnet
from .augment import (
    DEFAULT_MASKS,
    MinibatchSampler,
    SamplerConfig,
    apply_input_dropout,
    choose_mask,
)
from .errors import (
    CalibrationMismatch,
    ConfigError,
    DepthOutOfRange,
    InsufficientData,
    NotEnoughPersons,
    ShapeMismatch,
)
from .geometry import (
    CameraCalibration,
    CropRect,
    Cylinder,
    GroundGrid,
    crop_region,
    project_cylinder,
)
from .nms import DetectionCandidate


# -- samples and crops --------------------------------------------------------


@dataclass(frozen=True)
class CropConfig:
    """How cylinder crops are produced for every cell and view."""

    out_h: int = 32
    out_w: int = 32
    mode: str = "warp"  # or "square"
    trim_px: int = 0
    cylinder_radius: float = 0.3
    cylinder_height: float = 1.75

    def cylinder_at(self, x: float, y: float) -> Cylinder:
        return Cylinder((x, y, 0.0), self.cylinder_radius, self.cylinder_height)


@dataclass
class MultiViewSample:
    """C patches for one ground cell plus its occupancy label."""

    patches: np.ndarray  # (C, out_h, out_w, 3)
    label: int
    cell: int
    frame_id: int
    provenance: str = "annotated"
    person_id: int | None = None

    def __post_init__(self):
        if self.patches.ndim != 4 or self.patches.shape[3] != 3:
            raise ShapeMismatch(f"patches must be (C, H, W, 3), got {self.patches.shape}")
        if self.label not in (0, 1):
            raise ConfigError(f"label must be 0 or 1, got {self.label}")


@dataclass
class MonoSample:
    patch: np.ndarray  # (out_h, out_w, 3)
    label: int
    frame_id: int
    camera_id: int
    cell: int


@dataclass
class OccupancyMap:
    frame_id: int
    q: np.ndarray  # (G,) occupancy probabilities

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64)
        if q.ndim != 1 or np.any(q < 0) or np.any(q > 1):
            raise ConfigError("q must be a vector of probabilities in [0, 1]")
        self.q = q


def cell_rects(
    calibs: list[CameraCalibration], grid: GroundGrid, crop: CropConfig, cell: int
) -> list[CropRect]:
    """Per-view crop rectangles of the standard cylinder standing at a cell."""
    cx, cy, _ = grid.cell_center(cell)
    cyl = crop.cylinder_at(cx, cy)
    return [project_cylinder(c, cyl) for c in calibs]


def crop_views(images: list[np.ndarray], rects: list[CropRect], crop: CropConfig) -> np.ndarray:
    """Stack per-view crops into (C, out_h, out_w, 3); invisible views are zeros."""
    return np.stack(
        [crop_region(img, r, crop.out_h, crop.out_w, crop.mode, crop.trim_px)
         for img, r in zip(images, rects)]
    )


def stack_patches(samples: list[MultiViewSample]) -> tuple[np.ndarray, np.ndarray]:
    """(N, C, H, W, 3) patch tensor and (N,) label vector."""
    return np.stack([s.patches for s in samples]), np.array([s.label for s in samples])


# -- model --------------------------------------------------------------------


@dataclass
class MultiViewModel:
    embeddings: list[nnet.Network]  # ascending camera_id order
    head: nnet.Network
    d: int
    freeze_embeddings: bool = True
    input_hw: tuple[int, int] = (32, 32)
    meta: dict = field(default_factory=dict)

    @property
    def n_views(self) -> int:
        return len(self.embeddings)

    @property
    def features_per_view(self) -> int:
        probe = np.zeros((1, 3, self.input_hw[0], self.input_hw[1]))
        return self.embeddings[0].forward(probe).shape[1]


def build_multiview(
    mono: nnet.Network,
    d: int,
    n_views: int,
    head_hidden: tuple[int, ...] = nnet.DESK_HEAD_HIDDEN,
    input_hw: tuple[int, int] = (32, 32),
    seed: int = 0,
    freeze_embeddings: bool = True,
) -> MultiViewModel:
    """Copy the first d monocular layers into each view; fresh random head.

    If the truncation does not end in flat features, a Flatten adapter is
    appended so each embedding outputs a feature vector.
    """
    if not 1 <= d <= len(mono.layers):
        raise DepthOutOfRange(f"depth {d} outside [1, {len(mono.layers)}]")
    if n_views < 1:
        raise ConfigError("n_views must be >= 1")
    base = mono.truncate(d)
    probe = np.zeros((1, 3, input_hw[0], input_hw[1]))
    if base.forward(probe).ndim != 2:
        base.append(nnet.Flatten())
    q = base.forward(probe).shape[1]
    embeddings = [base.copy() for _ in range(n_views)]
    head = nnet.Network(nnet.head_specs(n_views * q, head_hidden), seed=seed)
    return MultiViewModel(
        embeddings=embeddings,
        head=head,
        d=d,
        freeze_embeddings=freeze_embeddings,
        input_hw=input_hw,
        meta={"view_order": "ascending camera_id", "features_per_view": q},
    )


def embed_features(model: MultiViewModel, patches: np.ndarray) -> np.ndarray:
    """(N, C, H, W, 3) patches -> (N, C*Q) concatenated eval-mode features."""
    if patches.ndim != 5 or patches.shape[1] != model.n_views:
        raise ShapeMismatch(f"expected (N, {model.n_views}, H, W, 3), got {patches.shape}")
    feats = [
        emb.predict(patches[:, v].transpose(0, 3, 1, 2))
        for v, emb in enumerate(model.embeddings)
    ]
    return np.concatenate(feats, axis=1)


def predict_q(model: MultiViewModel, patches: np.ndarray) -> np.ndarray:
    """Occupancy probabilities for a batch of multi-view samples."""
    feats = embed_features(model, patches)
    log_probs = model.head.predict(feats)
    return np.exp(log_probs[:, 1])


def predict_cell(model: MultiViewModel, sample: MultiViewSample) -> float:
    """q = P(cell occupied | its C patches), the positive-class probability."""
    return float(predict_q(model, sample.patches[None])[0])


# -- training -----------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    r: float = 0.33
    optimizer: str = "adam"
    optimizer_options: dict = field(default_factory=dict)
    seed: int = 0
    input_dropout: bool = True
    masks: tuple | None = None  # occlusion-mask table; None = built-in
    val_fraction: float = 0.2
    patience: int | None = 10
    pnorm: int | None = None
    pnorm_weight: float = 0.0
    start_epoch: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in [0, 1)")
        if self.pnorm not in (None, 1, 2):
            raise ConfigError("pnorm must be 1, 2, or unset")


def _split_train_val(n: int, val_fraction: float, rng: np.random.Generator):
    order = rng.permutation(n)
    n_val = int(round(n * val_fraction))
    return order[n_val:], order[:n_val]


def _nll_eval(net: nnet.Network, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(mean NLL, accuracy) in evaluation mode."""
    log_probs = net.predict(x)
    loss, _ = nnet.nll_loss(log_probs, y)
    acc = float((log_probs.argmax(axis=1) == y).mean())
    return loss, acc


class _BestTracker:
    """Keeps the parameter state with the lowest validation loss."""

    def __init__(self, nets: list[nnet.Network], patience: int | None):
        self._nets = nets
        self._patience = patience
        self.best_loss = np.inf
        self._best_state = [n.get_state() for n in nets]
        self._since_best = 0

    def update(self, val_loss: float) -> bool:
        """Record state if improved; True when patience is exhausted."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self._best_state = [n.get_state() for n in self._nets]
            self._since_best = 0
        else:
            self._since_best += 1
        return self._patience is not None and self._since_best > self._patience

    def restore(self):
        for net, state in zip(self._nets, self._best_state):
            net.set_state(state)


def train_monocular(
    net: nnet.Network,
    patches: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
) -> tuple[nnet.Network, list[dict]]:
    """Train a single-view two-way classifier with occlusion augmentation.

    Every sampled patch, positive or negative, passes through input dropout
    (when enabled) with a uniformly chosen mask.  Returns the parameters with
    the best validation loss within the epoch budget; a zero-epoch budget
    returns the network unchanged.
    """
    patches = np.asarray(patches, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(patches) != len(labels) or len(patches) < 2:
        raise InsufficientData("need at least two labeled patches")
    if cfg.epochs == 0:
        return net, []

    rng = np.random.default_rng([cfg.seed, 0x3A0])
    train_idx, val_idx = _split_train_val(len(labels), cfg.val_fraction, rng)
    y_train = labels[train_idx]
    if y_train.min(initial=1) == 1 or y_train.max(initial=0) == 0:
        raise InsufficientData("training split lacks one of the classes")

    sampler = MinibatchSampler(
        y_train, SamplerConfig(cfg.batch_size, cfg.r, seed=int(rng.integers(2 ** 31)))
    )
    opt = nnet.make_optimizer(cfg.optimizer, net.parameters(), **cfg.optimizer_options)
    tracker = _BestTracker([net], cfg.patience)
    x_val = patches[val_idx].transpose(0, 3, 1, 2) if len(val_idx) else None
    y_val = labels[val_idx]

    history = []
    for epoch in range(cfg.start_epoch, cfg.start_epoch + cfg.epochs):
        losses = []
        for batch in sampler.epoch():
            idx = train_idx[batch]
            xb = patches[idx]
            if cfg.input_dropout:
                masks = cfg.masks or DEFAULT_MASKS
                xb = np.stack(
                    [apply_input_dropout(p, choose_mask(rng, len(masks)), rng, masks)
                     for p in xb]
                )
            log_probs = net.forward(xb.transpose(0, 3, 1, 2), training=True)
            loss, dloss = nnet.nll_loss(log_probs, labels[idx])
            if cfg.pnorm is not None:
                loss += nnet.pnorm_penalty(net, cfg.pnorm, cfg.pnorm_weight)
            net.zero_grad()
            net.backward(dloss)
            if cfg.pnorm is not None:
                nnet.add_pnorm_grads(net, cfg.pnorm, cfg.pnorm_weight)
            opt.step(net.parameters(), net.gradients())
            losses.append(loss)
        if x_val is not None and len(x_val):
            val_loss, val_acc = _nll_eval(net, x_val, y_val)
        else:
            val_loss, val_acc = float(np.mean(losses)), float("nan")
        history.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(losses)),
                "val_loss": val_loss,
                "val_acc": val_acc,
            }
        )
        if tracker.update(val_loss):
            break
    tracker.restore()
    return net, history


def train_feature_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    head_hidden: tuple[int, ...] = nnet.DESK_HEAD_HIDDEN,
    head: nnet.Network | None = None,
) -> tuple[nnet.Network, list[dict]]:
    """Train an MLP head on fixed feature vectors (the frozen-embedding path)."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if head is None:
        head = nnet.Network(nnet.head_specs(features.shape[1], head_hidden), seed=cfg.seed)
    if cfg.epochs == 0:
        return head, []
    rng = np.random.default_rng([cfg.seed, 0x3A1])
    train_idx, val_idx = _split_train_val(len(labels), cfg.val_fraction, rng)
    y_train = labels[train_idx]
    if y_train.min(initial=1) == 1 or y_train.max(initial=0) == 0:
        raise InsufficientData("training split lacks one of the classes")
    sampler = MinibatchSampler(
        y_train, SamplerConfig(cfg.batch_size, cfg.r, seed=int(rng.integers(2 ** 31)))
    )
    opt = nnet.make_optimizer(cfg.optimizer, head.parameters(), **cfg.optimizer_options)
    tracker = _BestTracker([head], cfg.patience)
    history = []
    for epoch in range(cfg.start_epoch, cfg.start_epoch + cfg.epochs):
        losses = []
        for batch in sampler.epoch():
            idx = train_idx[batch]
            log_probs = head.forward(features[idx], training=True)
            loss, dloss = nnet.nll_loss(log_probs, labels[idx])
            if cfg.pnorm is not None:
                loss += nnet.pnorm_penalty(head, cfg.pnorm, cfg.pnorm_weight)
            head.zero_grad()
            head.backward(dloss)
            if cfg.pnorm is not None:
                nnet.add_pnorm_grads(head, cfg.pnorm, cfg.pnorm_weight)
            opt.step(head.parameters(), head.gradients())
            losses.append(loss)
        if len(val_idx):
            val_loss, val_acc = _nll_eval(head, features[val_idx], labels[val_idx])
        else:
            val_loss, val_acc = float(np.mean(losses)), float("nan")
        history.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(losses)),
                "val_loss": val_loss,
                "val_acc": val_acc,
            }
        )
        if tracker.update(val_loss):
            break
    tracker.restore()
    return head, history


def train_head(
    model: MultiViewModel,
    samples: list[MultiViewSample],
    cfg: TrainConfig,
) -> tuple[MultiViewModel, list[dict]]:
    """Train the multi-view classifier on labeled samples.

    With frozen embeddings only head parameters change (features are computed
    once); otherwise gradients flow into every per-view embedding, whose
    weights then diverge independently.
    """
    if not samples:
        raise InsufficientData("no multi-view samples")
    patches, labels = stack_patches(samples)
    if labels.min() == 1 or labels.max() == 0:
        raise InsufficientData("samples must include both classes")

    if model.freeze_embeddings:
        features = embed_features(model, patches)
        head, history = train_feature_classifier(features, labels, cfg, head=model.head)
        model.head = head
        return model, history

    rng = np.random.default_rng([cfg.seed, 0x3A2])
    train_idx, val_idx = _split_train_val(len(labels), cfg.val_fraction, rng)
    y_train = labels[train_idx]
    if y_train.min(initial=1) == 1 or y_train.max(initial=0) == 0:
        raise InsufficientData("training split lacks one of the classes")
    sampler = MinibatchSampler(
        y_train, SamplerConfig(cfg.batch_size, cfg.r, seed=int(rng.integers(2 ** 31)))
    )
    nets = model.embeddings + [model.head]
    params = [p for n in nets for p in n.parameters()]
    grads = [g for n in nets for g in n.gradients()]
    opt = nnet.make_optimizer(cfg.optimizer, params, **cfg.optimizer_options)
    tracker = _BestTracker(nets, cfg.patience)
    q_features = model.features_per_view

    history = []
    for epoch in range(cfg.start_epoch, cfg.start_epoch + cfg.epochs):
        losses = []
        for batch in sampler.epoch():
            idx = train_idx[batch]
            xb = patches[idx]
            feats = [
                emb.forward(xb[:, v].transpose(0, 3, 1, 2), training=True)
                for v, emb in enumerate(model.embeddings)
            ]
            log_probs = model.head.forward(np.concatenate(feats, axis=1), training=True)
            loss, dloss = nnet.nll_loss(log_probs, labels[idx])
            for net in nets:
                net.zero_grad()
            dfeat = model.head.backward(dloss)
            for v, emb in enumerate(model.embeddings):
                emb.backward(dfeat[:, v * q_features:(v + 1) * q_features])
            opt.step(params, grads)
            losses.append(loss)
        if len(val_idx):
            val_q = predict_q(model, patches[val_idx])
            val_pred = (val_q >= 0.5).astype(int)
            val_loss = float(
                -np.mean(np.log(np.clip(np.where(labels[val_idx] == 1, val_q, 1 - val_q), 1e-12, 1.0)))
            )
            val_acc = float((val_pred == labels[val_idx]).mean())
        else:
            val_loss, val_acc = float(np.mean(losses)), float("nan")
        history.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(losses)),
                "val_loss": val_loss,
                "val_acc": val_acc,
            }
        )
        if tracker.update(val_loss):
            break
    tracker.restore()
    return model, history


# -- hard negatives -----------------------------------------------------------


def _shift_rect(rect: CropRect, dx: float, width: int, height: int) -> CropRect:
    x0 = rect.x0 + dx
    x1 = rect.x1 + dx
    cx0, cy0 = max(x0, 0.0), max(rect.y0, 0.0)
    cx1, cy1 = min(x1, float(width)), min(rect.y1, float(height))
    if cx1 - cx0 <= 0 or cy1 - cy0 <= 0 or (cx1 - cx0) * (cy1 - cy0) < 4.0:
        return CropRect(0.0, 0.0, 0.0, 0.0, visible=False)
    return CropRect(cx0, cy0, cx1, cy1, visible=True)


def generate_hard_negatives(
    positives: list[MultiViewSample],
    mode: str,
    rng: np.random.Generator,
    frame_images=None,
    calibs: list[CameraCalibration] | None = None,
    grid: GroundGrid | None = None,
    crop: CropConfig | None = None,
    per_positive: int = 1,
) -> list[MultiViewSample]:
    """Synthesize negative multi-view samples from positive ones.

    mode="shift": displace the crop rectangles of one or two randomly chosen
    visible views sideways by 0.5..1.5 crop widths and re-crop, keeping the
    other views; needs frame_images (frame_id -> list of C images), calibs,
    grid, and crop.  mode="mix": recombine views of two different persons'
    positives from the same frame.  All outputs carry label 0.
    """
    if mode not in ("shift", "mix"):
        raise ConfigError(f"unknown hard-negative mode {mode!r}")
    out: list[MultiViewSample] = []

    if mode == "shift":
        if frame_images is None or calibs is None or grid is None or crop is None:
            raise ConfigError("shift mode needs frame_images, calibs, grid, and crop")
        for pos in positives:
            images = frame_images(pos.frame_id)
            rects = cell_rects(calibs, grid, crop, pos.cell)
            visible = [v for v, r in enumerate(rects) if r.visible]
            if not visible:
                continue
            for _ in range(per_positive):
                n_shift = int(rng.integers(1, 3)) if len(visible) >= 2 else 1
                views = rng.choice(visible, size=n_shift, replace=False)
                patches = pos.patches.copy()
                for v in views:
                    rect = rects[v]
                    dx = float(rng.uniform(0.5, 1.5)) * rect.width
                    if rng.integers(2):
                        dx = -dx
                    shifted = _shift_rect(rect, dx, calibs[v].image_width, calibs[v].image_height)
                    patches[v] = crop_region(
                        images[v], shifted, crop.out_h, crop.out_w, crop.mode, crop.trim_px
                    )
                out.append(
                    MultiViewSample(
                        patches=patches,
                        label=0,
                        cell=pos.cell,
                        frame_id=pos.frame_id,
                        provenance="hard_shift",
                    )
                )
        return out

    by_frame: dict[int, list[MultiViewSample]] = {}
    for pos in positives:
        if pos.person_id is not None:
            by_frame.setdefault(pos.frame_id, []).append(pos)
    eligible = {
        fid: group
        for fid, group in by_frame.items()
        if len({s.person_id for s in group}) >= 2
    }
    if not eligible:
        raise NotEnoughPersons("mix mode needs a frame with two persons' positives")
    frame_ids = sorted(eligible)
    n_views = positives[0].patches.shape[0]
    if n_views < 2:
        raise NotEnoughPersons("mix mode needs at least two views")
    n_out = per_positive * len(positives)
    for _ in range(n_out):
        fid = frame_ids[int(rng.integers(len(frame_ids)))]
        group = eligible[fid]
        a, b = rng.choice(len(group), size=2, replace=False)
        sa, sb = group[int(a)], group[int(b)]
        # random non-constant source pattern over the views
        pattern = np.zeros(n_views, dtype=bool)
        while pattern.all() or not pattern.any():
            pattern = rng.integers(2, size=n_views).astype(bool)
        patches = np.where(pattern[:, None, None, None], sa.patches, sb.patches)
        out.append(
            MultiViewSample(
                patches=patches,
                label=0,
                cell=sa.cell,
                frame_id=fid,
                provenance="hard_mix",
            )
        )
    return out


# -- detection ----------------------------------------------------------------


def detect_frame(
    model: MultiViewModel,
    images: list[np.ndarray],
    grid: GroundGrid,
    calibs: list[CameraCalibration],
    crop: CropConfig,
    score_threshold: float,
    frame_id: int = 0,
) -> tuple[list[DetectionCandidate], OccupancyMap]:
    """Evaluate q for every grid cell; candidates are cells with q >= threshold.

    Views where a cell is out of FOV contribute zero patches, never errors.
    The full q vector is returned for occupancy-map output regardless of the
    threshold.
    """
    if len(images) != len(calibs) or len(images) != model.n_views:
        raise CalibrationMismatch(
            f"{len(images)} images vs {len(calibs)} calibrations vs {model.n_views} views"
        )
    for img, calib in zip(images, calibs):
        if img.shape[0] != calib.image_height or img.shape[1] != calib.image_width:
            raise CalibrationMismatch(
                f"camera {calib.camera_id}: image {img.shape[1]}x{img.shape[0]} != "
                f"calibration {calib.image_width}x{calib.image_height}"
            )
    G = grid.num_cells
    all_rects = [cell_rects(calibs, grid, crop, p) for p in range(G)]
    patches = np.stack([crop_views(images, rects, crop) for rects in all_rects])
    q = predict_q(model, patches)
    candidates = [
        DetectionCandidate(cell=p, score=float(q[p]), rects=tuple(all_rects[p]))
        for p in range(G)
        if q[p] >= score_threshold
    ]
    return candidates, OccupancyMap(frame_id=frame_id, q=q)


# -- model checkpoints ---------------------------------------------------------


def save_multiview(path, model: MultiViewModel, meta: dict | None = None):
    nets = {f"embed{v}": emb for v, emb in enumerate(model.embeddings)}
    nets["head"] = model.head
    full_meta = {
        "kind": "multiview",
        "n_views": model.n_views,
        "depth": model.d,
        "freeze_embeddings": model.freeze_embeddings,
        "input_hw": list(model.input_hw),
        **model.meta,
        **(meta or {}),
    }
    nnet.save_networks(path, nets, full_meta)


def load_multiview(path) -> tuple[MultiViewModel, dict]:
    nets, meta = nnet.load_networks(path)
    if meta.get("kind") != "multiview":
        raise ConfigError("checkpoint does not hold a multi-view model")
    n_views = int(meta["n_views"])
    embeddings = [nets[f"embed{v}"] for v in range(n_views)]
    model = MultiViewModel(
        embeddings=embeddings,
        head=nets["head"],
        d=int(meta["depth"]),
        freeze_embeddings=bool(meta["freeze_embeddings"]),
        input_hw=tuple(meta.get("input_hw", (32, 32))),
        meta={k: v for k, v in meta.items() if k not in
              ("kind", "n_views", "depth", "freeze_embeddings", "input_hw")},
    )
    return model, meta


# -- annotations and occupancy output -------------------------------------------


@dataclass(frozen=True)
class Annotation:
    frame: int
    cell: int
    person: int


def write_annotations(path, rows: list[Annotation]):
    with open(path, "w") as f:
        for a in rows:
            f.write(json.dumps({"frame": a.frame, "cell": a.cell, "person": a.person}))
            f.write("\n")


def read_annotations(path) -> list[Annotation]:
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                obj = json.loads(line)
                rows.append(Annotation(int(obj["frame"]), int(obj["cell"]), int(obj["person"])))
    return rows


def write_occupancy(path, maps: list[OccupancyMap]):
    with open(path, "w") as f:
        f.write("frame,cell,q\n")
        for m in maps:
            for cell, q in enumerate(m.q):
                f.write(f"{m.frame_id},{cell},{q}\n")


def read_occupancy(path) -> list[OccupancyMap]:
    per_frame: dict[int, dict[int, float]] = {}
    with open(path) as f:
        header = f.readline().strip()
        if header != "frame,cell,q":
            raise ConfigError(f"unexpected occupancy header {header!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            frame_s, cell_s, q_s = line.split(",")
            per_frame.setdefault(int(frame_s), {})[int(cell_s)] = float(q_s)
    maps = []
    for frame_id in sorted(per_frame):
        cells = per_frame[frame_id]
        q = np.zeros(max(cells) + 1)
        for cell, val in cells.items():
            q[cell] = val
        maps.append(OccupancyMap(frame_id=frame_id, q=q))
    return maps
