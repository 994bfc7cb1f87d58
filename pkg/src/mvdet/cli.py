"""Command-line surface wiring the full pipeline.

Subcommands: synth, train-mono, train-mv, detect, eval, nms, inspect-forest.
Exit codes: 0 success, 2 configuration/validation error, 1 runtime error.
Every subcommand is reproducible: identical inputs and seeds produce
bit-identical output files (all internal reductions are single-threaded).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import datasets, metrics, multiview, nnet, nms, synthscene
from .config import PROFILES, RunConfig, build_config
from .errors import (
    ConfigError,
    InsufficientData,
    InsufficientPositives,
    MvdetError,
    NotEnoughPersons,
)
from .forest import feature_view_distribution, load_forest
from .multiview import CropConfig, TrainConfig


def _parse_frames(text: str | None, available: list[int]) -> list[int]:
    if text is None:
        return available
    text = text.strip()
    if ":" in text:
        lo_s, hi_s = text.split(":", 1)
        lo = int(lo_s) if lo_s else min(available)
        hi = int(hi_s) if hi_s else max(available) + 1
        return [t for t in available if lo <= t < hi]
    wanted = {int(v) for v in text.split(",")}
    return [t for t in available if t in wanted]


def _crop_config(cfg: RunConfig) -> CropConfig:
    return CropConfig(
        out_h=cfg.patch_size,
        out_w=cfg.patch_size,
        mode=cfg.crop_mode,
        trim_px=cfg.trim_px,
        cylinder_radius=cfg.cylinder_radius,
        cylinder_height=cfg.cylinder_height,
    )


def _train_config(cfg: RunConfig, start_epoch: int = 0) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        r=cfg.r,
        optimizer=cfg.optimizer,
        optimizer_options=cfg.optimizer_options(),
        seed=cfg.seed,
        input_dropout=cfg.input_dropout,
        val_fraction=cfg.val_fraction,
        patience=cfg.patience,
        pnorm=cfg.pnorm,
        pnorm_weight=cfg.pnorm_weight,
        start_epoch=start_epoch,
    )


def _write_history(path, history: list[dict]):
    with open(path, "w") as f:
        for row in history:
            f.write(json.dumps(row))
            f.write("\n")


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for key in (
        "seed", "epochs", "batch_size", "r", "optimizer", "lr", "momentum",
        "depth", "input_dropout", "hard_negatives", "freeze_embeddings",
        "score_threshold", "nms_threshold", "min_cell_distance", "match_radius",
        "negatives_per_frame", "trim_px", "crop_mode", "patience",
    ):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    return build_config(profile=getattr(args, "profile", None),
                        config_path=getattr(args, "config", None),
                        overrides=overrides)


# -- subcommands ----------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = _config_from_args(args)
    if args.scenario:
        spec = synthscene.load_scenario(args.scenario)
    else:
        spec = synthscene.make_scenario(
            n_cameras=args.cameras,
            grid_rows=args.rows,
            grid_cols=args.cols,
            cell_size=args.cell_size,
            n_persons=args.persons,
            n_frames=args.frames,
            seed=cfg.seed,
            noise_sigma=args.noise_sigma,
            image_size=args.image_size,
        )
    summary = datasets.write_scene_dir(args.out, spec)
    print(json.dumps({"out": str(args.out), **summary}))
    return 0


def cmd_train_mono(args) -> int:
    cfg = _config_from_args(args)
    scene = datasets.load_scene_dir(args.data)
    frame_ids = _parse_frames(args.frames, scene.frame_ids())
    if not frame_ids:
        raise ConfigError("no frames selected for training")
    crop = _crop_config(cfg)
    sample_set = datasets.samples_from_scene_dir(
        scene, frame_ids, cfg.negatives_per_frame, crop, cfg.seed
    )
    if not sample_set.mono_samples:
        raise ConfigError("no monocular samples extracted")
    X, y = sample_set.mono_arrays()

    start_epoch = 0
    if args.resume:
        net, meta = nnet.load_network(args.resume)
        start_epoch = int(meta.get("epochs_trained", 0))
    else:
        net = nnet.mono_network(seed=cfg.seed)

    train_cfg = _train_config(cfg, start_epoch)
    if args.mask_table:
        from .augment import load_mask_table
        from dataclasses import replace
        train_cfg = replace(train_cfg, masks=load_mask_table(args.mask_table))
    net, history = multiview.train_monocular(net, X, y, train_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "mono.ckpt"
    nnet.save_network(
        ckpt, net,
        meta={
            "kind": "mono",
            "epochs_trained": start_epoch + len(history),
            "crop": asdict(crop),
            "config": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in asdict(cfg).items()},
        },
    )
    _write_history(out / "train_mono_log.jsonl", history)
    last = history[-1] if history else {}
    print(json.dumps({"checkpoint": str(ckpt), "epochs": len(history),
                      "samples": len(y), **{k: last.get(k) for k in ("val_loss", "val_acc")}}))
    return 0


def cmd_train_mv(args) -> int:
    cfg = _config_from_args(args)
    scene = datasets.load_scene_dir(args.data)
    frame_ids = _parse_frames(args.frames, scene.frame_ids())
    if not frame_ids:
        raise ConfigError("no frames selected for training")
    crop = _crop_config(cfg)
    sample_set = datasets.samples_from_scene_dir(
        scene, frame_ids, cfg.negatives_per_frame, crop, cfg.seed,
        keep_images=bool(cfg.hard_negative_modes()), with_mono=False,
    )
    samples = list(sample_set.mv_samples)
    positives = sample_set.positives()
    rng = np.random.default_rng([cfg.seed, 0x4A12])
    for mode in cfg.hard_negative_modes():
        try:
            samples.extend(
                multiview.generate_hard_negatives(
                    positives, mode, rng,
                    frame_images=sample_set.frame_images,
                    calibs=scene.calibs, grid=scene.grid, crop=crop,
                    per_positive=cfg.hard_negatives_per_positive,
                )
            )
        except NotEnoughPersons as e:
            print(f"warning: skipping {mode} hard negatives: {e}", file=sys.stderr)

    mono_net, mono_meta = nnet.load_network(args.mono)
    start_epoch = 0
    if args.resume:
        model, meta = multiview.load_multiview(args.resume)
        start_epoch = int(meta.get("epochs_trained", 0))
    else:
        model = multiview.build_multiview(
            mono_net, cfg.depth, len(scene.calibs),
            head_hidden=cfg.head_hidden,
            input_hw=(crop.out_h, crop.out_w),
            seed=cfg.seed,
            freeze_embeddings=cfg.freeze_embeddings,
        )
    model, history = multiview.train_head(model, samples, _train_config(cfg, start_epoch))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "multiview.ckpt"
    multiview.save_multiview(
        ckpt, model,
        meta={
            "epochs_trained": start_epoch + len(history),
            "crop": asdict(crop),
            "mono_checkpoint": Path(args.mono).name,
            "mono_epochs": mono_meta.get("epochs_trained"),
            "config": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in asdict(cfg).items()},
        },
    )
    _write_history(out / "train_mv_log.jsonl", history)
    last = history[-1] if history else {}
    print(json.dumps({"checkpoint": str(ckpt), "epochs": len(history),
                      "samples": len(samples), **{k: last.get(k) for k in ("val_loss", "val_acc")}}))
    return 0


def cmd_detect(args) -> int:
    cfg = _config_from_args(args)
    scene = datasets.load_scene_dir(args.data)
    model, meta = multiview.load_multiview(args.model)
    crop_meta = meta.get("crop")
    crop = CropConfig(**crop_meta) if crop_meta else _crop_config(cfg)
    frame_ids = _parse_frames(args.frames, scene.frame_ids())
    if not frame_ids:
        raise ConfigError("no frames selected for detection")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    candidate_rows = []
    detection_rows = []
    maps = []
    for t in frame_ids:
        images = scene.frame_images(t)
        candidates, occupancy = multiview.detect_frame(
            model, images, scene.grid, scene.calibs, crop, cfg.score_threshold, frame_id=t
        )
        kept = nms.score_weighted_nms(
            candidates, cfg.nms_threshold,
            min_cell_distance=cfg.min_cell_distance, grid=scene.grid,
        )
        candidate_rows.extend((t, c) for c in candidates)
        detection_rows.extend((t, c) for c in kept)
        maps.append(occupancy)
    nms.write_detections(out / "candidates.jsonl", candidate_rows)
    nms.write_detections(out / "detections.jsonl", detection_rows)
    multiview.write_occupancy(out / "occupancy.csv", maps)
    print(json.dumps({
        "frames": len(frame_ids),
        "candidates": len(candidate_rows),
        "detections": len(detection_rows),
        "out": str(out),
    }))
    return 0


def _evaluate_rows(rows, gt: dict[int, list[int]], grid, cfg: RunConfig) -> dict:
    per_frame: dict[int, list] = {fid: [] for fid in gt}
    for fid, cand in rows:
        per_frame.setdefault(fid, []).append((cand.cell, cand.score))
    match_cfg = metrics.MatchConfig(mode=cfg.match_mode, radius=cfg.match_radius)
    frames = [
        metrics.match_frame(per_frame.get(fid, []), gt.get(fid, []), grid, match_cfg, frame_id=fid)
        for fid in sorted(set(per_frame) | set(gt))
    ]
    return metrics.evaluation_report(frames, match_cfg)


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    grid = datasets.load_grid(args.grid)
    annotations = multiview.read_annotations(args.annotations)
    gt: dict[int, list[int]] = {}
    for a in annotations:
        gt.setdefault(a.frame, []).append(a.cell)
    rows = nms.read_detections(args.detections)
    frame_filter = _parse_frames(args.frames, sorted({fid for fid, _ in rows} | set(gt)))
    keep = set(frame_filter)
    rows = [(fid, c) for fid, c in rows if fid in keep]
    gt = {fid: cells for fid, cells in gt.items() if fid in keep}

    report = _evaluate_rows(rows, gt, grid, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_report(out / "report.json", report)
    printed = {k: report.get(k) for k in ("moda", "modp", "precision", "recall")}

    if args.occupancy:
        maps = multiview.read_occupancy(args.occupancy)
        scored = []
        for m in maps:
            if m.frame_id not in keep:
                continue
            occupied = set(gt.get(m.frame_id, []))
            scored.extend((float(q), int(cell in occupied)) for cell, q in enumerate(m.q))
        points, auc = metrics.roc_auc(scored)
        metrics.write_roc_csv(out / "roc.csv", points)
        printed["auc"] = auc

    if args.sweep_nms:
        if not args.candidates:
            raise ConfigError("--sweep-nms needs --candidates (pre-NMS detections)")
        cand_rows = nms.read_detections(args.candidates)
        cand_rows = [(fid, c) for fid, c in cand_rows if fid in keep]
        by_frame: dict[int, list] = {}
        for fid, c in cand_rows:
            by_frame.setdefault(fid, []).append(c)
        thresholds = [float(v) for v in args.sweep_nms.split(",")]
        with open(out / "nms_sweep.csv", "w") as f:
            f.write("nms_threshold,moda,modp,precision,recall\n")
            for tau in thresholds:
                swept = []
                for fid, cands in by_frame.items():
                    for c in nms.score_weighted_nms(cands, tau, cfg.min_cell_distance, grid):
                        swept.append((fid, c))
                rep = _evaluate_rows(swept, gt, grid, cfg)
                f.write(
                    f"{tau},{rep.get('moda')},{rep.get('modp')},"
                    f"{rep.get('precision')},{rep.get('recall')}\n"
                )
        printed["sweep"] = str(out / "nms_sweep.csv")

    print(json.dumps(printed))
    return 0


def cmd_nms(args) -> int:
    cfg = _config_from_args(args)
    rows = nms.read_detections(args.input)
    grid = datasets.load_grid(args.grid) if args.grid else None
    by_frame: dict[int, list] = {}
    for fid, c in rows:
        by_frame.setdefault(fid, []).append(c)
    kept = []
    for fid in sorted(by_frame):
        for c in nms.score_weighted_nms(
            by_frame[fid], cfg.nms_threshold, cfg.min_cell_distance, grid
        ):
            kept.append((fid, c))
    nms.write_detections(args.output, kept)
    print(json.dumps({"input": len(rows), "kept": len(kept), "out": str(args.output)}))
    return 0


def cmd_inspect_forest(args) -> int:
    forest = load_forest(args.forest)
    n_views = args.views or forest.meta.get("n_views")
    per_view = args.features_per_view or forest.meta.get("features_per_view")
    if not n_views or not per_view:
        raise ConfigError("forest meta lacks view info; pass --views and --features-per-view")
    lines = ["tree,view,count"]
    for ti, tree in enumerate(forest.trees):
        counts = feature_view_distribution(tree, args.top_k, int(per_view), int(n_views))
        for v, count in enumerate(counts):
            lines.append(f"{ti},{v},{count}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--profile", choices=sorted(PROFILES), help="named settings profile")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--deterministic", action="store_true",
                   help="force single-threaded reductions (execution is "
                        "single-threaded regardless; the flag pins the contract)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvdet",
        description="Multi-camera people detection on a ground-plane occupancy grid",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic dataset to disk")
    _add_common(p)
    p.add_argument("--scenario", help="scenario JSON (otherwise built from flags)")
    p.add_argument("--out", required=True)
    p.add_argument("--cameras", type=int, default=3)
    p.add_argument("--rows", type=int, default=12)
    p.add_argument("--cols", type=int, default=12)
    p.add_argument("--cell-size", type=float, default=0.5, dest="cell_size")
    p.add_argument("--persons", type=int, default=3)
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--noise-sigma", type=float, default=0.03, dest="noise_sigma")
    p.add_argument("--image-size", type=int, default=160, dest="image_size")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-mono", help="train the monocular embedding network")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset directory from synth")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", help="frame selection, e.g. 0:250")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--r", type=float)
    p.add_argument("--optimizer")
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--negatives-per-frame", type=int, dest="negatives_per_frame")
    p.add_argument("--input-dropout", type=int, choices=(0, 1), dest="input_dropout")
    p.add_argument("--mask-table", dest="mask_table",
                   help="JSON occlusion-mask table overriding the built-in one")
    p.set_defaults(func=cmd_train_mono)

    p = sub.add_parser("train-mv", help="train the multi-view classifier head")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--mono", required=True, help="monocular checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--frames")
    p.add_argument("--resume")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--r", type=float)
    p.add_argument("--optimizer")
    p.add_argument("--lr", type=float)
    p.add_argument("--depth", type=int, help="retained monocular layers per view")
    p.add_argument("--patience", type=int)
    p.add_argument("--hard-negatives", dest="hard_negatives",
                   help="off, shift, mix, or shift+mix")
    p.add_argument("--freeze-embeddings", type=int, choices=(0, 1), dest="freeze_embeddings")
    p.add_argument("--negatives-per-frame", type=int, dest="negatives_per_frame")
    p.add_argument("--trim-px", type=int, dest="trim_px")
    p.set_defaults(func=cmd_train_mv)

    p = sub.add_parser("detect", help="run detection over frames")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, help="multi-view checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--frames")
    p.add_argument("--score-threshold", type=float, dest="score_threshold")
    p.add_argument("--nms-threshold", type=float, dest="nms_threshold")
    p.add_argument("--min-cell-distance", type=float, dest="min_cell_distance")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detections against ground truth")
    _add_common(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames")
    p.add_argument("--occupancy", help="occupancy CSV for cell-level ROC")
    p.add_argument("--candidates", help="pre-NMS detections for --sweep-nms")
    p.add_argument("--sweep-nms", dest="sweep_nms",
                   help="comma-separated NMS thresholds to sweep")
    p.add_argument("--match-radius", type=float, dest="match_radius")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("nms", help="filter a detection file")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--nms-threshold", type=float, dest="nms_threshold")
    p.add_argument("--min-cell-distance", type=float, dest="min_cell_distance")
    p.add_argument("--grid", help="grid JSON, needed with --min-cell-distance")
    p.set_defaults(func=cmd_nms)

    p = sub.add_parser("inspect-forest", help="per-view split-feature counts")
    _add_common(p)
    p.add_argument("--forest", required=True)
    p.add_argument("--top-k", type=int, default=50, dest="top_k")
    p.add_argument("--views", type=int)
    p.add_argument("--features-per-view", type=int, dest="features_per_view")
    p.add_argument("--out")
    p.set_defaults(func=cmd_inspect_forest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InsufficientData, InsufficientPositives) as e:
        # bad options or unusable input data: validation failure
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (MvdetError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
