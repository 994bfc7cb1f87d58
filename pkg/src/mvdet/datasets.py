"""Sample extraction and on-disk dataset layout.

A dataset directory (written by the synth command) holds:
    scenario.json       full scene specification
    calibration.json    camera list
    grid.json           ground grid
    annotations.jsonl   one line per person per frame: {"frame","cell","person"}
    cam{c}/frame{t:05d}.png   rendered views

Extraction turns frames into labeled samples: positives at occupied cells,
easy negatives at uniformly sampled empty cells.  Monocular patches take
per-view labels: a view of a negative cell is kept as a negative only when
its crop barely overlaps every person in that view, and dropped as ambiguous
otherwise (a negative cell's crop can legitimately contain a person).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError
from .geometry import (
    CameraCalibration,
    GroundGrid,
    load_calibrations,
    load_grid,
    project_cylinder,
    save_calibrations,
    save_grid,
)
from .multiview import (
    Annotation,
    CropConfig,
    MonoSample,
    MultiViewSample,
    cell_rects,
    crop_views,
    read_annotations,
    write_annotations,
)
from .nms import iou
from .synthscene import ScenarioSpec, load_scenario, render_frame, save_scenario

# Per-view label thresholds: crop-vs-person overlap above the first is a
# monocular positive, below the second a clean negative, in between ambiguous.
MONO_POSITIVE_IOU = 0.5
MONO_NEGATIVE_IOU = 0.2


@dataclass
class FrameData:
    frame_id: int
    images: list[np.ndarray]
    gt_cells: list[int]
    persons: dict[int, int]  # cell -> person_id


@dataclass
class SampleSet:
    """Extracted samples plus (optionally) the frames they came from."""

    crop: CropConfig
    mv_samples: list[MultiViewSample]
    mono_samples: list[MonoSample]
    frames: dict[int, FrameData] = field(default_factory=dict)

    def frame_images(self, frame_id: int) -> list[np.ndarray]:
        return self.frames[frame_id].images

    def mono_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        X = np.stack([s.patch for s in self.mono_samples])
        y = np.array([s.label for s in self.mono_samples])
        return X, y

    def positives(self) -> list[MultiViewSample]:
        return [s for s in self.mv_samples if s.label == 1]


def extract_frame_samples(
    frame: FrameData,
    calibs: list[CameraCalibration],
    grid: GroundGrid,
    crop: CropConfig,
    negatives_per_frame: int,
    rng: np.random.Generator,
    with_mono: bool = True,
) -> tuple[list[MultiViewSample], list[MonoSample]]:
    """Positives at occupied cells, easy negatives at sampled empty cells."""
    mv: list[MultiViewSample] = []
    mono: list[MonoSample] = []

    person_rects = [
        [project_cylinder(c, crop.cylinder_at(*grid.cell_center(cell)[:2])) for c in calibs]
        for cell in frame.gt_cells
    ]

    def add(cell: int, label: int, provenance: str, person_id=None):
        rects = cell_rects(calibs, grid, crop, cell)
        patches = crop_views(frame.images, rects, crop)
        mv.append(
            MultiViewSample(
                patches=patches,
                label=label,
                cell=cell,
                frame_id=frame.frame_id,
                provenance=provenance,
                person_id=person_id,
            )
        )
        if not with_mono:
            return
        for v, rect in enumerate(rects):
            if not rect.visible:
                continue
            box = (rect.x0, rect.y0, rect.x1, rect.y1)
            if label == 1:
                mono_label = 1
            else:
                overlap = 0.0
                for prects in person_rects:
                    pr = prects[v]
                    if pr.visible:
                        overlap = max(overlap, iou(box, (pr.x0, pr.y0, pr.x1, pr.y1)))
                if overlap > MONO_NEGATIVE_IOU:
                    continue  # ambiguous view: neither clean negative nor positive
                mono_label = 0
            mono.append(
                MonoSample(
                    patch=patches[v],
                    label=mono_label,
                    frame_id=frame.frame_id,
                    camera_id=calibs[v].camera_id,
                    cell=cell,
                )
            )

    for cell in frame.gt_cells:
        add(cell, 1, "annotated", person_id=frame.persons.get(cell))

    occupied = set(frame.gt_cells)
    empty = np.array([p for p in range(grid.num_cells) if p not in occupied])
    n_neg = min(negatives_per_frame, len(empty))
    if n_neg > 0:
        for cell in rng.choice(empty, size=n_neg, replace=False):
            add(int(cell), 0, "easy_negative")
    return mv, mono


def generate_dataset(
    spec: ScenarioSpec,
    negatives_per_frame: int,
    crop: CropConfig = CropConfig(),
    frame_ids=None,
    keep_images: bool = True,
    with_mono: bool = True,
) -> SampleSet:
    """Render frames of a scenario and extract labeled samples.

    Negative-cell draws are seeded per frame from the scenario seed, so the
    same spec always yields the same dataset.
    """
    frame_ids = list(range(spec.n_frames)) if frame_ids is None else list(frame_ids)
    out = SampleSet(crop=crop, mv_samples=[], mono_samples=[])
    for t in frame_ids:
        images, gt = render_frame(spec, t)
        frame = FrameData(frame_id=t, images=images, gt_cells=gt, persons=spec.persons_at(t))
        rng = np.random.default_rng([spec.seed, 0x7E6, t])
        mv, mono = extract_frame_samples(
            frame, list(spec.cameras), spec.grid, crop, negatives_per_frame, rng, with_mono
        )
        out.mv_samples.extend(mv)
        out.mono_samples.extend(mono)
        if keep_images:
            out.frames[t] = frame
    return out


# -- disk layout ----------------------------------------------------------------


def frame_png_path(root, camera_id: int, frame_id: int) -> Path:
    return Path(root) / f"cam{camera_id}" / f"frame{frame_id:05d}.png"


def save_image(path, image: np.ndarray):
    arr = np.clip(np.round(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path, format="PNG")


def load_image(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def write_scene_dir(out_dir, spec: ScenarioSpec, frame_ids=None) -> dict:
    """Render a scenario to disk; returns summary counts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_scenario(out / "scenario.json", spec)
    save_calibrations(out / "calibration.json", list(spec.cameras))
    save_grid(out / "grid.json", spec.grid)
    annotations = []
    frame_ids = list(range(spec.n_frames)) if frame_ids is None else list(frame_ids)
    for t in frame_ids:
        images, gt = render_frame(spec, t)
        for cam, img in zip(spec.cameras, images):
            save_image(frame_png_path(out, cam.camera_id, t), img)
        persons = spec.persons_at(t)
        for cell in gt:
            annotations.append(Annotation(frame=t, cell=cell, person=persons[cell]))
    write_annotations(out / "annotations.jsonl", annotations)
    return {
        "frames": len(frame_ids),
        "cameras": len(spec.cameras),
        "images": len(frame_ids) * len(spec.cameras),
        "positives": len(annotations),
    }


@dataclass
class SceneDir:
    """A dataset directory opened for reading."""

    root: Path
    calibs: list[CameraCalibration]
    grid: GroundGrid
    annotations: list[Annotation]
    scenario: ScenarioSpec | None = None

    def frame_ids(self) -> list[int]:
        cam0 = self.root / f"cam{self.calibs[0].camera_id}"
        ids = sorted(
            int(p.stem.removeprefix("frame")) for p in cam0.glob("frame*.png")
        )
        return ids

    def frame_images(self, frame_id: int) -> list[np.ndarray]:
        return [
            load_image(frame_png_path(self.root, c.camera_id, frame_id)) for c in self.calibs
        ]

    def frame_data(self, frame_id: int) -> FrameData:
        persons = {
            a.cell: a.person for a in self.annotations if a.frame == frame_id
        }
        return FrameData(
            frame_id=frame_id,
            images=self.frame_images(frame_id),
            gt_cells=sorted(persons),
            persons=persons,
        )

    def ground_truth(self) -> dict[int, list[int]]:
        gt: dict[int, list[int]] = {}
        for a in self.annotations:
            gt.setdefault(a.frame, []).append(a.cell)
        return gt


def load_scene_dir(path) -> SceneDir:
    root = Path(path)
    if not root.is_dir():
        raise ConfigError(f"dataset directory {root} does not exist")
    calib_path = root / "calibration.json"
    grid_path = root / "grid.json"
    ann_path = root / "annotations.jsonl"
    for p in (calib_path, grid_path, ann_path):
        if not p.exists():
            raise ConfigError(f"missing dataset file {p}")
    scenario = None
    if (root / "scenario.json").exists():
        scenario = load_scenario(root / "scenario.json")
    return SceneDir(
        root=root,
        calibs=load_calibrations(calib_path),
        grid=load_grid(grid_path),
        annotations=read_annotations(ann_path),
        scenario=scenario,
    )


def samples_from_scene_dir(
    scene: SceneDir,
    frame_ids,
    negatives_per_frame: int,
    crop: CropConfig,
    seed: int,
    keep_images: bool = False,
    with_mono: bool = True,
) -> SampleSet:
    """Extract samples from on-disk frames (the CLI training path)."""
    out = SampleSet(crop=crop, mv_samples=[], mono_samples=[])
    for t in frame_ids:
        frame = scene.frame_data(t)
        rng = np.random.default_rng([seed, 0x7E6, t])
        mv, mono = extract_frame_samples(
            frame, scene.calibs, scene.grid, crop, negatives_per_frame, rng, with_mono
        )
        out.mv_samples.extend(mv)
        out.mono_samples.extend(mono)
        if keep_images:
            out.frames[t] = frame
    return out
