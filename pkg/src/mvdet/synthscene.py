"""Deterministic synthetic multi-camera scenes with exact occupancy ground truth.

Persons are colored cylinders on a textured ground scene, rendered per camera
with a painter's algorithm (far to near), so mutual occlusion is real.  All
randomness flows from explicit seeds: the same spec renders bit-identical
images on every run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw
from scipy.spatial import ConvexHull, QhullError

from .errors import ConfigError
from .geometry import (
    CameraCalibration,
    Cylinder,
    GroundGrid,
    bilinear_sample,
    default_cylinder,
    project_points,
)

DEFAULT_IMAGE_SIZE = 160
RENDER_CIRCLE_SAMPLES = 16
# Fraction of cylinder height drawn in the torso shade; the rest is darker.
TORSO_FRACTION = 0.55
LEG_SHADE = 0.55


@dataclass(frozen=True)
class PersonSpec:
    person_id: int
    trajectory: tuple[int, ...]  # ground cell per frame
    color: tuple[float, float, float]  # RGB in [0, 1]
    size: Cylinder

    def __post_init__(self):
        if any(not 0.0 <= c <= 1.0 for c in self.color):
            raise ConfigError("person color must be RGB in [0, 1]")


@dataclass(frozen=True)
class ScenarioSpec:
    grid: GroundGrid
    cameras: tuple[CameraCalibration, ...]
    persons: tuple[PersonSpec, ...]
    n_frames: int
    texture_seed: int = 0
    noise_sigma: float = 0.03
    seed: int = 0
    image_size: int = DEFAULT_IMAGE_SIZE

    def __post_init__(self):
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        for person in self.persons:
            if len(person.trajectory) != self.n_frames:
                raise ConfigError(f"person {person.person_id} trajectory length != n_frames")
            for cell in person.trajectory:
                self.grid.cell_rowcol(cell)  # raises IndexOutOfRange off-grid

    def occupied_cells(self, t: int) -> list[int]:
        return sorted(p.trajectory[t] for p in self.persons)

    def persons_at(self, t: int) -> dict[int, int]:
        """cell -> person_id at frame t."""
        return {p.trajectory[t]: p.person_id for p in self.persons}


# -- camera rig ---------------------------------------------------------------


def look_at_matrix(position: np.ndarray, target: np.ndarray) -> np.ndarray:
    """World-to-camera rotation: camera z toward target, x level, y down-ish."""
    fwd = target - position
    norm = np.linalg.norm(fwd)
    if norm < 1e-12:
        raise ConfigError("camera position coincides with its target")
    z = fwd / norm
    up = np.array([0.0, 0.0, 1.0])
    x = np.cross(z, up)
    if np.linalg.norm(x) < 1e-9:  # looking straight down: pick an arbitrary level x
        x = np.array([1.0, 0.0, 0.0])
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def make_cameras(
    n: int,
    grid: GroundGrid,
    height_m: float = 4.0,
    radius_m: float = 8.0,
    image_size: int = DEFAULT_IMAGE_SIZE,
    margin: float = 0.02,
    max_person_height: float = 2.0,
) -> list[CameraCalibration]:
    """Cameras on a circle around the grid center, all looking at the center.

    Camera k sits at yaw angle 2*pi*k/n.  The focal length is the largest
    that keeps the whole grid (including head-height above every corner)
    inside the image with the given margin, raised if necessary so the grid
    itself spans at least 80% of the image width.
    """
    if n < 1:
        raise ConfigError("need at least one camera")
    ox, oy = grid.origin
    cx = ox + grid.cols * grid.cell_size / 2.0
    cy = oy + grid.rows * grid.cell_size / 2.0
    center = np.array([cx, cy, 0.0])
    corners = np.array(
        [
            [ox, oy, 0.0],
            [ox + grid.cols * grid.cell_size, oy, 0.0],
            [ox, oy + grid.rows * grid.cell_size, 0.0],
            [ox + grid.cols * grid.cell_size, oy + grid.rows * grid.cell_size, 0.0],
        ]
    )
    volume = np.concatenate([corners, corners + [0.0, 0.0, max_person_height]])

    cams = []
    W = H = image_size
    for k in range(n):
        yaw = 2.0 * np.pi * k / n
        pos = center + np.array([radius_m * np.cos(yaw), radius_m * np.sin(yaw), height_m])
        R = look_at_matrix(pos, center)
        rel = (volume - pos) @ R.T
        if np.any(rel[:, 2] <= 0):
            raise ConfigError("grid corner behind camera; increase radius_m")
        norm_uv = rel[:, :2] / rel[:, 2:3]
        half = (0.5 - margin) * image_size
        focal = half / np.abs(norm_uv).max()
        ground = (corners - pos) @ R.T
        u_extent = np.ptp(ground[:, 0] / ground[:, 2])
        focal = max(focal, 0.8 * image_size / u_extent)
        K = np.array([[focal, 0.0, W / 2.0], [0.0, focal, H / 2.0], [0.0, 0.0, 1.0]])
        P = K @ np.concatenate([R, (-R @ pos)[:, None]], axis=1)
        cams.append(CameraCalibration(camera_id=k, P=P, image_width=W, image_height=H))
    return cams


# -- rendering ----------------------------------------------------------------


def _background(spec: ScenarioSpec, camera_id: int) -> np.ndarray:
    """Static per-camera texture: coarse seeded noise upsampled smoothly."""
    rng = np.random.default_rng([spec.texture_seed, camera_id])
    coarse = rng.uniform(0.25, 0.65, size=(9, 9, 3))
    size = spec.image_size
    sx = (np.arange(size) + 0.5) * (coarse.shape[1] / size) - 0.5
    sy = (np.arange(size) + 0.5) * (coarse.shape[0] / size) - 0.5
    return bilinear_sample(coarse, sx, sy, pad="clamp")


def _silhouette_mask(uv: np.ndarray, size: int) -> np.ndarray | None:
    """Boolean mask of the convex hull of projected points, or None if flat."""
    try:
        hull = ConvexHull(uv)
    except QhullError:
        return None
    verts = [(float(uv[i, 0]), float(uv[i, 1])) for i in hull.vertices]
    img = Image.new("L", (size, size), 0)
    ImageDraw.Draw(img).polygon(verts, fill=1)
    return np.asarray(img, dtype=bool)


def render_frame(spec: ScenarioSpec, t: int) -> tuple[list[np.ndarray], list[int]]:
    """Render all camera views at frame t; returns (images, occupied cells).

    Images are (H, W, 3) float64 in [0, 1].  Persons are drawn far-to-near
    per camera; pixel noise is seeded by (seed, t, camera) so regeneration is
    bit-identical.
    """
    if not 0 <= t < spec.n_frames:
        raise ConfigError(f"frame {t} outside [0, {spec.n_frames})")
    size = spec.image_size
    images = []
    for cam in spec.cameras:
        img = _background(spec, cam.camera_id).copy()
        cam_pos = cam.center()
        order = sorted(
            spec.persons,
            key=lambda p: -np.linalg.norm(spec.grid.cell_center(p.trajectory[t]) - cam_pos),
        )
        for person in order:
            cx, cy, _ = spec.grid.cell_center(person.trajectory[t])
            cyl = person.size.at(cx, cy)
            pts = cyl.surface_points(RENDER_CIRCLE_SAMPLES)
            uv, depth = project_points(cam, pts)
            if np.any(depth <= 1e-9):
                continue
            mask = _silhouette_mask(uv, size)
            if mask is None or not mask.any():
                continue
            base = np.asarray(person.color)
            shoulder = np.asarray(cyl.base_center) + [0.0, 0.0, cyl.height * (1.0 - TORSO_FRACTION)]
            suv, _ = project_points(cam, shoulder[None, :])
            v_split = float(suv[0, 1])
            rows = np.arange(size)[:, None]
            torso = mask & (rows < v_split)
            legs = mask & (rows >= v_split)
            img[torso] = base
            img[legs] = base * LEG_SHADE
        if spec.noise_sigma > 0:
            rng = np.random.default_rng([spec.seed, t, cam.camera_id])
            img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
        images.append(np.clip(img, 0.0, 1.0))
    return images, spec.occupied_cells(t)


# -- scenario construction ----------------------------------------------------

_PALETTE = (
    (0.90, 0.15, 0.15),
    (0.15, 0.35, 0.90),
    (0.95, 0.80, 0.10),
    (0.10, 0.75, 0.30),
    (0.80, 0.20, 0.85),
    (0.95, 0.55, 0.10),
    (0.15, 0.80, 0.80),
    (0.55, 0.35, 0.10),
)


def random_trajectories(
    grid: GroundGrid, n_persons: int, n_frames: int, rng: np.random.Generator
) -> list[tuple[int, ...]]:
    """Waypoint walks: one 4-neighbor step per frame toward a random goal.

    No two persons ever share a cell in the same frame; a blocked person
    waits in place.
    """
    if n_persons > grid.num_cells:
        raise ConfigError("more persons than grid cells")
    positions = [int(p) for p in rng.choice(grid.num_cells, size=n_persons, replace=False)]
    goals = [int(rng.integers(grid.num_cells)) for _ in range(n_persons)]
    tracks: list[list[int]] = [[int(p)] for p in positions]
    for _ in range(1, n_frames):
        occupied = set(positions)
        for i in range(n_persons):
            here = positions[i]
            if here == goals[i]:
                goals[i] = int(rng.integers(grid.num_cells))
            r0, c0 = grid.cell_rowcol(here)
            r1, c1 = grid.cell_rowcol(goals[i])
            steps = []
            if r1 != r0:
                steps.append((r0 + int(np.sign(r1 - r0)), c0))
            if c1 != c0:
                steps.append((r0, c0 + int(np.sign(c1 - c0))))
            rng.shuffle(steps)
            moved = False
            for rr, cc in steps:
                nxt = grid.cell_index(rr, cc)
                if nxt not in occupied:
                    occupied.discard(here)
                    occupied.add(nxt)
                    positions[i] = nxt
                    moved = True
                    break
            if not moved:
                goals[i] = int(rng.integers(grid.num_cells))
            tracks[i].append(positions[i])
    return [tuple(track) for track in tracks]


def make_scenario(
    n_cameras: int = 3,
    grid_rows: int = 12,
    grid_cols: int = 12,
    cell_size: float = 0.5,
    n_persons: int = 3,
    n_frames: int = 300,
    seed: int = 0,
    camera_height: float = 4.0,
    camera_radius: float = 8.0,
    image_size: int = DEFAULT_IMAGE_SIZE,
    noise_sigma: float = 0.03,
) -> ScenarioSpec:
    """Build a full scenario: camera rig, colored persons, random walks."""
    grid = GroundGrid(origin=(0.0, 0.0), cell_size=cell_size, rows=grid_rows, cols=grid_cols)
    cameras = tuple(
        make_cameras(n_cameras, grid, height_m=camera_height, radius_m=camera_radius,
                     image_size=image_size)
    )
    rng = np.random.default_rng([seed, 0xC0FFEE])
    trajectories = random_trajectories(grid, n_persons, n_frames, rng)
    persons = []
    for pid in range(n_persons):
        base = default_cylinder()
        height = float(rng.uniform(1.6, 1.9))
        radius = float(rng.uniform(0.25, 0.34))
        persons.append(
            PersonSpec(
                person_id=pid,
                trajectory=trajectories[pid],
                color=_PALETTE[pid % len(_PALETTE)],
                size=Cylinder(base.base_center, radius, height),
            )
        )
    return ScenarioSpec(
        grid=grid,
        cameras=cameras,
        persons=tuple(persons),
        n_frames=n_frames,
        texture_seed=seed,
        noise_sigma=noise_sigma,
        seed=seed,
        image_size=image_size,
    )


# -- JSON round-trip ----------------------------------------------------------


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "grid": {
            "origin": list(spec.grid.origin),
            "cell_size": spec.grid.cell_size,
            "rows": spec.grid.rows,
            "cols": spec.grid.cols,
        },
        "cameras": [
            {
                "camera_id": c.camera_id,
                "P": [[float(v) for v in row] for row in c.P],
                "width": c.image_width,
                "height": c.image_height,
            }
            for c in spec.cameras
        ],
        "persons": [
            {
                "person_id": int(p.person_id),
                "trajectory": [int(c) for c in p.trajectory],
                "color": [float(v) for v in p.color],
                "cylinder": {"radius": float(p.size.radius), "height": float(p.size.height)},
            }
            for p in spec.persons
        ],
        "n_frames": spec.n_frames,
        "background": {"texture_seed": spec.texture_seed, "noise_sigma": spec.noise_sigma},
        "seed": spec.seed,
        "image_size": spec.image_size,
    }


def scenario_from_dict(raw: dict) -> ScenarioSpec:
    try:
        grid = GroundGrid(
            origin=tuple(raw["grid"]["origin"]),
            cell_size=float(raw["grid"]["cell_size"]),
            rows=int(raw["grid"]["rows"]),
            cols=int(raw["grid"]["cols"]),
        )
        cameras = tuple(
            CameraCalibration(
                camera_id=int(c["camera_id"]),
                P=np.asarray(c["P"], dtype=np.float64),
                image_width=int(c["width"]),
                image_height=int(c["height"]),
            )
            for c in raw["cameras"]
        )
        persons = tuple(
            PersonSpec(
                person_id=int(p["person_id"]),
                trajectory=tuple(int(c) for c in p["trajectory"]),
                color=tuple(float(v) for v in p["color"]),
                size=Cylinder((0.0, 0.0, 0.0), float(p["cylinder"]["radius"]),
                              float(p["cylinder"]["height"])),
            )
            for p in raw["persons"]
        )
        background = raw.get("background", {})
        return ScenarioSpec(
            grid=grid,
            cameras=cameras,
            persons=persons,
            n_frames=int(raw["n_frames"]),
            texture_seed=int(background.get("texture_seed", 0)),
            noise_sigma=float(background.get("noise_sigma", 0.0)),
            seed=int(raw["seed"]),
            image_size=int(raw.get("image_size", DEFAULT_IMAGE_SIZE)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad scenario file: {e}") from e


def load_scenario(path) -> ScenarioSpec:
    with open(path) as f:
        return scenario_from_dict(json.load(f))


def save_scenario(path, spec: ScenarioSpec):
    with open(path, "w") as f:
        json.dump(scenario_to_dict(spec), f, indent=1)
        f.write("\n")
