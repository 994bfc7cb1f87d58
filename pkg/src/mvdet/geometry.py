"""Camera calibration, ground-grid discretization, and cylinder crops.

Conventions:
  - World frame: right-handed, z up, ground plane at z = 0, units in meters.
  - Image frame: u right, v down, origin at the top-left corner.  Continuous
    pixel coordinates: pixel (row i, col j) covers [j, j+1) x [i, i+1) and has
    its center at (j + 0.5, i + 0.5).
  - A camera is a single 3x4 projection matrix P mapping homogeneous world
    points to homogeneous pixels: [u, v, w]^T = P [x, y, z, 1]^T, (u/w, v/w)
    valid only when w > 0.

All functions here are pure: no shared mutable state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    EmptyAfterTrim,
    IndexOutOfRange,
    PointBehindCamera,
)

# Depth below this counts as "behind the camera".
DEPTH_EPS = 1e-9

# Clipped projections with less area than this carry no appearance signal and
# are treated as out-of-FOV.
MIN_VISIBLE_AREA_PX = 4.0

# Sample points per cylinder circle (base and top) used for the bounding box.
CYLINDER_CIRCLE_SAMPLES = 8

# Reference network-input width against which trim_px is specified; a trim of
# t removes t/REFERENCE_CROP_WIDTH of the rect width on each side.
REFERENCE_CROP_WIDTH = 224


@dataclass(frozen=True)
class CameraCalibration:
    """A projective camera: 3x4 matrix plus image dimensions."""

    camera_id: int
    P: np.ndarray
    image_width: int
    image_height: int

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.float64)
        if P.shape != (3, 4):
            raise ConfigError(f"P must be 3x4, got {P.shape}")
        if not np.all(np.isfinite(P)):
            raise ConfigError("P contains non-finite entries")
        if np.linalg.matrix_rank(P[:, :3]) != 3:
            raise ConfigError("left 3x3 submatrix of P is rank-deficient")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ConfigError("image dimensions must be positive")
        object.__setattr__(self, "P", P)

    def center(self) -> np.ndarray:
        """World-coordinate camera center (the null direction of P)."""
        M = self.P[:, :3]
        return -np.linalg.solve(M, self.P[:, 3])


@dataclass(frozen=True)
class GroundGrid:
    """Regular discretization of the common ground area into rows x cols cells."""

    origin: tuple[float, float]
    cell_size: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ConfigError("cell_size must be positive")
        if self.rows <= 0 or self.cols <= 0:
            raise ConfigError("rows and cols must be positive")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def num_cells(self) -> int:
        return self.rows * self.cols

    def cell_rowcol(self, p: int) -> tuple[int, int]:
        self._check_index(p)
        return p // self.cols, p % self.cols

    def cell_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexOutOfRange(f"(row, col) = ({row}, {col}) outside {self.rows}x{self.cols}")
        return row * self.cols + col

    def cell_center(self, p: int) -> np.ndarray:
        """World point (x, y, 0) at the center of cell p."""
        row, col = self.cell_rowcol(p)
        ox, oy = self.origin
        return np.array(
            [ox + (col + 0.5) * self.cell_size, oy + (row + 0.5) * self.cell_size, 0.0]
        )

    def cell_centers(self) -> np.ndarray:
        """All G cell centers as a (G, 3) array, ordered by cell index."""
        ox, oy = self.origin
        rows, cols = np.divmod(np.arange(self.num_cells), self.cols)
        centers = np.zeros((self.num_cells, 3))
        centers[:, 0] = ox + (cols + 0.5) * self.cell_size
        centers[:, 1] = oy + (rows + 0.5) * self.cell_size
        return centers

    def locate(self, x: float, y: float) -> int:
        """Cell index containing world point (x, y)."""
        ox, oy = self.origin
        col = int(np.floor((x - ox) / self.cell_size))
        row = int(np.floor((y - oy) / self.cell_size))
        return self.cell_index(row, col)

    def _check_index(self, p: int):
        if not 0 <= p < self.num_cells:
            raise IndexOutOfRange(f"cell index {p} outside [0, {self.num_cells})")


@dataclass(frozen=True)
class Cylinder:
    """Person-sized vertical cylinder standing on the ground plane."""

    base_center: tuple[float, float, float]
    radius: float
    height: float

    def __post_init__(self):
        # radius 0 is allowed: it degenerates to a vertical segment, which
        # project_cylinder reports as invisible.
        if self.radius < 0:
            raise ConfigError("radius must be nonnegative")
        if self.height <= 0:
            raise ConfigError("height must be positive")
        bc = tuple(float(v) for v in self.base_center)
        if abs(bc[2]) > 1e-9:
            raise ConfigError("cylinder base must sit on the ground plane (z = 0)")
        object.__setattr__(self, "base_center", bc)

    def at(self, x: float, y: float) -> "Cylinder":
        """Same cylinder moved to ground position (x, y)."""
        return Cylinder((x, y, 0.0), self.radius, self.height)

    def surface_points(self, samples_per_circle: int = CYLINDER_CIRCLE_SAMPLES) -> np.ndarray:
        """Sampled points on the base and top circles, shape (2K, 3)."""
        angles = 2.0 * np.pi * np.arange(samples_per_circle) / samples_per_circle
        ring = np.stack(
            [self.radius * np.cos(angles), self.radius * np.sin(angles), np.zeros_like(angles)],
            axis=1,
        )
        base = np.asarray(self.base_center) + ring
        top = base + np.array([0.0, 0.0, self.height])
        return np.concatenate([base, top], axis=0)


# Standard person proxy: radius and height in meters.
DEFAULT_CYLINDER_RADIUS = 0.3
DEFAULT_CYLINDER_HEIGHT = 1.75


def default_cylinder(x: float = 0.0, y: float = 0.0) -> Cylinder:
    return Cylinder((x, y, 0.0), DEFAULT_CYLINDER_RADIUS, DEFAULT_CYLINDER_HEIGHT)


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned crop rectangle in continuous pixel coordinates."""

    x0: float
    y0: float
    x1: float
    y1: float
    visible: bool

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def as_list(self) -> list[float]:
        return [float(self.x0), float(self.y0), float(self.x1), float(self.y1)]


INVISIBLE_RECT = CropRect(0.0, 0.0, 0.0, 0.0, visible=False)


def project_points(calib: CameraCalibration, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project (N, 3) world points; returns ((N, 2) pixel coords, (N,) depths).

    Does not enforce positive depth: callers decide how to treat points at or
    behind the camera plane (their uv entries are meaningless).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    hom = np.concatenate([pts, np.ones((pts.shape[0], 1))], axis=1)
    proj = hom @ calib.P.T
    depth = proj[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = proj[:, :2] / depth[:, None]
    return uv, depth


def world_to_image(calib: CameraCalibration, point) -> tuple[float, float]:
    """Pinhole projection of a single world point to pixel coordinates.

    Raises PointBehindCamera when the homogeneous depth is <= DEPTH_EPS.
    The result may lie outside the image bounds.
    """
    uv, depth = project_points(calib, np.asarray(point, dtype=np.float64).reshape(1, 3))
    if depth[0] <= DEPTH_EPS:
        raise PointBehindCamera(f"depth {depth[0]:.3g} <= {DEPTH_EPS}")
    return float(uv[0, 0]), float(uv[0, 1])


def project_cylinder(
    calib: CameraCalibration,
    cyl: Cylinder,
    samples_per_circle: int = CYLINDER_CIRCLE_SAMPLES,
    min_area_px: float = MIN_VISIBLE_AREA_PX,
) -> CropRect:
    """Bounding box of the cylinder's projection, clipped to the image.

    Invisible (visible=False) when any sampled surface point falls behind the
    camera or the clipped box area is below min_area_px.  Invisibility is a
    result, never an error: downstream stages zero-pad such views.
    """
    pts = cyl.surface_points(samples_per_circle)
    uv, depth = project_points(calib, pts)
    if np.any(depth <= DEPTH_EPS):
        return INVISIBLE_RECT
    x0, y0 = uv.min(axis=0)
    x1, y1 = uv.max(axis=0)
    x0 = max(x0, 0.0)
    y0 = max(y0, 0.0)
    x1 = min(x1, float(calib.image_width))
    y1 = min(y1, float(calib.image_height))
    if x1 - x0 <= 0 or y1 - y0 <= 0 or (x1 - x0) * (y1 - y0) < min_area_px:
        return INVISIBLE_RECT
    return CropRect(float(x0), float(y0), float(x1), float(y1), visible=True)


def bilinear_sample(image: np.ndarray, sx: np.ndarray, sy: np.ndarray, pad: str = "zero") -> np.ndarray:
    """Sample image at continuous center-space coords (sy rows, sx cols).

    sx, sy are 1-D; output has shape (len(sy), len(sx), channels).  Center
    space means integer coordinates hit pixel centers exactly.  pad="zero"
    treats everything outside the image as zeros; pad="clamp" extends edges.
    """
    img = np.asarray(image, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    H, W = img.shape[:2]
    gx, gy = np.meshgrid(np.asarray(sx, dtype=np.float64), np.asarray(sy, dtype=np.float64))
    x0 = np.floor(gx).astype(np.int64)
    y0 = np.floor(gy).astype(np.int64)
    fx = (gx - x0)[:, :, None]
    fy = (gy - y0)[:, :, None]

    out = np.zeros((gy.shape[0], gy.shape[1], img.shape[2]))
    for dy, dx, wt in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yi = y0 + dy
        xi = x0 + dx
        if pad == "clamp":
            vals = img[np.clip(yi, 0, H - 1), np.clip(xi, 0, W - 1)]
        else:
            inside = (yi >= 0) & (yi < H) & (xi >= 0) & (xi < W)
            vals = img[np.clip(yi, 0, H - 1), np.clip(xi, 0, W - 1)]
            vals = vals * inside[:, :, None]
        out += wt * vals
    return out[:, :, 0] if squeeze else out


def crop_region(
    image: np.ndarray,
    rect: CropRect,
    out_h: int,
    out_w: int,
    mode: str = "warp",
    trim_px: int = 0,
) -> np.ndarray:
    """Resample the rectangle to an (out_h, out_w, 3) patch.

    trim_px shrinks the rect horizontally on each side by
    rect.width * trim_px / REFERENCE_CROP_WIDTH before resampling, so a trim
    specified against the full-scale input width scales with the actual crop.
    mode="square" then expands the shorter side about its center; mode="warp"
    resamples the rect as-is.  Pixels sampled outside the image are zero, and
    an invisible rect yields an all-zero patch.
    """
    if out_h <= 0 or out_w <= 0:
        raise ConfigError("output patch dimensions must be positive")
    if mode not in ("warp", "square"):
        raise ConfigError(f"unknown crop mode {mode!r}")
    img = np.asarray(image, dtype=np.float64)
    channels = img.shape[2] if img.ndim == 3 else 1
    if not rect.visible:
        return np.zeros((out_h, out_w, channels) if img.ndim == 3 else (out_h, out_w))

    x0, y0, x1, y1 = rect.x0, rect.y0, rect.x1, rect.y1
    if trim_px:
        t = (x1 - x0) * trim_px / REFERENCE_CROP_WIDTH
        x0, x1 = x0 + t, x1 - t
        if x1 - x0 <= 0:
            raise EmptyAfterTrim(f"trim_px={trim_px} removed the whole crop width")

    if mode == "square":
        w, h = x1 - x0, y1 - y0
        if w < h:
            cx = 0.5 * (x0 + x1)
            x0, x1 = cx - 0.5 * h, cx + 0.5 * h
        elif h < w:
            cy = 0.5 * (y0 + y1)
            y0, y1 = cy - 0.5 * w, cy + 0.5 * w

    sx = x0 + (np.arange(out_w) + 0.5) * (x1 - x0) / out_w - 0.5
    sy = y0 + (np.arange(out_h) + 0.5) * (y1 - y0) / out_h - 0.5
    return bilinear_sample(img, sx, sy, pad="zero")


def load_calibrations(path) -> list[CameraCalibration]:
    """Read the calibration file: a JSON list of camera objects."""
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, list):
        raise ConfigError("calibration file must contain a JSON list")
    cams = []
    for entry in raw:
        try:
            cams.append(
                CameraCalibration(
                    camera_id=int(entry["camera_id"]),
                    P=np.asarray(entry["P"], dtype=np.float64),
                    image_width=int(entry["width"]),
                    image_height=int(entry["height"]),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad calibration entry: {e}") from e
    return sorted(cams, key=lambda c: c.camera_id)


def save_calibrations(path, cams: list[CameraCalibration]):
    payload = [
        {
            "camera_id": c.camera_id,
            "P": [[float(v) for v in row] for row in c.P],
            "width": c.image_width,
            "height": c.image_height,
        }
        for c in cams
    ]
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def load_grid(path) -> GroundGrid:
    """Read the grid file: a JSON object with origin, cell_size, rows, cols."""
    with open(path) as f:
        raw = json.load(f)
    try:
        return GroundGrid(
            origin=(float(raw["origin"][0]), float(raw["origin"][1])),
            cell_size=float(raw["cell_size"]),
            rows=int(raw["rows"]),
            cols=int(raw["cols"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad grid file: {e}") from e


def save_grid(path, grid: GroundGrid):
    payload = {
        "origin": [grid.origin[0], grid.origin[1]],
        "cell_size": grid.cell_size,
        "rows": grid.rows,
        "cols": grid.cols,
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")
