"""Multi-camera people detection on a ground-plane occupancy grid.

Pipeline: a synthetic multi-view scene generator supplies images with exact
occupancy ground truth; a monocular embedding is trained with occlusion
augmentation; per-view embedding copies feed a joint classifier over every
grid cell; score-weighted NMS dedups the detections; MODA/MODP/precision/
recall score the result.
"""

from . import augment, config, datasets, forest, geometry, metrics, multiview, nms, nnet, synthscene
from .errors import MvdetError

__version__ = "0.1.0"

__all__ = [
    "augment", "config", "datasets", "forest", "geometry", "metrics",
    "multiview", "nms", "nnet", "synthscene", "MvdetError", "__version__",
]
