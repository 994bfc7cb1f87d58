"""Model presets used throughout the pipeline.

MiniEmbed is the desk-scale embedding backbone: two conv blocks on 32x32
inputs ending in a flatten, 1024 output features.  The monocular detector is
MiniEmbed plus a small two-way classification head.  DEPTH_PRESETS lists the
truncation depths that end each stage of MiniEmbed, analogous to sweeping the
number of retained backbone layers at full scale.
"""

from __future__ import annotations

from .network import Network

PATCH_SIZE = 32
# Full-scale input sizes kept as presets (not used at desk scale).
FULLSCALE_INPUT_SQUARE = 224
FULLSCALE_INPUT_SQUARE_ALT = 227

MINIEMBED_SPECS = [
    {"kind": "conv2d", "in_ch": 3, "out_ch": 8, "k": 3, "stride": 1, "pad": 1},
    {"kind": "relu"},
    {"kind": "maxpool", "k": 2, "stride": 2},
    {"kind": "conv2d", "in_ch": 8, "out_ch": 16, "k": 3, "stride": 1, "pad": 1},
    {"kind": "relu"},
    {"kind": "maxpool", "k": 2, "stride": 2},
    {"kind": "flatten"},
]

# 16 channels x 8 x 8 after two pooled conv blocks on a 32x32 input.
MINIEMBED_FEATURES = 1024

MONO_HEAD_SPECS = [
    {"kind": "linear", "in": MINIEMBED_FEATURES, "out": 64},
    {"kind": "relu"},
    {"kind": "linear", "in": 64, "out": 2},
    {"kind": "logsoftmax"},
]

# Truncation depths ending after pool1, conv2+relu, pool2, and flatten.
DEPTH_PRESETS = (3, 5, 6, 7)
DEFAULT_DEPTH = 7


def miniembed_specs() -> list[dict]:
    return [dict(s) for s in MINIEMBED_SPECS]


def mono_network(seed: int = 0) -> Network:
    """MiniEmbed backbone plus a temporary two-way head, randomly initialized."""
    return Network(miniembed_specs() + [dict(s) for s in MONO_HEAD_SPECS], seed=seed)


def head_specs(in_features: int, hidden: tuple[int, ...] = (128, 64)) -> list[dict]:
    """MLP head over concatenated features: hidden ReLU layers then 2-way log-softmax."""
    specs: list[dict] = []
    prev = in_features
    for h in hidden:
        specs.append({"kind": "linear", "in": prev, "out": h})
        specs.append({"kind": "relu"})
        prev = h
    specs.append({"kind": "linear", "in": prev, "out": 2})
    specs.append({"kind": "logsoftmax"})
    return specs


# Full-scale head sizes retained as a preset.
FULLSCALE_HEAD_HIDDEN = (1024, 512)
DESK_HEAD_HIDDEN = (128, 64)
