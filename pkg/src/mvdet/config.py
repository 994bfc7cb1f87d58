"""Run configuration: TOML file, named profiles, command-line overrides.

Precedence, lowest to highest: built-in defaults, --profile, the --config
TOML file, then explicit command-line flags.  Profiles bundle the settings
used for full-scale runs alongside the desk-scale defaults.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class RunConfig:
    # model
    depth: int = 7
    head_hidden: tuple[int, ...] = (128, 64)
    freeze_embeddings: bool = True
    # crops
    patch_size: int = 32
    crop_mode: str = "warp"
    trim_px: int = 0
    cylinder_radius: float = 0.3
    cylinder_height: float = 1.75
    # training
    epochs: int = 30
    batch_size: int = 64
    r: float = 0.33
    optimizer: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.0
    seed: int = 0
    input_dropout: bool = True
    hard_negatives: str = "shift+mix"  # "off", "shift", "mix", or "shift+mix"
    hard_negatives_per_positive: int = 1
    val_fraction: float = 0.2
    patience: int | None = 10
    pnorm: int | None = None
    pnorm_weight: float = 0.0
    negatives_per_frame: int = 10
    # detection
    score_threshold: float = 0.5
    nms_threshold: float = 0.4
    min_cell_distance: float = 0.0
    # evaluation
    match_mode: str = "ground_distance"
    match_radius: float = 0.5

    def optimizer_options(self) -> dict:
        if self.optimizer == "sgd":
            return {"lr": self.lr, "momentum": self.momentum}
        if self.optimizer in ("adam", "rmsprop"):
            return {"lr": self.lr}
        return {}

    def hard_negative_modes(self) -> list[str]:
        if self.hard_negatives in ("off", "none", ""):
            return []
        modes = self.hard_negatives.split("+")
        for m in modes:
            if m not in ("shift", "mix"):
                raise ConfigError(f"unknown hard-negative mode {m!r}")
        return modes


# Settings used at full scale, plus the desk default.
PROFILES: dict[str, dict] = {
    "desk": {},
    # Monocular fine-tuning at full scale: batch 64, a third positives per
    # batch, SGD with momentum 0.9 at lr 0.005, square crops.
    "fullscale-mono": {
        "batch_size": 64,
        "r": 0.33,
        "optimizer": "sgd",
        "lr": 0.005,
        "momentum": 0.9,
        "crop_mode": "square",
        "input_dropout": True,
    },
    # Multi-view head at full scale: 60-epoch budget, rectangular crops with
    # a 50-pixel width trim per side (scaled), large head.
    "fullscale-mv": {
        "epochs": 60,
        "batch_size": 64,
        "r": 0.33,
        "crop_mode": "warp",
        "trim_px": 50,
        "head_hidden": (1024, 512),
    },
}


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"bad TOML in {path}: {e}") from e


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, value):
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {name!r}")
    if name == "head_hidden":
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, int) for v in value):
            raise ConfigError("head_hidden must be a list of integers")
        return tuple(value)
    if name in ("patience", "pnorm") and value is None:
        return None
    return value


def build_config(
    profile: str | None = None,
    config_path=None,
    overrides: dict | None = None,
) -> RunConfig:
    """Merge defaults, profile, TOML file, and explicit overrides in order."""
    values = asdict(RunConfig())
    values["head_hidden"] = tuple(values["head_hidden"])
    if profile:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}; have {sorted(PROFILES)}")
        for k, v in PROFILES[profile].items():
            values[k] = _coerce(k, v)
    if config_path is not None:
        raw = load_toml(config_path)
        flat: dict = {}
        for key, val in raw.items():
            if isinstance(val, dict):  # sections are organizational only
                flat.update(val)
            else:
                flat[key] = val
        for k, v in flat.items():
            values[k] = _coerce(k, v)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _coerce(k, v)
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if not 0.0 < cfg.r <= 1.0:
        raise ConfigError("r must lie in (0, 1]")
    if cfg.batch_size < 2:
        raise ConfigError("batch_size must be >= 2")
    if cfg.epochs < 0:
        raise ConfigError("epochs must be >= 0")
    if not 0.0 <= cfg.score_threshold:
        raise ConfigError("score_threshold must be >= 0")
    if not 0.0 <= cfg.nms_threshold <= 1.0:
        raise ConfigError("nms_threshold must lie in [0, 1]")
    if cfg.crop_mode not in ("warp", "square"):
        raise ConfigError("crop_mode must be 'warp' or 'square'")
    if cfg.match_mode not in ("ground_distance", "bbox_iou"):
        raise ConfigError("match_mode must be 'ground_distance' or 'bbox_iou'")
    if cfg.patch_size < 4:
        raise ConfigError("patch_size must be >= 4")
    cfg.hard_negative_modes()
