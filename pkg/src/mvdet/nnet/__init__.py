"""Minimal tensor/layer engine with reverse-mode gradients."""

from .layers import (
    Conv2d,
    Dropout,
    Flatten,
    Layer,
    Linear,
    LogSoftmax,
    MaxPool2d,
    ReLU,
    layer_from_spec,
)
from .network import Network
from .loss import add_pnorm_grads, nll_loss, pnorm_penalty
from .optim import SGD, Adadelta, Adam, Optimizer, RMSProp, make_optimizer
from .gradcheck import finite_difference_check, finite_difference_penalty_check, relative_error
from .checkpoint import load_network, load_networks, save_network, save_networks
from .presets import (
    DEFAULT_DEPTH,
    DEPTH_PRESETS,
    DESK_HEAD_HIDDEN,
    FULLSCALE_HEAD_HIDDEN,
    MINIEMBED_FEATURES,
    PATCH_SIZE,
    head_specs,
    miniembed_specs,
    mono_network,
)

__all__ = [
    "Conv2d", "Dropout", "Flatten", "Layer", "Linear", "LogSoftmax", "MaxPool2d",
    "ReLU", "layer_from_spec", "Network", "nll_loss", "pnorm_penalty",
    "add_pnorm_grads", "SGD", "Adam", "Adadelta", "RMSProp", "Optimizer",
    "make_optimizer", "finite_difference_check", "finite_difference_penalty_check",
    "relative_error", "save_network", "load_network", "save_networks",
    "load_networks", "DEFAULT_DEPTH", "DEPTH_PRESETS", "DESK_HEAD_HIDDEN",
    "FULLSCALE_HEAD_HIDDEN", "MINIEMBED_FEATURES", "PATCH_SIZE", "head_specs",
    "miniembed_specs", "mono_network",
]
