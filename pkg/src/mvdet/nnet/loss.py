"""Classification loss and weight-norm regularization."""

from __future__ import annotations

import numpy as np

from ..errors import LabelOutOfRange
from .layers import Conv2d, Linear
from .network import Network


def nll_loss(log_probs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Negative log-likelihood of the selected classes.

    log_probs: (B, K) rows of log-probabilities; labels: (B,) integer classes.
    Returns (mean loss, gradient wrt log_probs): -1/B at each selected entry.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    B, K = log_probs.shape
    if labels.shape != (B,):
        raise LabelOutOfRange(f"labels shape {labels.shape} != ({B},)")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= K:
        raise LabelOutOfRange(f"labels must lie in [0, {K})")
    picked = log_probs[np.arange(B), labels]
    loss = -picked.mean()
    grad = np.zeros_like(log_probs)
    grad[np.arange(B), labels] = -1.0 / B
    return float(loss), grad


def _weight_arrays(net: Network) -> list[np.ndarray]:
    return [layer.weight for layer in net.layers if isinstance(layer, (Conv2d, Linear))]


def _weight_grad_arrays(net: Network) -> list[np.ndarray]:
    return [layer.dweight for layer in net.layers if isinstance(layer, (Conv2d, Linear))]


def pnorm_penalty(net: Network, p: int, weight: float) -> float:
    """weight * ||w||_p over all conv/linear weights (biases excluded).

    ||w||_p = (sum |w_i|^p)^(1/p), the norm taken over the concatenation of
    every weight tensor.  Returns the penalty value; add_pnorm_grads adds the
    matching (sub)gradients.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    ws = _weight_arrays(net)
    if not ws or weight == 0.0:
        return 0.0
    if p == 1:
        norm = sum(np.abs(w).sum() for w in ws)
    else:
        norm = np.sqrt(sum((w ** 2).sum() for w in ws))
    return float(weight * norm)


def add_pnorm_grads(net: Network, p: int, weight: float):
    """Accumulate d(weight * ||w||_p)/dw into the weight gradients.

    Subgradient 0 at w_i = 0 for p = 1; zero gradient when the whole weight
    vector is zero for p = 2.
    """
    if weight == 0.0:
        return
    ws = _weight_arrays(net)
    gs = _weight_grad_arrays(net)
    if p == 1:
        for w, g in zip(ws, gs):
            g += weight * np.sign(w)
    else:
        norm = np.sqrt(sum((w ** 2).sum() for w in ws))
        if norm == 0.0:
            return
        for w, g in zip(ws, gs):
            g += weight * w / norm
