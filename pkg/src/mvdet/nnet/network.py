"""Sequential network: an ordered layer pipeline with reverse-mode gradients.

There is no general computation graph; a straight pipeline covers the
per-view embeddings, the classifier heads, and their composition.  Forward in
evaluation mode is read-only; backward requires a preceding training-mode
forward and accumulates parameter gradients layer by layer.
"""

from __future__ import annotations

import copy
import hashlib

import numpy as np

from ..errors import NoRecordedForward, ShapeMismatch
from .layers import Layer, layer_from_spec


class Network:
    """Layer pipeline built from spec dicts with a deterministic seed."""

    def __init__(self, layer_specs: list[dict], seed: int = 0):
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)
        self.layers: list[Layer] = [layer_from_spec(s, self._rng) for s in layer_specs]
        self._recorded = False

    # -- structure ---------------------------------------------------------

    def specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    def truncate(self, d: int) -> "Network":
        """Deep copy of the first d layers (parameters copied, not shared)."""
        sub = Network.__new__(Network)
        sub.seed = self.seed
        sub._rng = np.random.default_rng(self.seed)
        sub.layers = copy.deepcopy(self.layers[:d])
        for layer in sub.layers:
            if hasattr(layer, "_rng"):
                layer._rng = sub._rng
        sub._recorded = False
        return sub

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def append(self, layer: Layer):
        self.layers.append(layer)

    # -- parameters --------------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def get_state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def set_state(self, state: list[np.ndarray]):
        params = self.parameters()
        if len(params) != len(state):
            raise ShapeMismatch("state has wrong number of parameter arrays")
        for p, s in zip(params, state):
            if p.shape != s.shape:
                raise ShapeMismatch(f"state shape {s.shape} != parameter shape {p.shape}")
            p[...] = s

    def param_checksum(self) -> str:
        h = hashlib.sha256()
        for p in self.parameters():
            h.update(np.ascontiguousarray(p, dtype="<f8").tobytes())
        return h.hexdigest()

    # -- execution ---------------------------------------------------------

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out, training=training)
        self._recorded = training
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if not self._recorded:
            raise NoRecordedForward("backward requires a training-mode forward first")
        grad = np.asarray(dy, dtype=np.float64)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Evaluation-mode forward in batches; concatenated outputs."""
        x = np.asarray(x, dtype=np.float64)
        outs = [self.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
        self._recorded = False
        return np.concatenate(outs, axis=0) if outs else np.zeros((0,))

    def dropout_state(self):
        return copy.deepcopy(self._rng.bit_generator.state)

    def restore_dropout_state(self, state):
        self._rng.bit_generator.state = copy.deepcopy(state)


def network_from_specs(layer_specs: list[dict], seed: int = 0) -> Network:
    return Network(layer_specs, seed=seed)
