"""Optimizers: SGD (with momentum), Adam, Adadelta, RMSProp.

An optimizer owns per-parameter state aligned with the parameter list it was
initialized for; step() applies the textbook update rules in place.  Updates
are fully deterministic given the gradient sequence.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, StateShapeMismatch


class Optimizer:
    def __init__(self, params: list[np.ndarray]):
        self._shapes = [p.shape for p in params]

    def _check(self, params, grads):
        if len(params) != len(self._shapes) or len(grads) != len(self._shapes):
            raise StateShapeMismatch("parameter/gradient count changed since init")
        for p, g, s in zip(params, grads, self._shapes):
            if p.shape != s or g.shape != s:
                raise StateShapeMismatch(f"expected shape {s}, got {p.shape}/{g.shape}")

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]):
        raise NotImplementedError


class SGD(Optimizer):
    def __init__(self, params, lr: float, momentum: float = 0.0):
        super().__init__(params)
        self.lr, self.momentum = lr, momentum
        self._v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self._check(params, grads)
        for p, g, v in zip(params, grads, self._v):
            if self.momentum:
                v *= self.momentum
                v += g
                p -= self.lr * v
            else:
                p -= self.lr * g


class Adam(Optimizer):
    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]
        self._t = 0

    def step(self, params, grads):
        self._check(params, grads)
        self._t += 1
        bc1 = 1.0 - self.beta1 ** self._t
        bc2 = 1.0 - self.beta2 ** self._t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class Adadelta(Optimizer):
    def __init__(self, params, rho: float = 0.95, eps: float = 1e-6):
        super().__init__(params)
        self.rho, self.eps = rho, eps
        self._eg = [np.zeros_like(p) for p in params]
        self._ed = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self._check(params, grads)
        for p, g, eg, ed in zip(params, grads, self._eg, self._ed):
            eg *= self.rho
            eg += (1.0 - self.rho) * g * g
            delta = -np.sqrt(ed + self.eps) / np.sqrt(eg + self.eps) * g
            ed *= self.rho
            ed += (1.0 - self.rho) * delta * delta
            p += delta


class RMSProp(Optimizer):
    def __init__(self, params, lr: float = 1e-3, alpha: float = 0.99, eps: float = 1e-8):
        super().__init__(params)
        self.lr, self.alpha, self.eps = lr, alpha, eps
        self._sq = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self._check(params, grads)
        for p, g, sq in zip(params, grads, self._sq):
            sq *= self.alpha
            sq += (1.0 - self.alpha) * g * g
            p -= self.lr * g / (np.sqrt(sq) + self.eps)


_FACTORIES = {
    "sgd": (SGD, {"lr", "momentum"}),
    "adam": (Adam, {"lr", "beta1", "beta2", "eps"}),
    "adadelta": (Adadelta, {"rho", "eps"}),
    "rmsprop": (RMSProp, {"lr", "alpha", "eps"}),
}


def make_optimizer(name: str, params: list[np.ndarray], **hyper) -> Optimizer:
    """Factory keyed by lowercase algorithm name; unknown options rejected."""
    key = name.lower()
    if key not in _FACTORIES:
        raise ConfigError(f"unknown optimizer {name!r}")
    cls, allowed = _FACTORIES[key]
    unknown = set(hyper) - allowed
    if unknown:
        raise ConfigError(f"unknown {key} options: {sorted(unknown)}")
    return cls(params, **hyper)
