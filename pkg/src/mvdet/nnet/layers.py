"""Layer vocabulary: Conv2d, ReLU, MaxPool2d, Linear, Flatten, LogSoftmax, Dropout.

Each layer implements forward (caching whatever backward needs) and backward
(accumulating parameter gradients, returning the input gradient).  Arrays are
float64 throughout; image tensors are (B, C, H, W), feature tensors (B, F).
Parameter initialization is fan-in-scaled uniform for weights, zeros for
biases.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, ShapeMismatch


class Layer:
    """Base layer: stateless unless it owns parameters."""

    kind = "base"

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def spec(self) -> dict:
        return {"kind": self.kind}

    def zero_grad(self):
        for g in self.grads():
            g[...] = 0.0


def _fan_in_uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv2d(Layer):
    kind = "conv2d"

    def __init__(self, in_ch: int, out_ch: int, k: int, stride: int = 1, pad: int = 0, *, rng: np.random.Generator):
        if min(in_ch, out_ch, k, stride) < 1 or pad < 0:
            raise ConfigError("conv2d hyperparameters out of range")
        self.in_ch, self.out_ch, self.k, self.stride, self.pad = in_ch, out_ch, k, stride, pad
        self.weight = _fan_in_uniform(rng, (out_ch, in_ch, k, k), in_ch * k * k)
        self.bias = np.zeros(out_ch)
        self.dweight = np.zeros_like(self.weight)
        self.dbias = np.zeros_like(self.bias)
        self._cache = None

    def spec(self) -> dict:
        return {"kind": self.kind, "in_ch": self.in_ch, "out_ch": self.out_ch,
                "k": self.k, "stride": self.stride, "pad": self.pad}

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self.dweight, self.dbias]

    def _im2col(self, x: np.ndarray):
        B, C, H, W = x.shape
        k, s, p = self.k, self.stride, self.pad
        if p:
            xp = np.zeros((B, C, H + 2 * p, W + 2 * p))
            xp[:, :, p:p + H, p:p + W] = x
        else:
            xp = x
        Hp, Wp = xp.shape[2], xp.shape[3]
        if Hp < k or Wp < k:
            raise ShapeMismatch(f"input {H}x{W} too small for k={k}, pad={p}")
        Ho = (Hp - k) // s + 1
        Wo = (Wp - k) // s + 1
        win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        col = win.transpose(0, 2, 3, 1, 4, 5).reshape(B, Ho * Wo, C * k * k)
        return col, (Ho, Wo), xp.shape

    def forward(self, x, training=False):
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ShapeMismatch(f"conv2d expects (B, {self.in_ch}, H, W), got {x.shape}")
        col, (Ho, Wo), xp_shape = self._im2col(x)
        w_mat = self.weight.reshape(self.out_ch, -1)
        y = col @ w_mat.T + self.bias
        self._cache = (col, xp_shape, Ho, Wo)
        return y.transpose(0, 2, 1).reshape(x.shape[0], self.out_ch, Ho, Wo)

    def backward(self, dy):
        col, xp_shape, Ho, Wo = self._cache
        B = dy.shape[0]
        dy_flat = np.ascontiguousarray(
            dy.reshape(B, self.out_ch, Ho * Wo).transpose(0, 2, 1)
        ).reshape(B * Ho * Wo, self.out_ch)
        col_flat = col.reshape(B * Ho * Wo, -1)
        w_mat = self.weight.reshape(self.out_ch, -1)
        self.dweight += (dy_flat.T @ col_flat).reshape(self.weight.shape)
        self.dbias += dy_flat.sum(axis=0)
        dcol = (dy_flat @ w_mat).reshape(B, Ho * Wo, -1)
        return self._col2im(dcol, xp_shape, Ho, Wo)

    def _col2im(self, dcol, xp_shape, Ho, Wo):
        B, C, Hp, Wp = xp_shape
        k, s, p = self.k, self.stride, self.pad
        dwin = dcol.reshape(B, Ho, Wo, C, k, k).transpose(0, 3, 1, 2, 4, 5)
        dxp = np.zeros(xp_shape)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + Ho * s:s, j:j + Wo * s:s] += dwin[:, :, :, :, i, j]
        if p:
            return dxp[:, :, p:Hp - p, p:Wp - p]
        return dxp


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        self._mask = None

    def forward(self, x, training=False):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        return dy * self._mask


class MaxPool2d(Layer):
    kind = "maxpool"

    def __init__(self, k: int, stride: int | None = None):
        if k < 1:
            raise ConfigError("pool size must be >= 1")
        self.k = k
        self.stride = stride if stride is not None else k
        self._cache = None

    def spec(self):
        return {"kind": self.kind, "k": self.k, "stride": self.stride}

    def forward(self, x, training=False):
        if x.ndim != 4:
            raise ShapeMismatch(f"maxpool expects (B, C, H, W), got {x.shape}")
        B, C, H, W = x.shape
        k, s = self.k, self.stride
        if H < k or W < k:
            raise ShapeMismatch(f"input {H}x{W} smaller than pool window {k}")
        win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        Ho, Wo = win.shape[2], win.shape[3]
        flat = win.reshape(B, C, Ho, Wo, k * k)
        arg = flat.argmax(axis=-1)
        self._cache = (x.shape, arg, Ho, Wo)
        return np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        (B, C, H, W), arg, Ho, Wo = self._cache
        k, s = self.k, self.stride
        dx = np.zeros((B, C, H, W))
        oi, oj = np.meshgrid(np.arange(Ho), np.arange(Wo), indexing="ij")
        rows = oi * s + arg // k
        cols = oj * s + arg % k
        flat = dx.reshape(B * C, H * W)
        idx = (rows * W + cols).reshape(B * C, Ho * Wo)
        vals = dy.reshape(B * C, Ho * Wo)
        if s >= k:
            # non-overlapping windows: target indices are unique per map
            np.put_along_axis(flat, idx, vals, axis=1)
        else:
            np.add.at(flat, (np.arange(B * C)[:, None], idx), vals)
        return dx


class Linear(Layer):
    kind = "linear"

    def __init__(self, in_features: int, out_features: int, *, rng: np.random.Generator):
        if min(in_features, out_features) < 1:
            raise ConfigError("linear dimensions must be positive")
        self.in_features, self.out_features = in_features, out_features
        self.weight = _fan_in_uniform(rng, (out_features, in_features), in_features)
        self.bias = np.zeros(out_features)
        self.dweight = np.zeros_like(self.weight)
        self.dbias = np.zeros_like(self.bias)
        self._x = None

    def spec(self):
        return {"kind": self.kind, "in": self.in_features, "out": self.out_features}

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self.dweight, self.dbias]

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeMismatch(f"linear expects (B, {self.in_features}), got {x.shape}")
        self._x = x
        return x @ self.weight.T + self.bias

    def backward(self, dy):
        self.dweight += dy.T @ self._x
        self.dbias += dy.sum(axis=0)
        return dy @ self.weight


class Flatten(Layer):
    kind = "flatten"

    def __init__(self):
        self._shape = None

    def forward(self, x, training=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class LogSoftmax(Layer):
    kind = "logsoftmax"

    def __init__(self):
        self._y = None

    def forward(self, x, training=False):
        if x.ndim != 2:
            raise ShapeMismatch(f"logsoftmax expects (B, F), got {x.shape}")
        m = x.max(axis=1, keepdims=True)
        z = x - m
        self._y = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return self._y

    def backward(self, dy):
        return dy - np.exp(self._y) * dy.sum(axis=1, keepdims=True)


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate: float, *, rng: np.random.Generator):
        if not 0.0 <= rate < 1.0:
            raise ConfigError("dropout rate must be in [0, 1)")
        self.rate = rate
        self._rng = rng
        self._mask = None

    def spec(self):
        return {"kind": self.kind, "rate": self.rate}

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        self._mask = (self._rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


def layer_from_spec(spec: dict, rng: np.random.Generator) -> Layer:
    """Instantiate a layer from its spec dict (fresh parameters where needed)."""
    kind = spec.get("kind")
    if kind == "conv2d":
        return Conv2d(spec["in_ch"], spec["out_ch"], spec["k"],
                      spec.get("stride", 1), spec.get("pad", 0), rng=rng)
    if kind == "relu":
        return ReLU()
    if kind == "maxpool":
        return MaxPool2d(spec["k"], spec.get("stride"))
    if kind == "linear":
        return Linear(spec["in"], spec["out"], rng=rng)
    if kind == "flatten":
        return Flatten()
    if kind == "logsoftmax":
        return LogSoftmax()
    if kind == "dropout":
        return Dropout(spec["rate"], rng=rng)
    raise ConfigError(f"unknown layer kind {kind!r}")
