"""Central finite-difference verification of reverse-mode gradients.

The scalar loss is a fixed random linear functional of the network output, so
gradients of every parameter and of the input are exercised.  Dropout draws
are pinned by restoring the network's rng state before every forward, which
keeps the perturbed evaluations on the same masks as the analytic pass.
"""

from __future__ import annotations

import numpy as np

from .network import Network


def _loss_and_grad(out: np.ndarray, weights: np.ndarray) -> tuple[float, np.ndarray]:
    return float((out * weights).sum()), weights


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(1.0, abs(a), abs(n))


def finite_difference_check(
    net: Network,
    x: np.ndarray,
    step: float = 1e-4,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks every element of every parameter tensor and of the input.  The
    error measure is |a - n| / max(1, |a|, |n|), which degrades to absolute
    error for small gradients and is exact (0) for dead units.
    """
    rng = rng or np.random.default_rng(0)
    x = np.asarray(x, dtype=np.float64)
    rng_state = net.dropout_state()

    net.restore_dropout_state(rng_state)
    out = net.forward(x, training=True)
    weights = rng.standard_normal(out.shape)

    net.zero_grad()
    net.restore_dropout_state(rng_state)
    out = net.forward(x, training=True)
    _, dout = _loss_and_grad(out, weights)
    dx = net.backward(dout)
    analytic = [g.copy() for g in net.gradients()] + [dx]

    def eval_loss() -> float:
        net.restore_dropout_state(rng_state)
        return _loss_and_grad(net.forward(x, training=True), weights)[0]

    worst = 0.0
    tensors = list(net.parameters()) + [x]
    for tensor, agrad in zip(tensors, analytic):
        flat = tensor.reshape(-1)
        aflat = agrad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = eval_loss()
            flat[i] = orig - step
            lm = eval_loss()
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * step)
            worst = max(worst, relative_error(aflat[i], numeric))
    return worst


def finite_difference_penalty_check(net: Network, p: int, weight: float, step: float = 1e-4) -> float:
    """Max relative error of the p-norm penalty gradients, same error measure."""
    from .loss import add_pnorm_grads, pnorm_penalty

    net.zero_grad()
    add_pnorm_grads(net, p, weight)
    analytic = [g.copy() for g in net.gradients()]

    worst = 0.0
    for tensor, agrad in zip(net.parameters(), analytic):
        flat = tensor.reshape(-1)
        aflat = agrad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = pnorm_penalty(net, p, weight)
            flat[i] = orig - step
            lm = pnorm_penalty(net, p, weight)
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * step)
            worst = max(worst, relative_error(aflat[i], numeric))
    return worst
