"""NumPy implementation of the hot kernels.

Shares its call semantics with the compiled extension; tests/test_backend.py
holds the parity suite. All arrays are C-contiguous float64. Activation codes:
0 identity, 1 tanh, 2 relu, 3 softplus.
"""

import numpy as np

IDENTITY = 0
TANH = 1
RELU = 2
SOFTPLUS = 3


_TINY = np.finfo(np.float64).tiny


def softplus(x):
    # max(x, 0) + log1p(exp(-|x|)) never overflows; the floor keeps the
    # output strictly positive when exp(-|x|) underflows
    return np.maximum(np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x))), _TINY)


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def act_forward(pre, act):
    if act == IDENTITY:
        return pre
    if act == TANH:
        return np.tanh(pre)
    if act == RELU:
        return np.maximum(pre, 0.0)
    if act == SOFTPLUS:
        return softplus(pre)
    raise ValueError(f"unknown activation code {act}")


def act_grad(pre, y, act):
    if act == IDENTITY:
        return np.ones_like(pre)
    if act == TANH:
        return 1.0 - y * y
    if act == RELU:
        return (pre > 0.0).astype(np.float64)
    if act == SOFTPLUS:
        return sigmoid(pre)
    raise ValueError(f"unknown activation code {act}")


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    return a @ b


def dense_forward(x, w, b, act):
    """y = act(x w^T + b) for a batch of row vectors.

    Returns (y, pre) where pre is the pre-activation, kept for backward.
    """
    if x.shape[1] != w.shape[1] or b.shape[0] != w.shape[0]:
        raise ValueError(
            f"dense_forward shapes inconsistent: x{x.shape} w{w.shape} b{b.shape}"
        )
    pre = x @ w.T
    pre += b
    return act_forward(pre, act), pre


def dense_backward(x, w, pre, y, act, dy):
    """Backward pass of dense_forward; returns (dx, dw, db)."""
    if dy.shape != pre.shape:
        raise ValueError(f"dense_backward upstream shape {dy.shape} != {pre.shape}")
    dpre = dy * act_grad(pre, y, act)
    dx = dpre @ w
    dw = dpre.T @ x
    db = dpre.sum(axis=0)
    return dx, np.ascontiguousarray(dw), db


def adam_step(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    """In-place Adam update on flat views; bc1/bc2 are 1 - beta^t."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
