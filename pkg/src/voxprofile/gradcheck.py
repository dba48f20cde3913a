"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from voxprofile.errors import EvaluationError


def grad_check(
    loss_and_grad,
    params: dict[str, np.ndarray],
    n_coords: int = 100,
    h: float = 1e-5,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare analytic gradients against central differences.

    loss_and_grad(params) must return (loss, grads) where grads is a dict
    matching params' names and shapes, and must be deterministic given the
    parameter values (fix any noise inputs before calling). Coordinates are
    sampled across all parameter arrays; params are perturbed in place and
    restored.

    Returns the max over sampled coordinates of
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    if rng is None:
        rng = np.random.default_rng(0)

    loss0, grads = loss_and_grad(params)
    if not np.isfinite(loss0):
        raise EvaluationError("loss is non-finite at the evaluation point")

    names = sorted(params)
    sizes = np.array([params[n].size for n in names])
    total = int(sizes.sum())
    n_samples = min(n_coords, total)
    flat_choice = rng.choice(total, size=n_samples, replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    worst = 0.0
    for flat_idx in sorted(int(i) for i in flat_choice):
        which = int(np.searchsorted(offsets, flat_idx, side="right")) - 1
        name = names[which]
        local = flat_idx - int(offsets[which])
        arr = params[name].ravel()
        saved = arr[local]

        arr[local] = saved + h
        loss_plus, _ = loss_and_grad(params)
        arr[local] = saved - h
        loss_minus, _ = loss_and_grad(params)
        arr[local] = saved

        if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
            raise EvaluationError("loss became non-finite under perturbation")
        numeric = (loss_plus - loss_minus) / (2.0 * h)
        analytic = float(grads[name].ravel()[local])
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, rel)
    return worst
