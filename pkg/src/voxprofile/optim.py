"""Adam optimizer over named parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voxprofile import backend
from voxprofile.errors import ShapeError


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class AdamState:
    """First/second moment buffers keyed like the parameter set."""

    def __init__(self, params: dict[str, np.ndarray], config: AdamConfig = AdamConfig()):
        self.config = config
        self.step_count = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params.items()}
        self.v = {name: np.zeros_like(arr) for name, arr in params.items()}

    def apply(self, params: dict[str, np.ndarray], grads, names=None) -> None:
        """One bias-corrected update, in place, over the named subset."""
        self.step_count += 1
        cfg = self.config
        bc1 = 1.0 - cfg.beta1**self.step_count
        bc2 = 1.0 - cfg.beta2**self.step_count
        for name in names if names is not None else sorted(params):
            p = params[name]
            g = grads[name]
            if p.shape != g.shape:
                raise ShapeError(f"gradient shape mismatch for {name!r}")
            backend.adam_step(
                p.ravel(), np.ascontiguousarray(g).ravel(),
                self.m[name].ravel(), self.v[name].ravel(),
                cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2,
            )

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name in self.m:
            out[f"adam.m.{name}"] = self.m[name]
            out[f"adam.v.{name}"] = self.v[name]
        return out
