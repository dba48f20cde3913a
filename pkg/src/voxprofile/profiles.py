"""Synthetic profile creation: prior sampling, interpolation, encoding.

A profile is a latent vector plus a provenance record that pins down exactly
how it was produced, so any profile can be re-derived from a checkpoint.
Evaluation-time encoding returns the posterior mean (no sampling noise).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from voxprofile import model as mdl
from voxprofile.errors import DomainError

PRIOR_SAMPLE = "prior_sample"
INTERPOLATION = "interpolation"
ENCODED = "encoded"


@dataclass
class SyntheticProfile:
    z: np.ndarray
    provenance: dict[str, Any]

    def to_json_dict(self) -> dict:
        return {"provenance": self.provenance, "z": [float(v) for v in self.z]}


def sample_prior(rng: np.random.Generator, latent_dim: int = 32, seed_label=None) -> SyntheticProfile:
    """Draw z ~ N(0, I); the prior over speaker profiles."""
    z = rng.standard_normal(latent_dim)
    return SyntheticProfile(
        z=z, provenance={"kind": PRIOR_SAMPLE, "seed": seed_label}
    )


def interpolate(z1, z2, w: float, refs: tuple | None = None) -> SyntheticProfile:
    """Weighted sum w*z1 + (1-w)*z2 along the segment between two profiles."""
    if not (0.0 <= w <= 1.0):
        raise DomainError(f"interpolation weight must lie in [0, 1], got {w}")
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != z2.shape:
        raise DomainError(f"endpoint shapes differ: {z1.shape} vs {z2.shape}")
    z = w * z1 + (1.0 - w) * z2
    return SyntheticProfile(
        z=z,
        provenance={
            "kind": INTERPOLATION,
            "w": float(w),
            "z1_ref": None if refs is None else refs[0],
            "z2_ref": None if refs is None else refs[1],
        },
    )


def encode_profile(params: mdl.ModelParams, utterance, utterance_ref=None) -> SyntheticProfile:
    """Deterministic encoding for evaluation: z = posterior mean."""
    mu, _ = mdl.encode(params, utterance.frames)
    return SyntheticProfile(
        z=mu, provenance={"kind": ENCODED, "utterance_ref": utterance_ref}
    )
