"""Evaluation protocols: distinctiveness, interpolation similarity,
intelligibility proxy, disentanglement probes, and report normalization.

Distinctiveness: sample synthetic profiles, decode one utterance per profile
(content ids round-robin so every system renders the same content mix), embed
with the verifier, and report the false-accept rate over all unordered
profile pairs at thresholds calibrated on natural genuine pairs. Lower FAR
means more diverse profiles.

Similarity: encode two natural utterances from different speakers, walk the
interpolation grid, decode each point with the first utterance's content, and
score each decode against the w=1 endpoint decode through the verifier.

Intelligibility proxy: decode every content id with k sampled profiles and
report the content probe's error rate, the desk-scale stand-in for a speech
recognizer's word error rate.

Raw values are kept next to every normalized table; the baseline system's row
is the normalization denominator and is exactly 1.0 wherever defined. A zero
baseline cell yields a flagged None instead of an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from voxprofile import model as mdl
from voxprofile import probe as pb
from voxprofile import profiles as prof
from voxprofile import verifier as vf
from voxprofile.corpus import Corpus
from voxprofile.errors import ContractError, DomainError, EvaluationError
from voxprofile.nn import GradientTape
from voxprofile.optim import AdamConfig, AdamState
from voxprofile import nn

BASELINE_SYSTEM = "baseline_lookup"


@dataclass(frozen=True)
class EvalConfig:
    n_synthetic_profiles: int = 200
    percentiles: tuple[float, ...] = (60.0, 70.0, 80.0)
    interpolation_grid: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
    profile_counts: tuple[int, ...] = (1, 50, 100)
    eval_seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    base_seed: int = 0

    def validate(self) -> None:
        for p in self.percentiles:
            if not (0.0 < p < 100.0):
                raise DomainError(f"percentile {p} outside (0, 100)")
        grid = list(self.interpolation_grid)
        if grid != sorted(grid) or grid[0] < 0.0 or grid[-1] > 1.0:
            raise DomainError("interpolation grid must be sorted within [0, 1]")
        if self.n_synthetic_profiles < 2:
            raise DomainError("need at least 2 synthetic profiles")


@dataclass
class SystemHandle:
    """A trained system under evaluation: variant name plus parameters."""

    variant: str
    params: mdl.ModelParams

    def sample_profiles(self, n: int, prior_draws: np.ndarray, row_rng) -> np.ndarray:
        """n latent profiles; VAE variants share prior_draws, the baseline
        draws lookup rows with replacement."""
        if self.variant == BASELINE_SYSTEM:
            rows = row_rng.integers(self.params.baseline_table.shape[0], size=n)
            return self.params.baseline_table[rows].copy()
        return prior_draws[:n].copy()

    def decode(self, z: np.ndarray, content_id: int) -> np.ndarray:
        return mdl.decode(self.params, z, content_id)

    def utterance_profile(self, utt) -> np.ndarray:
        """Evaluation-time profile of a natural utterance: encoder mean for
        VAE variants, the speaker's table row for the baseline."""
        if self.variant == BASELINE_SYSTEM:
            return mdl.baseline_embed(self.params, utt.speaker_id)
        return prof.encode_profile(self.params, utt).z


def _require_trained(system: SystemHandle) -> None:
    table = mdl.param_items(system.params)
    if all(not np.any(arr) for arr in table.values()):
        raise ContractError("system parameters are all zero; train before evaluating")


# ---------------------------------------------------------------------------
# threshold calibration and distinctiveness


def calibrate_thresholds(
    verifier: vf.VerifierParams, corpus: Corpus, percentiles
) -> tuple[dict[float, float], list[float]]:
    """Nearest-rank thresholds from natural genuine pairs of the verifier's
    held-out speakers."""
    genuine, _ = vf.natural_trial_scores(verifier, corpus, verifier.held_out_speaker_ids)
    if not genuine:
        raise EvaluationError("no genuine pairs available for calibration")
    thresholds = {
        float(p): vf.threshold_from_percentile(genuine, p) for p in percentiles
    }
    return thresholds, genuine


def synthetic_pair_scores(
    system: SystemHandle,
    verifier: vf.VerifierParams,
    cfg: EvalConfig,
    eval_seed: int,
) -> np.ndarray:
    """Cosine scores of all unordered pairs of n decoded synthetic profiles.

    Profile i decodes content (i mod C). VAE variants share the prior draws
    of the eval seed, so comparisons across systems are paired.
    """
    _require_trained(system)
    n = cfg.n_synthetic_profiles
    latent = system.params.config.latent_dim
    prior_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.base_seed, 11, int(eval_seed)])
    )
    prior_draws = prior_rng.standard_normal((n, latent))
    row_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.base_seed, 12, int(eval_seed)])
    )
    zs = system.sample_profiles(n, prior_draws, row_rng)
    c = system.params.config.content_count
    embs = np.stack(
        [
            vf.embed_utterance(verifier, system.decode(zs[i], i % c))
            for i in range(n)
        ]
    )
    sims = embs @ embs.T
    iu = np.triu_indices(n, k=1)
    return sims[iu]


def eval_distinctiveness(
    system: SystemHandle,
    verifier: vf.VerifierParams,
    thresholds: dict[float, float],
    cfg: EvalConfig,
    eval_seed: int,
) -> tuple[dict[float, float], np.ndarray]:
    """(percentile -> raw FAR, raw pair scores) for one eval seed."""
    scores = synthetic_pair_scores(system, verifier, cfg, eval_seed)
    far = {
        p: vf.far_from_scores(scores, thr) for p, thr in sorted(thresholds.items())
    }
    return far, scores


# ---------------------------------------------------------------------------
# interpolation similarity


def eval_similarity_curve(
    system: SystemHandle,
    verifier: vf.VerifierParams,
    corpus: Corpus,
    utt_index_1: int,
    utt_index_2: int,
    grid,
) -> tuple[list[tuple[float, float]], dict]:
    """Similarity of each interpolated decode to the w=1 endpoint decode.

    Returns (curve, raw) where raw holds the endpoint and per-w verifier
    embeddings for independent recomputation.
    """
    utt1 = corpus.utterances[utt_index_1]
    utt2 = corpus.utterances[utt_index_2]
    if utt1.speaker_id == utt2.speaker_id:
        raise DomainError("similarity curve needs two distinct speakers")
    _require_trained(system)
    z1 = system.utterance_profile(utt1)
    z2 = system.utterance_profile(utt2)
    content = utt1.content_id
    endpoint = vf.embed_utterance(verifier, system.decode(z1, content))
    curve = []
    raw_points = []
    for w in grid:
        zw = prof.interpolate(z1, z2, float(w)).z
        emb = vf.embed_utterance(verifier, system.decode(zw, content))
        score = vf.cosine_similarity(emb, endpoint)
        curve.append((float(w), score))
        raw_points.append({"w": float(w), "embedding": [float(v) for v in emb]})
    raw = {
        "endpoint_embedding": [float(v) for v in endpoint],
        "content_id": int(content),
        "utterances": [int(utt_index_1), int(utt_index_2)],
        "points": raw_points,
    }
    return curve, raw


def pick_cross_speaker_pairs(
    corpus: Corpus, n_pairs: int, seed: int
) -> list[tuple[int, int]]:
    """Deterministic cross-speaker utterance pairs among train speakers."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 16]))
    pairs = []
    speakers = corpus.train_speakers
    for _ in range(n_pairs):
        s1, s2 = rng.choice(speakers, size=2, replace=False)
        u1 = int(rng.choice(corpus.utterance_indices_of(int(s1))))
        u2 = int(rng.choice(corpus.utterance_indices_of(int(s2))))
        pairs.append((u1, u2))
    return pairs


# ---------------------------------------------------------------------------
# intelligibility proxy


def eval_intelligibility_proxy(
    system: SystemHandle,
    content_probe: pb.ContentProbe,
    cfg: EvalConfig,
    eval_seed: int,
    accuracy_floor: float = 0.90,
) -> dict[int, float]:
    """Probe error rate when decoding every content id with k profiles."""
    _require_trained(system)
    if not (content_probe.holdout_accuracy > accuracy_floor):
        raise ContractError(
            f"content probe accuracy {content_probe.holdout_accuracy} below floor"
        )
    kmax = max(cfg.profile_counts)
    latent = system.params.config.latent_dim
    prior_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.base_seed, 13, int(eval_seed)])
    )
    prior_draws = prior_rng.standard_normal((kmax, latent))
    row_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.base_seed, 14, int(eval_seed)])
    )
    zs = system.sample_profiles(kmax, prior_draws, row_rng)
    c = system.params.config.content_count
    wrong = np.zeros(kmax, dtype=int)
    for i in range(kmax):
        for content in range(c):
            pred = pb.probe_predict(content_probe, system.decode(zs[i], content))
            if pred != content:
                wrong[i] += 1
    out = {}
    for k in cfg.profile_counts:
        kk = min(k, kmax)
        out[int(k)] = float(wrong[:kk].sum() / (kk * c))
    return out


def natural_probe_error(content_probe: pb.ContentProbe, corpus: Corpus, indices) -> float:
    """Probe error on natural frames; the identity-decoder reference point."""
    frames = [corpus.utterances[i].frames for i in indices]
    labels = [corpus.utterances[i].content_id for i in indices]
    return pb.probe_error_rate(content_probe, frames, labels)


# ---------------------------------------------------------------------------
# disentanglement probes


@dataclass
class DisentanglementResult:
    speaker_r2: float
    content_accuracy: float
    collapsed: bool


def _fit_linear_softmax(xs, ys, n_classes, seed, epochs=60, lr=1e-2, batch=32):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 18]))
    layer = nn.init_dense(xs.shape[1], n_classes, "identity", rng)
    items = {"W": layer.weights, "b": layer.bias}
    opt = AdamState(items, AdamConfig(lr=lr))
    n = xs.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            sel = order[start : start + batch]
            tape = GradientTape(items)
            for i in sel:
                y, cache = nn.layer_forward(layer, xs[i : i + 1])
                shifted = y[0] - y[0].max()
                p = np.exp(shifted)
                p /= p.sum()
                dlogits = p
                dlogits[ys[i]] -= 1.0
                _, (dw, db) = nn.layer_backward(layer, cache, dlogits[None, :])
                tape.add("W", dw)
                tape.add("b", db)
            tape.scale(1.0 / len(sel))
            opt.apply(items, tape, names=["W", "b"])
    return layer


def _softmax_accuracy(layer, xs, ys) -> float:
    hits = 0
    for i in range(xs.shape[0]):
        y, _ = nn.layer_forward(layer, xs[i : i + 1])
        hits += int(np.argmax(y[0]) == ys[i])
    return hits / xs.shape[0]


def disentanglement_probe(
    system: SystemHandle, corpus: Corpus, seed: int
) -> DisentanglementResult:
    """Linear probes on the system's utterance profiles of train speakers.

    speaker_r2: held-out-half R^2 of a linear regression z -> voice_params.
    content_accuracy: held-out-half accuracy of a linear classifier
    z -> content_id. Zero-variance profiles are reported as collapse.
    """
    idx = corpus.train_utterance_indices()
    zs = np.stack(
        [system.utterance_profile(corpus.utterances[i]) for i in idx]
    )
    voices = np.stack(
        [corpus.speaker(corpus.utterances[i].speaker_id).voice_params for i in idx]
    )
    contents = np.array([corpus.utterances[i].content_id for i in idx])

    collapsed = bool(np.all(zs.var(axis=0) < 1e-12))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 15]))
    order = rng.permutation(len(idx))
    half = len(idx) // 2
    fit, test = order[:half], order[half:]

    design = np.hstack([zs, np.ones((zs.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design[fit], voices[fit], rcond=None)
    pred = design[test] @ coef
    ss_res = np.sum((voices[test] - pred) ** 2, axis=0)
    ss_tot = np.sum((voices[test] - voices[test].mean(axis=0)) ** 2, axis=0)
    r2 = float(np.mean(1.0 - ss_res / np.maximum(ss_tot, 1e-12)))

    clf = _fit_linear_softmax(
        zs[fit], contents[fit], corpus.config.content_count, seed
    )
    acc = _softmax_accuracy(clf, zs[test], contents[test])
    return DisentanglementResult(speaker_r2=r2, content_accuracy=acc, collapsed=collapsed)


# ---------------------------------------------------------------------------
# normalization and report assembly


def normalize_cells(raw: dict[str, dict], baseline: str) -> tuple[dict, dict]:
    """Divide each system's cells by the baseline's; returns (normalized,
    flags). A zero baseline cell normalizes to None and is flagged."""
    if baseline not in raw:
        raise EvaluationError(f"baseline system {baseline!r} missing from raw table")
    normalized: dict[str, dict] = {}
    flags: dict[str, list] = {"zero_baseline_cells": []}
    for system, cells in raw.items():
        normalized[system] = {}
        for key, value in cells.items():
            base = raw[baseline][key]
            if base == 0:
                normalized[system][key] = None
                if key not in flags["zero_baseline_cells"]:
                    flags["zero_baseline_cells"].append(key)
            else:
                normalized[system][key] = float(value) / float(base)
    return normalized, flags


def median(values) -> float:
    return float(np.median(np.asarray(list(values), dtype=np.float64)))
