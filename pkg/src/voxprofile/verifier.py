"""Independent speaker-verification scorer.

A small embedding network (frame MLP, mean pooling, linear projection,
L2 normalization onto the unit sphere) trained with a triplet objective on
natural utterances only. It never shares parameters or seeds with the models
it judges, and its held-out speakers are disjoint from the judged model's
held-out set. All metric scores in the evaluation suite are cosine
similarities between its embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from voxprofile import nn
from voxprofile import sampler as smp
from voxprofile.corpus import Corpus
from voxprofile.errors import ConfigError, DomainError, TrainingError
from voxprofile.nn import DenseLayer, GradientTape
from voxprofile.optim import AdamConfig, AdamState


@dataclass(frozen=True)
class VerifierConfig:
    feature_dim: int
    embed_dim: int = 16
    hidden: tuple[int, ...] = (64,)
    margin: float = 0.5
    epochs: int = 12
    batch_size: int = 16
    learning_rate: float = 1e-3
    held_out_fraction: float = 0.2
    eer_ceiling: float = 0.10


@dataclass
class VerifierParams:
    config: VerifierConfig
    frame_layers: list[DenseLayer]
    proj: DenseLayer
    train_speaker_ids: list[int]
    held_out_speaker_ids: list[int]
    eer: float = float("nan")


def verifier_param_items(params: VerifierParams) -> dict[str, np.ndarray]:
    out = dict(nn.mlp_param_items(params.frame_layers, "ver.frame"))
    out["ver.proj.W"] = params.proj.weights
    out["ver.proj.b"] = params.proj.bias
    return out


def init_verifier(config: VerifierConfig, train_ids, held_ids, seed: int) -> VerifierParams:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 5]))
    layers = []
    d = config.feature_dim
    for h in config.hidden:
        layers.append(nn.init_dense(d, h, "tanh", rng))
        d = h
    proj = nn.init_dense(d, config.embed_dim, "identity", rng)
    return VerifierParams(
        config=config,
        frame_layers=layers,
        proj=proj,
        train_speaker_ids=sorted(int(s) for s in train_ids),
        held_out_speaker_ids=sorted(int(s) for s in held_ids),
    )


@dataclass
class _EmbedCache:
    frame_caches: list
    proj_cache: object
    n_frames: int
    u: np.ndarray
    norm: float
    e: np.ndarray


def _embed_with_cache(params: VerifierParams, frames) -> tuple[np.ndarray, _EmbedCache]:
    arr = nn.as_matrix(frames, "frames")
    if arr.shape[1] != params.config.feature_dim:
        raise DomainError(
            f"frames have feature dim {arr.shape[1]}, verifier expects {params.config.feature_dim}"
        )
    h, frame_caches = nn.mlp_forward(params.frame_layers, arr)
    pooled = h.mean(axis=0)
    u, proj_cache = nn.layer_forward(params.proj, pooled)
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        raise DomainError("projection collapsed to the zero vector")
    e = u / norm
    return e, _EmbedCache(frame_caches, proj_cache, arr.shape[0], u, norm, e)


def embed_utterance(params: VerifierParams, frames) -> np.ndarray:
    """Unit-norm embedding of one utterance."""
    e, _ = _embed_with_cache(params, frames)
    return e


def _embed_backward(params: VerifierParams, cache: _EmbedCache, de: np.ndarray, tape: GradientTape) -> None:
    # e = u / |u|  =>  du = (de - e (e . de)) / |u|
    du = (de - cache.e * float(cache.e @ de)) / cache.norm
    dpooled, (dw, db) = nn.layer_backward(params.proj, cache.proj_cache, du)
    tape.add("ver.proj.W", dw)
    tape.add("ver.proj.b", db)
    dh = np.tile(dpooled / cache.n_frames, (cache.n_frames, 1))
    nn.mlp_backward(params.frame_layers, cache.frame_caches, dh, tape, "ver.frame")


def cosine_similarity(a, b) -> float:
    """a.b / (|a||b|); rejects zero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DomainError("cosine similarity undefined for a zero vector")
    return float(a @ b / (na * nb))


@dataclass(frozen=True)
class Trial:
    embedding_a: np.ndarray
    embedding_b: np.ndarray
    same_speaker: bool


@dataclass
class TrialSet:
    trials: list[Trial] = field(default_factory=list)

    def scores(self, same: bool) -> list[float]:
        return [
            cosine_similarity(t.embedding_a, t.embedding_b)
            for t in self.trials
            if t.same_speaker is same
        ]


def far_at_threshold(trials: TrialSet, threshold: float) -> float:
    """Fraction of different-speaker trials scoring at or above threshold."""
    impostor = trials.scores(same=False)
    if not impostor:
        raise DomainError("trial set holds no different-speaker pair")
    return float(sum(1 for s in impostor if s >= threshold) / len(impostor))


def far_from_scores(scores, threshold: float) -> float:
    scores = list(scores)
    if not scores:
        raise DomainError("no impostor scores")
    return float(sum(1 for s in scores if s >= threshold) / len(scores))


def threshold_from_percentile(genuine_scores, percentile: float) -> float:
    """Nearest-rank percentile of the genuine score distribution."""
    scores = sorted(float(s) for s in genuine_scores)
    if not scores:
        raise DomainError("empty genuine score list")
    if not (0.0 < percentile < 100.0):
        raise DomainError(f"percentile must lie in (0, 100), got {percentile}")
    rank = int(np.ceil(percentile / 100.0 * len(scores)))
    return scores[max(rank, 1) - 1]


def equal_error_rate(genuine_scores, impostor_scores) -> float:
    """Threshold sweep over observed scores; EER = (FAR+FRR)/2 at the
    crossing point."""
    genuine = np.sort(np.asarray(list(genuine_scores), dtype=np.float64))
    impostor = np.sort(np.asarray(list(impostor_scores), dtype=np.float64))
    if genuine.size == 0 or impostor.size == 0:
        raise DomainError("EER needs both genuine and impostor scores")
    candidates = np.unique(np.concatenate([genuine, impostor]))
    best = (np.inf, 1.0)
    for t in candidates:
        far = float(np.mean(impostor >= t))
        frr = float(np.mean(genuine < t))
        gap = abs(far - frr)
        if gap < best[0]:
            best = (gap, 0.5 * (far + frr))
    return best[1]


# ---------------------------------------------------------------------------
# training


def pick_verifier_split(corpus: Corpus, seed: int) -> tuple[list[int], list[int]]:
    """Held-out speakers disjoint from the corpus's own held-out set."""
    if corpus.split is None:
        raise ConfigError("corpus needs a split before training a verifier")
    pool = list(corpus.train_speakers)
    n_held = max(1, int(round(len(corpus.speakers) * 0.2)))
    if n_held >= len(pool):
        raise ConfigError("too few speakers to carve a verifier held-out set")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 6]))
    held = sorted(int(x) for x in rng.choice(pool, size=n_held, replace=False))
    train = sorted(set(s.speaker_id for s in corpus.speakers) - set(held))
    return train, held


def natural_trial_scores(
    params: VerifierParams, corpus: Corpus, speaker_ids: list[int]
) -> tuple[list[float], list[float]]:
    """Genuine and impostor cosine scores over all utterance pairs of the
    given speakers."""
    indices = []
    for sid in speaker_ids:
        indices.extend(corpus.utterance_indices_of(sid))
    indices = sorted(indices)
    embs = {i: embed_utterance(params, corpus.utterances[i].frames) for i in indices}
    genuine, impostor = [], []
    for a_pos, i in enumerate(indices):
        for j in indices[a_pos + 1 :]:
            score = cosine_similarity(embs[i], embs[j])
            if corpus.utterances[i].speaker_id == corpus.utterances[j].speaker_id:
                genuine.append(score)
            else:
                impostor.append(score)
    return genuine, impostor


def train_verifier(
    corpus: Corpus, seed: int, config: VerifierConfig | None = None
) -> VerifierParams:
    """Triplet-train the embedder; verify EER < ceiling on its held-out
    speakers, raising TrainingError with advice otherwise. Deterministic
    given (corpus, seed, config)."""
    if len(corpus.speakers) < 8:
        raise ConfigError("verifier training needs at least 8 speakers")
    cfg = config or VerifierConfig(feature_dim=corpus.config.feature_dim)
    if cfg.feature_dim != corpus.config.feature_dim:
        raise ConfigError("verifier feature_dim must match the corpus")
    train_ids, held_ids = pick_verifier_split(corpus, seed)
    params = init_verifier(cfg, train_ids, held_ids, seed)
    items = verifier_param_items(params)
    opt = AdamState(items, AdamConfig(lr=cfg.learning_rate))
    margin_cfg = cfg.margin

    for epoch in range(cfg.epochs):
        plan = smp.make_epoch_plan(
            corpus, epoch=epoch, base_seed=int(seed) + 7_000_000, shuffle_on=False,
            speaker_pool=train_ids,
        )
        entries = [e for e in plan.entries if e.triplet is not None]
        for start in range(0, len(entries), cfg.batch_size):
            batch = entries[start : start + cfg.batch_size]
            tape = GradientTape(items)
            for entry in batch:
                t = entry.triplet
                ea, ca = _embed_with_cache(params, corpus.utterances[t.anchor].frames)
                ep, cpos = _embed_with_cache(params, corpus.utterances[t.positive].frames)
                en, cneg = _embed_with_cache(params, corpus.utterances[t.negative].frames)
                d_ap = float(np.sum((ea - ep) ** 2))
                d_an = float(np.sum((ea - en) ** 2))
                if d_ap - d_an + margin_cfg > 0.0:
                    _embed_backward(params, ca, 2.0 * (en - ep), tape)
                    _embed_backward(params, cpos, 2.0 * (ep - ea), tape)
                    _embed_backward(params, cneg, 2.0 * (ea - en), tape)
            tape.scale(1.0 / len(batch))
            opt.apply(items, tape, names=sorted(items))

    genuine, impostor = natural_trial_scores(params, corpus, held_ids)
    eer = equal_error_rate(genuine, impostor)
    params.eer = eer
    if eer >= cfg.eer_ceiling:
        raise TrainingError(
            f"verifier EER {eer:.3f} >= {cfg.eer_ceiling}; use a larger corpus or "
            f"more training epochs"
        )
    return params
