"""Content-classification probe used by the intelligibility proxy.

A multinomial logistic regression on flattened frames, trained on natural
train-split utterances only; its error rate on decoded frames stands in for
a speech recognizer's word error rate at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voxprofile import nn
from voxprofile.corpus import Corpus
from voxprofile.errors import ContractError
from voxprofile.nn import DenseLayer, GradientTape
from voxprofile.optim import AdamConfig, AdamState


@dataclass(frozen=True)
class ProbeConfig:
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 1e-2
    accuracy_floor: float = 0.90


@dataclass
class ContentProbe:
    layer: DenseLayer
    content_count: int
    frames_per_utterance: int
    feature_dim: int
    holdout_accuracy: float = float("nan")


def probe_param_items(p: ContentProbe) -> dict[str, np.ndarray]:
    return {"probe.W": p.layer.weights, "probe.b": p.layer.bias}


def probe_features(frames: np.ndarray) -> np.ndarray:
    """Flattened frames with the per-feature time mean removed.

    Content patterns have zero temporal mean while speaker offsets are
    constant over time, so centering strips the speaker nuisance and the
    probe generalizes to speakers (natural or synthetic) it never saw.
    """
    arr = np.ascontiguousarray(frames, dtype=np.float64)
    return (arr - arr.mean(axis=0)).reshape(1, -1)


def probe_logits(p: ContentProbe, frames: np.ndarray) -> np.ndarray:
    y, _ = nn.layer_forward(p.layer, probe_features(frames))
    return y[0]


def probe_predict(p: ContentProbe, frames: np.ndarray) -> int:
    return int(np.argmax(probe_logits(p, frames)))


def probe_error_rate(p: ContentProbe, frames_list, labels) -> float:
    wrong = sum(
        1 for frames, label in zip(frames_list, labels)
        if probe_predict(p, frames) != int(label)
    )
    return wrong / len(labels)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def train_content_probe(
    corpus: Corpus, seed: int, config: ProbeConfig = ProbeConfig()
) -> ContentProbe:
    """Fit on train-split utterances; record held-out-split accuracy.

    Raises ContractError if the held-out accuracy misses the floor, since the
    intelligibility numbers would not be meaningful.
    """
    t_len = corpus.config.frames_per_utterance
    f = corpus.config.feature_dim
    c = corpus.config.content_count
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 8]))
    layer = nn.init_dense(t_len * f, c, "identity", rng)
    probe = ContentProbe(
        layer=layer, content_count=c, frames_per_utterance=t_len, feature_dim=f
    )
    items = probe_param_items(probe)
    opt = AdamState(items, AdamConfig(lr=config.learning_rate))

    train_idx = corpus.train_utterance_indices()
    xs = np.stack([probe_features(corpus.utterances[i].frames)[0] for i in train_idx])
    ys = np.array([corpus.utterances[i].content_id for i in train_idx])

    n = len(train_idx)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            sel = order[start : start + config.batch_size]
            tape = GradientTape(items)
            for i in sel:
                x = xs[i : i + 1]
                y, cache = nn.layer_forward(probe.layer, x)
                p = _softmax(y[0])
                dlogits = p.copy()
                dlogits[ys[i]] -= 1.0
                _, (dw, db) = nn.layer_backward(probe.layer, cache, dlogits[None, :])
                tape.add("probe.W", dw)
                tape.add("probe.b", db)
            tape.scale(1.0 / len(sel))
            opt.apply(items, tape, names=sorted(items))

    held_idx = corpus.held_out_utterance_indices()
    acc = 1.0 - probe_error_rate(
        probe,
        [corpus.utterances[i].frames for i in held_idx],
        [corpus.utterances[i].content_id for i in held_idx],
    )
    probe.holdout_accuracy = acc
    if acc <= config.accuracy_floor:
        raise ContractError(
            f"content probe held-out accuracy {acc:.3f} <= floor {config.accuracy_floor}"
        )
    return probe
