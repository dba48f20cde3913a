"""Batch construction: per-epoch reference shuffling and triplet mining.

With shuffling on, each training target gets a reference utterance drawn
uniformly from its speaker's utterances, fresh every epoch, so the only
guaranteed agreement between reference and target is the speaker identity.
With shuffling off the reference is the target itself. Every plan entry also
carries a mined triplet whose anchor is the entry's reference utterance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voxprofile.corpus import Corpus
from voxprofile.errors import MiningError


@dataclass(frozen=True)
class Triplet:
    anchor: int
    positive: int
    negative: int


@dataclass(frozen=True)
class PlanEntry:
    target: int
    reference: int
    triplet: Triplet | None


@dataclass
class EpochPlan:
    epoch: int
    base_seed: int
    shuffle_on: bool
    entries: list[PlanEntry]
    single_utterance_fallbacks: int = 0


def mine_triplet(
    corpus: Corpus,
    anchor_index: int,
    rng: np.random.Generator,
    speaker_pool: list[int] | None = None,
) -> Triplet:
    """Draw (anchor, positive, negative) utterance indices.

    The positive is uniform over the anchor speaker's other utterances; the
    negative speaker is uniform over the other pool speakers, then uniform
    over that speaker's utterances. The pool defaults to the corpus train
    split.
    """
    pool = speaker_pool if speaker_pool is not None else corpus.train_speakers
    anchor_speaker = corpus.utterances[anchor_index].speaker_id
    same = [i for i in corpus.utterance_indices_of(anchor_speaker) if i != anchor_index]
    if not same:
        raise MiningError(
            f"speaker {anchor_speaker} has a single utterance; no positive exists"
        )
    other_speakers = [s for s in pool if s != anchor_speaker]
    if not other_speakers:
        raise MiningError("corpus needs at least two speakers to mine a negative")
    positive = int(same[rng.integers(len(same))])
    neg_speaker = int(other_speakers[rng.integers(len(other_speakers))])
    neg_utts = corpus.utterance_indices_of(neg_speaker)
    negative = int(neg_utts[rng.integers(len(neg_utts))])
    return Triplet(anchor=anchor_index, positive=positive, negative=negative)


def make_epoch_plan(
    corpus: Corpus,
    epoch: int,
    base_seed: int,
    shuffle_on: bool,
    speaker_pool: list[int] | None = None,
) -> EpochPlan:
    """One entry per pool utterance, reproducible from (base_seed, epoch).

    The per-epoch substream is SeedSequence([base_seed, 4, epoch]). If a
    speaker has a single utterance and shuffling is on, the reference falls
    back to the target itself, counted in single_utterance_fallbacks.
    """
    pool = speaker_pool if speaker_pool is not None else corpus.train_speakers
    rng = np.random.default_rng(np.random.SeedSequence([int(base_seed), 4, int(epoch)]))
    entries: list[PlanEntry] = []
    fallbacks = 0
    targets: list[int] = []
    for sid in pool:
        targets.extend(corpus.utterance_indices_of(sid))
    for target in sorted(targets):
        speaker = corpus.utterances[target].speaker_id
        candidates = corpus.utterance_indices_of(speaker)
        if shuffle_on:
            if len(candidates) == 1:
                reference = target
                fallbacks += 1
            else:
                reference = int(candidates[rng.integers(len(candidates))])
        else:
            reference = target
        if len(candidates) == 1:
            # off-contract corpus (precondition wants >= 2 per speaker);
            # no positive exists, so the entry carries no triplet
            triplet = None
        else:
            triplet = mine_triplet(corpus, reference, rng, speaker_pool=pool)
        entries.append(PlanEntry(target=target, reference=reference, triplet=triplet))
    return EpochPlan(
        epoch=int(epoch),
        base_seed=int(base_seed),
        shuffle_on=bool(shuffle_on),
        entries=entries,
        single_utterance_fallbacks=fallbacks,
    )
