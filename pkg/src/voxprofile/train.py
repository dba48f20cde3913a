"""Training driver: epoch plans, KL warm-up, checkpointing, resume.

A run is a pure function of (corpus, config): epoch plans derive from
(train_seed, epoch), the per-example noise draws come from one persistent
generator whose state rides along in every checkpoint, and the KL weight
ramps linearly over the first kl_warmup_fraction of steps. Resuming from a
checkpoint therefore reproduces the uninterrupted run bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import voxprofile
from voxprofile import checkpoint as ckpt
from voxprofile import model as mdl
from voxprofile import sampler as smp
from voxprofile.config import RunConfig
from voxprofile.corpus import Corpus
from voxprofile.errors import ConfigError
from voxprofile.optim import AdamConfig, AdamState


@dataclass
class HistoryRow:
    step: int
    l1: float
    kl: float
    triplet: float
    total: float


@dataclass
class TrainResult:
    params: mdl.ModelParams
    opt: AdamState
    history: list[HistoryRow]
    steps_done: int
    eps_rng: np.random.Generator
    checkpoint_path: Path | None


def effective_beta(cfg: RunConfig, step: int) -> float:
    """KL weight after linear warm-up; step counts completed updates."""
    warmup = int(round(cfg.kl_warmup_fraction * cfg.train_steps))
    if warmup <= 0:
        return cfg.beta_kl
    return cfg.beta_kl * min(1.0, (step + 1) / warmup)


def steps_per_epoch(corpus: Corpus, cfg: RunConfig) -> int:
    n = len(corpus.train_utterance_indices())
    return max(1, math.ceil(n / cfg.batch_size))


def _examples_for(
    corpus: Corpus,
    entries,
    latent_dim: int,
    eps_rng: np.random.Generator,
    variant: str,
) -> list[mdl.TrainExample]:
    out = []
    need_triplet = variant in ("vae_triplet", "vae_triplet_shuffle")
    utts = corpus.utterances
    for e in entries:
        eps = eps_rng.standard_normal(latent_dim)
        pos = neg = None
        if need_triplet:
            if e.triplet is None:
                raise ConfigError(
                    "triplet variant requires a mined triplet for every entry"
                )
            pos = utts[e.triplet.positive].frames
            neg = utts[e.triplet.negative].frames
        out.append(
            mdl.TrainExample(
                target_frames=utts[e.target].frames,
                target_content=utts[e.target].content_id,
                target_speaker=utts[e.target].speaker_id,
                reference_frames=utts[e.reference].frames,
                positive_frames=pos,
                negative_frames=neg,
                eps=eps,
            )
        )
    return out


def save_training_checkpoint(
    path: str | Path,
    cfg: RunConfig,
    params: mdl.ModelParams,
    opt: AdamState,
    step: int,
    eps_rng: np.random.Generator,
) -> Path:
    return ckpt.save_checkpoint(
        path,
        kind="model",
        config=cfg.to_json_dict(),
        params=mdl.param_items(params),
        step=step,
        rng_state=eps_rng.bit_generator.state,
        adam_m=opt.m,
        adam_v=opt.v,
        adam_step_count=opt.step_count,
        extra={
            "backend": voxprofile.backend_name(),
            "tool_version": voxprofile.__version__,
            "train_speaker_ids": params.train_speaker_ids,
        },
    )


def load_model_checkpoint(path: str | Path) -> tuple[RunConfig, mdl.ModelParams, dict]:
    """Rebuild (config, params, raw doc) from a model checkpoint."""
    from voxprofile.config import config_from_dict

    doc = ckpt.load_checkpoint(path, expect_kind="model")
    cfg = config_from_dict(doc["config"])
    params = mdl.init_model(
        cfg.model_config(),
        [int(s) for s in doc["extra"]["train_speaker_ids"]],
        cfg.train_seed,
    )
    ckpt.restore_arrays(mdl.param_items(params), doc["params"])
    return cfg, params, doc


def train_model(
    corpus: Corpus,
    cfg: RunConfig,
    out_dir: str | Path | None = None,
    resume_from: str | Path | None = None,
    log_every: int = 0,
    session_steps: int | None = None,
) -> TrainResult:
    """Run cfg.train_steps Adam updates (or the remainder when resuming).

    session_steps caps the updates performed by this call (an interrupted
    session); resuming from the written checkpoint continues the run
    bit-exactly, mid-epoch included.
    """
    cfg.validate()
    if corpus.split is None:
        raise ConfigError("corpus must carry a train/held-out split")

    adam_cfg = AdamConfig(
        lr=cfg.learning_rate, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2, eps=cfg.adam_eps
    )
    weights_base = mdl.LossWeights(
        beta_kl=cfg.beta_kl,
        lambda_triplet=cfg.lambda_triplet,
        triplet=mdl.TripletConfig(cfg.triplet_alpha),
    )

    if resume_from is not None:
        prev_cfg, params, doc = load_model_checkpoint(resume_from)
        if prev_cfg.sha256() != cfg.sha256():
            raise ConfigError("resume checkpoint was written with a different config")
        opt = AdamState(mdl.param_items(params), adam_cfg)
        ckpt.restore_arrays(opt.m, doc["adam"]["m"])
        ckpt.restore_arrays(opt.v, doc["adam"]["v"])
        opt.step_count = doc["adam"]["step_count"]
        eps_rng = np.random.default_rng()
        eps_rng.bit_generator.state = doc["rng_state"]
        start_step = doc["step"]
    else:
        params = mdl.init_model(cfg.model_config(), corpus.train_speakers, cfg.train_seed)
        opt = AdamState(mdl.param_items(params), adam_cfg)
        eps_rng = np.random.default_rng(np.random.SeedSequence([cfg.train_seed, 9]))
        start_step = 0

    per_epoch = steps_per_epoch(corpus, cfg)
    history: list[HistoryRow] = []
    out_path = None
    current_epoch = -1
    plan = None

    step = start_step
    while step < cfg.train_steps and (
        session_steps is None or step - start_step < session_steps
    ):
        epoch = step // per_epoch
        if epoch != current_epoch:
            plan = smp.make_epoch_plan(corpus, epoch, cfg.train_seed, cfg.shuffle)
            current_epoch = epoch
        lo = (step % per_epoch) * cfg.batch_size
        entries = plan.entries[lo : lo + cfg.batch_size]
        batch = _examples_for(corpus, entries, cfg.latent_dim, eps_rng, cfg.variant)
        weights = mdl.LossWeights(
            beta_kl=effective_beta(cfg, step),
            lambda_triplet=weights_base.lambda_triplet,
            triplet=weights_base.triplet,
        )
        breakdown = mdl.train_step(params, batch, opt, weights, cfg.variant)
        history.append(
            HistoryRow(
                step=step,
                l1=breakdown.l1_recon,
                kl=breakdown.kl,
                triplet=breakdown.triplet,
                total=breakdown.total,
            )
        )
        step += 1
        if log_every and step % log_every == 0:
            print(
                f"step {step}/{cfg.train_steps} "
                f"l1={breakdown.l1_recon:.4f} kl={breakdown.kl:.3f} "
                f"triplet={breakdown.triplet:.4f}"
            )
        if out_dir is not None and step % per_epoch == 0:
            out_path = save_training_checkpoint(
                Path(out_dir) / "checkpoint.json", cfg, params, opt, step, eps_rng
            )

    if out_dir is not None and step > start_step:
        out_path = save_training_checkpoint(
            Path(out_dir) / "checkpoint.json", cfg, params, opt, step, eps_rng
        )

    return TrainResult(
        params=params,
        opt=opt,
        history=history,
        steps_done=step,
        eps_rng=eps_rng,
        checkpoint_path=out_path,
    )


def write_history_csv(history: list[HistoryRow], path: str | Path) -> None:
    lines = ["step,l1,kl,triplet,total"]
    for row in history:
        lines.append(
            f"{row.step},{row.l1!r},{row.kl!r},{row.triplet!r},{row.total!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
