"""Run configuration: a flat, versioned JSON document.

Every source of randomness is an explicit named seed; there is no wall-clock
seeding anywhere. The four system variants pin their loss flags:

    baseline_lookup      lookup table + decoder, L1 only
    vae                  encoder + decoder, L1 + KL
    vae_triplet          adds the triplet term on the latent means
    vae_triplet_shuffle  adds per-epoch reference shuffling

A config file must name its variant and all six seeds; training/eval knobs
default as below.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from voxprofile.errors import ConfigError

FORMAT_VERSION = 1

VARIANTS = ("baseline_lookup", "vae", "vae_triplet", "vae_triplet_shuffle")

REQUIRED_FIELDS = (
    "variant",
    "corpus_seed",
    "split_seed",
    "train_seed",
    "eval_seed",
    "verifier_seed",
    "probe_seed",
)


@dataclass
class RunConfig:
    # identity
    variant: str = "vae_triplet_shuffle"
    format_version: int = FORMAT_VERSION
    # seeds (required in files)
    corpus_seed: int = 0
    split_seed: int = 0
    train_seed: int = 0
    eval_seed: int = 0
    verifier_seed: int = 0
    probe_seed: int = 0
    # corpus
    n_speakers: int = 64
    utts_per_speaker: int = 20
    frames_per_utterance: int = 40
    feature_dim: int = 32
    voice_dim: int = 8
    content_count: int = 20
    noise_sigma: float = 0.1
    content_amplitude: float = 1.0
    temporal_basis: int = 4
    held_out_fraction: float = 0.2
    # model
    latent_dim: int = 32
    enc_hidden: tuple[int, ...] = (64,)
    dec_hidden: tuple[int, ...] = (128,)
    # loss
    beta_kl: float = 0.05
    lambda_triplet: float = 1.0
    triplet_alpha: float = 0.5
    shuffle: bool = True
    kl_warmup_fraction: float = 0.2
    # training
    train_steps: int = 1920
    batch_size: int = 16
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # evaluation
    n_synthetic_profiles: int = 200
    percentiles: tuple[float, ...] = (60.0, 70.0, 80.0)
    interpolation_grid: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
    profile_counts: tuple[int, ...] = (1, 50, 100)
    eval_seeds: int = 5
    verifier_epochs: int = 12
    probe_epochs: int = 40

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"field 'variant' must be one of {VARIANTS}, got {self.variant!r}"
            )
        expect = _variant_flags(self.variant)
        for name, value in expect.items():
            if getattr(self, name) != value:
                raise ConfigError(
                    f"field {name!r}={getattr(self, name)} conflicts with variant "
                    f"{self.variant!r} (requires {value})"
                )
        if self.lambda_triplet < 0 or self.beta_kl < 0 or self.triplet_alpha < 0:
            raise ConfigError("loss weights must be non-negative")
        if not (0.0 <= self.kl_warmup_fraction <= 1.0):
            raise ConfigError("field 'kl_warmup_fraction' must lie in [0, 1]")
        if self.train_steps < 1 or self.batch_size < 1:
            raise ConfigError("train_steps and batch_size must be positive")
        if self.eval_seeds < 1:
            raise ConfigError("field 'eval_seeds' must be positive")
        if self.n_synthetic_profiles < 2:
            raise ConfigError("field 'n_synthetic_profiles' must be >= 2")
        for p in self.percentiles:
            if not (0.0 < p < 100.0):
                raise ConfigError(f"percentile {p} outside (0, 100)")
        grid = list(self.interpolation_grid)
        if grid != sorted(grid) or grid[0] < 0.0 or grid[-1] > 1.0:
            raise ConfigError("field 'interpolation_grid' must be sorted within [0, 1]")
        for k in self.profile_counts:
            if k < 1:
                raise ConfigError("profile counts must be positive")

    def corpus_config(self):
        from voxprofile.corpus import CorpusConfig

        return CorpusConfig(
            n_speakers=self.n_speakers,
            utts_per_speaker=self.utts_per_speaker,
            frames_per_utterance=self.frames_per_utterance,
            feature_dim=self.feature_dim,
            voice_dim=self.voice_dim,
            content_count=self.content_count,
            noise_sigma=self.noise_sigma,
            content_amplitude=self.content_amplitude,
            temporal_basis=self.temporal_basis,
        )

    def model_config(self):
        from voxprofile.model import ModelConfig

        return ModelConfig(
            feature_dim=self.feature_dim,
            frames_per_utterance=self.frames_per_utterance,
            content_count=self.content_count,
            latent_dim=self.latent_dim,
            enc_hidden=tuple(self.enc_hidden),
            dec_hidden=tuple(self.dec_hidden),
        )

    def to_json_dict(self) -> dict:
        doc = asdict(self)
        for key in ("enc_hidden", "dec_hidden", "percentiles", "interpolation_grid", "profile_counts"):
            doc[key] = list(doc[key])
        return doc

    def canonical_bytes(self) -> bytes:
        return (
            json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":")) + "\n"
        ).encode()

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def _variant_flags(variant: str) -> dict:
    if variant == "baseline_lookup":
        return {"lambda_triplet": 0.0, "beta_kl": 0.0, "shuffle": False}
    if variant == "vae":
        return {"lambda_triplet": 0.0, "shuffle": False}
    if variant == "vae_triplet":
        return {"shuffle": False}
    return {}


def config_for_variant(variant: str, base: RunConfig | None = None, **overrides) -> RunConfig:
    """Copy of base with the variant's loss flags forced consistent."""
    doc = asdict(base) if base is not None else asdict(RunConfig())
    doc.update(overrides)
    doc["variant"] = variant
    doc.update(_variant_flags(variant))
    cfg = RunConfig(**doc)
    cfg.validate()
    return cfg


_TUPLE_FIELDS = {
    "enc_hidden", "dec_hidden", "percentiles", "interpolation_grid", "profile_counts",
}


def config_from_dict(doc: dict, require_seeds: bool = True) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    if doc.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ConfigError(
            f"unsupported config format_version {doc.get('format_version')}"
        )
    if require_seeds:
        missing = sorted(set(REQUIRED_FIELDS) - set(doc))
        if missing:
            raise ConfigError(f"missing required config field(s): {', '.join(missing)}")
    clean = dict(doc)
    for name in _TUPLE_FIELDS & set(clean):
        clean[name] = tuple(clean[name])
    cfg = RunConfig(**clean)
    cfg.validate()
    return cfg


def load_config(path: str | Path, require_seeds: bool = True) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc, require_seeds=require_seeds)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_bytes(cfg.canonical_bytes())
