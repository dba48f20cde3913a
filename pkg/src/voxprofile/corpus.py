"""Synthetic multi-speaker corpus with known ground truth.

Each speaker owns a fixed latent voice-parameter vector; each utterance is a
frame matrix built as

    frames = speaker component (constant over time)
           + content pattern (zero mean over time)
           + iid Gaussian noise

where both components come from fixed random linear maps frozen by the corpus
seed. The speaker map sends voice parameters to a per-feature offset; the
content map sends a content one-hot to a rank-1 temporal pattern drawn from a
smooth sinusoidal basis. Because the speaker part is constant in time and the
content part has zero temporal mean, the two occupy linearly independent
subspaces and a time-pooling encoder can in principle separate them, which is
what the evaluation probes measure.

Serialization format (directory):
  corpus.json     manifest: config, seed, speakers with voice_params, split,
                  utterance records with relative frame-file names
  utt_NNNNN.bin   two little-endian uint32 (T, F) then T*F little-endian
                  float64 values, row-major
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from voxprofile.errors import ConfigError, ShapeError


@dataclass(frozen=True)
class CorpusConfig:
    n_speakers: int = 64
    utts_per_speaker: int = 20
    frames_per_utterance: int = 40
    feature_dim: int = 32
    voice_dim: int = 8
    content_count: int = 20
    noise_sigma: float = 0.1
    content_amplitude: float = 1.0
    temporal_basis: int = 4

    def validate(self) -> None:
        if self.n_speakers < 4:
            raise ConfigError(f"n_speakers must be >= 4, got {self.n_speakers}")
        if self.utts_per_speaker < 2:
            raise ConfigError(
                f"utts_per_speaker must be >= 2 (positive pairs impossible otherwise), "
                f"got {self.utts_per_speaker}"
            )
        for name in ("frames_per_utterance", "feature_dim", "voice_dim",
                     "content_count", "temporal_basis"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass(frozen=True)
class SpeakerGroundTruth:
    speaker_id: int
    voice_params: np.ndarray


@dataclass
class Utterance:
    speaker_id: int
    content_id: int
    instance: int
    frames: np.ndarray


@dataclass
class CorpusSplit:
    train_speakers: list[int]
    held_out_speakers: list[int]
    seed: int
    held_out_fraction: float


@dataclass
class Corpus:
    config: CorpusConfig
    seed: int
    speakers: list[SpeakerGroundTruth]
    utterances: list[Utterance]
    speaker_map: np.ndarray          # (F, V)
    content_patterns: np.ndarray     # (C, T, F)
    split: CorpusSplit | None = None
    _by_speaker: dict[int, list[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._by_speaker:
            for i, utt in enumerate(self.utterances):
                self._by_speaker.setdefault(utt.speaker_id, []).append(i)

    def utterance_indices_of(self, speaker_id: int) -> list[int]:
        return self._by_speaker[speaker_id]

    def speaker(self, speaker_id: int) -> SpeakerGroundTruth:
        for s in self.speakers:
            if s.speaker_id == speaker_id:
                return s
        raise KeyError(speaker_id)

    @property
    def train_speakers(self) -> list[int]:
        if self.split is None:
            raise ConfigError("corpus has no train/held-out split yet")
        return self.split.train_speakers

    @property
    def held_out_speakers(self) -> list[int]:
        if self.split is None:
            raise ConfigError("corpus has no train/held-out split yet")
        return self.split.held_out_speakers

    def train_utterance_indices(self) -> list[int]:
        out: list[int] = []
        for sid in self.train_speakers:
            out.extend(self._by_speaker[sid])
        return sorted(out)

    def held_out_utterance_indices(self) -> list[int]:
        out: list[int] = []
        for sid in self.held_out_speakers:
            out.extend(self._by_speaker[sid])
        return sorted(out)


def _temporal_basis(t_len: int, k: int) -> np.ndarray:
    """Smooth zero-mean basis columns with unit RMS over time."""
    t = np.arange(t_len, dtype=np.float64)
    cols = []
    harmonic = 1
    while len(cols) < k:
        phase = 2.0 * np.pi * harmonic * t / t_len
        cols.append(np.sin(phase))
        if len(cols) < k:
            cols.append(np.cos(phase))
        harmonic += 1
    basis = np.stack(cols, axis=1)
    basis -= basis.mean(axis=0)
    rms = np.sqrt((basis**2).mean(axis=0))
    return basis / rms


def build_generative_maps(
    config: CorpusConfig, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Frozen random linear maps: (speaker_map (F, V), content_patterns (C, T, F))."""
    ss = np.random.SeedSequence([int(seed), 0])
    rng = np.random.default_rng(ss)
    f, v = config.feature_dim, config.voice_dim
    t_len, c = config.frames_per_utterance, config.content_count
    speaker_map = rng.standard_normal((f, v)) / np.sqrt(v)
    basis = _temporal_basis(t_len, config.temporal_basis)
    coeffs = rng.standard_normal((c, config.temporal_basis)) / np.sqrt(
        config.temporal_basis
    )
    mixes = rng.standard_normal((c, f))
    mixes /= np.linalg.norm(mixes, axis=1, keepdims=True)
    temporal = coeffs @ basis.T                        # (C, T)
    patterns = config.content_amplitude * temporal[:, :, None] * mixes[:, None, :]
    return speaker_map, np.ascontiguousarray(patterns)


def render_frames(
    speaker_map: np.ndarray,
    content_patterns: np.ndarray,
    voice_params: np.ndarray,
    content_id: int,
    noise_sigma: float,
    rng: np.random.Generator | None,
) -> np.ndarray:
    """Build one utterance's frame matrix; rng may be None when noise_sigma is 0."""
    t_len, f = content_patterns.shape[1], content_patterns.shape[2]
    frames = np.tile(speaker_map @ voice_params, (t_len, 1))
    frames += content_patterns[content_id]
    if noise_sigma > 0:
        if rng is None:
            raise ConfigError("noise_sigma > 0 requires an rng")
        frames += noise_sigma * rng.standard_normal((t_len, f))
    return np.ascontiguousarray(frames)


def generate_corpus(
    n_speakers: int = 64,
    utts_per_speaker: int = 20,
    seed: int = 0,
    config: CorpusConfig | None = None,
) -> Corpus:
    """Deterministically generate the corpus for a seed.

    Per-speaker data comes from the speaker_id-indexed substream
    SeedSequence([seed, 1, speaker_id]), so speakers could be generated in
    parallel without changing the result.
    """
    base = config or CorpusConfig()
    cfg = CorpusConfig(
        **{
            **asdict(base),
            "n_speakers": n_speakers,
            "utts_per_speaker": utts_per_speaker,
        }
    )
    cfg.validate()

    speaker_map, patterns = build_generative_maps(cfg, seed)
    speakers: list[SpeakerGroundTruth] = []
    utterances: list[Utterance] = []
    for sid in range(cfg.n_speakers):
        s_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1, sid]))
        voice = s_rng.standard_normal(cfg.voice_dim)
        speakers.append(SpeakerGroundTruth(speaker_id=sid, voice_params=voice))
        instance_counter: dict[int, int] = {}
        for _ in range(cfg.utts_per_speaker):
            content_id = int(s_rng.integers(cfg.content_count))
            inst = instance_counter.get(content_id, 0)
            instance_counter[content_id] = inst + 1
            frames = render_frames(
                speaker_map, patterns, voice, content_id, cfg.noise_sigma, s_rng
            )
            utterances.append(
                Utterance(
                    speaker_id=sid,
                    content_id=content_id,
                    instance=inst,
                    frames=frames,
                )
            )
    return Corpus(
        config=cfg,
        seed=int(seed),
        speakers=speakers,
        utterances=utterances,
        speaker_map=speaker_map,
        content_patterns=patterns,
    )


def split_speakers(corpus: Corpus, held_out_fraction: float, seed: int) -> Corpus:
    """Partition speakers into disjoint train and held-out sets (in place)."""
    if not (0.0 < held_out_fraction < 0.5):
        raise ConfigError(
            f"held_out_fraction must lie in (0, 0.5), got {held_out_fraction}"
        )
    n = len(corpus.speakers)
    n_held = int(round(n * held_out_fraction))
    if n_held < 1 or n - n_held < 1:
        raise ConfigError(
            f"cannot split {n} speakers with fraction {held_out_fraction}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    ids = [s.speaker_id for s in corpus.speakers]
    held = sorted(int(x) for x in rng.choice(ids, size=n_held, replace=False))
    train = sorted(set(ids) - set(held))
    corpus.split = CorpusSplit(
        train_speakers=train,
        held_out_speakers=held,
        seed=int(seed),
        held_out_fraction=float(held_out_fraction),
    )
    return corpus


# ---------------------------------------------------------------------------
# serialization

FORMAT_VERSION = 1


def _write_frames_bin(path: Path, frames: np.ndarray) -> None:
    t_len, f = frames.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", t_len, f))
        fh.write(np.ascontiguousarray(frames, dtype="<f8").tobytes())


def _read_frames_bin(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    t_len, f = struct.unpack_from("<II", raw, 0)
    data = np.frombuffer(raw, dtype="<f8", offset=8)
    if data.size != t_len * f:
        raise ShapeError(
            f"{path.name}: header says {t_len}x{f} but payload holds {data.size} values"
        )
    return np.ascontiguousarray(data.reshape(t_len, f).astype(np.float64))


write_frames_bin = _write_frames_bin
read_frames_bin = _read_frames_bin


def save_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for i, utt in enumerate(corpus.utterances):
        fname = f"utt_{i:05d}.bin"
        _write_frames_bin(out / fname, utt.frames)
        records.append(
            {
                "speaker_id": utt.speaker_id,
                "content_id": utt.content_id,
                "instance": utt.instance,
                "file": fname,
            }
        )
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": asdict(corpus.config),
        "seed": corpus.seed,
        "speakers": [
            {"speaker_id": s.speaker_id, "voice_params": s.voice_params.tolist()}
            for s in corpus.speakers
        ],
        "split": None
        if corpus.split is None
        else {
            "train_speakers": corpus.split.train_speakers,
            "held_out_speakers": corpus.split.held_out_speakers,
            "seed": corpus.split.seed,
            "held_out_fraction": corpus.split.held_out_fraction,
        },
        "utterances": records,
    }
    with open(out / "corpus.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return out


def load_corpus(in_dir: str | Path) -> Corpus:
    root = Path(in_dir)
    manifest_path = root / "corpus.json"
    if not manifest_path.is_file():
        raise ConfigError(f"no corpus.json in {root}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ConfigError(
            f"unsupported corpus format_version {manifest.get('format_version')}"
        )
    cfg = CorpusConfig(**manifest["config"])
    cfg.validate()
    seed = int(manifest["seed"])
    speaker_map, patterns = build_generative_maps(cfg, seed)
    speakers = [
        SpeakerGroundTruth(
            speaker_id=int(rec["speaker_id"]),
            voice_params=np.asarray(rec["voice_params"], dtype=np.float64),
        )
        for rec in manifest["speakers"]
    ]
    utterances = []
    for rec in manifest["utterances"]:
        frames = _read_frames_bin(root / rec["file"])
        if frames.shape[1] != cfg.feature_dim:
            raise ShapeError(
                f"{rec['file']}: feature dim {frames.shape[1]} != config {cfg.feature_dim}"
            )
        utterances.append(
            Utterance(
                speaker_id=int(rec["speaker_id"]),
                content_id=int(rec["content_id"]),
                instance=int(rec["instance"]),
                frames=frames,
            )
        )
    split = None
    if manifest["split"] is not None:
        split = CorpusSplit(
            train_speakers=[int(x) for x in manifest["split"]["train_speakers"]],
            held_out_speakers=[int(x) for x in manifest["split"]["held_out_speakers"]],
            seed=int(manifest["split"]["seed"]),
            held_out_fraction=float(manifest["split"]["held_out_fraction"]),
        )
    return Corpus(
        config=cfg,
        seed=seed,
        speakers=speakers,
        utterances=utterances,
        speaker_map=speaker_map,
        content_patterns=patterns,
        split=split,
    )
