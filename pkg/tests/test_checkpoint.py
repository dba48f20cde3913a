"""Checkpoint round-trips must be bit-exact, including optimizer state and
the noise generator."""

import numpy as np
import pytest

from voxprofile import checkpoint as ckpt
from voxprofile import corpus as cp
from voxprofile import model as mdl
from voxprofile import train as tr
from voxprofile.config import config_for_variant
from voxprofile.errors import ConfigError, ShapeError


def small_run(tmp_path, steps=12, variant="vae_triplet_shuffle", train_seed=3):
    ccfg = cp.CorpusConfig(
        n_speakers=6, utts_per_speaker=4, frames_per_utterance=6,
        feature_dim=8, voice_dim=3, content_count=4, noise_sigma=0.1,
    )
    c = cp.generate_corpus(6, 4, seed=51, config=ccfg)
    cp.split_speakers(c, 0.2, seed=52)
    cfg = config_for_variant(
        variant,
        corpus_seed=51, split_seed=52, train_seed=train_seed,
        n_speakers=6, utts_per_speaker=4, frames_per_utterance=6,
        feature_dim=8, voice_dim=3, content_count=4,
        latent_dim=5, enc_hidden=(7,), dec_hidden=(9,),
        train_steps=steps, batch_size=4,
    )
    return c, cfg


def test_round_trip_bit_exact(tmp_path):
    c, cfg = small_run(tmp_path)
    res = tr.train_model(c, cfg, out_dir=tmp_path)
    path = tmp_path / "checkpoint.json"
    assert path.is_file()

    loaded_cfg, loaded_params, doc = tr.load_model_checkpoint(path)
    assert loaded_cfg.sha256() == cfg.sha256()
    for name, arr in mdl.param_items(res.params).items():
        assert np.array_equal(arr, mdl.param_items(loaded_params)[name]), name
    for name in res.opt.m:
        assert np.array_equal(res.opt.m[name], doc["adam"]["m"][name])
        assert np.array_equal(res.opt.v[name], doc["adam"]["v"][name])
    assert doc["adam"]["step_count"] == res.opt.step_count
    assert doc["rng_state"] == res.eps_rng.bit_generator.state


def test_save_load_save_identical_bytes(tmp_path):
    c, cfg = small_run(tmp_path)
    res = tr.train_model(c, cfg)
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    tr.save_training_checkpoint(p1, cfg, res.params, res.opt, res.steps_done, res.eps_rng)
    _, params2, doc2 = tr.load_model_checkpoint(p1)
    opt2 = tr.AdamState(mdl.param_items(params2), res.opt.config)
    ckpt.restore_arrays(opt2.m, doc2["adam"]["m"])
    ckpt.restore_arrays(opt2.v, doc2["adam"]["v"])
    opt2.step_count = doc2["adam"]["step_count"]
    rng2 = np.random.default_rng()
    rng2.bit_generator.state = doc2["rng_state"]
    tr.save_training_checkpoint(p2, cfg, params2, opt2, doc2["step"], rng2)
    assert p1.read_bytes() == p2.read_bytes()


@pytest.mark.parametrize("interrupt_at", [5, 7])
def test_resume_equivalence(tmp_path, interrupt_at):
    """Interrupt at an epoch boundary (5) and mid-epoch (7); resuming must
    reproduce the uninterrupted run's parameters bit for bit."""
    c, cfg = small_run(tmp_path, steps=15)
    full = tr.train_model(c, cfg)

    part_dir = tmp_path / f"part{interrupt_at}"
    tr.train_model(c, cfg, out_dir=part_dir, session_steps=interrupt_at)
    mid = part_dir / "checkpoint.json"
    resumed = tr.train_model(c, cfg, resume_from=mid)
    assert resumed.steps_done == full.steps_done
    for name, arr in mdl.param_items(full.params).items():
        assert np.array_equal(arr, mdl.param_items(resumed.params)[name]), name
    for name in full.opt.m:
        assert np.array_equal(full.opt.m[name], resumed.opt.m[name])
        assert np.array_equal(full.opt.v[name], resumed.opt.v[name])
    assert full.eps_rng.bit_generator.state == resumed.eps_rng.bit_generator.state


def test_kind_mismatch_rejected(tmp_path):
    path = tmp_path / "v.json"
    ckpt.save_checkpoint(path, kind="verifier", config={}, params={"w": np.zeros(3)})
    with pytest.raises(ConfigError):
        ckpt.load_checkpoint(path, expect_kind="model")


def test_shape_mismatch_rejected():
    with pytest.raises(ShapeError):
        ckpt.restore_arrays({"w": np.zeros((2, 2))}, {"w": np.zeros(3)})
    with pytest.raises(ShapeError):
        ckpt.restore_arrays({"w": np.zeros(2)}, {"q": np.zeros(2)})
