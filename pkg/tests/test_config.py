"""Config validation: required fields, variant consistency, canonical bytes."""

import json

import pytest

from voxprofile.config import (
    RunConfig,
    config_for_variant,
    config_from_dict,
    load_config,
)
from voxprofile.errors import ConfigError


def full_doc(**kw):
    doc = {
        "variant": "vae",
        "corpus_seed": 1,
        "split_seed": 2,
        "train_seed": 3,
        "eval_seed": 4,
        "verifier_seed": 5,
        "probe_seed": 6,
        "lambda_triplet": 0.0,
        "shuffle": False,
    }
    doc.update(kw)
    return doc


def test_missing_required_field_named():
    doc = full_doc()
    del doc["train_seed"]
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc)
    assert "train_seed" in str(exc.value)


def test_unknown_field_named():
    with pytest.raises(ConfigError) as exc:
        config_from_dict(full_doc(wibble=3))
    assert "wibble" in str(exc.value)


def test_variant_flag_conflict():
    with pytest.raises(ConfigError) as exc:
        config_from_dict(full_doc(lambda_triplet=1.0))
    assert "lambda_triplet" in str(exc.value)


def test_baseline_forces_all_flags():
    cfg = config_for_variant("baseline_lookup")
    assert cfg.lambda_triplet == 0.0
    assert cfg.beta_kl == 0.0
    assert cfg.shuffle is False
    cfg.validate()


def test_shuffle_variant_keeps_flags():
    cfg = config_for_variant("vae_triplet_shuffle")
    assert cfg.shuffle is True
    assert cfg.lambda_triplet > 0


def test_unknown_variant():
    with pytest.raises(ConfigError):
        config_from_dict(full_doc(variant="mystery"))


def test_canonical_bytes_stable():
    a = config_from_dict(full_doc())
    b = config_from_dict(full_doc())
    assert a.canonical_bytes() == b.canonical_bytes()
    assert a.sha256() == b.sha256()


def test_load_config_round_trip(tmp_path):
    cfg = config_for_variant("vae_triplet", train_seed=42)
    path = tmp_path / "cfg.json"
    path.write_bytes(cfg.canonical_bytes())
    loaded = load_config(path)
    assert loaded == cfg


def test_bad_json_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(path)


def test_grid_must_be_sorted():
    with pytest.raises(ConfigError) as exc:
        config_from_dict(full_doc(interpolation_grid=[0.5, 0.2]))
    assert "interpolation_grid" in str(exc.value)


def test_json_dict_round_trips_tuples():
    cfg = config_for_variant("vae_triplet_shuffle")
    doc = json.loads(json.dumps(cfg.to_json_dict()))
    again = config_from_dict(doc)
    assert again == cfg
