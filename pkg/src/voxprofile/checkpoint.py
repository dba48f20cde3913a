"""Single-file JSON checkpoints shared by every trained component.

Layout: {format_version, kind, config, rng_state, step, params, adam}.
Parameter arrays are stored flattened with named shapes; floats serialize via
repr, so a load-save round trip is bit-exact. The RNG state is the numpy
bit-generator state dict (arbitrary-precision ints survive JSON).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from voxprofile.errors import ConfigError, ShapeError

FORMAT_VERSION = 1


def _arrays_to_json(arrays: dict[str, np.ndarray]) -> dict:
    return {
        name: {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
        for name, arr in arrays.items()
    }


def _arrays_from_json(blob: dict) -> dict[str, np.ndarray]:
    out = {}
    for name, rec in blob.items():
        arr = np.asarray(rec["data"], dtype=np.float64).reshape(rec["shape"])
        out[name] = np.ascontiguousarray(arr)
    return out


def save_checkpoint(
    path: str | Path,
    kind: str,
    config: dict,
    params: dict[str, np.ndarray],
    step: int = 0,
    rng_state: dict | None = None,
    adam_m: dict[str, np.ndarray] | None = None,
    adam_v: dict[str, np.ndarray] | None = None,
    adam_step_count: int = 0,
    extra: dict | None = None,
) -> Path:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "step": int(step),
        "rng_state": rng_state,
        "params": _arrays_to_json(params),
        "adam": None
        if adam_m is None
        else {
            "step_count": int(adam_step_count),
            "m": _arrays_to_json(adam_m),
            "v": _arrays_to_json(adam_v or {}),
        },
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    return path


def load_checkpoint(path: str | Path, expect_kind: str | None = None) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"checkpoint {path} does not exist")
    doc = json.loads(path.read_text())
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(
            f"unsupported checkpoint format_version {doc.get('format_version')}"
        )
    if expect_kind is not None and doc.get("kind") != expect_kind:
        raise ConfigError(
            f"checkpoint kind {doc.get('kind')!r} != expected {expect_kind!r}"
        )
    doc["params"] = _arrays_from_json(doc["params"])
    if doc.get("adam") is not None:
        doc["adam"]["m"] = _arrays_from_json(doc["adam"]["m"])
        doc["adam"]["v"] = _arrays_from_json(doc["adam"]["v"])
    return doc


def restore_arrays(target: dict[str, np.ndarray], source: dict[str, np.ndarray]) -> None:
    """Copy stored values into live arrays, validating names and shapes."""
    missing = set(target) - set(source)
    surplus = set(source) - set(target)
    if missing or surplus:
        raise ShapeError(
            f"checkpoint parameter names differ: missing={sorted(missing)} surplus={sorted(surplus)}"
        )
    for name, arr in target.items():
        if arr.shape != source[name].shape:
            raise ShapeError(
                f"checkpoint shape for {name!r} is {source[name].shape}, expected {arr.shape}"
            )
        arr[...] = source[name]
