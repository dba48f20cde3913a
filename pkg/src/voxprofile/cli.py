"""Command-line surface: gen-corpus, train, synthesize, eval, report.

Every command is a pure function of its config file, input artifacts, and
the seeds named in the config; reruns reproduce outputs byte for byte. Exit
codes are a stable contract: 0 success, 2 config or usage error, 3 filesystem
conflict, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

import voxprofile
from voxprofile import checkpoint as ckpt
from voxprofile import corpus as cp
from voxprofile import metrics as mt
from voxprofile import model as mdl
from voxprofile import probe as pb
from voxprofile import profiles as prof
from voxprofile import reporting
from voxprofile import svgplot
from voxprofile import train as tr
from voxprofile import verifier as vf
from voxprofile.config import RunConfig, load_config
from voxprofile.errors import (
    ConfigError,
    NumericError,
    TrainingError,
    VoxProfileError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FS_CONFLICT = 3
EXIT_NUMERIC = 4

MANIFEST_NAME = "run_manifest.json"


class FilesystemConflict(Exception):
    pass


def _prepare_out_dir(out_dir: str | Path, force: bool) -> Path:
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise FilesystemConflict(
            f"output directory {out} exists and is not empty (use --force)"
        )
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, stage: str, cfg: RunConfig, artifacts: list[str], status: str) -> None:
    path = out / MANIFEST_NAME
    doc = {
        "format_version": 1,
        "tool_version": voxprofile.__version__,
        "backend": voxprofile.backend_name(),
        "config_sha256": cfg.sha256(),
        "config": cfg.to_json_dict(),
        "stage": stage,
        "status": status,
        "artifacts": sorted(artifacts),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _apply_seed_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    from voxprofile.config import config_from_dict

    doc = cfg.to_json_dict()
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--seed-override expects name=value, got {item!r}")
        name, _, value = item.partition("=")
        if not name.endswith("_seed"):
            raise ConfigError(f"--seed-override may only set *_seed fields, got {name!r}")
        if name not in doc:
            raise ConfigError(f"unknown seed field {name!r}")
        try:
            doc[name] = int(value)
        except ValueError as exc:
            raise ConfigError(f"seed override {name!r} needs an integer") from exc
    return config_from_dict(doc)


def _load_corpus_checked(corpus_dir: str | Path) -> cp.Corpus:
    corpus = cp.load_corpus(corpus_dir)
    if corpus.split is None:
        raise ConfigError(f"corpus in {corpus_dir} carries no train/held-out split")
    return corpus


# ---------------------------------------------------------------------------
# commands


def cmd_gen_corpus(args) -> int:
    cfg = _apply_seed_overrides(load_config(args.config), args.seed_override)
    out = _prepare_out_dir(args.out, args.force)
    artifacts = ["corpus.json"] + [
        f"utt_{i:05d}.bin" for i in range(cfg.n_speakers * cfg.utts_per_speaker)
    ]
    _write_manifest(out, "gen-corpus", cfg, artifacts, "running")
    corpus = cp.generate_corpus(
        cfg.n_speakers, cfg.utts_per_speaker, cfg.corpus_seed, cfg.corpus_config()
    )
    cp.split_speakers(corpus, cfg.held_out_fraction, cfg.split_seed)
    cp.save_corpus(corpus, out)
    _write_manifest(out, "gen-corpus", cfg, artifacts, "complete")
    print(f"corpus written to {out} ({len(corpus.utterances)} utterances)")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _apply_seed_overrides(load_config(args.config), args.seed_override)
    corpus = _load_corpus_checked(args.corpus)
    out = _prepare_out_dir(args.out, args.force or args.resume is not None)
    artifacts = ["checkpoint.json", "loss_history.csv"]
    _write_manifest(out, "train", cfg, artifacts, "running")
    try:
        result = tr.train_model(
            corpus, cfg, out_dir=out, resume_from=args.resume, log_every=args.log_every
        )
    except (TrainingError, NumericError):
        # periodic epoch checkpoints in out/ remain the last good state
        _write_manifest(out, "train", cfg, artifacts, "failed")
        raise
    tr.write_history_csv(result.history, out / "loss_history.csv")
    if result.checkpoint_path is None:
        tr.save_training_checkpoint(
            out / "checkpoint.json", cfg, result.params, result.opt,
            result.steps_done, result.eps_rng,
        )
    _write_manifest(out, "train", cfg, artifacts, "complete")
    print(f"trained {cfg.variant} for {result.steps_done} steps -> {out}")
    return EXIT_OK


def _synth_write_frames(out: Path, tag: str, frames: np.ndarray) -> str:
    name = f"decoded_{tag}.bin"
    cp.write_frames_bin(out / name, frames)
    return name


def cmd_synthesize(args) -> int:
    cfg, params, _ = tr.load_model_checkpoint(args.checkpoint)
    out = _prepare_out_dir(args.out, args.force)
    content_ids = [int(x) for x in (args.content_ids or "0").split(",")]
    records = []
    files = []

    if args.mode in ("encode", "interpolate") and args.corpus is None:
        raise ConfigError(f"mode={args.mode} requires --corpus")

    if args.mode == "prior":
        rng = np.random.default_rng(np.random.SeedSequence([int(args.seed), 10]))
        for i in range(args.count):
            p = prof.sample_prior(rng, cfg.latent_dim, seed_label=int(args.seed))
            records.append(p)
    elif args.mode == "encode":
        if args.utterances is None:
            raise ConfigError("--utterances is required for mode=encode")
        corpus = _load_corpus_checked(args.corpus)
        for idx in (int(x) for x in args.utterances.split(",")):
            p = prof.encode_profile(params, corpus.utterances[idx], utterance_ref=idx)
            records.append(p)
    else:  # interpolate
        if args.utterances is None or len(args.utterances.split(",")) != 2:
            raise ConfigError("mode=interpolate needs --utterances i,j (two references)")
        corpus = _load_corpus_checked(args.corpus)
        i, j = (int(x) for x in args.utterances.split(","))
        z1 = prof.encode_profile(params, corpus.utterances[i], utterance_ref=i).z
        z2 = prof.encode_profile(params, corpus.utterances[j], utterance_ref=j).z
        ws = [float(args.w)] if args.w is not None else list(cfg.interpolation_grid)
        for w in ws:
            records.append(prof.interpolate(z1, z2, w, refs=(i, j)))

    for k, p in enumerate(records):
        for content in content_ids:
            frames = mdl.decode(params, p.z, content)
            files.append(_synth_write_frames(out, f"{k:04d}_c{content}", frames))
    profile_doc = {
        "format_version": 1,
        "checkpoint": str(args.checkpoint),
        "mode": args.mode,
        "profiles": [p.to_json_dict() for p in records],
        "decoded_files": files,
    }
    reporting.write_json(profile_doc, out / "profiles.json")
    print(f"wrote {len(records)} profiles and {len(files)} decoded files to {out}")
    return EXIT_OK


def _parse_checkpoint_args(items: list[str]) -> dict[str, Path]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--checkpoints expects variant=path, got {item!r}")
        variant, _, path = item.partition("=")
        if variant not in mdl.VARIANTS:
            raise ConfigError(f"unknown variant {variant!r} in --checkpoints")
        out[variant] = Path(path)
    missing = [v for v in mdl.VARIANTS if v not in out]
    if missing:
        raise ConfigError(f"missing checkpoint(s) for: {', '.join(missing)}")
    return out


def cmd_eval(args) -> int:
    cfg = _apply_seed_overrides(load_config(args.config), args.seed_override)
    corpus = _load_corpus_checked(args.corpus)
    paths = _parse_checkpoint_args(args.checkpoints)
    systems = {}
    for variant, path in paths.items():
        sys_cfg, params, _ = tr.load_model_checkpoint(path)
        if sys_cfg.variant != variant:
            raise ConfigError(
                f"checkpoint {path} was trained as {sys_cfg.variant!r}, "
                f"passed as {variant!r}"
            )
        systems[variant] = params
    out = _prepare_out_dir(args.out, args.force)

    verifier = vf.train_verifier(
        corpus, cfg.verifier_seed,
        vf.VerifierConfig(feature_dim=cfg.feature_dim, epochs=cfg.verifier_epochs),
    )
    content_probe = pb.train_content_probe(
        corpus, cfg.probe_seed, pb.ProbeConfig(epochs=cfg.probe_epochs)
    )
    report, raw_dumps = reporting.run_full_eval(systems, corpus, verifier, content_probe, cfg)
    written = reporting.write_eval_outputs(report, raw_dumps, out)
    _write_manifest(out, "eval", cfg, [str(p.relative_to(out)) for p in written], "complete")
    print(f"eval report written to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    eval_dir = Path(args.eval_dir)
    report_path = eval_dir / "report.json"
    if not report_path.is_file():
        raise ConfigError(f"no report.json in {eval_dir}")
    report = json.loads(report_path.read_text())
    out = Path(args.out) if args.out else eval_dir
    out.mkdir(parents=True, exist_ok=True)

    grid = report["similarity"]["grid"]
    curves = report["similarity"]["curves"]
    svgplot.write_similarity_svg(out / "similarity.svg", grid, curves)

    pkeys = report["far"]["percentiles"]
    print(f"{'system':24s} " + " ".join(f"p{p:>6}" for p in pkeys))
    for system in report["systems"]:
        norm = report["far"]["normalized_median"][system]
        cells = " ".join(
            "  n/a " if norm[p] is None else f"{norm[p]:6.3f}" for p in pkeys
        )
        print(f"{system:24s} {cells}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxprofile",
        description="Generative speaker-profile modeling and evaluation.",
    )
    parser.add_argument("--version", action="version", version=voxprofile.__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate the synthetic corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--seed-override", action="append", metavar="NAME=INT")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="train one system variant")
    p.add_argument("--config", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--resume", default=None, metavar="CHECKPOINT")
    p.add_argument("--log-every", type=int, default=0)
    p.add_argument("--seed-override", action="append", metavar="NAME=INT")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synthesize", help="create synthetic profiles and decode them")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", required=True, choices=("prior", "interpolate", "encode"))
    p.add_argument("--out", required=True)
    p.add_argument("--corpus", default=None)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--utterances", default=None, metavar="I,J")
    p.add_argument("--w", type=float, default=None)
    p.add_argument("--content-ids", default=None, metavar="C0,C1")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("eval", help="run the full evaluation over all variants")
    p.add_argument("--config", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoints", required=True, nargs="+", metavar="VARIANT=PATH")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--seed-override", action="append", metavar="NAME=INT")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="re-render tables and plots from an eval directory")
    p.add_argument("--eval-dir", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except FilesystemConflict as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FS_CONFLICT
    except (TrainingError, NumericError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except VoxProfileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FS_CONFLICT


if __name__ == "__main__":
    sys.exit(main())
