"""Full-evaluation orchestration and report emission.

One evaluation covers the four system variants with a shared verifier,
content probe, and threshold calibration. Each metric runs once per eval
seed; normalization happens within a seed (so the baseline row is exactly 1
wherever its raw cell is nonzero) and the report carries per-seed values,
medians, raw values, and zero-baseline flags. Outputs:

    report.json            every number, every seed, the config, the flags
    far_table.csv          normalized + raw FAR medians per system
    similarity_curve.csv   per-system similarity curves on the w grid
    similarity.svg         the same curves as a standalone plot
    raw/                   trial-level dumps for independent recomputation
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

import voxprofile
from voxprofile import metrics as mt
from voxprofile import model as mdl
from voxprofile import probe as pb
from voxprofile import svgplot
from voxprofile import verifier as vf
from voxprofile.config import RunConfig
from voxprofile.corpus import Corpus
from voxprofile.errors import EvaluationError

FORMAT_VERSION = 1


def _median_of_defined(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return float(np.median(np.asarray(vals, dtype=np.float64)))


def run_full_eval(
    systems: dict[str, mdl.ModelParams],
    corpus: Corpus,
    verifier: vf.VerifierParams,
    content_probe: pb.ContentProbe,
    run_cfg: RunConfig,
) -> tuple[dict, dict]:
    """Compute every metric; returns (report_doc, raw_dumps)."""
    missing = [v for v in mdl.VARIANTS if v not in systems]
    if missing:
        raise EvaluationError(f"missing system checkpoint(s): {', '.join(missing)}")

    handles = {name: mt.SystemHandle(name, params) for name, params in systems.items()}
    ecfg = mt.EvalConfig(
        n_synthetic_profiles=run_cfg.n_synthetic_profiles,
        percentiles=tuple(run_cfg.percentiles),
        interpolation_grid=tuple(run_cfg.interpolation_grid),
        profile_counts=tuple(run_cfg.profile_counts),
        eval_seeds=tuple(range(run_cfg.eval_seeds)),
        base_seed=run_cfg.eval_seed,
    )
    ecfg.validate()

    thresholds, genuine = mt.calibrate_thresholds(verifier, corpus, ecfg.percentiles)
    pkeys = [f"{p:g}" for p in ecfg.percentiles]

    far_raw: dict[str, dict] = {name: {} for name in handles}
    far_norm: dict[str, dict] = {name: {} for name in handles}
    intel_raw: dict[str, dict] = {name: {} for name in handles}
    intel_norm: dict[str, dict] = {name: {} for name in handles}
    far_scores_dump: dict[str, dict] = {name: {} for name in handles}
    zero_flags: dict[str, list] = {"far": [], "intelligibility": []}

    for seed in ecfg.eval_seeds:
        key = str(seed)
        seed_far = {}
        seed_intel = {}
        for name, handle in handles.items():
            far, scores = mt.eval_distinctiveness(handle, verifier, thresholds, ecfg, seed)
            seed_far[name] = {f"{p:g}": far[p] for p in far}
            far_scores_dump[name][key] = scores
            seed_intel[name] = {
                str(k): v
                for k, v in mt.eval_intelligibility_proxy(
                    handle, content_probe, ecfg, seed
                ).items()
            }
        norm_far, flags_far = mt.normalize_cells(seed_far, mt.BASELINE_SYSTEM)
        norm_intel, flags_intel = mt.normalize_cells(seed_intel, mt.BASELINE_SYSTEM)
        for cell in flags_far["zero_baseline_cells"]:
            zero_flags["far"].append({"eval_seed": seed, "cell": cell})
        for cell in flags_intel["zero_baseline_cells"]:
            zero_flags["intelligibility"].append({"eval_seed": seed, "cell": cell})
        for name in handles:
            far_raw[name][key] = seed_far[name]
            far_norm[name][key] = norm_far[name]
            intel_raw[name][key] = seed_intel[name]
            intel_norm[name][key] = norm_intel[name]

    seed_keys = [str(s) for s in ecfg.eval_seeds]
    far_raw_median = {
        name: {p: _median_of_defined(far_raw[name][s][p] for s in seed_keys) for p in pkeys}
        for name in handles
    }
    far_norm_median = {
        name: {p: _median_of_defined(far_norm[name][s][p] for s in seed_keys) for p in pkeys}
        for name in handles
    }
    count_keys = [str(k) for k in ecfg.profile_counts]
    intel_raw_median = {
        name: {k: _median_of_defined(intel_raw[name][s][k] for s in seed_keys) for k in count_keys}
        for name in handles
    }
    intel_norm_median = {
        name: {k: _median_of_defined(intel_norm[name][s][k] for s in seed_keys) for k in count_keys}
        for name in handles
    }

    pair = mt.pick_cross_speaker_pairs(corpus, 1, seed=run_cfg.eval_seed)[0]
    curves = {}
    similarity_raw = {}
    for name, handle in handles.items():
        curve, raw = mt.eval_similarity_curve(
            handle, verifier, corpus, pair[0], pair[1], ecfg.interpolation_grid
        )
        curves[name] = [score for _, score in curve]
        similarity_raw[name] = raw
    # idealized smooth transition: a straight line from the proposed system's
    # cross-speaker similarity at w=0 up to 1.0 at w=1
    anchor = curves["vae_triplet_shuffle"]
    grid_vals = [float(w) for w in ecfg.interpolation_grid]
    w0, w1 = grid_vals[0], grid_vals[-1]
    span = (w1 - w0) or 1.0
    curves["ideal"] = [
        anchor[0] + (1.0 - anchor[0]) * (w - w0) / span for w in grid_vals
    ]

    disent = {}
    for name, handle in handles.items():
        d = mt.disentanglement_probe(handle, corpus, seed=run_cfg.eval_seed)
        disent[name] = {
            "speaker_r2": d.speaker_r2,
            "content_accuracy": d.content_accuracy,
            "collapsed": d.collapsed,
        }

    natural_err = mt.natural_probe_error(
        content_probe, corpus, corpus.held_out_utterance_indices()
    )

    report = {
        "format_version": FORMAT_VERSION,
        "tool_version": voxprofile.__version__,
        "backend": voxprofile.backend_name(),
        "baseline_system": mt.BASELINE_SYSTEM,
        "systems": sorted(handles),
        "config": run_cfg.to_json_dict(),
        "thresholds": {f"{p:g}": t for p, t in thresholds.items()},
        "verifier": {
            "eer": verifier.eer,
            "held_out_speakers": verifier.held_out_speaker_ids,
            "genuine_pair_count": len(genuine),
        },
        "content_probe": {
            "holdout_accuracy": content_probe.holdout_accuracy,
            "natural_error": natural_err,
        },
        "far": {
            "percentiles": pkeys,
            "per_seed_raw": far_raw,
            "per_seed_normalized": far_norm,
            "raw_median": far_raw_median,
            "normalized_median": far_norm_median,
        },
        "intelligibility": {
            "profile_counts": count_keys,
            "per_seed_raw": intel_raw,
            "per_seed_normalized": intel_norm,
            "raw_median": intel_raw_median,
            "normalized_median": intel_norm_median,
        },
        "similarity": {
            "grid": [float(w) for w in ecfg.interpolation_grid],
            "pair": [int(pair[0]), int(pair[1])],
            "curves": curves,
            "baseline_interpolation_note": (
                "lookup-row interpolation is an artifact construction for "
                "comparison; the baseline defines no interpolation semantics"
            ),
        },
        "disentanglement": disent,
        "flags": zero_flags,
    }
    raw_dumps = {
        "genuine_scores": [float(s) for s in genuine],
        "far_scores": far_scores_dump,
        "similarity": similarity_raw,
    }
    return report, raw_dumps


def write_json(doc: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def write_eval_outputs(report: dict, raw_dumps: dict, out_dir: str | Path) -> list[Path]:
    """Write report.json, the CSV tables, the SVG, and the raw dumps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    report_path = out / "report.json"
    write_json(report, report_path)
    written.append(report_path)

    pkeys = report["far"]["percentiles"]
    lines = [
        "system,"
        + ",".join(f"normalized_p{p}" for p in pkeys)
        + ","
        + ",".join(f"raw_p{p}" for p in pkeys)
    ]
    for system in report["systems"]:
        norm = report["far"]["normalized_median"][system]
        raw = report["far"]["raw_median"][system]
        cells = [system]
        cells += ["" if norm[p] is None else repr(norm[p]) for p in pkeys]
        cells += ["" if raw[p] is None else repr(raw[p]) for p in pkeys]
        lines.append(",".join(cells))
    far_path = out / "far_table.csv"
    far_path.write_text("\n".join(lines) + "\n")
    written.append(far_path)

    grid = report["similarity"]["grid"]
    curve_names = sorted(report["similarity"]["curves"])
    lines = ["w," + ",".join(curve_names)]
    for i, w in enumerate(grid):
        row = [repr(float(w))]
        row += [repr(report["similarity"]["curves"][s][i]) for s in curve_names]
        lines.append(",".join(row))
    sim_path = out / "similarity_curve.csv"
    sim_path.write_text("\n".join(lines) + "\n")
    written.append(sim_path)

    svg_path = out / "similarity.svg"
    svgplot.write_similarity_svg(svg_path, grid, report["similarity"]["curves"])
    written.append(svg_path)

    raw_dir = out / "raw"
    raw_dir.mkdir(exist_ok=True)
    g_path = raw_dir / "genuine_scores.csv"
    g_path.write_text(
        "\n".join(repr(s) for s in raw_dumps["genuine_scores"]) + "\n"
    )
    written.append(g_path)
    for system, per_seed in raw_dumps["far_scores"].items():
        for seed, scores in per_seed.items():
            p = raw_dir / f"far_scores_{system}_seed{seed}.csv"
            p.write_text("\n".join(repr(float(s)) for s in scores) + "\n")
            written.append(p)
    for system, raw in raw_dumps["similarity"].items():
        p = raw_dir / f"similarity_{system}.json"
        write_json(raw, p)
        written.append(p)
    return written
