"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line (run with -s to see them live).

The heavy fixtures train the four system variants over five training seeds
on the default 64-speaker corpus, sharing one verifier and one content
probe; everything downstream reuses those checkpoints. Criterion wall-time
budgets are asserted alongside the substance.
"""

import json
import time

import numpy as np
import pytest

from voxprofile import cli
from voxprofile import corpus as cp
from voxprofile import metrics as mt
from voxprofile import model as mdl
from voxprofile import probe as pb
from voxprofile import reporting
from voxprofile import sampler as smp
from voxprofile import train as tr
from voxprofile import verifier as vf
from voxprofile.config import RunConfig, config_for_variant, save_config
from voxprofile.gradcheck import grad_check

TRAIN_SEEDS = (1, 2, 3, 4, 5)
CORPUS_SEED = 100
SPLIT_SEED = 101
VERIFIER_SEED = 500
PROBE_SEED = 600
EVAL_SEED = 900

PERCENTILES = (60.0, 70.0, 80.0)
PROFILE_COUNTS = (1, 50, 100)
GRID = tuple(round(0.1 * i, 1) for i in range(11))

VARIANT_ORDER = ("baseline_lookup", "vae", "vae_triplet", "vae_triplet_shuffle")


def announce(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {number} ({name}): {status}  {detail}")


def base_config(variant: str, train_seed: int) -> RunConfig:
    return config_for_variant(
        variant,
        corpus_seed=CORPUS_SEED,
        split_seed=SPLIT_SEED,
        train_seed=train_seed,
        eval_seed=EVAL_SEED,
        verifier_seed=VERIFIER_SEED,
        probe_seed=PROBE_SEED,
    )


@pytest.fixture(scope="session")
def default_corpus():
    cfg = base_config("vae", 1)
    corpus = cp.generate_corpus(
        cfg.n_speakers, cfg.utts_per_speaker, cfg.corpus_seed, cfg.corpus_config()
    )
    return cp.split_speakers(corpus, cfg.held_out_fraction, cfg.split_seed)


@pytest.fixture(scope="session")
def trained_systems(default_corpus):
    """{train_seed: {variant: ModelParams}} plus the total training wall time."""
    t0 = time.perf_counter()
    systems: dict[int, dict[str, mdl.ModelParams]] = {}
    for seed in TRAIN_SEEDS:
        systems[seed] = {}
        for variant in VARIANT_ORDER:
            cfg = base_config(variant, seed)
            res = tr.train_model(default_corpus, cfg)
            systems[seed][variant] = res.params
            print(
                f"[acceptance] trained {variant} seed {seed} "
                f"({res.steps_done} steps, l1 {res.history[-1].l1:.3f})",
                flush=True,
            )
    return systems, time.perf_counter() - t0


@pytest.fixture(scope="session")
def judges(default_corpus):
    verifier = vf.train_verifier(default_corpus, VERIFIER_SEED)
    content_probe = pb.train_content_probe(default_corpus, PROBE_SEED)
    return verifier, content_probe


@pytest.fixture(scope="session")
def eval_results(default_corpus, trained_systems, judges):
    """Per training seed: per-eval-seed normalized FAR and intelligibility
    tables plus their medians, and the disentanglement probes."""
    systems, train_wall = trained_systems
    verifier, content_probe = judges
    t0 = time.perf_counter()
    ecfg = mt.EvalConfig(
        percentiles=PERCENTILES,
        profile_counts=PROFILE_COUNTS,
        eval_seeds=(0, 1, 2, 3, 4),
        base_seed=EVAL_SEED,
    )
    thresholds, genuine = mt.calibrate_thresholds(verifier, default_corpus, PERCENTILES)

    out: dict[int, dict] = {}
    for seed in TRAIN_SEEDS:
        handles = {v: mt.SystemHandle(v, p) for v, p in systems[seed].items()}
        far_norm_seeds = []
        far_raw_seeds = []
        intel_norm_seeds = []
        intel_raw_seeds = []
        for es in ecfg.eval_seeds:
            far_raw = {}
            intel_raw = {}
            for v, h in handles.items():
                far, _ = mt.eval_distinctiveness(h, verifier, thresholds, ecfg, es)
                far_raw[v] = far
                intel_raw[v] = mt.eval_intelligibility_proxy(h, content_probe, ecfg, es)
            far_norm_seeds.append(mt.normalize_cells(far_raw, "baseline_lookup")[0])
            intel_norm_seeds.append(mt.normalize_cells(intel_raw, "baseline_lookup")[0])
            far_raw_seeds.append(far_raw)
            intel_raw_seeds.append(intel_raw)

        def med_table(per_seed_tables, keys):
            table = {}
            for v in handles:
                table[v] = {}
                for k in keys:
                    vals = [t[v][k] for t in per_seed_tables]
                    defined = [x for x in vals if x is not None]
                    table[v][k] = float(np.median(defined)) if defined else None
            return table

        disent = {
            v: mt.disentanglement_probe(handles[v], default_corpus, seed=EVAL_SEED)
            for v in ("vae_triplet", "vae_triplet_shuffle")
        }
        out[seed] = {
            "far_norm": med_table(far_norm_seeds, list(PERCENTILES)),
            "far_raw": med_table(far_raw_seeds, list(PERCENTILES)),
            "intel_norm": med_table(intel_norm_seeds, list(PROFILE_COUNTS)),
            "intel_raw": med_table(intel_raw_seeds, list(PROFILE_COUNTS)),
            "disent": disent,
        }
    wall = time.perf_counter() - t0
    return {
        "per_seed": out,
        "thresholds": thresholds,
        "train_wall": train_wall,
        "eval_wall": wall,
        "verifier": verifier,
        "content_probe": content_probe,
    }


# ---------------------------------------------------------------------------
# criterion 1: gradient correctness


def test_criterion_1_gradient_correctness():
    t0 = time.perf_counter()
    ccfg = cp.CorpusConfig(
        n_speakers=6, utts_per_speaker=4, frames_per_utterance=6,
        feature_dim=8, voice_dim=3, content_count=4, noise_sigma=0.1,
    )
    corpus = cp.generate_corpus(6, 4, seed=7, config=ccfg)
    cp.split_speakers(corpus, 0.2, seed=8)
    mcfg = mdl.ModelConfig(
        feature_dim=8, frames_per_utterance=6, content_count=4,
        latent_dim=2, enc_hidden=(6,), dec_hidden=(8,),
    )
    weights = mdl.LossWeights(beta_kl=0.05, lambda_triplet=1.0)
    worst = 0.0
    for seed in range(10):
        params = mdl.init_model(mcfg, corpus.train_speakers, seed=seed)
        plan = smp.make_epoch_plan(corpus, epoch=0, base_seed=seed, shuffle_on=True)
        eps_rng = np.random.default_rng(seed)
        batch = tr._examples_for(
            corpus, plan.entries[:6], mcfg.latent_dim, eps_rng, "vae_triplet_shuffle"
        )
        items = mdl.param_items(params)
        names = mdl.trainable_names(params, "vae_triplet_shuffle")
        sub = {k: items[k] for k in names}

        def f(_ps):
            loss, grads = mdl.batch_loss_and_grads(
                params, batch, weights, "vae_triplet_shuffle"
            )
            return loss, {k: grads[k] for k in names}

        err = grad_check(f, sub, n_coords=100, h=1e-5, rng=np.random.default_rng(seed))
        worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 60.0
    announce(1, "gradient correctness", ok, f"max rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-4
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# criterion 2: exact unit suites


def test_criterion_2_closed_form_suites():
    t0 = time.perf_counter()
    ok = True
    # reparameterization arithmetic
    ok &= np.array_equal(
        mdl.reparameterize([1.0, 2.0], [0.5, 1.0], [2.0, -1.0]), np.array([2.0, 1.0])
    )
    ok &= np.array_equal(mdl.reparameterize([3.0], [2.0], [0.0]), np.array([3.0]))
    rng = np.random.default_rng(0)
    mu = rng.standard_normal(32)
    sigma = np.abs(rng.standard_normal(32)) + 0.05
    eps = rng.standard_normal(32)
    ok &= np.array_equal(mdl.reparameterize(mu, sigma, eps), mu + sigma * eps)
    # triplet margin cases
    tc = mdl.TripletConfig(0.5)
    za = np.array([1.0, 0.0])
    zn = np.array([0.0, 1.0])
    ok &= mdl.triplet_loss(za, za, za + np.array([1.0, 0.0]), tc) == 0.0
    ok &= mdl.triplet_loss(za, za, za, tc) == 0.5
    ok &= mdl.triplet_loss(np.zeros(2), np.array([1.0, 0.0]), zn, tc) == 0.5
    # KL closed forms
    ok &= mdl.kl_to_standard_normal(np.zeros(8), np.ones(8)) == 0.0
    ok &= abs(mdl.kl_to_standard_normal([1.0], [1.0]) - 0.5) < 1e-15
    elapsed = time.perf_counter() - t0
    announce(2, "closed-form unit suites", bool(ok), f"{elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------------------
# criterion 3: FAR ordering


def chain_holds(t: dict) -> bool:
    for p in PERCENTILES:
        vts = t["vae_triplet_shuffle"][p]
        vt = t["vae_triplet"][p]
        v = t["vae"][p]
        base = t["baseline_lookup"][p]
        if None in (vts, vt, v, base):
            return False
        if not (vts <= vt <= v < base):
            return False
    return True


def test_criterion_3_far_ordering(eval_results):
    per_seed = eval_results["per_seed"]
    train_wall = eval_results["train_wall"]
    eval_wall = eval_results["eval_wall"]

    median_table = {
        v: {
            p: float(np.median([per_seed[s]["far_norm"][v][p] for s in TRAIN_SEEDS]))
            for p in PERCENTILES
        }
        for v in VARIANT_ORDER
    }
    median_ok = chain_holds(median_table)
    seed_hits = sum(1 for s in TRAIN_SEEDS if chain_holds(per_seed[s]["far_norm"]))
    endpoint_hits = sum(
        1
        for s in TRAIN_SEEDS
        if all(
            per_seed[s]["far_norm"]["vae_triplet_shuffle"][p] is not None
            and per_seed[s]["far_norm"]["vae_triplet_shuffle"][p] < 1.0
            for p in PERCENTILES
        )
    )
    runtime = train_wall + eval_wall
    ok = median_ok and seed_hits >= 3 and endpoint_hits == 5 and runtime < 7200
    rows = {
        v: [round(median_table[v][p], 4) for p in PERCENTILES] for v in VARIANT_ORDER
    }
    announce(
        3,
        "distinctiveness ordering",
        ok,
        f"median normalized FAR {rows}; chain in {seed_hits}/5 seeds, "
        f"endpoint in {endpoint_hits}/5, runtime {runtime/60:.1f} min",
    )
    assert median_ok, median_table
    assert seed_hits >= 3
    assert endpoint_hits == 5
    assert runtime < 7200


# ---------------------------------------------------------------------------
# criterion 4: interpolation smoothness


def curve_stats(vals):
    diffs = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    max_drop = max(max(diffs), 0.0)       # largest fall walking w: 1 -> 0
    max_rise = max(-min(diffs), 0.0)      # largest rise walking w: 1 -> 0
    return max_drop, max_rise


def test_criterion_4_interpolation_smoothness(default_corpus, trained_systems, judges):
    t0 = time.perf_counter()
    systems, _ = trained_systems
    verifier, _ = judges
    seed0 = TRAIN_SEEDS[0]
    proposed = mt.SystemHandle("vae_triplet_shuffle", systems[seed0]["vae_triplet_shuffle"])
    baseline = mt.SystemHandle("baseline_lookup", systems[seed0]["baseline_lookup"])
    pairs = mt.pick_cross_speaker_pairs(default_corpus, 10, seed=EVAL_SEED)

    prop_drops = []
    prop_rises = []
    base_drops = []
    for u1, u2 in pairs:
        curve, _ = mt.eval_similarity_curve(proposed, verifier, default_corpus, u1, u2, GRID)
        d, r = curve_stats([s for _, s in curve])
        prop_drops.append(d)
        prop_rises.append(r)
        curve, _ = mt.eval_similarity_curve(baseline, verifier, default_corpus, u1, u2, GRID)
        d, _ = curve_stats([s for _, s in curve])
        base_drops.append(d)

    prop_max = max(prop_drops)
    smooth_ok = prop_max < 0.35
    monotone_hits = sum(1 for r in prop_rises if r <= 0.1)
    baseline_hits = sum(1 for d in base_drops if d >= prop_max)
    elapsed = time.perf_counter() - t0
    ok = smooth_ok and monotone_hits >= 8 and baseline_hits >= 6 and elapsed < 900
    announce(
        4,
        "interpolation smoothness",
        ok,
        f"proposed max drop {prop_max:.3f}, monotone {monotone_hits}/10, "
        f"baseline steeper in {baseline_hits}/10, {elapsed:.0f}s",
    )
    assert smooth_ok
    assert monotone_hits >= 8
    assert baseline_hits >= 6
    assert elapsed < 900


# ---------------------------------------------------------------------------
# criterion 5: intelligibility direction


def test_criterion_5_intelligibility_direction(eval_results):
    per_seed = eval_results["per_seed"]
    t0 = time.perf_counter()
    ok = True
    details = []
    medians = {}
    for variant in ("vae_triplet", "vae_triplet_shuffle"):
        medians[variant] = {}
        for k in PROFILE_COUNTS:
            norm_vals = [per_seed[s]["intel_norm"][variant][k] for s in TRAIN_SEEDS]
            defined = [v for v in norm_vals if v is not None]
            if defined:
                m = float(np.median(defined))
                medians[variant][k] = m
                if m > 1.0:
                    ok = False
                    details.append(f"{variant}@{k}: normalized {m:.3f} > 1")
            else:
                # zero baseline cells: fall back to the raw comparison
                medians[variant][k] = None
                raw_sys = float(
                    np.median([per_seed[s]["intel_raw"][variant][k] for s in TRAIN_SEEDS])
                )
                raw_base = float(
                    np.median(
                        [per_seed[s]["intel_raw"]["baseline_lookup"][k] for s in TRAIN_SEEDS]
                    )
                )
                if raw_sys > raw_base:
                    ok = False
                    details.append(
                        f"{variant}@{k}: raw {raw_sys:.4f} > baseline {raw_base:.4f}"
                    )
    for k in PROFILE_COUNTS:
        a, b = medians["vae_triplet"][k], medians["vae_triplet_shuffle"][k]
        if a is not None and b is not None:
            diff = abs(a - b)
        else:
            raw = lambda v: float(
                np.median([per_seed[s]["intel_raw"][v][k] for s in TRAIN_SEEDS])
            )
            base = float(
                np.median(
                    [per_seed[s]["intel_raw"]["baseline_lookup"][k] for s in TRAIN_SEEDS]
                )
            )
            if base > 0:
                diff = abs(raw("vae_triplet") - raw("vae_triplet_shuffle")) / base
            else:
                diff = 0.0 if raw("vae_triplet") == raw("vae_triplet_shuffle") else float("inf")
        if not (diff < 0.05):
            ok = False
            details.append(f"triplet variants differ by {diff} at count {k}")
    elapsed = time.perf_counter() - t0
    announce(
        5,
        "intelligibility direction",
        ok,
        f"medians {medians}; {'; '.join(details) if details else 'all within bounds'}"
        f", {elapsed:.0f}s",
    )
    assert ok, details
    assert elapsed < 1800


# ---------------------------------------------------------------------------
# criterion 6: disentanglement


def test_criterion_6_shuffle_disentanglement(eval_results):
    per_seed = eval_results["per_seed"]
    r2_margins = []
    acc_margins = []
    for s in TRAIN_SEEDS:
        d_on = per_seed[s]["disent"]["vae_triplet_shuffle"]
        d_off = per_seed[s]["disent"]["vae_triplet"]
        r2_margins.append(d_on.speaker_r2 - d_off.speaker_r2)
        acc_margins.append(d_off.content_accuracy - d_on.content_accuracy)
    r2_med = float(np.median(r2_margins))
    acc_med = float(np.median(acc_margins))
    ok = r2_med > 0.0 and acc_med > 0.0
    announce(
        6,
        "shuffle disentanglement",
        ok,
        f"median speaker-R2 margin {r2_med:+.4f}, "
        f"median content-accuracy margin {acc_med:+.4f} "
        f"(per-seed r2 {['%+.4f' % m for m in r2_margins]}, "
        f"acc {['%+.4f' % m for m in acc_margins]})",
    )
    assert r2_med > 0.0
    assert acc_med > 0.0


# ---------------------------------------------------------------------------
# criterion 7: determinism


def smoke_config(variant="vae_triplet_shuffle"):
    return config_for_variant(
        variant,
        corpus_seed=61, split_seed=62, train_seed=63, eval_seed=64,
        verifier_seed=65, probe_seed=66,
        n_speakers=8, utts_per_speaker=6, frames_per_utterance=8,
        feature_dim=8, voice_dim=3, content_count=4,
        latent_dim=5, enc_hidden=(8,), dec_hidden=(10,),
        train_steps=10, batch_size=6,
        n_synthetic_profiles=12, profile_counts=(1, 3), eval_seeds=2,
        verifier_epochs=3, probe_epochs=60, held_out_fraction=0.25,
    )


def test_criterion_7_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg_path = tmp_path / "smoke.json"
    save_config(smoke_config(), cfg_path)

    for out in ("c1", "c2"):
        assert cli.main(["gen-corpus", "--config", str(cfg_path), "--out", str(tmp_path / out)]) == 0
    gen_ok = all(
        (tmp_path / "c1" / f.name).read_bytes() == f.read_bytes()
        for f in sorted((tmp_path / "c2").iterdir())
    )

    for out in ("t1", "t2"):
        assert cli.main([
            "train", "--config", str(cfg_path), "--corpus", str(tmp_path / "c1"),
            "--out", str(tmp_path / out),
        ]) == 0
    train_ok = (
        (tmp_path / "t1" / "checkpoint.json").read_bytes()
        == (tmp_path / "t2" / "checkpoint.json").read_bytes()
        and (tmp_path / "t1" / "loss_history.csv").read_bytes()
        == (tmp_path / "t2" / "loss_history.csv").read_bytes()
    )

    # resume equivalence, mid-epoch interruption included
    corpus = cp.load_corpus(tmp_path / "c1")
    cfg = smoke_config()
    full = tr.train_model(corpus, cfg)
    tr.train_model(corpus, cfg, out_dir=tmp_path / "part", session_steps=7)
    resumed = tr.train_model(corpus, cfg, resume_from=tmp_path / "part" / "checkpoint.json")
    resume_ok = all(
        np.array_equal(arr, mdl.param_items(resumed.params)[name])
        for name, arr in mdl.param_items(full.params).items()
    )

    checkpoints = {}
    for variant in VARIANT_ORDER:
        vcfg_path = tmp_path / f"cfg_{variant}.json"
        save_config(smoke_config(variant), vcfg_path)
        out = tmp_path / f"run_{variant}"
        assert cli.main([
            "train", "--config", str(vcfg_path), "--corpus", str(tmp_path / "c1"),
            "--out", str(out),
        ]) == 0
        checkpoints[variant] = out / "checkpoint.json"
    for out in ("e1", "e2"):
        args = [
            "eval", "--config", str(cfg_path), "--corpus", str(tmp_path / "c1"),
            "--out", str(tmp_path / out), "--checkpoints",
        ] + [f"{v}={p}" for v, p in checkpoints.items()]
        assert cli.main(args) == 0
    eval_ok = (
        (tmp_path / "e1" / "report.json").read_bytes()
        == (tmp_path / "e2" / "report.json").read_bytes()
    )

    elapsed = time.perf_counter() - t0
    ok = gen_ok and train_ok and resume_ok and eval_ok
    announce(
        7,
        "byte determinism",
        ok,
        f"gen {gen_ok}, train {train_ok}, resume {resume_ok}, eval {eval_ok}, "
        f"{elapsed:.0f}s",
    )
    assert ok


# ---------------------------------------------------------------------------
# criterion 8: verifier sanity and independent recomputation


def _recompute_far_pure_python(scores_text: str, threshold: float) -> float:
    scores = [float(line) for line in scores_text.split()]
    hits = 0
    for s in scores:
        if s >= threshold:
            hits += 1
    return hits / len(scores)


def _recompute_cosine_pure_python(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = sum(x * x for x in a) ** 0.5
    nb = sum(y * y for y in b) ** 0.5
    return dot / (na * nb)


def test_criterion_8_verifier_and_recomputation(
    default_corpus, trained_systems, judges, eval_results, tmp_path
):
    systems, _ = trained_systems
    verifier, content_probe = judges
    eer_ok = verifier.eer < 0.10

    run_cfg = base_config("vae_triplet_shuffle", TRAIN_SEEDS[0])
    report, raw = reporting.run_full_eval(
        systems[TRAIN_SEEDS[0]], default_corpus, verifier, content_probe, run_cfg
    )
    reporting.write_eval_outputs(report, raw, tmp_path)

    report_doc = json.loads((tmp_path / "report.json").read_text())
    thresholds = {p: float(t) for p, t in report_doc["thresholds"].items()}
    worst = 0.0
    for system in report_doc["systems"]:
        for es, cells in report_doc["far"]["per_seed_raw"][system].items():
            text = (tmp_path / "raw" / f"far_scores_{system}_seed{es}.csv").read_text()
            for p, want in cells.items():
                got = _recompute_far_pure_python(text, thresholds[p])
                worst = max(worst, abs(got - want))
    far_ok = worst < 1e-12

    sim_worst = 0.0
    for system in report_doc["systems"]:
        raw_doc = json.loads((tmp_path / "raw" / f"similarity_{system}.json").read_text())
        endpoint = raw_doc["endpoint_embedding"]
        for i, point in enumerate(raw_doc["points"]):
            got = _recompute_cosine_pure_python(point["embedding"], endpoint)
            want = report_doc["similarity"]["curves"][system][i]
            sim_worst = max(sim_worst, abs(got - want))
    sim_ok = sim_worst < 1e-12

    ok = eer_ok and far_ok and sim_ok
    announce(
        8,
        "verifier sanity and recomputation",
        ok,
        f"EER {verifier.eer:.4f}, FAR recompute err {worst:.1e}, "
        f"similarity recompute err {sim_worst:.1e}",
    )
    assert eer_ok
    assert far_ok
    assert sim_ok
