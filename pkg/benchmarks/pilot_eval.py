"""Calibration pilot: train all variants once, print every metric."""

import sys
import time

import numpy as np

from voxprofile import corpus as cp
from voxprofile import metrics as mt
from voxprofile import probe as pb
from voxprofile import train as tr
from voxprofile import verifier as vf
from voxprofile.config import config_for_variant

STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 1920
TRAIN_SEED = int(sys.argv[2]) if len(sys.argv) > 2 else 1

c = cp.generate_corpus(64, 20, seed=100)
cp.split_speakers(c, 0.2, seed=101)

systems = {}
for variant in ("baseline_lookup", "vae", "vae_triplet", "vae_triplet_shuffle"):
    cfg = config_for_variant(variant, train_steps=STEPS, train_seed=TRAIN_SEED,
                             corpus_seed=100, split_seed=101)
    t0 = time.perf_counter()
    res = tr.train_model(c, cfg)
    h = res.history
    print(f"{variant:22s} {time.perf_counter()-t0:6.1f}s  "
          f"l1 {np.mean([r.l1 for r in h[:20]]):.3f} -> {np.mean([r.l1 for r in h[-20:]]):.3f}  "
          f"kl_end {np.mean([r.kl for r in h[-20:]]):.2f}  "
          f"trip_end {np.mean([r.triplet for r in h[-20:]]):.4f}")
    systems[variant] = mt.SystemHandle(variant, res.params)

ver = vf.train_verifier(c, seed=500)
print(f"verifier EER {ver.eer:.4f}")
probe = pb.train_content_probe(c, seed=600)
print(f"probe acc {probe.holdout_accuracy:.4f}")

ecfg = mt.EvalConfig(base_seed=900)
thresholds, genuine = mt.calibrate_thresholds(ver, c, ecfg.percentiles)
print("thresholds:", {p: round(t, 4) for p, t in thresholds.items()},
      " genuine median", round(float(np.median(genuine)), 4))

print("\n--- FAR raw (3 eval seeds) ---")
for variant, sys_h in systems.items():
    rows = []
    for es in range(3):
        far, _ = mt.eval_distinctiveness(sys_h, ver, thresholds, ecfg, es)
        rows.append(far)
    med = {p: float(np.median([r[p] for r in rows])) for p in thresholds}
    print(f"{variant:22s}", {p: f"{v:.5f}" for p, v in med.items()})

print("\n--- intelligibility raw (3 eval seeds, counts 1/50/100) ---")
for variant, sys_h in systems.items():
    rows = []
    for es in range(3):
        rows.append(mt.eval_intelligibility_proxy(sys_h, probe, ecfg, es))
    med = {k: float(np.median([r[k] for r in rows])) for k in rows[0]}
    print(f"{variant:22s}", {k: f"{v:.5f}" for k, v in med.items()})

print("\n--- disentanglement ---")
for variant, sys_h in systems.items():
    d = mt.disentanglement_probe(sys_h, c, seed=700)
    print(f"{variant:22s} speaker_r2 {d.speaker_r2:.4f}  content_acc {d.content_accuracy:.4f}"
          f"  collapsed {d.collapsed}")

print("\n--- similarity curves (2 pairs) ---")
pairs = mt.pick_cross_speaker_pairs(c, 2, seed=800)
for variant, sys_h in systems.items():
    for pair in pairs:
        curve, _ = mt.eval_similarity_curve(sys_h, ver, c, pair[0], pair[1],
                                            ecfg.interpolation_grid)
        vals = " ".join(f"{s:+.3f}" for _, s in curve)
        drops = [curve[i + 1][1] - curve[i][1] for i in range(len(curve) - 1)]
        print(f"{variant:22s} pair{pair}  {vals}  maxdrop {min(drops):+.3f}")
