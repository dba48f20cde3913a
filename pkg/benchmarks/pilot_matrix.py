"""Targeted calibration: longer training, amplitude, decoder depth."""

import sys
import time

import numpy as np

from voxprofile import corpus as cp
from voxprofile import metrics as mt
from voxprofile import probe as pb
from voxprofile import train as tr
from voxprofile import verifier as vf
from voxprofile.config import config_for_variant

STEPS = int(sys.argv[1])
AMP = float(sys.argv[2])
DEC = tuple(int(x) for x in sys.argv[3].split(","))
SEED = int(sys.argv[4]) if len(sys.argv) > 4 else 1

ccfg = cp.CorpusConfig(content_amplitude=AMP)
c = cp.generate_corpus(64, 20, seed=100, config=ccfg)
cp.split_speakers(c, 0.2, seed=101)

print(f"=== steps={STEPS} amp={AMP} dec={DEC} train_seed={SEED}", flush=True)
systems = {}
for variant in ("baseline_lookup", "vae", "vae_triplet", "vae_triplet_shuffle"):
    cfg = config_for_variant(variant, train_steps=STEPS, train_seed=SEED,
                             corpus_seed=100, split_seed=101,
                             content_amplitude=AMP, dec_hidden=DEC)
    t0 = time.perf_counter()
    res = tr.train_model(c, cfg)
    h = res.history
    print(f"{variant:22s} {time.perf_counter()-t0:6.1f}s  "
          f"l1_end {np.mean([r.l1 for r in h[-20:]]):.4f}  "
          f"kl_end {np.mean([r.kl for r in h[-20:]]):.2f}", flush=True)
    systems[variant] = mt.SystemHandle(variant, res.params)

ver = vf.train_verifier(c, seed=500)
probe = pb.train_content_probe(c, seed=600)
print(f"verifier EER {ver.eer:.4f}  probe acc {probe.holdout_accuracy:.4f}", flush=True)

ecfg = mt.EvalConfig(base_seed=900)
thresholds, genuine = mt.calibrate_thresholds(ver, c, ecfg.percentiles)
print("thresholds:", {p: round(t, 5) for p, t in thresholds.items()})

for variant, sys_h in systems.items():
    rows = [mt.eval_distinctiveness(sys_h, ver, thresholds, ecfg, es)[0] for es in range(3)]
    med = {p: float(np.median([r[p] for r in rows])) for p in thresholds}
    intel = [mt.eval_intelligibility_proxy(sys_h, probe, ecfg, es) for es in range(3)]
    imed = {k: float(np.median([r[k] for r in intel])) for k in intel[0]}
    far_s = " ".join(f"{v:.5f}" for v in med.values())
    intel_s = " ".join(f"{v:.5f}" for v in imed.values())
    print(f"{variant:22s} FAR {far_s}  intel {intel_s}", flush=True)

for variant, sys_h in systems.items():
    d = mt.disentanglement_probe(sys_h, c, seed=700)
    print(f"{variant:22s} r2 {d.speaker_r2:.4f}  content_acc {d.content_accuracy:.4f}", flush=True)

pairs = mt.pick_cross_speaker_pairs(c, 10, seed=800)
for variant in ("baseline_lookup", "vae_triplet_shuffle"):
    sys_h = systems[variant]
    drops = []
    for pair in pairs:
        curve, _ = mt.eval_similarity_curve(sys_h, ver, c, pair[0], pair[1], ecfg.interpolation_grid)
        vals = [s for _, s in curve]
        # drop between adjacent grid points walking w upward
        dd = max(vals[i] - vals[i + 1] for i in range(len(vals) - 1))
        drops.append(dd)
    print(f"{variant:22s} maxdrop per pair: {' '.join(f'{d:+.3f}' for d in drops)}", flush=True)
