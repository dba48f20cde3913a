"""Trajectory of the shuffle purge: content accuracy and speaker R^2 of the
latent probe as training proceeds, shuffle on vs off."""

import sys
import tempfile
from pathlib import Path

from voxprofile import corpus as cp
from voxprofile import metrics as mt
from voxprofile import train as tr
from voxprofile.config import config_for_variant

BETA = float(sys.argv[1])
AMP = float(sys.argv[2])
TOTAL = int(sys.argv[3]) if len(sys.argv) > 3 else 15360
CHUNK = int(sys.argv[4]) if len(sys.argv) > 4 else 3840
SEED = int(sys.argv[5]) if len(sys.argv) > 5 else 1

c = cp.generate_corpus(64, 20, seed=100, config=cp.CorpusConfig(content_amplitude=AMP))
cp.split_speakers(c, 0.2, seed=101)
print(f"=== beta={BETA} amp={AMP} total={TOTAL} seed={SEED}", flush=True)

for variant in ("vae_triplet", "vae_triplet_shuffle"):
    cfg = config_for_variant(variant, train_steps=TOTAL, train_seed=SEED,
                             corpus_seed=100, split_seed=101,
                             beta_kl=BETA, content_amplitude=AMP)
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        resume = None
        done = 0
        while done < TOTAL:
            res = tr.train_model(c, cfg, out_dir=out, resume_from=resume,
                                 session_steps=CHUNK)
            done = res.steps_done
            resume = out / "checkpoint.json"
            d = mt.disentanglement_probe(
                mt.SystemHandle(variant, res.params), c, seed=700
            )
            l1 = sum(r.l1 for r in res.history[-20:]) / 20
            print(f"{variant:22s} step {done:6d}  l1 {l1:.4f}  "
                  f"r2 {d.speaker_r2:.4f}  content_acc {d.content_accuracy:.4f}",
                  flush=True)
