"""End-to-end training and evaluation at reduced scale.

Run:  python demos/demo_training.py            (about two minutes)

Trains the GNN-weighted federated scheme for a shortened run, evaluates the
resulting global actor deterministically, and compares it against the
probability-based best-response baseline on the same seed.
"""

import dataclasses

import numpy as np

from vecfed import desk_config, run_test, run_training
from vecfed.harness import quarter_means

cfg = desk_config()
cfg.train_slots = 12_000      # a real run uses 50k+; keep the demo brisk
cfg.test_slots = 4_000

print(f"training fgnn for {cfg.train_slots} slots "
      f"({cfg.train_slots * cfg.slot:.0f} simulated seconds)...")
store, train_summary, records = run_training(cfg, seed=7, scheme="fgnn",
                                             progress_every=4000)
first, last = quarter_means(records)
print(f"  train-stage mean age {train_summary.avg_aoi:.3f} s, "
      f"mean power {train_summary.avg_power:.2f} W")
print(f"  first-quarter age {first:.3f} s -> final-quarter {last:.3f} s")

print("\nevaluating the trained actor (deterministic, no learning)...")
test_summary, _ = run_test(cfg, seed=7, store=store, scheme="fgnn")
print(f"  fgnn   test: age {test_summary.avg_aoi:.3f} s, "
      f"power {test_summary.avg_power:.2f} W, "
      f"throughput {test_summary.throughput:.3e} bit/s")

gdbr_summary, _ = run_test(cfg, seed=7, store=None, scheme="gdbr")
print(f"  gdbr   test: age {gdbr_summary.avg_aoi:.3f} s, "
      f"power {gdbr_summary.avg_power:.2f} W, "
      f"throughput {gdbr_summary.throughput:.3e} bit/s")
