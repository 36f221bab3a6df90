"""Training-reward curve on the desk scenario (one CSV per seed).

    python3 scripts/training_curve.py --seeds 0,1,2,3,4 --out results/training
"""
import argparse
import sys

from ecoedgetwin.cli import main

p = argparse.ArgumentParser()
p.add_argument("--config", default="configs/desk.json")
p.add_argument("--seeds", default="0,1,2,3,4")
p.add_argument("--episodes", default="100")
p.add_argument("--out", default="results/training")
a = p.parse_args()

for seed in a.seeds.split(","):
    code = main(["train", a.config, "--seed", seed, "--episodes", a.episodes,
                 "--out", f"{a.out}/seed{seed}"])
    if code:
        sys.exit(code)
