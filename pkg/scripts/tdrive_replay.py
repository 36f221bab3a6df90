"""Train on replayed T-Drive trajectories instead of synthetic random-waypoint motion.

    python3 scripts/tdrive_replay.py path/to/taxi.csv --out results/tdrive
"""
import argparse
import sys

from ecoedgetwin.cli import main

p = argparse.ArgumentParser()
p.add_argument("trajectories")
p.add_argument("--config", default="configs/desk.json")
p.add_argument("--seed", default="0")
p.add_argument("--episodes", default="100")
p.add_argument("--out", default="results/tdrive")
a = p.parse_args()

sys.exit(main(["train", a.config, "--seed", a.seed, "--episodes", a.episodes,
               "--trajectories", a.trajectories, "--out", a.out]))
