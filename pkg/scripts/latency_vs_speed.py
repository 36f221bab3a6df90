"""Train once, then sweep user speed with the frozen policy (latency and migrations per speed).

    python3 scripts/latency_vs_speed.py --speeds 0,10,20,30,40,50,60 --out results/speed
"""
import argparse
import sys

from ecoedgetwin.cli import main

p = argparse.ArgumentParser()
p.add_argument("--config", default="configs/desk.json")
p.add_argument("--seed", default="0")
p.add_argument("--speeds", default="0,10,20,30,40,50,60")
p.add_argument("--out", default="results/speed")
a = p.parse_args()

code = main(["train", a.config, "--seed", a.seed, "--out", f"{a.out}/policy"])
if code:
    sys.exit(code)
sys.exit(main(["speed-sweep", a.config, "--seed", a.seed, "--speeds", a.speeds,
               "--checkpoint", f"{a.out}/policy/checkpoint.json", "--out", f"{a.out}/sweep"]))
