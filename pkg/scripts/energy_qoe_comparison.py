"""EcoEdgeTwin vs the DT-blind benchmark: paired per-episode energy/QoE plus a summary table.

    python3 scripts/energy_qoe_comparison.py --seeds 0,1,2,3,4 --out results/compare
"""
import argparse
import sys

from ecoedgetwin.cli import main

p = argparse.ArgumentParser()
p.add_argument("--config", default="configs/desk.json")
p.add_argument("--seeds", default="0,1,2,3,4")
p.add_argument("--episodes", default="100")
p.add_argument("--workers", default="1")
p.add_argument("--out", default="results/compare")
a = p.parse_args()

sys.exit(main(["compare", a.config, "--seeds", a.seeds, "--episodes", a.episodes,
               "--workers", a.workers, "--out", a.out]))
