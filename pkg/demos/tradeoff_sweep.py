"""Sweep step size and noise level and print the realism/fidelity frontier.

Larger Langevin steps buy likelihood at the cost of distance from the input;
SDEdit trades the same way through its noise level t0.  The sweep writes the
usual CSV reports, so the numbers can be re-plotted elsewhere.

Run: python3 demos/tradeoff_sweep.py [--out-dir sweep_out]
"""

import argparse
import csv

import numpy as np

from codedit.experiment import ExperimentConfig, parse_config_text, run_experiment

CONFIG = """
prior = patterns16
corruption = contrast:0.7:1
method = code
method = sdedit
depths = 40
depths = 100,40
step_size = 1e-5
step_size = 1e-4
step_size = 1e-3
t0 = 50
t0 = 200
t0 = 500
n_inputs = 20
samples_per_input = 2
keep = 1
"""

parser = argparse.ArgumentParser()
parser.add_argument("--out-dir", default="sweep_out")
args = parser.parse_args()

cfg = ExperimentConfig.from_mapping(parse_config_text(CONFIG + f"out_dir = {args.out_dir}\n"))
paths = run_experiment(cfg)

medians = {}
with open(paths["records"], newline="") as fh:
    for row in csv.DictReader(fh):
        if row["kept"] == "1":
            medians.setdefault((row["method"], row["hyperparams"]), []).append(
                (float(row["l2_to_input"]), float(row["loglik"])))
print(f"{'method':8s} {'hyperparameters':52s} {'L2 in':>7s} {'loglik':>8s}")
for (method, hp), vals in medians.items():
    l2_med, ll_med = np.median(vals, axis=0)
    print(f"{method:8s} {hp:52s} {l2_med:7.2f} {ll_med:8.1f}")
print("reports:", ", ".join(str(p) for p in paths.values()))
