"""A short two-armed heavy-tailed bandit, all five policies.

The full reproduction uses horizon 1000 and 20 repetitions per policy
(``rmmucb run --preset fig1a``).  This demo uses a horizon of 300 and 6
repetitions so it finishes in seconds, then writes the same CSV and
manifest the CLI writes.
"""

import os
import tempfile

from rmmucb import EnvironmentSpec, ExperimentConfig, run_experiment, write_outputs

env = EnvironmentSpec.symmetrized_pareto(means=[1.0, 0.9], eps=0.1)
out = tempfile.mkdtemp(prefix="rmmucb-demo-")
config = ExperimentConfig(
    env=env,
    policies=("rmm-ucb", "mars", "vanilla-ucb", "mom-ucb", "trunc-ucb"),
    horizon=300,
    reps=6,
    master_seed=1,
    out_dir=out,
    workers=os.cpu_count() or 1,
)
results = run_experiment(config)

print(f"gaps {env.gaps}, horizon {config.horizon}, {config.reps} reps")
print(f"{'policy':>12s} {'R(150)':>8s} {'R(300)':>8s} {'std':>8s}")
for policy, curve in results.items():
    print(f"{policy:>12s} {curve.mean[149]:8.2f} {curve.mean[-1]:8.2f} {curve.std[-1]:8.2f}")

csv_path, manifest = write_outputs(results, config)
print(f"\nwrote {csv_path}\n      {manifest}")
print(f"plot with: rmmucb gnuplot {csv_path} | gnuplot")
