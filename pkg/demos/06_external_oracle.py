"""Attack through an external oracle process over the wire protocol.

Spawns the Node oracle adapter (toy backend) as a child process, performs
the hello handshake, and drives the SimBA attack across the wire. The
resulting trace matches an in-process run to within float32 transport
precision. Build the adapter first:

    cd adapter && npm install && npm run build
"""

import os
import shutil
import sys

import numpy as np

from advface import (
    AttackConfig,
    EpsilonBudget,
    FacePair,
    SimbaParams,
    ToyEmbedder,
    VerifierConfig,
    WireOracle,
    run_attack,
    verify,
)

DIMS = (8, 8, 3)
CLI = os.path.join(os.path.dirname(__file__), "..", "adapter", "dist", "cli.js")

if shutil.which("node") is None or not os.path.exists(CLI):
    sys.exit("adapter not built; run: cd adapter && npm install && npm run build")

rng = np.random.default_rng(2)
source = rng.uniform(0.1, 0.9, DIMS)
target = np.clip(source + rng.normal(0, 0.03, DIMS), 0, 1)
pair = FacePair(source, target)

local = ToyEmbedder(seed=0, input_dims=DIMS, embed_dim=128)
_, d0 = verify(local, pair, VerifierConfig(1.9))
cfg = AttackConfig(budget=EpsilonBudget(16.0), d_b=d0 + 0.04, query_limit=1500,
                   step_rate=0.2, params=SimbaParams(step=0.05, budget_queries=600),
                   seed=4)

endpoint = f"cmd:node {CLI} --backend toy --seed 0 --dims 8x8x3 --embed-dim 128"
with WireOracle(endpoint) as remote:
    print(f"handshake: embed_dim={remote.embed_dim}, input={remote.input_dims}")
    t_remote = run_attack("simba", pair, remote, cfg)
t_local = run_attack("simba", pair, local, cfg)

drift = max(abs(a[1] - b[1]) for a, b in zip(t_local.steps, t_remote.steps))
print(f"remote: {t_remote.outcome} in {t_remote.queries_used} queries, "
      f"final d_t = {t_remote.final_distance:.4f}")
print(f"local : {t_local.outcome} in {t_local.queries_used} queries, "
      f"final d_t = {t_local.final_distance:.4f}")
print(f"max |d_t drift| across the wire: {drift:.2e}")
