"""Attack one matching face pair with all four black-box attacks.

Builds a toy verification oracle, synthesizes a matching (source, target)
pair, then lets each attack push the target's embedding away from the
source until the pair stops matching or the query budget runs out.
"""

import numpy as np

from advface import (
    AttackConfig,
    EpsilonBudget,
    FacePair,
    NesParams,
    SimbaParams,
    ToyEmbedder,
    VerifierConfig,
    run_attack,
    verify,
)

DIMS = (8, 8, 3)

oracle = ToyEmbedder(seed=0, input_dims=DIMS, embed_dim=128)

rng = np.random.default_rng(7)
source = rng.uniform(0.1, 0.9, DIMS)
target = np.clip(source + rng.normal(0.0, 0.03, DIMS), 0.0, 1.0)
pair = FacePair(source=source, target=target)

# pick a boundary the pair currently satisfies
_, d0 = verify(oracle, pair, VerifierConfig(d_b=1.9))
d_b = d0 + 0.05
print(f"initial distance d_0 = {d0:.4f}, decision boundary d_b = {d_b:.4f}")
print(f"{'attack':<8} {'outcome':<8} {'queries':>7} {'final d_t':>9}")

for attack in ("nes", "bandits", "simba", "square"):
    params = {
        "nes": NesParams(population=20),
        "simba": SimbaParams(step=0.05, budget_queries=600),
    }.get(attack)
    cfg = AttackConfig(
        budget=EpsilonBudget(16.0),
        d_b=d_b,
        query_limit=2000,
        step_rate=0.2,
        params=params,
        seed=1,
    )
    trace = run_attack(attack, pair, oracle, cfg)
    print(f"{attack:<8} {trace.outcome:<8} {trace.queries_used:>7} "
          f"{trace.final_distance:>9.4f}")
