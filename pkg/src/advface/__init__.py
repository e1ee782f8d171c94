"""advface: black-box adversarial attacks on face verification, with metrics.

Images are numpy float arrays of shape (H, W, C) with values in [0, 1].
Attacks perturb the target image of a matching face pair until the
embedding distance to the fixed source crosses the decision boundary
or the query budget runs out.
"""

from advface.imageops import (
    EpsilonBudget,
    FacePair,
    ImageError,
    l2_diff,
    load_image,
    project,
    save_image,
)
from advface.oracle import (
    Embedding,
    QueryLedger,
    ToyEmbedder,
    VerifierConfig,
    WireOracle,
    embed,
    feature_distance,
    toy_embed_formula,
    verify,
)
from advface.attacks import (
    AttackConfig,
    AttackTrace,
    BanditsParams,
    NesParams,
    SimbaParams,
    SquareParams,
    attack_bandits,
    attack_nes,
    attack_simba,
    attack_square,
    objective,
    run_attack,
)
from advface.metrics import (
    SsimConfig,
    SummaryRow,
    aggregate_summary,
    annotate_trace,
    dssim,
    magnitude,
    pearson,
    ssim,
)
from advface.threshold import PRPoint, ScoredPair, score_pairs, select_threshold
from advface.survey import (
    MajorityLabel,
    SurveyManifest,
    VoteRecord,
    build_packet,
    human_accuracy,
    majority_label,
)
from advface.harness import SweepConfig, load_pairs, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
