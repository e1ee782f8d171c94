"""Experiment harness: pair-list ingestion, attack x epsilon sweeps, reports.

Every run is reproducible from a single seed: each (attack, epsilon, pair)
cell derives its own seed by hashing (run seed, attack, epsilon, pair
index), so any cell can be recomputed in isolation. Per-cell traces are
written as JSONL keyed by a hash of the sweep config; rerunning an
interrupted sweep recomputes only missing cells.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from advface.attacks import (
    AttackConfig,
    BanditsParams,
    NesParams,
    NotMatchingPairError,
    SimbaParams,
    SquareParams,
    read_trace_jsonl,
    run_attack,
    write_trace_jsonl,
)
from advface.imageops import EpsilonBudget, FacePair, load_image, save_image, to_channels
from advface.metrics import SsimConfig, aggregate_summary, annotate_trace, summary_to_csv
from advface.oracle import ToyEmbedder, VerifierConfig, WireOracle, verify
from advface.threshold import score_pairs, select_threshold

ORACLE_ENDPOINT_ENV = "ADVFACE_ORACLE"

DEFAULT_EPSILON_GRID = (12.0, 14.0, 16.0, 18.0, 20.0)
NES_EXTENDED_EPSILONS = (10.0, 25.0, 30.0, 50.0)

# SimBA's query limit doubles as its perturbation budget. The grid epsilon
# maps to a budget so that the implicit l2 bound step*sqrt(budget) equals
# (eps/255) * sqrt(pixel_count) * SIMBA_BUDGET_K.
SIMBA_BUDGET_K = 0.5


def simba_budget_queries(epsilon_255: float, step: float, pixel_count: int,
                         k: float = SIMBA_BUDGET_K) -> int:
    target_l2 = (epsilon_255 / 255.0) * np.sqrt(pixel_count) * k
    return max(1, int(round((target_l2 / step) ** 2)))


@dataclass(frozen=True)
class OracleSpec:
    kind: str = "toy"  # "toy" or "external"
    seed: int = 0
    dims: tuple = (8, 8, 3)
    embed_dim: int = 128
    endpoint: str | None = None

    def build(self):
        if self.kind == "toy":
            return ToyEmbedder(self.seed, self.dims, self.embed_dim)
        endpoint = self.endpoint or os.environ.get(ORACLE_ENDPOINT_ENV)
        if not endpoint:
            raise ValueError(
                f"external oracle needs an endpoint (or ${ORACLE_ENDPOINT_ENV})")
        return WireOracle(endpoint)


@dataclass
class SweepConfig:
    pairs_file: str
    output_dir: str
    oracle: OracleSpec = field(default_factory=OracleSpec)
    d_b: float | str = 1.14  # or "auto" for PR selection
    attacks: tuple = ("nes", "bandits", "simba", "square")
    epsilon_grid_255: tuple = DEFAULT_EPSILON_GRID
    query_limit: int = 10_000
    step_rate: float = 0.01
    seed: int = 0
    attack_params: dict = field(default_factory=dict)  # per-attack overrides

    def __post_init__(self):
        if not self.attacks or not self.epsilon_grid_255:
            raise ValueError("attack list and epsilon grid must be non-empty")

    def canonical(self) -> dict:
        return {
            "pairs_file": os.path.basename(self.pairs_file),
            "oracle": {
                "kind": self.oracle.kind, "seed": self.oracle.seed,
                "dims": list(self.oracle.dims), "embed_dim": self.oracle.embed_dim,
            },
            "d_b": self.d_b,
            "attacks": list(self.attacks),
            "epsilon_grid_255": [float(e) for e in self.epsilon_grid_255],
            "query_limit": self.query_limit,
            "step_rate": self.step_rate,
            "seed": self.seed,
            "attack_params": self.attack_params,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_toml(cls, path) -> "SweepConfig":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib

        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        oracle = data.pop("oracle", {})
        spec = OracleSpec(
            kind=oracle.get("kind", "toy"),
            seed=int(oracle.get("seed", 0)),
            dims=tuple(oracle.get("dims", (8, 8, 3))),
            embed_dim=int(oracle.get("embed_dim", 128)),
            endpoint=oracle.get("endpoint"),
        )
        params = {name: data.pop(name) for name in
                  ("nes", "bandits", "simba", "square") if name in data}
        return cls(
            pairs_file=data["pairs_file"],
            output_dir=data["output_dir"],
            oracle=spec,
            d_b=data.get("d_b", 1.14),
            attacks=tuple(data.get("attacks", ("nes", "bandits", "simba", "square"))),
            epsilon_grid_255=tuple(float(e) for e in data.get(
                "epsilon_grid", DEFAULT_EPSILON_GRID)),
            query_limit=int(data.get("query_limit", 10_000)),
            step_rate=float(data.get("step_rate", 0.01)),
            seed=int(data.get("seed", 0)),
            attack_params=params,
        )


def load_pairs(path) -> list[FacePair]:
    """Read a pair list CSV with header source,target,label."""
    pairs = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                {"source", "target", "label"} - set(reader.fieldnames):
            raise ValueError(f"{path}: expected header source,target,label")
        base = os.path.dirname(os.path.abspath(path))
        for row_no, rec in enumerate(reader, start=2):
            try:
                src = load_image(os.path.join(base, rec["source"]))
                tgt = load_image(os.path.join(base, rec["target"]))
                pairs.append(FacePair(src, tgt, int(rec["label"])))
            except Exception as exc:
                raise ValueError(f"{path} row {row_no}: {exc}") from exc
    return pairs


def cell_seed(run_seed: int, attack: str, epsilon_255: float, pair_index: int) -> int:
    blob = f"{run_seed}:{attack}:{epsilon_255!r}:{pair_index}".encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def _attack_params(name: str, cfg: SweepConfig, epsilon_255: float, pixel_count: int):
    overrides = dict(cfg.attack_params.get(name, {}))
    if name == "nes":
        return NesParams(**overrides)
    if name == "bandits":
        return BanditsParams(**overrides)
    if name == "square":
        return SquareParams(**{k: tuple(v) if k == "schedule" else v
                               for k, v in overrides.items()})
    if name == "simba":
        k = overrides.pop("k", SIMBA_BUDGET_K)
        step = overrides.get("step", SimbaParams().step)
        overrides.setdefault(
            "budget_queries",
            min(cfg.query_limit, simba_budget_queries(epsilon_255, step, pixel_count, k)),
        )
        return SimbaParams(**overrides)
    raise ValueError(name)


def resolve_d_b(cfg: SweepConfig, pairs, oracle) -> float:
    if cfg.d_b == "auto":
        d_b, _ = select_threshold(score_pairs(pairs, oracle))
        return d_b
    return float(cfg.d_b)


def run_sweep(cfg: SweepConfig, human_accuracy_by_cell: dict | None = None) -> list:
    """Run the full sweep, writing traces, summary.csv and figure CSVs.

    Returns the summary rows. ``human_accuracy_by_cell`` optionally maps
    (attack, epsilon_255) to an externally computed human accuracy.
    """
    os.makedirs(cfg.output_dir, exist_ok=True)
    traces_dir = os.path.join(cfg.output_dir, "traces")
    images_dir = os.path.join(cfg.output_dir, "adv_images")
    os.makedirs(traces_dir, exist_ok=True)
    os.makedirs(images_dir, exist_ok=True)
    conf_hash = cfg.config_hash()

    oracle = cfg.oracle.build()
    channels = oracle.input_dims[2]
    raw_pairs = load_pairs(cfg.pairs_file)
    pairs = [FacePair(to_channels(p.source, channels),
                      to_channels(p.target, channels), p.label)
             for p in raw_pairs]
    d_b = resolve_d_b(cfg, pairs, oracle)

    # attack only pairs that actually match under d_b
    matching, skipped = [], 0
    for idx, pair in enumerate(pairs):
        is_match, _ = verify(oracle, pair, VerifierConfig(d_b))
        if is_match and pair.label == 1:
            matching.append((idx, pair))
        else:
            skipped += 1

    pixel_count = int(np.prod(oracle.input_dims[:2]))
    rows = []
    all_traces = {}
    for attack in cfg.attacks:
        grid = sorted(cfg.epsilon_grid_255)
        for eps in grid:
            cell_traces = []
            for idx, pair in matching:
                trace_path = os.path.join(
                    traces_dir, f"{attack}_eps{eps:g}_pair{idx}.jsonl")
                trace = _load_cached_trace(trace_path, conf_hash)
                if trace is None:
                    acfg = AttackConfig(
                        budget=EpsilonBudget(eps),
                        d_b=d_b,
                        query_limit=cfg.query_limit,
                        step_rate=cfg.step_rate,
                        params=_attack_params(attack, cfg, eps, pixel_count),
                        seed=cell_seed(cfg.seed, attack, eps, idx),
                    )
                    trace = run_attack(attack, pair, oracle, acfg)
                    annotate_trace(trace, pair.target, SsimConfig())
                    trace.config["sweep_hash"] = conf_hash
                    with open(trace_path, "w") as fh:
                        write_trace_jsonl(trace, fh)
                    save_image(trace.final_image, os.path.join(
                        images_dir, f"{attack}_eps{eps:g}_pair{idx}.png"))
                cell_traces.append(trace)
            if not cell_traces:
                continue
            ha = (human_accuracy_by_cell or {}).get((attack, eps))
            rows.append(aggregate_summary(cell_traces, votes=ha))
            all_traces[(attack, eps)] = cell_traces

    summary_to_csv(rows, os.path.join(cfg.output_dir, "summary.csv"))
    emit_figure_data(rows, cfg.output_dir)
    with open(os.path.join(cfg.output_dir, "run.json"), "w") as fh:
        json.dump({
            "config": cfg.canonical(),
            "config_hash": conf_hash,
            "d_b": d_b,
            "pairs_total": len(pairs),
            "pairs_skipped_not_matching": skipped,
            # convention: F(source) is never charged; the d_0 check is;
            # failed attacks report their actual query spend, not T
            "query_convention": "excludes F(source); includes d_0 evaluation",
        }, fh, indent=2, sort_keys=True)
    return rows


def _load_cached_trace(path, conf_hash):
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        trace = read_trace_jsonl(fh)
    if (trace.config or {}).get("sweep_hash") != conf_hash:
        return None
    return trace


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def emit_figure_data(rows, out_dir) -> None:
    """Plot-ready CSVs for the four standard figures, derived from summary rows."""
    def fmt(v):
        return "" if v is None else repr(float(v))

    _write_csv(os.path.join(out_dir, "fig_succ_eps.csv"),
               ["attack", "epsilon", "success_rate"],
               [[r.attack, fmt(r.epsilon_255), fmt(r.success_rate)] for r in rows])
    _write_csv(os.path.join(out_dir, "fig_mag_dssim.csv"),
               ["attack", "epsilon", "avg_magnitude", "avg_dssim"],
               [[r.attack, fmt(r.epsilon_255), fmt(r.avg_magnitude), fmt(r.avg_dssim)]
                for r in rows if r.avg_magnitude is not None])
    with_votes = [r for r in rows if r.human_accuracy is not None]
    _write_csv(os.path.join(out_dir, "fig_human_eps.csv"),
               ["attack", "epsilon", "human_accuracy"],
               [[r.attack, fmt(r.epsilon_255), fmt(r.human_accuracy)]
                for r in with_votes])
    _write_csv(os.path.join(out_dir, "fig_succ_human.csv"),
               ["attack", "epsilon", "success_rate", "human_accuracy"],
               [[r.attack, fmt(r.epsilon_255), fmt(r.success_rate),
                 fmt(r.human_accuracy)] for r in with_votes])
