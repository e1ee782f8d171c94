"""Four query-based attacks adapted to face verification.

All attacks maximize the embedding distance between the perturbed target
image and the fixed source image, halting as soon as the distance reaches
the decision boundary d_b or the query budget is spent. NES, Bandits and
Square respect an l-inf ball of radius eps around the original target;
SimBA's perturbation is bounded implicitly by its per-direction step and
query budget instead.

Update rule: x_t = project(x_0, x_{t-1} + eta * eps * sign(g_hat)), i.e.
signed-gradient ascent with step eta * eps, clipped back into the ball.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.fft import idctn

from advface.imageops import EpsilonBudget, as_image, project
from advface.oracle import QueryLedger, embed, feature_distance

ATTACK_NAMES = ("nes", "bandits", "simba", "square")

SUCCESS = "SUCCESS"
FAILURE = "FAILURE"


class NotMatchingPairError(ValueError):
    """The pair is already non-matching (d_0 >= d_b); nothing to attack."""


class UnknownAttackError(ValueError):
    pass


@dataclass(frozen=True)
class NesParams:
    population: int = 50  # antithetic probes per iteration, must be even
    sigma: float = 1e-3  # search noise stddev in [0,1] pixel units

    def __post_init__(self):
        if self.population <= 0 or self.population % 2 != 0:
            raise ValueError("population must be a positive even integer")


@dataclass(frozen=True)
class BanditsParams:
    tile_size: int | None = None  # prior grid side; default image side // 4
    exploration: float = 0.01
    prior_step: float = 0.1
    finite_diff_probe: float = 0.1


@dataclass(frozen=True)
class SimbaParams:
    step: float = 0.2  # per-coordinate step in [0,1] units
    basis: str = "pixel"  # "pixel" or "dct"
    budget_queries: int | None = None  # doubles as the perturbation budget

    def __post_init__(self):
        if self.step < 0:
            raise ValueError("step must be non-negative")
        if self.basis not in ("pixel", "dct"):
            raise ValueError("basis must be 'pixel' or 'dct'")


@dataclass(frozen=True)
class SquareParams:
    p_init: float = 0.05  # initial fraction of pixels covered by a square
    # fractions of the query budget at which p halves (original schedule,
    # rescaled from its 10,000-iteration breakpoints)
    schedule: tuple = (0.001, 0.005, 0.02, 0.1, 0.2, 0.4, 0.6, 0.8)

    def __post_init__(self):
        if not (0.0 < self.p_init <= 1.0):
            raise ValueError("p_init must be in (0, 1]")


@dataclass(frozen=True)
class AttackConfig:
    budget: EpsilonBudget
    d_b: float = 1.14
    query_limit: int = 10_000  # T
    step_rate: float = 0.01  # eta; each move is eta * eps
    params: object = None  # NesParams | BanditsParams | SimbaParams | SquareParams
    seed: int = 0

    def __post_init__(self):
        if self.step_rate <= 0:
            raise ValueError("step_rate must be positive")
        if self.query_limit < 1:
            raise ValueError("query_limit must be at least 1")


@dataclass
class AttackTrace:
    attack: str
    epsilon_255: float
    seed: int
    steps: list = field(default_factory=list)  # (query_count, distance)
    outcome: str = FAILURE
    final_image: np.ndarray | None = None
    queries_used: int = 0
    magnitude: float | None = None  # filled by metrics.annotate_trace
    final_delta: np.ndarray | None = None  # exact stored perturbation (square)
    dssim: float | None = None  # filled by metrics.annotate_trace
    config: dict | None = None

    @property
    def final_distance(self) -> float:
        return self.steps[-1][1]


def objective(oracle, source_embedding, candidate, ledger: QueryLedger) -> float:
    """Distance of the candidate's embedding from the fixed source. 1 query."""
    return feature_distance(embed(oracle, candidate, ledger), source_embedding)


def _source_embedding(oracle, pair):
    # computed once, outside the loop; never charged against the budget
    return embed(oracle, pair.source, QueryLedger())


def _start(pair, oracle, cfg):
    """Shared prologue: embed the source (uncharged), evaluate d_0 (charged)."""
    ledger = QueryLedger()
    src = _source_embedding(oracle, pair)
    x0 = as_image(pair.target)
    d0 = objective(oracle, src, x0, ledger)
    if d0 >= cfg.d_b:
        raise NotMatchingPairError(
            f"pair is not matching: d_0={d0:.4f} >= d_b={cfg.d_b:.4f}"
        )
    return ledger, src, x0, d0


def _finish(trace, ledger, cfg, final_image):
    trace.queries_used = ledger.count
    trace.final_image = final_image
    trace.outcome = SUCCESS if trace.final_distance >= cfg.d_b else FAILURE
    return trace


def nes_gradient(oracle, src, x, sigma, population, rng, ledger):
    """Antithetic NES estimate of the objective gradient at x.

    population/2 pairs of +/- sigma Gaussian probes; each probe is one query.
    """
    g = np.zeros_like(x)
    for _ in range(population // 2):
        u = rng.standard_normal(x.shape)
        d_plus = objective(oracle, src, np.clip(x + sigma * u, 0.0, 1.0), ledger)
        d_minus = objective(oracle, src, np.clip(x - sigma * u, 0.0, 1.0), ledger)
        g += (d_plus - d_minus) * u
    return g / (population * sigma)


def attack_nes(pair, oracle, cfg: AttackConfig) -> AttackTrace:
    params = cfg.params if isinstance(cfg.params, NesParams) else NesParams()
    ledger, src, x0, d0 = _start(pair, oracle, cfg)
    eps = cfg.budget.epsilon_norm
    trace = AttackTrace("nes", cfg.budget.epsilon_255, cfg.seed,
                        steps=[(ledger.count, d0)])
    if eps == 0.0:
        return _finish(trace, ledger, cfg, x0)
    rng = np.random.default_rng(cfg.seed)
    x = x0
    step = cfg.step_rate * eps
    while ledger.count + params.population + 1 <= cfg.query_limit:
        g = nes_gradient(oracle, src, x, params.sigma, params.population, rng, ledger)
        x = project(x0, x + step * np.sign(g), cfg.budget)
        d = objective(oracle, src, x, ledger)
        trace.steps.append((ledger.count, d))
        if d >= cfg.d_b:
            break
    return _finish(trace, ledger, cfg, x)


def _upsample_nearest(grid: np.ndarray, h: int, w: int) -> np.ndarray:
    gh, gw = grid.shape[:2]
    rows = (np.arange(h) * gh) // h
    cols = (np.arange(w) * gw) // w
    return grid[rows][:, cols]


def attack_bandits(pair, oracle, cfg: AttackConfig) -> AttackTrace:
    params = cfg.params if isinstance(cfg.params, BanditsParams) else BanditsParams()
    ledger, src, x0, d0 = _start(pair, oracle, cfg)
    eps = cfg.budget.epsilon_norm
    trace = AttackTrace("bandits", cfg.budget.epsilon_255, cfg.seed,
                        steps=[(ledger.count, d0)])
    h, w, c = x0.shape
    if eps == 0.0:
        return _finish(trace, ledger, cfg, x0)
    tile = params.tile_size or max(1, min(h, w) // 4)
    if tile > min(h, w):
        raise ValueError(f"tile_size {tile} exceeds image side {min(h, w)}")
    rng = np.random.default_rng(cfg.seed)
    prior = np.zeros((tile, tile, c))
    x = x0
    step = cfg.step_rate * eps
    delta = params.exploration
    fd = params.finite_diff_probe
    while ledger.count + 3 <= cfg.query_limit:
        noise = rng.standard_normal(prior.shape)
        est = 0.0
        probes = []
        for sign in (1.0, -1.0):
            q = prior + sign * delta * noise
            direction = _upsample_nearest(q, h, w)
            norm = np.linalg.norm(direction)
            if norm > 0:
                direction = direction / norm
            probes.append(objective(
                oracle, src, np.clip(x + fd * direction, 0.0, 1.0), ledger))
        est = (probes[0] - probes[1]) / (2.0 * delta * fd)
        prior = prior + params.prior_step * est * noise
        x = project(x0, x + step * np.sign(_upsample_nearest(prior, h, w)), cfg.budget)
        d = objective(oracle, src, x, ledger)
        trace.steps.append((ledger.count, d))
        if d >= cfg.d_b:
            break
    return _finish(trace, ledger, cfg, x)


def _dct_direction(index: int, shape) -> np.ndarray:
    h, w, c = shape
    coeff = np.zeros((h, w))
    u, v, ch = np.unravel_index(index, (h, w, c))
    coeff[u, v] = 1.0
    basis = idctn(coeff, norm="ortho")
    out = np.zeros(shape)
    out[:, :, ch] = basis
    return out


def attack_simba(pair, oracle, cfg: AttackConfig) -> AttackTrace:
    params = cfg.params if isinstance(cfg.params, SimbaParams) else SimbaParams()
    budget = params.budget_queries or cfg.query_limit
    ledger, src, x0, d0 = _start(pair, oracle, cfg)
    trace = AttackTrace("simba", cfg.budget.epsilon_255, cfg.seed,
                        steps=[(ledger.count, d0)])
    if params.step == 0.0:
        return _finish(trace, ledger, cfg, x0)
    rng = np.random.default_rng(cfg.seed)
    n = x0.size
    order = rng.permutation(n)
    delta = np.zeros_like(x0)
    best = d0
    for index in order:
        if best >= cfg.d_b or ledger.count >= budget:
            break
        if params.basis == "pixel":
            direction = np.zeros_like(x0)
            direction.ravel()[index] = 1.0
        else:
            direction = _dct_direction(int(index), x0.shape)
        for sign in (1.0, -1.0):
            if ledger.count >= budget:
                break
            candidate = np.clip(x0 + delta + sign * params.step * direction, 0.0, 1.0)
            d = objective(oracle, src, candidate, ledger)
            if d > best:
                delta = delta + sign * params.step * direction
                best = d
                trace.steps.append((ledger.count, d))
                break
    return _finish(trace, ledger, cfg, np.clip(x0 + delta, 0.0, 1.0))


def _square_side(p: float, h: int, w: int) -> int:
    side = int(round(np.sqrt(p * h * w)))
    return max(1, min(side, h, w))


def _p_at(iteration: int, total: int, params: SquareParams) -> float:
    passed = sum(1 for frac in params.schedule if iteration >= frac * total)
    return params.p_init * 0.5**passed


def attack_square(pair, oracle, cfg: AttackConfig) -> AttackTrace:
    params = cfg.params if isinstance(cfg.params, SquareParams) else SquareParams()
    ledger, src, x0, d0 = _start(pair, oracle, cfg)
    eps = cfg.budget.epsilon_norm
    trace = AttackTrace("square", cfg.budget.epsilon_255, cfg.seed,
                        steps=[(ledger.count, d0)])
    h, w, c = x0.shape
    if eps == 0.0:
        return _finish(trace, ledger, cfg, x0)
    rng = np.random.default_rng(cfg.seed)
    # full-budget vertical stripes: one random sign per column per channel.
    # delta entries are exactly +/-eps, so clipping to [0,1] alone keeps the
    # iterate in the ball while preserving |delta| = eps bit-exactly at
    # interior pixels.
    delta = eps * rng.choice([-1.0, 1.0], size=(1, w, c)) * np.ones((h, 1, 1))
    x = np.clip(x0 + delta, 0.0, 1.0)
    if ledger.count + 1 > cfg.query_limit:
        return _finish(trace, ledger, cfg, x0)
    best = objective(oracle, src, x, ledger)
    trace.steps.append((ledger.count, best))
    iteration = 0
    while best < cfg.d_b and ledger.count + 1 <= cfg.query_limit:
        p = _p_at(iteration, cfg.query_limit, params)
        side = _square_side(p, h, w)
        r = int(rng.integers(0, h - side + 1))
        s = int(rng.integers(0, w - side + 1))
        signs = rng.choice([-1.0, 1.0], size=c)
        delta_new = delta.copy()
        delta_new[r:r + side, s:s + side, :] = eps * signs
        candidate = np.clip(x0 + delta_new, 0.0, 1.0)
        d = objective(oracle, src, candidate, ledger)
        if d > best:
            delta, x, best = delta_new, candidate, d
            trace.steps.append((ledger.count, d))
        iteration += 1
    trace.final_delta = delta
    return _finish(trace, ledger, cfg, x)


_DISPATCH = {
    "nes": attack_nes,
    "bandits": attack_bandits,
    "simba": attack_simba,
    "square": attack_square,
}


def run_attack(name: str, pair, oracle, cfg: AttackConfig) -> AttackTrace:
    if name not in _DISPATCH:
        raise UnknownAttackError(f"unknown attack {name!r}; expected one of {ATTACK_NAMES}")
    trace = _DISPATCH[name](pair, oracle, cfg)
    trace.config = config_dict(cfg)
    return trace


def config_dict(cfg: AttackConfig) -> dict:
    d = {
        "epsilon_255": cfg.budget.epsilon_255,
        "d_b": cfg.d_b,
        "query_limit": cfg.query_limit,
        "step_rate": cfg.step_rate,
        "seed": cfg.seed,
    }
    if cfg.params is not None:
        # round-trip through JSON so tuples become lists, matching reloads
        d["params"] = json.loads(json.dumps(asdict(cfg.params)))
    return d


def write_trace_jsonl(trace: AttackTrace, fh) -> None:
    """Header record with config/outcome, then one {q, d} record per step."""
    header = {
        "type": "header",
        "attack": trace.attack,
        "epsilon_255": trace.epsilon_255,
        "seed": trace.seed,
        "outcome": trace.outcome,
        "queries_used": trace.queries_used,
        "magnitude": trace.magnitude,
        "dssim": trace.dssim,
        "config": trace.config,
    }
    fh.write(json.dumps(header) + "\n")
    for q, d in trace.steps:
        fh.write(json.dumps({"q": q, "d": d}) + "\n")


def read_trace_jsonl(fh) -> AttackTrace:
    """Rebuild a trace (without its final image) from JSONL."""
    header = json.loads(fh.readline())
    if header.get("type") != "header":
        raise ValueError("trace file does not start with a header record")
    trace = AttackTrace(
        attack=header["attack"],
        epsilon_255=header["epsilon_255"],
        seed=header["seed"],
        outcome=header["outcome"],
        queries_used=header["queries_used"],
        magnitude=header["magnitude"],
        dssim=header["dssim"],
        config=header.get("config"),
    )
    trace.steps = [(rec["q"], rec["d"])
                   for rec in (json.loads(line) for line in fh if line.strip())]
    return trace
