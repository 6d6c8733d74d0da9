"""Attack optimizers: greedy, genetic, PGD over a relaxed suffix, brute force, random.

Every optimizer minimizes a supplied loss over fixed-length character suffixes
and is bit-deterministic given the base prompt, backend, and config (seed
included). Randomness comes from splitmix64 sub-streams with a documented
draw order, so runs reproduce across processes and machines.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .embedding import DimensionMask
from .errors import CapabilityError, SpaceTooLargeError
from .perturbation import Charset, Perturbation, Prompt, assemble, assemble_text, random_perturbation
from .rng import GENETIC_ROLE, SplitMix64

DEFAULT_GENERATIONS = 50
DEFAULT_POPULATION = 20
DEFAULT_MUTATION_RATE = 0.3
DEFAULT_PGD_STEP_SIZE = 0.1
DEFAULT_PGD_STEPS = 100
DEFAULT_BRUTE_CAP = 10**6

METHODS = ("greedy", "genetic", "pgd", "random", "brute")


@dataclass(frozen=True)
class GeneticConfig:
    generations: int = DEFAULT_GENERATIONS
    population: int = DEFAULT_POPULATION
    mutation_rate: float = DEFAULT_MUTATION_RATE

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("mutation_rate must be in [0, 1]")


@dataclass(frozen=True)
class PGDConfig:
    step_size: float = DEFAULT_PGD_STEP_SIZE
    steps: int = DEFAULT_PGD_STEPS

    def __post_init__(self):
        if self.step_size <= 0.0:
            raise ValueError("step_size must be > 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass(frozen=True)
class AttackConfig:
    method: str
    L: int = 5
    charset: Charset = field(default_factory=Charset.default)
    seed: int = 0
    genetic: GeneticConfig = GeneticConfig()
    pgd: PGDConfig = PGDConfig()
    targeted: DimensionMask | None = None
    greedy_mode: str = "sequential"
    brute_cap: int = DEFAULT_BRUTE_CAP

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.L < 1:
            raise ValueError("perturbation length L must be >= 1")
        if self.greedy_mode not in ("sequential", "independent"):
            raise ValueError("greedy_mode must be 'sequential' or 'independent'")
        if self.brute_cap < 1:
            raise ValueError("brute_cap must be >= 1")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "L": self.L,
            "charset": self.charset.as_string(),
            "seed": self.seed,
            "genetic": {
                "generations": self.genetic.generations,
                "population": self.genetic.population,
                "mutation_rate": self.genetic.mutation_rate,
            },
            "pgd": {"step_size": self.pgd.step_size, "steps": self.pgd.steps},
            "targeted": list(self.targeted.bits) if self.targeted is not None else None,
            "greedy_mode": self.greedy_mode,
            "brute_cap": self.brute_cap,
        }


@dataclass(frozen=True)
class AttackResult:
    base_prompt: str
    perturbation: str
    perturbed_prompt: str
    final_loss: float
    trajectory: tuple[tuple[int, float], ...]
    evaluations: int
    config: AttackConfig
    wall_ms: int

    def to_dict(self) -> dict:
        return {
            "base_prompt": self.base_prompt,
            "perturbation": self.perturbation,
            "perturbed_prompt": self.perturbed_prompt,
            "final_loss": self.final_loss,
            "trajectory": [[i, v] for i, v in self.trajectory],
            "evaluations": self.evaluations,
            "config": self.config.to_dict(),
            "wall_ms": self.wall_ms,
        }


LossFn = Callable[[str], float]


class Evaluator:
    """Memoizing loss evaluator with an invocation counter.

    ``count`` reports actual loss invocations (memo hits are free). Batch
    evaluation funnels through the objective's ``loss_batch`` when available
    so remote backends see one request per sweep; results are collected in
    input order, keeping every optimizer independent of scheduling.
    """

    def __init__(self, loss: LossFn, jobs: int = 1):
        self._loss = loss
        self._batch = getattr(loss, "loss_batch", None)
        self._call = getattr(loss, "loss", loss)
        self._memo: dict[str, float] = {}
        self._jobs = max(1, jobs)
        self.count = 0

    def __call__(self, text: str) -> float:
        cached = self._memo.get(text)
        if cached is not None:
            return cached
        value = self._call(text)
        self.count += 1
        self._memo[text] = value
        return value

    def batch(self, texts: Sequence[str]) -> list[float]:
        missing = [t for t in dict.fromkeys(texts) if t not in self._memo]
        if missing:
            if self._batch is not None:
                values = self._batch(list(missing))
            elif self._jobs > 1:
                with ThreadPoolExecutor(max_workers=self._jobs) as pool:
                    values = list(pool.map(self._call, missing))
            else:
                values = [self._call(t) for t in missing]
            self.count += len(missing)
            self._memo.update(zip(missing, values))
        return [self._memo[t] for t in texts]


def _argmin_lowest_codepoint(chars: Sequence[str], losses: Sequence[float]) -> tuple[str, float]:
    best_char, best_loss = None, None
    for ch, loss in zip(chars, losses):
        if best_loss is None or loss < best_loss or (loss == best_loss and ord(ch) < ord(best_char)):
            best_char, best_loss = ch, loss
    return best_char, best_loss


def _result(
    base: Prompt,
    suffix: str,
    final_loss: float,
    trajectory: list[tuple[int, float]],
    evaluations: int,
    cfg: AttackConfig,
    started: float,
) -> AttackResult:
    pert = Perturbation(suffix)
    pert.check_against(cfg.charset, cfg.L)
    return AttackResult(
        base_prompt=base.text,
        perturbation=suffix,
        perturbed_prompt=assemble(base, pert).text,
        final_loss=final_loss,
        trajectory=tuple(trajectory),
        evaluations=evaluations,
        config=cfg,
        wall_ms=int((time.perf_counter() - started) * 1000),
    )


def greedy_attack(base: Prompt, loss: LossFn, cfg: AttackConfig, jobs: int = 1) -> AttackResult:
    """Sequential slot-by-slot greedy search.

    At slot p every charset character is appended to the already-fixed prefix
    and the loss of the partial suffix is evaluated (later slots absent); the
    argmin character is fixed, ties going to the lowest codepoint. Exactly
    L * |charset| evaluations. Trajectory entries record the loss of the
    growing suffix after each slot.

    ``greedy_mode="independent"`` instead ranks single characters by their
    solo loss and concatenates the best L in rank order (the alternative
    reading of a one-shot top-L pick); this costs |charset| + 1 evaluations.
    """
    if cfg.method != "greedy":
        raise ValueError(f"config method {cfg.method!r} is not 'greedy'")
    started = time.perf_counter()
    ev = Evaluator(loss, jobs=jobs)
    chars = cfg.charset.chars

    if cfg.greedy_mode == "independent":
        losses = ev.batch([assemble_text(base.text, c) for c in chars])
        ranked = sorted(zip(chars, losses), key=lambda cl: (cl[1], ord(cl[0])))
        suffix = "".join(ch for ch, _ in ranked[: cfg.L])
        final = ev(assemble_text(base.text, suffix))
        return _result(base, suffix, final, [(0, final)], ev.count, cfg, started)

    chosen = ""
    trajectory: list[tuple[int, float]] = []
    for slot in range(cfg.L):
        candidates = [chosen + c for c in chars]
        losses = ev.batch([assemble_text(base.text, cand) for cand in candidates])
        best_char, best_loss = _argmin_lowest_codepoint(chars, losses)
        chosen += best_char
        trajectory.append((slot, best_loss))
    return _result(base, chosen, trajectory[-1][1], trajectory, ev.count, cfg, started)


def genetic_attack(base: Prompt, loss: LossFn, cfg: AttackConfig, jobs: int = 1) -> AttackResult:
    """Minimal deterministic genetic algorithm.

    Initialization enumerates the whole suffix space when it fits inside the
    population, otherwise samples uniformly with replacement. Each generation
    keeps the single best individual unchanged and fills the rest with
    children from size-2 tournaments, uniform per-slot crossover, and per-slot
    mutation. All draws come from one splitmix64 stream seeded by
    ``seed XOR GENETIC_ROLE`` in a fixed order (two index draws per parent,
    one word per crossover slot, one float per mutation slot plus one index
    when the mutation fires), so the run is reproducible bit for bit.
    """
    if cfg.method != "genetic":
        raise ValueError(f"config method {cfg.method!r} is not 'genetic'")
    started = time.perf_counter()
    ev = Evaluator(loss, jobs=jobs)
    chars = cfg.charset.chars
    stream = SplitMix64(cfg.seed ^ GENETIC_ROLE)

    space = len(chars) ** cfg.L
    if space <= cfg.genetic.population:
        population = ["".join(tup) for tup in itertools.product(chars, repeat=cfg.L)]
    else:
        population = [
            "".join(chars[stream.next_index(len(chars))] for _ in range(cfg.L))
            for _ in range(cfg.genetic.population)
        ]

    losses = ev.batch([assemble_text(base.text, s) for s in population])
    best_idx = min(range(len(population)), key=lambda i: (losses[i], i))
    best_suffix, best_loss = population[best_idx], losses[best_idx]
    trajectory = [(0, best_loss)]

    def tournament() -> str:
        i = stream.next_index(len(population))
        j = stream.next_index(len(population))
        if losses[j] < losses[i] or (losses[j] == losses[i] and j < i):
            return population[j]
        return population[i]

    for gen in range(1, cfg.genetic.generations + 1):
        elite = population[best_idx]
        children = [elite]
        for _ in range(len(population) - 1):
            p1 = tournament()
            p2 = tournament()
            slots = [p1[s] if stream.next_u64() & 1 else p2[s] for s in range(cfg.L)]
            for s in range(cfg.L):
                if stream.next_float() < cfg.genetic.mutation_rate:
                    slots[s] = chars[stream.next_index(len(chars))]
            children.append("".join(slots))
        population = children
        losses = ev.batch([assemble_text(base.text, s) for s in population])
        best_idx = min(range(len(population)), key=lambda i: (losses[i], i))
        if losses[best_idx] < best_loss:
            best_suffix, best_loss = population[best_idx], losses[best_idx]
        trajectory.append((gen, best_loss))

    return _result(base, best_suffix, best_loss, trajectory, ev.count, cfg, started)


def brute_force_attack(base: Prompt, loss: LossFn, cfg: AttackConfig, jobs: int = 1) -> AttackResult:
    """Exhaustive enumeration oracle; returns the global argmin.

    Candidates are visited in lexicographic charset order and ties keep the
    first hit, so the result is unique. Trajectory records improvements only.
    """
    if cfg.method != "brute":
        raise ValueError(f"config method {cfg.method!r} is not 'brute'")
    space = len(cfg.charset) ** cfg.L
    if space > cfg.brute_cap:
        raise SpaceTooLargeError(f"{len(cfg.charset)}^{cfg.L} = {space} exceeds cap {cfg.brute_cap}")
    started = time.perf_counter()
    ev = Evaluator(loss, jobs=jobs)

    best_suffix, best_loss = None, None
    trajectory: list[tuple[int, float]] = []
    index = 0
    candidates = ("".join(tup) for tup in itertools.product(cfg.charset.chars, repeat=cfg.L))
    while True:
        chunk = list(itertools.islice(candidates, 512))
        if not chunk:
            break
        for suffix, value in zip(chunk, ev.batch([assemble_text(base.text, s) for s in chunk])):
            if best_loss is None or value < best_loss:
                best_suffix, best_loss = suffix, value
                trajectory.append((index, value))
            index += 1
    return _result(base, best_suffix, best_loss, trajectory, ev.count, cfg, started)


def random_attack(base: Prompt, loss: LossFn, cfg: AttackConfig) -> AttackResult:
    """The Random baseline: a single uniform suffix draw, evaluated once."""
    if cfg.method != "random":
        raise ValueError(f"config method {cfg.method!r} is not 'random'")
    started = time.perf_counter()
    ev = Evaluator(loss)
    pert = random_perturbation(cfg.seed, cfg.charset, cfg.L)
    value = ev(assemble_text(base.text, pert.chars))
    return _result(base, pert.chars, value, [(0, value)], ev.count, cfg, started)


def project_row_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of one row onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    feasible = u - css / ks > 0.0
    rho = ks[feasible][-1]
    theta = css[feasible][-1] / rho
    return np.maximum(v - theta, 0.0)


def project_rows_to_simplex(w: np.ndarray) -> np.ndarray:
    return np.vstack([project_row_to_simplex(row) for row in w])


def _discretize_weights(weights: np.ndarray, charset: Charset) -> str:
    out = []
    for row in weights:
        peak = row.max()
        out.append(min(charset.chars[i] for i in np.flatnonzero(row == peak)))
    return "".join(out)


def pgd_attack(base: Prompt, loss, cfg: AttackConfig, backend, jobs: int = 1) -> AttackResult:
    """Projected gradient descent over a row-stochastic relaxed suffix.

    Weights start uniform; each step takes an analytic gradient of the cosine
    loss through the relaxed encoder, descends, and projects every row back
    onto the probability simplex. The weights are discretized (row argmax,
    ties to the lowest codepoint) after every projection as well as at the
    end, and the best discrete candidate seen is returned, which keeps the
    reported trajectory non-increasing. ``evaluations`` counts relaxed
    gradient evaluations plus discrete loss invocations.

    Requires a gradient-capable backend (the synthetic encoder); remote
    backends raise CapabilityError.
    """
    if cfg.method != "pgd":
        raise ValueError(f"config method {cfg.method!r} is not 'pgd'")
    if not backend.capabilities.supports_gradients:
        raise CapabilityError(f"backend {backend.id} does not expose gradients; PGD unavailable")
    started = time.perf_counter()
    ev = Evaluator(loss, jobs=jobs)
    value_and_grad = loss.value_and_grad_embedding

    prefix = base.text + " "
    insert_at = len(prefix)
    weights = np.full((cfg.L, len(cfg.charset)), 1.0 / len(cfg.charset))

    best_suffix = _discretize_weights(weights, cfg.charset)
    best_loss = ev(assemble_text(base.text, best_suffix))
    trajectory = [(0, best_loss)]
    relaxed_evals = 0

    for step in range(1, cfg.pgd.steps + 1):
        emb, pullback = backend.embed_relaxed_raw(prefix, weights, cfg.charset, insert_at)
        _, grad_emb = value_and_grad(np.asarray(emb.values))
        relaxed_evals += 1
        weights = project_rows_to_simplex(weights - cfg.pgd.step_size * pullback(grad_emb))
        suffix = _discretize_weights(weights, cfg.charset)
        value = ev(assemble_text(base.text, suffix))
        if value < best_loss:
            best_suffix, best_loss = suffix, value
        trajectory.append((step, best_loss))

    return _result(base, best_suffix, best_loss, trajectory, ev.count + relaxed_evals, cfg, started)


def run_attack(base: Prompt, loss, cfg: AttackConfig, backend=None, jobs: int = 1) -> AttackResult:
    """Dispatch on ``cfg.method``; PGD additionally needs the backend."""
    if cfg.method == "greedy":
        return greedy_attack(base, loss, cfg, jobs=jobs)
    if cfg.method == "genetic":
        return genetic_attack(base, loss, cfg, jobs=jobs)
    if cfg.method == "brute":
        return brute_force_attack(base, loss, cfg, jobs=jobs)
    if cfg.method == "random":
        return random_attack(base, loss, cfg)
    if cfg.method == "pgd":
        if backend is None:
            raise ValueError("pgd requires the backend argument")
        return pgd_attack(base, loss, cfg, backend, jobs=jobs)
    raise ValueError(f"unknown method {cfg.method!r}")
