"""Multi-population genetic algorithm with ring migration.

Genomes are row-major flattened weight matrices.  Fitness is minimised.
Every random draw is derived from ``(master_seed, generation, ...)`` so a run
is reproducible regardless of evaluation concurrency or resumption from a
checkpoint.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .netsim import ConfigError

SCHEMA_VERSION = 1

# stream tags keep operator draws independent of each other
_INIT, _SELECT, _CROSS, _MUTATE, _MIGRATE, _EVAL, _REEVAL = range(7)


@dataclass
class GaConfig:
    n_subpopulations: int = 10
    subpop_size: int = 30
    n_genes: int = 100
    mutation_rate: float = 0.004
    elitism_fraction: float = 0.15
    crossover_rate: float = 0.3
    migration_interval: int = 20
    migration_fraction: float = 0.15
    max_generations: int = 500
    gene_min: float = -1.0
    gene_max: float = 0.0
    init_range: tuple[float, float] = (-0.2, 0.0)
    reevaluation_schedule: dict[int, int] = field(default_factory=lambda: {0: 1, 100: 4, 300: 8})
    master_seed: int = 0
    selection_pressure: float = 2.0
    mutation_mode: str = "uniform"
    mutation_sigma: float = 0.02
    n_workers: int = 1

    def __post_init__(self):
        self.init_range = tuple(float(v) for v in self.init_range)
        self.reevaluation_schedule = {int(k): int(v) for k, v in self.reevaluation_schedule.items()}
        self.validate()

    def validate(self) -> None:
        for name in ("mutation_rate", "elitism_fraction", "crossover_rate", "migration_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigError(f"{name} must be in [0, 1], got {v!r}")
        if self.subpop_size < 2:
            raise ConfigError("subpop_size must be >= 2")
        if self.n_subpopulations < 1:
            raise ConfigError("n_subpopulations must be >= 1")
        if self.migration_interval > 0 and self.migration_fraction > 0 and self.n_subpopulations < 2:
            raise ConfigError("migration needs at least 2 subpopulations")
        if self.gene_min > self.gene_max:
            raise ConfigError("gene_min must not exceed gene_max")
        lo, hi = self.init_range
        if lo > hi or lo < self.gene_min or hi > self.gene_max:
            raise ConfigError(f"init_range {self.init_range} must lie inside [gene_min, gene_max]")
        if self.max_generations < 0:
            raise ConfigError("max_generations must be >= 0")
        if self.mutation_mode not in ("uniform", "gaussian"):
            raise ConfigError("mutation_mode must be 'uniform' or 'gaussian'")
        if 0 not in self.reevaluation_schedule or min(self.reevaluation_schedule.values()) < 1:
            raise ConfigError("reevaluation_schedule needs an entry for generation 0 and repeats >= 1")

    @classmethod
    def desk(cls, **overrides) -> GaConfig:
        base = dict(n_subpopulations=4, subpop_size=12, max_generations=60)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def paper(cls, **overrides) -> GaConfig:
        return cls(**overrides)

    def n_repeats(self, generation: int) -> int:
        keys = [k for k in self.reevaluation_schedule if k <= generation]
        return self.reevaluation_schedule[max(keys)]

    @property
    def n_elite(self) -> int:
        return min(self.subpop_size, math.floor(self.elitism_fraction * self.subpop_size + 0.5))

    @property
    def n_migrants(self) -> int:
        return math.ceil(round(self.migration_fraction * self.subpop_size, 9))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["init_range"] = list(self.init_range)
        d["reevaluation_schedule"] = {str(k): v for k, v in self.reevaluation_schedule.items()}
        return d

    def canonical_dict(self) -> dict:
        """Settings that determine results; the worker count does not."""
        d = self.to_dict()
        d.pop("n_workers")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GaConfig:
        return cls(**d)


@dataclass
class Population:
    genes: np.ndarray  # (n_subpopulations, subpop_size, n_genes)
    fitness: np.ndarray  # (n_subpopulations, subpop_size)

    def copy(self) -> Population:
        return Population(self.genes.copy(), self.fitness.copy())


@dataclass
class GaRunReport:
    history: list[dict]
    best_genome: np.ndarray
    best_fitness: float
    evaluation_count: int
    generations_completed: int
    config: dict
    wall_time: float = 0.0

    def best_by_generation(self) -> np.ndarray:
        """Best fitness over all subpopulations, one value per generation."""
        gens = sorted({h["generation"] for h in self.history})
        return np.array([min(h["best"] for h in self.history if h["generation"] == g) for g in gens])

    def median_at(self, generation: int) -> float:
        return float(np.median([h["median"] for h in self.history if h["generation"] == generation]))

    def to_dict(self) -> dict:
        # wall_time is left out so that identical runs export identical bytes
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "generations_completed": self.generations_completed,
            "evaluation_count": self.evaluation_count,
            "best_fitness": self.best_fitness,
            "best_genome": self.best_genome.tolist(),
            "history": self.history,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_trace_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("generation,subpop,best,median\n")
            for h in self.history:
                fh.write(f"{h['generation']},{h['subpop']},{h['best']!r},{h['median']!r}\n")


def _rng(cfg: GaConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.master_seed, *key]))


def evaluation_seed(master_seed: int, generation: int, subpop: int, index: int, tag: int = _EVAL) -> int:
    ss = np.random.SeedSequence([master_seed, tag, generation, subpop, index])
    return int(ss.generate_state(1, np.uint64)[0])


def init_population(cfg: GaConfig) -> Population:
    rng = _rng(cfg, _INIT)
    lo, hi = cfg.init_range
    genes = rng.uniform(lo, hi, size=(cfg.n_subpopulations, cfg.subpop_size, cfg.n_genes))
    return Population(genes, np.full((cfg.n_subpopulations, cfg.subpop_size), np.inf))


def linear_rank_probabilities(fitnesses, pressure: float = 2.0) -> np.ndarray:
    """Selection probabilities from linear ranking; lowest fitness ranks best.

    Tied fitnesses share their average rank and hence their probability.
    """
    f = np.asarray(fitnesses, dtype=np.float64)
    n = f.size
    if n == 1:
        return np.ones(1)
    pos = rankdata(-f, method="average")  # best -> n
    return (2 - pressure) / n + 2 * (pos - 1) * (pressure - 1) / (n * (n - 1))


def sus(probabilities, n_offspring: int, rng: np.random.Generator) -> np.ndarray:
    """Stochastic universal sampling: one random offset, ``n_offspring`` evenly spaced pointers."""
    p = np.asarray(probabilities, dtype=np.float64)
    cum = np.cumsum(p / p.sum())
    start = rng.uniform(0, 1.0 / n_offspring)
    pointers = start + np.arange(n_offspring) / n_offspring
    idx = np.searchsorted(cum, pointers, side="right")
    return np.minimum(idx, p.size - 1)


def sus_select(fitnesses, n_offspring: int, rng: np.random.Generator, pressure: float = 2.0) -> np.ndarray:
    f = np.asarray(fitnesses, dtype=np.float64)
    if not np.all(np.isfinite(f)):
        raise ValueError("fitness values must be finite")
    chosen = sus(linear_rank_probabilities(f, pressure), n_offspring, rng)
    return rng.permutation(chosen)


def crossover(parent_a, parent_b, rate: float, rng: np.random.Generator, swap_share: float = 0.5):
    """Gene-wise crossover.

    A gene is swapped between the children with probability
    ``rate * swap_share`` and replaced by the parents' mean in both children
    with probability ``rate * (1 - swap_share)``.
    """
    a = np.asarray(parent_a, dtype=np.float64)
    b = np.asarray(parent_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("parents must have equal length")
    u = rng.random(a.shape)
    swap = u < rate * swap_share
    avg = (~swap) & (u < rate)
    c1, c2 = a.copy(), b.copy()
    c1[swap], c2[swap] = b[swap], a[swap]
    mean = 0.5 * (a[avg] + b[avg])
    c1[avg] = mean
    c2[avg] = mean
    return c1, c2


def mutate(genome, cfg: GaConfig, rng: np.random.Generator) -> np.ndarray:
    g = np.array(genome, dtype=np.float64)
    hit = rng.random(g.shape) < cfg.mutation_rate
    if cfg.mutation_mode == "uniform":
        g[hit] = rng.uniform(cfg.gene_min, cfg.gene_max, size=int(hit.sum()))
    else:
        g[hit] += rng.normal(0.0, cfg.mutation_sigma, size=int(hit.sum()))
    return np.clip(g, cfg.gene_min, cfg.gene_max)


def migrate(pop: Population, cfg: GaConfig, generation: int) -> Population:
    """Ring migration: copies of random residents go to both neighbours and replace their worst."""
    s_count, size = pop.fitness.shape
    k = cfg.n_migrants
    if s_count < 2 or k == 0:
        return pop.copy()
    rng = _rng(cfg, _MIGRATE, generation)
    to_left = [rng.choice(size, size=k, replace=False) for _ in range(s_count)]
    to_right = [rng.choice(size, size=k, replace=False) for _ in range(s_count)]
    out = pop.copy()
    for s in range(s_count):
        left, right = (s - 1) % s_count, (s + 1) % s_count
        in_genes = np.concatenate([pop.genes[left, to_right[left]], pop.genes[right, to_left[right]]])
        in_fit = np.concatenate([pop.fitness[left, to_right[left]], pop.fitness[right, to_left[right]]])
        n_in = min(in_fit.size, size)
        worst = np.argsort(pop.fitness[s], kind="stable")[::-1][:n_in]
        out.genes[s, worst] = in_genes[:n_in]
        out.fitness[s, worst] = in_fit[:n_in]
    return out


def _evaluate_batch(objective, jobs, n_workers: int) -> list[float]:
    def one(job):
        genome, seed, n_rep = job
        try:
            value = float(objective(genome, seed, n_rep))
        except Exception:
            return math.inf
        return value if math.isfinite(value) else math.inf

    if n_workers <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=n_workers) as ex:
        return list(ex.map(one, jobs))


def _record(history: list, generation: int, pop: Population) -> None:
    for s in range(pop.fitness.shape[0]):
        f = pop.fitness[s]
        history.append({"generation": generation, "subpop": s, "best": float(f.min()), "median": float(np.median(f))})


def _breed(pop: Population, cfg: GaConfig, generation: int):
    """Offspring genes for every subpopulation plus the elite indices to keep."""
    size = cfg.subpop_size
    n_off = size - cfg.n_elite
    elites, offspring = [], []
    for s in range(cfg.n_subpopulations):
        order = np.argsort(pop.fitness[s], kind="stable")
        elites.append(order[: cfg.n_elite])
        if n_off == 0:
            offspring.append(np.empty((0, cfg.n_genes)))
            continue
        n_parents = n_off + (n_off % 2)
        parents = sus_select(pop.fitness[s], n_parents, _rng(cfg, _SELECT, generation, s), cfg.selection_pressure)
        cx_rng = _rng(cfg, _CROSS, generation, s)
        mut_rng = _rng(cfg, _MUTATE, generation, s)
        kids = []
        for a, b in zip(parents[0::2], parents[1::2]):
            c1, c2 = crossover(pop.genes[s, a], pop.genes[s, b], cfg.crossover_rate, cx_rng)
            kids.extend([mutate(c1, cfg, mut_rng), mutate(c2, cfg, mut_rng)])
        offspring.append(np.array(kids[:n_off]))
    return elites, offspring


def _clean_fitness(values) -> np.ndarray:
    # failed evaluations come back as inf; keep them last but finite for ranking
    f = np.asarray(values, dtype=np.float64)
    return np.where(np.isfinite(f), f, np.finfo(np.float64).max)


def run_ga(
    cfg: GaConfig,
    objective: Callable,
    checkpoint_path=None,
    resume: dict | None = None,
    stop_after: int | None = None,
    progress: Callable | None = None,
) -> GaRunReport:
    """Evolve ``cfg.n_subpopulations`` ring-connected subpopulations.

    ``objective(genome, seed, n_repeats)`` must be deterministic for a given
    seed.  Elites keep their stored fitness; the whole population is
    re-scored whenever the re-evaluation schedule raises the repeat count.
    With ``checkpoint_path`` the state is saved after every migration
    interval and at the end.  ``stop_after`` halts after that generation
    (used to emulate an interrupted run).
    """
    t0 = time.perf_counter()
    if resume is not None:
        pop = Population(np.array(resume["genes"]), np.array(resume["fitness"]))
        history = list(resume["history"])
        evals = int(resume["evaluation_count"])
        start = int(resume["generation"]) + 1
    else:
        pop = init_population(cfg)
        n_rep = cfg.n_repeats(0)
        jobs = [
            (pop.genes[s, i], evaluation_seed(cfg.master_seed, 0, s, i), n_rep)
            for s in range(cfg.n_subpopulations)
            for i in range(cfg.subpop_size)
        ]
        pop.fitness = _clean_fitness(_evaluate_batch(objective, jobs, cfg.n_workers)).reshape(pop.fitness.shape)
        evals = len(jobs)
        history = []
        _record(history, 0, pop)
        start = 1
    completed = start - 1

    for gen in range(start, cfg.max_generations + 1):
        n_rep = cfg.n_repeats(gen)
        if n_rep > cfg.n_repeats(gen - 1):
            jobs = [
                (pop.genes[s, i], evaluation_seed(cfg.master_seed, gen, s, i, _REEVAL), n_rep)
                for s in range(cfg.n_subpopulations)
                for i in range(cfg.subpop_size)
            ]
            pop.fitness = _clean_fitness(_evaluate_batch(objective, jobs, cfg.n_workers)).reshape(pop.fitness.shape)
            evals += len(jobs)

        elites, offspring = _breed(pop, cfg, gen)
        jobs = [
            (offspring[s][j], evaluation_seed(cfg.master_seed, gen, s, j), n_rep)
            for s in range(cfg.n_subpopulations)
            for j in range(len(offspring[s]))
        ]
        scores = _clean_fitness(_evaluate_batch(objective, jobs, cfg.n_workers))
        evals += len(jobs)

        new = pop.copy()
        pos = 0
        for s in range(cfg.n_subpopulations):
            e = elites[s]
            n_e = len(e)
            n_o = len(offspring[s])
            new.genes[s, :n_e] = pop.genes[s, e]
            new.fitness[s, :n_e] = pop.fitness[s, e]
            if n_o:
                new.genes[s, n_e:] = offspring[s]
                new.fitness[s, n_e:] = scores[pos : pos + n_o]
            pos += n_o
        pop = new

        if cfg.migration_interval > 0 and gen % cfg.migration_interval == 0:
            pop = migrate(pop, cfg, gen)

        _record(history, gen, pop)
        completed = gen
        if progress is not None:
            progress(gen, pop)
        if checkpoint_path is not None and cfg.migration_interval > 0 and gen % cfg.migration_interval == 0:
            save_checkpoint(checkpoint_path, cfg, gen, pop, history, evals)
        if stop_after is not None and gen >= stop_after:
            break

    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, cfg, completed, pop, history, evals)
    s, i = np.unravel_index(np.argmin(pop.fitness), pop.fitness.shape)
    return GaRunReport(
        history=history,
        best_genome=pop.genes[s, i].copy(),
        best_fitness=float(pop.fitness[s, i]),
        evaluation_count=evals,
        generations_completed=completed,
        config=cfg.canonical_dict(),
        wall_time=time.perf_counter() - t0,
    )


def save_checkpoint(path, cfg: GaConfig, generation: int, pop: Population, history, evals: int) -> None:
    state = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.canonical_dict(),
        "generation": generation,
        "genes": pop.genes.tolist(),
        "fitness": pop.fitness.tolist(),
        "history": history,
        "evaluation_count": evals,
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(state))
    tmp.replace(path)


def load_checkpoint(path) -> dict:
    state = json.loads(Path(path).read_text())
    if state.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported checkpoint schema {state.get('schema_version')!r}")
    return state
