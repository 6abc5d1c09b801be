"""Differential evolution, DE/rand/1/bin, over snake design genomes.

A genome is the flat vector ``[alpha_1, d_1, n_1, ..., alpha_s, d_s, n_s]``.
The disk counts stay real-valued during the search and are rounded when a
genome is decoded into a :class:`~snakedex.kinematics.DesignParams`.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .kinematics import DesignParams, SegmentSpec

__all__ = [
    "DEConfig",
    "GenerationRecord",
    "RunTrace",
    "FitnessEvaluationError",
    "mutate",
    "crossover_binomial",
    "decode",
    "encode",
    "default_bounds",
    "integer_genes_for",
    "config_for_segments",
    "run",
    "run_repeats",
    "derive_seed",
    "write_traces",
    "read_traces",
]

# alpha (rad), d (mm), n (disks)
DEFAULT_GENE_BOUNDS = ((0.1, 1.5), (0.2, 8.0), (1.0, 10.0))


class FitnessEvaluationError(RuntimeError):
    pass


@dataclass
class DEConfig:
    bounds: np.ndarray
    F_weight: float = 0.8
    CR: float = 0.7
    NP: Optional[int] = None
    integer_genes: tuple = ()
    max_generations: Optional[int] = 50
    time_budget_s: Optional[float] = None
    seed: int = 1
    repeats: int = 1

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=np.float64).reshape(-1, 2)
        if self.NP is None:
            self.NP = 10 * len(self.bounds)
        if self.NP < 4:
            raise ValueError(f"NP must be >= 4, got {self.NP}")
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            raise ValueError("each gene needs min < max")
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError(f"CR must be in [0, 1], got {self.CR}")
        if self.max_generations is None and self.time_budget_s is None:
            raise ValueError("set max_generations and/or time_budget_s")
        if self.max_generations is not None and self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.time_budget_s is not None and self.time_budget_s <= 0:
            raise ValueError("time_budget_s must be > 0")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        self.integer_genes = tuple(int(i) for i in self.integer_genes)

    @property
    def n_genes(self):
        return len(self.bounds)


@dataclass
class GenerationRecord:
    repeat: int
    gen: int
    best_F: float
    mean_F: float
    best_genome: list
    elapsed_s: float


@dataclass
class RunTrace:
    repeat: int
    seed: int
    records: List[GenerationRecord] = field(default_factory=list)
    best_F: float = math.inf
    best_genome: Optional[np.ndarray] = None
    evaluations: int = 0

    @property
    def best_history(self):
        return np.array([r.best_F for r in self.records])

    def summary(self):
        return {
            "type": "summary",
            "repeat": self.repeat,
            "seed": self.seed,
            "best_F": self.best_F,
            "best_genome": [float(v) for v in self.best_genome],
            "generations": len(self.records) - 1,
            "evaluations": self.evaluations,
        }


def mutate(r1, r2, r3, F_weight, bounds=None):
    """Donor ``r1 + F * (r2 - r3)``, clamped to ``bounds`` when given."""
    v = np.asarray(r1, dtype=np.float64) + F_weight * (np.asarray(r2, dtype=np.float64) - np.asarray(r3, dtype=np.float64))
    if bounds is not None:
        b = np.asarray(bounds, dtype=np.float64)
        v = np.clip(v, b[:, 0], b[:, 1])
    return v


def crossover_binomial(target, donor, CR, rng):
    """Binomial crossover with one donor gene forced at a uniform index."""
    target = np.asarray(target, dtype=np.float64)
    donor = np.asarray(donor, dtype=np.float64)
    if target.shape != donor.shape:
        raise ValueError("target and donor lengths differ")
    take = rng.random(target.shape[0]) < CR
    take[rng.integers(target.shape[0])] = True
    return np.where(take, donor, target)


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def decode(genome, integer_genes=None, **design_kw):
    """Design parameters for a genome ``[alpha, d, n] * s``."""
    g = np.asarray(genome, dtype=np.float64)
    if np.any(np.isnan(g)):
        raise ValueError("genome contains NaN")
    if g.size % 3:
        raise ValueError(f"genome length must be a multiple of 3, got {g.size}")
    if integer_genes is None:
        integer_genes = integer_genes_for(g.size // 3)
    vals = [float(v) for v in g]
    for i in integer_genes:
        vals[i] = max(1, _round_half_up(vals[i]))
    segs = [SegmentSpec(vals[k], vals[k + 1], int(vals[k + 2])) for k in range(0, len(vals), 3)]
    return DesignParams(tuple(segs), **design_kw)


def encode(p):
    return p.genome()


def integer_genes_for(n_segments):
    return tuple(3 * k + 2 for k in range(n_segments))


def default_bounds(n_segments):
    return np.array(DEFAULT_GENE_BOUNDS * n_segments, dtype=np.float64)


def config_for_segments(n_segments, **kw):
    """DE setup for an ``s``-segment snake; NP defaults to 10 genes-worth."""
    if n_segments < 1:
        raise ValueError("need at least one segment to optimize")
    kw.setdefault("NP", 30 * n_segments)
    return DEConfig(bounds=default_bounds(n_segments), integer_genes=integer_genes_for(n_segments), **kw)


def derive_seed(seed, repeat):
    """Seed of repeat ``repeat``: consecutive integers from ``seed``."""
    return int(seed) + int(repeat)


def _evaluate(fitness, pop, gen, mapper):
    def call(item):
        i, x = item
        try:
            return float(fitness(x))
        except Exception as exc:
            raise FitnessEvaluationError(f"fitness failed at generation {gen}, member {i}: {exc}") from exc

    items = list(enumerate(pop))
    out = list(mapper(call, items)) if mapper is not None else [call(it) for it in items]
    return np.array(out)


def _run_one(fitness, cfg, repeat, seed, mapper=None, on_generation=None):
    rng = np.random.default_rng(seed)
    lo, hi = cfg.bounds[:, 0], cfg.bounds[:, 1]
    NP, m = cfg.NP, cfg.n_genes
    t0 = time.perf_counter()
    trace = RunTrace(repeat=repeat, seed=seed)

    pop = lo + (hi - lo) * rng.random((NP, m))
    fit = _evaluate(fitness, pop, 0, mapper)
    trace.evaluations += NP

    def record(gen):
        b = int(np.argmin(fit))
        rec = GenerationRecord(
            repeat=repeat,
            gen=gen,
            best_F=float(fit[b]),
            mean_F=float(fit.mean()),
            best_genome=[float(v) for v in pop[b]],
            elapsed_s=time.perf_counter() - t0,
        )
        trace.records.append(rec)
        if on_generation is not None:
            on_generation(rec)

    record(0)
    gen = 0
    while True:
        if cfg.max_generations is not None and gen >= cfg.max_generations:
            break
        if cfg.time_budget_s is not None and time.perf_counter() - t0 >= cfg.time_budget_s:
            break
        gen += 1
        trials = np.empty_like(pop)
        for i in range(NP):
            r1, r2, r3 = rng.choice(np.delete(np.arange(NP), i), size=3, replace=False)
            donor = mutate(pop[r1], pop[r2], pop[r3], cfg.F_weight, cfg.bounds)
            trials[i] = crossover_binomial(pop[i], donor, cfg.CR, rng)
        trial_fit = _evaluate(fitness, trials, gen, mapper)
        trace.evaluations += NP
        better = trial_fit <= fit
        pop[better] = trials[better]
        fit[better] = trial_fit[better]
        record(gen)

    b = int(np.argmin(fit))
    trace.best_F = float(fit[b])
    trace.best_genome = pop[b].copy()
    return trace


def run_repeats(make_fitness, cfg, mapper=None, on_generation=None):
    """Run ``cfg.repeats`` independent DE searches.

    ``make_fitness(seed)`` builds the objective for one repeat from that
    repeat's derived seed, so stochastic objectives can follow the repeat.
    ``mapper(fn, items)`` may evaluate a population concurrently; selection
    still happens in member order.
    """
    traces = []
    for r in range(cfg.repeats):
        seed = derive_seed(cfg.seed, r)
        traces.append(_run_one(make_fitness(seed), cfg, r, seed, mapper, on_generation))
    return traces


def run(fitness, cfg, mapper=None, on_generation=None):
    """Minimize ``fitness(genome)``; returns one :class:`RunTrace` per repeat."""
    return run_repeats(lambda _seed: fitness, cfg, mapper, on_generation)


def write_traces(traces, path):
    """JSON-lines: one record per generation, then one summary per repeat."""
    with open(path, "w", encoding="utf-8") as fh:
        for tr in traces:
            for rec in tr.records:
                fh.write(json.dumps({"type": "generation", **asdict(rec)}, sort_keys=True) + "\n")
            fh.write(json.dumps(tr.summary(), sort_keys=True) + "\n")


def read_traces(path):
    traces = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            kind = d.pop("type")
            r = d["repeat"]
            if kind == "generation":
                tr = traces.setdefault(r, RunTrace(repeat=r, seed=-1))
                tr.records.append(GenerationRecord(**d))
            else:
                tr = traces.setdefault(r, RunTrace(repeat=r, seed=d["seed"]))
                tr.seed = d["seed"]
                tr.best_F = d["best_F"]
                tr.best_genome = np.array(d["best_genome"])
                tr.evaluations = d["evaluations"]
    return [traces[k] for k in sorted(traces)]
