"""NSGA-II baseline sharing the encoding, evaluation and dominance of the swarm."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .common import VARIATION, BatchEvaluator, ParetoSet, as_problem, sort_members, stream
from .dominance import (crowding_distance, nondominated_fraction, nondominated_mask,
                        nondominated_sort, population_arrays)
from .mopso import uniform_population

NSGA_INIT = 100  # init stream purpose distinct from the swarm's


@dataclass(frozen=True)
class Nsga2Params:
    population: int = 100
    iterations: int = 50
    crossover_prob: float = 0.9
    mutation_prob: float | None = None  # None -> 1 / chromosome length
    eta_c: float = 20.0
    eta_m: float = 20.0
    seed: int = 0
    workers: int = 1
    record_populations: bool = False

    def __post_init__(self):
        if self.population < 2 or self.iterations < 0:
            raise ValueError("population must be >= 2 and iterations >= 0")
        if not 0 <= self.crossover_prob <= 1:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0 <= self.mutation_prob <= 1:
            raise ValueError("mutation_prob must lie in [0, 1]")


def _rank_and_crowding(pop):
    f, viol, feas = population_arrays(pop)
    rank = np.empty(len(pop), dtype=int)
    crowd = np.empty(len(pop))
    for r, front in enumerate(nondominated_sort(f, viol, feas)):
        rank[front] = r
        crowd[front] = crowding_distance(f[front]) if feas[front].all() else -viol[front]
    return rank, crowd


def _tournament(rank, crowd, rng, n):
    a = rng.integers(len(rank), size=n)
    b = rng.integers(len(rank), size=n)
    better_a = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(better_a, a, b)


def _sbx(p1, p2, lo, hi, eta, rng):
    """Bounded simulated binary crossover, each gene crossed with probability 0.5."""
    c1, c2 = p1.copy(), p2.copy()
    for j in range(p1.size):
        if rng.random() > 0.5 or abs(p1[j] - p2[j]) < 1e-14 or hi[j] <= lo[j]:
            continue
        y1, y2 = min(p1[j], p2[j]), max(p1[j], p2[j])
        u = rng.random()
        out = []
        for beta in (1.0 + 2.0 * (y1 - lo[j]) / (y2 - y1), 1.0 + 2.0 * (hi[j] - y2) / (y2 - y1)):
            alpha = 2.0 - beta ** -(eta + 1.0)
            if u <= 1.0 / alpha:
                bq = (u * alpha) ** (1.0 / (eta + 1.0))
            else:
                bq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
            out.append(bq)
        a = 0.5 * ((y1 + y2) - out[0] * (y2 - y1))
        b = 0.5 * ((y1 + y2) + out[1] * (y2 - y1))
        a, b = np.clip(a, lo[j], hi[j]), np.clip(b, lo[j], hi[j])
        if rng.random() < 0.5:
            a, b = b, a
        c1[j], c2[j] = a, b
    return c1, c2


def _mutate(x, problem, pm, eta, rng):
    """Polynomial mutation on continuous genes, one lattice step on discrete ones."""
    lo, hi, step = problem.lower, problem.upper, problem.step
    y = x.copy()
    for j in range(x.size):
        if rng.random() >= pm:
            continue
        if step[j] > 0:
            y[j] = x[j] + step[j] * (1 if rng.random() < 0.5 else -1)
            continue
        span = hi[j] - lo[j]
        if span <= 0:
            continue
        d1, d2 = (x[j] - lo[j]) / span, (hi[j] - x[j]) / span
        u = rng.random()
        p = 1.0 / (eta + 1.0)
        if u < 0.5:
            dq = (2 * u + (1 - 2 * u) * (1 - d1) ** (eta + 1)) ** p - 1
        else:
            dq = 1 - (2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (eta + 1)) ** p
        y[j] = x[j] + dq * span
    return problem.snap(np.clip(y, lo, hi))


def nsga2_run(problem, params: Nsga2Params = Nsga2Params(), progress=None) -> ParetoSet:
    """Generational NSGA-II; returns the feasible first front of the last population."""
    problem = as_problem(problem)
    p, seed = params, params.seed
    t0 = time.perf_counter()
    lo, hi = problem.lower, problem.upper
    pm = p.mutation_prob if p.mutation_prob is not None else 1.0 / lo.size
    n = p.population
    history: list[float] = []
    snapshots = []

    with BatchEvaluator(problem, p.workers) as run_batch:
        x = uniform_population(problem, n, seed, NSGA_INIT)
        pop = run_batch(x)
        rank, crowd = _rank_and_crowding(pop)
        for it in range(1, p.iterations + 1):
            rng = stream(seed, VARIATION, it)
            parents = _tournament(rank, crowd, rng, n + (n % 2))
            kids = []
            for a, b in zip(parents[0::2], parents[1::2]):
                c1, c2 = pop[a].x, pop[b].x
                if rng.random() < p.crossover_prob:
                    c1, c2 = _sbx(c1, c2, lo, hi, p.eta_c, rng)
                kids.append(_mutate(c1, problem, pm, p.eta_m, rng))
                kids.append(_mutate(c2, problem, pm, p.eta_m, rng))
            offspring = run_batch(kids[:n])

            union = pop + offspring
            f, viol, feas = population_arrays(union)
            chosen: list[int] = []
            for front in nondominated_sort(f, viol, feas):
                if len(chosen) + len(front) <= n:
                    chosen.extend(front.tolist())
                    continue
                if feas[front].all():
                    key = -crowding_distance(f[front])
                else:
                    key = viol[front]
                order = np.argsort(key, kind="stable")
                chosen.extend(front[order[: n - len(chosen)]].tolist())
                break
            pop = [union[i] for i in chosen]
            rank, crowd = _rank_and_crowding(pop)

            history.append(nondominated_fraction(pop))
            if p.record_populations:
                snapshots.append(list(pop))
            if progress is not None:
                progress(it, int((rank == 0).sum()), history[-1])

    front = [s for s, keep in zip(pop, nondominated_mask(pop)) if keep and s.feasible]
    unique: list = []
    for s in front:
        if not any(np.array_equal(s.f, u.f) for u in unique):
            unique.append(s)

    return ParetoSet(
        algorithm="nsga2",
        seed=seed,
        members=sort_members(unique),
        history=history,
        iterations=p.iterations,
        elapsed=time.perf_counter() - t0,
        gene_names=tuple(problem.encoding.names) if hasattr(problem, "encoding") else (),
        objective_names=tuple(getattr(problem, "objectives", ())),
        populations=snapshots,
    )
