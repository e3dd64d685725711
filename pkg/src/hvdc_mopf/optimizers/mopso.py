"""Multi-objective particle swarm with an adaptive-grid repository."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .archive import ParetoArchive
from .common import (ARCHIVE, INIT, MOVE, MUTATE, PBEST, BatchEvaluator, ParetoSet,
                     as_problem, sort_members, stream)
from .dominance import dominates, nondominated_fraction


@dataclass(frozen=True)
class MopsoParams:
    population: int = 100
    repository: int = 100
    iterations: int = 50
    w: float = 0.73
    w_damping: float = 1.0
    c1: float = 1.5
    c2: float = 1.5
    mutation_rate: float = 0.5
    divisions: int = 30
    inflation: float = 0.1
    mutation_decay: float = 1.5
    seed: int = 0
    workers: int = 1
    record_populations: bool = False
    per_gene_random: bool = False  # True: independent r1, r2 per gene

    def __post_init__(self):
        if self.population < 1 or self.repository < 1 or self.iterations < 0:
            raise ValueError("population and repository must be >= 1, iterations >= 0")
        if self.divisions < 2:
            raise ValueError("divisions must be >= 2")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not 0 < self.w <= 1 or self.c1 < 0 or self.c2 < 0 or not 0 < self.w_damping <= 1:
            raise ValueError("w and w_damping must lie in (0, 1], c1 and c2 must be >= 0")


def uniform_population(problem, n, seed, purpose=INIT) -> np.ndarray:
    lo, hi = problem.lower, problem.upper
    return np.array([problem.snap(lo + stream(seed, purpose, i).random(lo.size) * (hi - lo))
                     for i in range(n)])


def _mutate(x, problem, rng, progress, decay):
    """Nonuniform mutation of one random gene.

    The gene moves towards a randomly chosen bound by
    ``gap * (1 - r ** ((1 - progress) ** decay))``, so steps shrink to zero as
    ``progress`` goes from 0 to 1. Discrete genes move by the same amount
    rounded to whole lattice steps (at least one).
    """
    lo, hi, step = problem.lower, problem.upper, problem.step
    j = int(rng.integers(x.size))
    up = rng.random() < 0.5
    gap = (hi[j] - x[j]) if up else (x[j] - lo[j])
    shrink = 1.0 - rng.random() ** ((1.0 - progress) ** decay)
    delta = gap * shrink
    if step[j] > 0:
        delta = step[j] * max(1, int(round(delta / step[j])))
    y = x.copy()
    y[j] = x[j] + delta if up else x[j] - delta
    return problem.snap(y)


def _fallback_leader(pbest_eval):
    i = min(range(len(pbest_eval)), key=lambda k: pbest_eval[k].violation)
    return pbest_eval[i]


def mopso_run(problem, params: MopsoParams = MopsoParams(), progress=None) -> ParetoSet:
    """Run the swarm and return the repository as a :class:`ParetoSet`.

    ``problem`` is an :class:`~hvdc_mopf.evaluation.OpfProblem` (or anything
    with ``lower/upper/step/snap/evaluate/n_obj``) or a bare case, which is
    wrapped with all three objectives. ``progress(iteration, archive_size,
    nd_fraction)`` is called after each iteration.
    """
    problem = as_problem(problem)
    p, seed = params, params.seed
    t0 = time.perf_counter()
    lo, hi = problem.lower, problem.upper
    vmax = hi - lo

    archive = ParetoArchive(p.repository, p.divisions, p.inflation)
    history: list[float] = []
    snapshots = []

    with BatchEvaluator(problem, p.workers) as run_batch:
        x = uniform_population(problem, p.population, seed)
        v = np.zeros_like(x)
        evals = run_batch(x)
        arng = stream(seed, ARCHIVE, 0)
        for e in evals:
            archive.insert(e, arng)
        pbest, pbest_eval = x.copy(), list(evals)

        w = p.w
        for it in range(1, p.iterations + 1):
            for i in range(p.population):
                rng = stream(seed, MOVE, it, i)
                leader = archive.select_leader(rng) if len(archive) else _fallback_leader(pbest_eval)
                k = lo.size if p.per_gene_random else 1
                r1, r2 = rng.random(k), rng.random(k)
                v[i] = w * v[i] + p.c1 * r1 * (pbest[i] - x[i]) + p.c2 * r2 * (leader.x - x[i])
                v[i] = np.clip(v[i], -vmax, vmax)
                x[i] = problem.snap(np.clip(x[i] + v[i], lo, hi))

            n_mut = int(round(p.mutation_rate * p.population))
            if n_mut:
                mrng = stream(seed, MUTATE, it)
                done = (it - 1) / max(p.iterations, 1)
                for i in sorted(mrng.choice(p.population, n_mut, replace=False).tolist()):
                    x[i] = _mutate(x[i], problem, mrng, done, p.mutation_decay)

            evals = run_batch(x)
            for i, e in enumerate(evals):
                if dominates(e, pbest_eval[i]):
                    take = True
                elif dominates(pbest_eval[i], e):
                    take = False
                else:
                    take = stream(seed, PBEST, it, i).random() < 0.5
                if take:
                    pbest[i], pbest_eval[i] = x[i].copy(), e

            arng = stream(seed, ARCHIVE, it)
            for e in evals:
                archive.insert(e, arng)

            history.append(nondominated_fraction(evals))
            if p.record_populations:
                snapshots.append(list(evals))
            w *= p.w_damping
            if progress is not None:
                progress(it, len(archive), history[-1])

    return ParetoSet(
        algorithm="mopso",
        seed=seed,
        members=sort_members(archive.members),
        history=history,
        iterations=p.iterations,
        elapsed=time.perf_counter() - t0,
        gene_names=tuple(problem.encoding.names) if hasattr(problem, "encoding") else (),
        objective_names=tuple(getattr(problem, "objectives", ())),
        populations=snapshots,
    )
