"""Pieces shared by the optimizers: result container, RNG streams, batch evaluation."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..evaluation import OpfProblem
from ..grid import NetworkCase

# stream purposes; part of the seed-sequence key so draws never collide
INIT, MOVE, MUTATE, PBEST, ARCHIVE, VARIATION = range(6)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``.

    Every random decision draws from a stream keyed by what it is for, so
    results do not depend on evaluation order or worker count.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def as_problem(problem_or_case, objectives=None):
    if isinstance(problem_or_case, NetworkCase):
        return OpfProblem(problem_or_case) if objectives is None else OpfProblem(problem_or_case, objectives)
    return problem_or_case


@dataclass
class ParetoSet:
    """Final non-dominated set of one run plus its convergence trace."""

    algorithm: str
    seed: int
    members: list
    history: list[float]  # non-dominated fraction per iteration, index 0 = first update
    iterations: int
    elapsed: float
    gene_names: tuple = ()
    objective_names: tuple = ()
    populations: list = field(default_factory=list)  # optional per-iteration snapshots

    def __len__(self):
        return len(self.members)

    def objectives(self) -> np.ndarray:
        if not self.members:
            return np.zeros((0, len(self.objective_names)))
        return np.array([m.f for m in self.members], dtype=float)

    def decisions(self) -> np.ndarray:
        return np.array([m.x for m in self.members], dtype=float)


def sort_members(members):
    return sorted(members, key=lambda m: tuple(np.asarray(m.f).tolist()) + tuple(np.asarray(m.x).tolist()))


class BatchEvaluator:
    """Evaluate many vectors, optionally in worker processes (order preserved)."""

    def __init__(self, problem, workers: int = 1):
        self.problem = problem
        self.workers = max(1, int(workers))
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __call__(self, xs) -> list:
        xs = list(xs)
        if self._pool is None:
            return [self.problem.evaluate(x) for x in xs]
        chunk = max(1, len(xs) // (4 * self.workers))
        return list(self._pool.map(self.problem.evaluate, xs, chunksize=chunk))
