"""Feasibility-first Pareto dominance (minimization)."""

from __future__ import annotations

import numpy as np


def dominates(a, b) -> bool:
    """Constraint-dominance between two evaluated solutions.

    A feasible solution beats an infeasible one; two infeasible ones compare
    by violation; two feasible ones by ordinary Pareto dominance.
    """
    if a.feasible != b.feasible:
        return a.feasible
    if not a.feasible:
        return a.violation < b.violation
    fa, fb = np.asarray(a.f), np.asarray(b.f)
    if fa.shape != fb.shape:
        raise ValueError("objective vectors differ in length")
    return bool(np.all(fa <= fb) and np.any(fa < fb))


def pareto_dominates(fa, fb) -> bool:
    fa, fb = np.asarray(fa), np.asarray(fb)
    return bool(np.all(fa <= fb) and np.any(fa < fb))


def domination_matrix(f, violation, feasible) -> np.ndarray:
    """``D[i, j]`` is True when solution i constraint-dominates solution j."""
    f = np.asarray(f, dtype=float)
    viol = np.asarray(violation, dtype=float)
    feas = np.asarray(feasible, dtype=bool)
    with np.errstate(invalid="ignore"):
        le = np.all(f[:, None, :] <= f[None, :, :], axis=-1)
        lt = np.any(f[:, None, :] < f[None, :, :], axis=-1)
    pareto = le & lt
    fi, fj = feas[:, None], feas[None, :]
    return np.where(fi & fj, pareto, np.where(fi != fj, fi, viol[:, None] < viol[None, :]))


def population_arrays(pop):
    f = np.array([s.f for s in pop], dtype=float)
    viol = np.array([s.violation for s in pop], dtype=float)
    feas = np.array([s.feasible for s in pop], dtype=bool)
    return f, viol, feas


def nondominated_sort(f, violation, feasible) -> list[np.ndarray]:
    """Fronts of indices, best first."""
    dom = domination_matrix(f, violation, feasible)
    count = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append(current)
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        for fr in fronts:
            count[fr] = -1
        current = np.flatnonzero(count == 0)
    return fronts


def crowding_distance(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    n, m = f.shape
    d = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(m):
        order = np.argsort(f[:, k], kind="stable")
        lo, hi = f[order[0], k], f[order[-1], k]
        d[order[0]] = d[order[-1]] = np.inf
        span = hi - lo
        if not np.isfinite(span) or span <= 0:
            continue
        d[order[1:-1]] += (f[order[2:], k] - f[order[:-2], k]) / span
    return d


def nondominated_mask(pop) -> np.ndarray:
    if len(pop) == 0:
        return np.zeros(0, dtype=bool)
    dom = domination_matrix(*population_arrays(pop))
    return ~dom.any(axis=0)


def nondominated_fraction(pop) -> float:
    """Share of ``pop`` not constraint-dominated by another member of ``pop``."""
    if len(pop) == 0:
        raise ValueError("empty population")
    return float(nondominated_mask(pop).mean())
