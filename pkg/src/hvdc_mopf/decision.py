"""Second stage: fuzzy c-means grouping of a front and grey relational ranking.

Each of the three clusters is tied to the objective its center is best at;
within a cluster the member with the highest priority membership ``d`` is
the recommended compromise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .evaluation import OBJECTIVES


@dataclass(frozen=True)
class FcmResult:
    membership: np.ndarray  # (n_points, c), rows sum to 1
    centers: np.ndarray  # (c, n_obj) in the clustered (normalized) space
    iterations: int
    loss: float
    loss_history: tuple

    def hard_labels(self) -> np.ndarray:
        return np.argmax(self.membership, axis=1)


def minmax(points) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns become 0."""
    p = np.asarray(points, dtype=float)
    lo, hi = p.min(axis=0), p.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (p - lo) / span


def fcm_loss(points, membership, centers, t: float = 2.0) -> float:
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    return float(np.sum(membership**t * d2))


def _memberships(points, centers, t):
    d = np.sqrt(np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1))
    u = np.empty_like(d)
    zero = d <= 1e-300
    for i in range(len(points)):
        if zero[i].any():
            u[i] = 0.0
            u[i, np.flatnonzero(zero[i])[0]] = 1.0
            continue
        ratio = (d[i][:, None] / d[i][None, :]) ** (2.0 / (t - 1.0))
        u[i] = 1.0 / ratio.sum(axis=1)
    return u


def fcm(points, c: int = 3, t: float = 2.0, tol: float = 1e-6, max_iter: int = 200,
        seed: int = 0, normalize: bool = True) -> FcmResult:
    """Fuzzy c-means with alternating center and membership updates.

    Stops when no center moves more than ``tol``. The loss is recorded after
    every full (center, membership) update, so the history never increases.
    """
    w = np.asarray(points, dtype=float)
    if w.ndim != 2 or len(w) < c:
        raise ValueError(f"need at least {c} points, got {len(w)}")
    if c < 1 or t <= 1:
        raise ValueError("c must be >= 1 and t > 1")
    if normalize:
        w = minmax(w)
    rng = np.random.default_rng(seed)
    u = rng.random((len(w), c))
    u /= u.sum(axis=1, keepdims=True)
    centers = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        ut = u**t
        new = (ut.T @ w) / ut.sum(axis=0)[:, None]
        u = _memberships(w, new, t)
        history.append(fcm_loss(w, u, new, t))
        moved = math.inf if centers is None else float(np.max(np.linalg.norm(new - centers, axis=1)))
        centers = new
        if moved < tol:
            break
    return FcmResult(u, centers, it, history[-1], tuple(history))


def label_clusters(centers, objectives=OBJECTIVES) -> tuple[str, ...]:
    """Objective label per cluster from the cheapest one-to-one assignment.

    Cost of a permutation is the sum of each center's coordinate on its
    assigned objective. Permutations are scanned in lexicographic order and
    only a strictly cheaper one replaces the incumbent.
    """
    v = np.asarray(centers, dtype=float)
    k = v.shape[0]
    if v.shape != (k, k) or k != len(objectives):
        raise ValueError("need one center per objective in a square array")
    best, best_cost = None, math.inf
    for perm in itertools.permutations(range(k)):
        cost = sum(v[j, perm[j]] for j in range(k))
        if cost < best_cost:
            best, best_cost = perm, cost
    return tuple(objectives[i] for i in best)


def normalize_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(~np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be finite, non-negative and not all zero")
    return w / w.sum()


@dataclass(frozen=True)
class GrpRanking:
    benefit: np.ndarray
    gamma_pos: np.ndarray
    gamma_neg: np.ndarray
    v_pos: np.ndarray
    v_neg: np.ndarray
    v0: float
    d: np.ndarray
    weights: np.ndarray


def benefit_scores(f) -> np.ndarray:
    """(max - f) / (max - min) per column, 1 where the column is constant."""
    f = np.asarray(f, dtype=float)
    lo, hi = f.min(axis=0), f.max(axis=0)
    span = hi - lo
    b = np.ones_like(f)
    varying = span > 0
    b[:, varying] = (hi[varying] - f[:, varying]) / span[varying]
    return b


def grp_rank(members, weights=(1, 1, 1), rho: float = 0.5) -> GrpRanking:
    """Grey relational projection of each member onto the ideal scheme.

    The grey coefficient uses the fixed spread of benefit space (0 to 1) for
    its min/max distances, so a one-member set is still well defined.
    """
    f = np.asarray(members, dtype=float)
    if f.ndim != 2 or len(f) == 0:
        raise ValueError("empty member set")
    w = normalize_weights(weights)
    if w.size != f.shape[1]:
        raise ValueError("one weight per objective required")
    b = benefit_scores(f)
    dmin, dmax = 0.0, 1.0
    g_pos = (dmin + rho * dmax) / (np.abs(b - 1.0) + rho * dmax)
    g_neg = (dmin + rho * dmax) / (np.abs(b - 0.0) + rho * dmax)
    norm = math.sqrt(float(np.sum(w * w)))
    proj = w * w / norm
    v_pos, v_neg = g_pos @ proj, g_neg @ proj
    v0 = float(np.sum(proj))
    num = (v0 - v_neg) ** 2
    d = num / (num + (v0 - v_pos) ** 2)
    return GrpRanking(b, g_pos, g_neg, v_pos, v_neg, v0, d, w)


@dataclass(frozen=True)
class ClusterReport:
    cluster: int
    label: str
    members: tuple  # indices into the ranked front
    d: tuple
    selected: int  # index into the ranked front


@dataclass(frozen=True)
class CompromiseReport:
    clusters: tuple  # ClusterReport ordered O, E, V_de
    objectives: np.ndarray  # ranked front (O, E, V_de), lexicographically sorted
    order: np.ndarray  # ranked front row -> input row
    assignment: np.ndarray  # cluster per input row
    weights: np.ndarray
    fcm: FcmResult

    @property
    def selected_rows(self) -> tuple:
        """Input-row index of each compromise, ordered O, E, V_de."""
        return tuple(int(self.order[c.selected]) for c in self.clusters)

    def d_for_rows(self) -> np.ndarray:
        out = np.full(len(self.order), np.nan)
        for c in self.clusters:
            for k, dv in zip(c.members, c.d):
                out[self.order[k]] = dv
        return out


def _objective_matrix(front):
    if hasattr(front, "members"):
        front = front.members
    if len(front) and hasattr(front[0], "objectives_all"):
        return np.array([m.objectives_all for m in front], dtype=float)
    return np.asarray(front, dtype=float)


def _fill_empty(labels, membership):
    labels = labels.copy()
    c = membership.shape[1]
    for j in range(c):
        if np.any(labels == j):
            continue
        counts = np.bincount(labels, minlength=c)
        donors = np.flatnonzero(counts[labels] > 1)
        i = donors[np.argmax(membership[donors, j])]
        labels[i] = j
    return labels


def select_compromise(front, weights=(1, 1, 1), *, seed: int = 0, t: float = 2.0,
                      tol: float = 1e-6, max_iter: int = 200) -> CompromiseReport:
    """Cluster a three-objective front and pick the best-ranked member per cluster.

    ``front`` is a :class:`ParetoSet`, a list of evaluated solutions, or an
    ``(n, 3)`` array of (O, E, V_de). Rows are ranked in lexicographic
    objective order, so ties in ``d`` go to the lexicographically smaller row.
    """
    f_in = _objective_matrix(front)
    if f_in.ndim != 2 or f_in.shape[1] != len(OBJECTIVES):
        raise ValueError("front must have three objective columns (O, E, V_de)")
    if len(f_in) < 3:
        raise ValueError(f"front too small: {len(f_in)} members, need at least 3")
    w = normalize_weights(weights)
    order = np.lexsort(f_in.T[::-1])
    f = f_in[order]

    res = fcm(f, c=3, t=t, tol=tol, max_iter=max_iter, seed=seed)
    hard = _fill_empty(res.hard_labels(), res.membership)
    labels = label_clusters(res.centers)

    reports = []
    for j in range(3):
        idx = np.flatnonzero(hard == j)
        rank = grp_rank(f[idx], w)
        best = int(idx[int(np.argmax(rank.d))])
        reports.append(ClusterReport(j, labels[j], tuple(idx.tolist()),
                                     tuple(rank.d.tolist()), best))
    reports.sort(key=lambda r: OBJECTIVES.index(r.label))

    assignment = np.empty(len(f), dtype=int)
    assignment[order] = hard
    return CompromiseReport(tuple(reports), f, order, assignment, w, res)
