"""Bounded external archive with an adaptive hypercube grid."""

from __future__ import annotations

import numpy as np

from .dominance import dominates


class ParetoArchive:
    """Feasible, mutually non-dominated solutions, at most ``capacity`` of them.

    The grid spans the members' objective extents, widened by ``inflation``
    times the extent on each side, split into ``divisions`` cells per
    objective. It is rebuilt after every change, so it always tracks the
    current extents.
    """

    def __init__(self, capacity: int, divisions: int = 30, inflation: float = 0.1):
        if capacity < 1 or divisions < 1:
            raise ValueError("capacity and divisions must be >= 1")
        self.capacity = capacity
        self.divisions = divisions
        self.inflation = inflation
        self.members: list = []
        self.cells = np.zeros(0, dtype=np.int64)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def objectives(self) -> np.ndarray:
        return np.array([m.f for m in self.members], dtype=float)

    def _regrid(self):
        if not self.members:
            self.cells = np.zeros(0, dtype=np.int64)
            return
        f = self.objectives()
        lo, hi = f.min(axis=0), f.max(axis=0)
        pad = self.inflation * (hi - lo)
        pad = np.where(pad > 0, pad, 1e-12 + 1e-9 * np.abs(lo))
        lo, hi = lo - pad, hi + pad
        pos = np.floor((f - lo) / (hi - lo) * self.divisions).astype(np.int64)
        pos = np.clip(pos, 0, self.divisions - 1)
        weights = self.divisions ** np.arange(f.shape[1], dtype=np.int64)
        self.cells = pos @ weights

    def insert(self, cand, rng) -> bool:
        """Add ``cand`` unless a member dominates or duplicates it.

        Members it dominates are dropped. On overflow one member of the most
        crowded cell is evicted (cell ties and the victim drawn from ``rng``).
        """
        if not cand.feasible:
            return False
        f = np.asarray(cand.f, dtype=float)
        if self.members:
            F = self.objectives()
            weak = np.all(F <= f, axis=1)
            if np.any(weak & (np.any(F < f, axis=1) | np.all(F == f, axis=1))):
                return False
            beaten = np.all(f <= F, axis=1) & np.any(f < F, axis=1)
            if beaten.any():
                self.members = [m for m, b in zip(self.members, beaten) if not b]
        self.members.append(cand)
        self._regrid()
        while len(self.members) > self.capacity:
            cells, counts = np.unique(self.cells, return_counts=True)
            crowded = cells[counts == counts.max()]
            cell = crowded[rng.integers(len(crowded))] if len(crowded) > 1 else crowded[0]
            inside = np.flatnonzero(self.cells == cell)
            victim = inside[rng.integers(len(inside))]
            del self.members[victim]
            self._regrid()
        return any(m is cand for m in self.members)

    def cell_occupancy(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, c in enumerate(self.cells.tolist()):
            out.setdefault(c, []).append(i)
        return out

    def select_leader(self, rng):
        """Roulette over occupied cells with weight 1/occupancy, then uniform in the cell."""
        if not self.members:
            raise ValueError("cannot select a leader from an empty archive")
        occ = self.cell_occupancy()
        keys = sorted(occ)
        weights = np.array([1.0 / len(occ[k]) for k in keys])
        cell = keys[rng.choice(len(keys), p=weights / weights.sum())]
        members = occ[cell]
        return self.members[members[rng.integers(len(members))]]


def archive_insert(archive: ParetoArchive, candidate, rng) -> ParetoArchive:
    archive.insert(candidate, rng)
    return archive


def select_leader(archive: ParetoArchive, rng):
    return archive.select_leader(rng)
