"""Front-quality metrics, stabilization detection and multi-run statistics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .optimizers.dominance import nondominated_fraction, pareto_dominates

__all__ = [
    "gd", "sp", "nondominated_fraction", "iterations_to_stabilize", "pareto_filter",
    "reference_front", "union_bounds", "normalize", "FrontQuality", "RunRecord", "RunStats",
    "front_quality", "stats_csv",
]


def _points(a, name) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :] if a.size else a.reshape(0, 0)
    if a.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return a


def _nearest(a, b, norm="l2", exclude_self=False) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    if norm == "l2":
        d = np.sqrt(np.sum(diff * diff, axis=-1))
    elif norm == "l1":
        d = np.sum(np.abs(diff), axis=-1)
    else:
        raise ValueError(f"unknown norm {norm!r}; use 'l2' or 'l1'")
    if exclude_self:
        np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def gd(front, reference) -> float:
    """Generational distance: sqrt(sum of squared nearest-reference distances) / N."""
    f, r = _points(front, "front"), _points(reference, "reference")
    if f.shape[1] != r.shape[1]:
        raise ValueError("front and reference differ in dimension")
    d = _nearest(f, r)
    return float(math.sqrt(float(np.sum(d * d))) / len(f))


def sp(front, norm: str = "l2") -> float:
    """Spacing: sample standard deviation of nearest-neighbour distances within the front."""
    f = _points(front, "front")
    if len(f) < 2:
        raise ValueError("spacing needs at least 2 points")
    d = _nearest(f, f, norm, exclude_self=True)
    return float(math.sqrt(float(np.sum((d.mean() - d) ** 2)) / (len(f) - 1)))


def iterations_to_stabilize(history, threshold: float = 0.95):
    """First index from which the fraction stays >= threshold; None if never."""
    h = np.asarray(history, dtype=float)
    if h.size == 0:
        raise ValueError("empty history")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    below = np.flatnonzero(h < threshold)
    if below.size == 0:
        return 0
    first = int(below[-1]) + 1
    return first if first < h.size else None


def pareto_filter(points) -> np.ndarray:
    """Unique non-dominated rows of ``points`` (in first-seen order)."""
    pts = np.asarray(points, dtype=float)
    keep = []
    for i, p in enumerate(pts):
        if any(pareto_dominates(q, p) for q in pts):
            continue
        if any(np.array_equal(p, pts[k]) for k in keep):
            continue
        keep.append(i)
    return pts[keep]


def reference_front(fronts) -> np.ndarray:
    """Non-dominated union of several fronts."""
    stacked = [np.asarray(f, dtype=float) for f in fronts if len(f)]
    if not stacked:
        raise ValueError("no points to build a reference front")
    return pareto_filter(np.vstack(stacked))


def union_bounds(fronts):
    pts = np.vstack([np.asarray(f, dtype=float) for f in fronts if len(f)])
    return pts.min(axis=0), pts.max(axis=0)


def normalize(points, lo, hi) -> np.ndarray:
    """Min-max scaling to [0, 1]; constant objectives map to 0."""
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    return (np.asarray(points, dtype=float) - lo) / span


@dataclass(frozen=True)
class FrontQuality:
    gd: float
    sp: float
    reference: str = "pooled"


def front_quality(front, reference, *, bounds=None, sp_norm="l2", reference_id="pooled"):
    """GD and SP of ``front``, optionally after min-max scaling with ``bounds``."""
    f, r = np.asarray(front, dtype=float), np.asarray(reference, dtype=float)
    if bounds is not None:
        f, r = normalize(f, *bounds), normalize(r, *bounds)
    spacing = sp(f, sp_norm) if len(f) >= 2 else math.nan
    return FrontQuality(gd(f, r), spacing, reference_id)


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    seed: int
    iterations_to_stabilize: int | None
    elapsed: float
    gd: float
    sp: float
    front_size: int


_AGG_COLUMNS = ("iterations_to_stabilize", "elapsed", "gd", "sp")


class RunStats:
    """Per-run rows plus min/max/mean per algorithm (NaN-free columns only)."""

    def __init__(self, records):
        self.records = list(records)

    def algorithms(self):
        return sorted({r.algorithm for r in self.records})

    def column(self, algorithm, name) -> list[float]:
        vals = [getattr(r, name) for r in self.records if r.algorithm == algorithm]
        return [float(v) for v in vals if v is not None and not math.isnan(float(v))]

    def aggregate(self) -> dict:
        out = {}
        for algo in self.algorithms():
            out[algo] = {}
            for name in _AGG_COLUMNS:
                vals = self.column(algo, name)
                if vals:
                    out[algo][name] = {"min": min(vals), "max": max(vals),
                                       "mean": math.fsum(vals) / len(vals), "n": len(vals)}
                else:
                    out[algo][name] = {"min": None, "max": None, "mean": None, "n": 0}
            runs = [r for r in self.records if r.algorithm == algo]
            out[algo]["runs"] = len(runs)
            out[algo]["not_stabilized"] = sum(r.iterations_to_stabilize is None for r in runs)
        return out


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def stats_csv(stats: RunStats) -> str:
    """Aggregate table: per algorithm, iterations (max/min/mean), time (max/min/mean), GD/SP (max/min/mean)."""
    agg = stats.aggregate()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["algorithm"]
    for name in _AGG_COLUMNS:
        header += [f"{name}_max", f"{name}_min", f"{name}_mean"]
    header += ["runs", "not_stabilized"]
    w.writerow(header)
    for algo in stats.algorithms():
        row = [algo]
        for name in _AGG_COLUMNS:
            a = agg[algo][name]
            row += [_fmt(a["max"]), _fmt(a["min"]), _fmt(a["mean"])]
        row += [agg[algo]["runs"], agg[algo]["not_stabilized"]]
        w.writerow(row)
    return buf.getvalue()
