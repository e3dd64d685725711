import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hvdc_mopf.evaluation import EvaluatedSolution
from hvdc_mopf.metrics import (RunRecord, RunStats, front_quality, gd, iterations_to_stabilize,
                               nondominated_fraction, normalize, pareto_filter, reference_front,
                               sp, stats_csv, union_bounds)

points = st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=2, max_size=12)


def sol(f, violation=0.0):
    f = np.asarray(f, dtype=float)
    return EvaluatedSolution(np.zeros(1), f, violation, violation == 0.0, f)


def test_gd_examples():
    assert gd([[1, 1]], [[0, 0], [2, 2]]) == pytest.approx(1.41421, abs=1e-5)
    assert gd([[0, 0]], [[0, 0], [2, 2]]) == 0.0
    assert gd([[3, 0], [0, 4]], [[0, 0]]) == pytest.approx(5.0 / 2)


def test_gd_errors():
    with pytest.raises(ValueError):
        gd([], [[0, 0]])
    with pytest.raises(ValueError):
        gd([[0, 0]], [[0, 0, 0]])


@given(points, points, st.floats(0.1, 10))
def test_gd_homogeneous(f, r, k):
    f, r = np.array(f, float), np.array(r, float)
    assert gd(f * k, r * k) == pytest.approx(k * gd(f, r), rel=1e-9, abs=1e-12)


@given(points, points)
def test_gd_zero_iff_subset(f, r):
    f, r = np.array(f, float), np.array(r, float)
    subset = all(any(np.array_equal(p, q) for q in r) for p in f)
    assert (gd(f, r) == 0.0) == subset


def test_sp_examples():
    assert sp([[0, 0], [1, 0], [2, 0], [3, 0]]) == 0.0
    # nearest-neighbour distances 1, 1, 3, 3 -> sample std of {1,1,3,3}
    assert sp([[0], [1], [4], [7]]) == pytest.approx(math.sqrt(4 / 3))
    # the two-distance case straight from the definition
    d = np.array([1.0, 3.0])
    assert math.sqrt(np.sum((d.mean() - d) ** 2) / (len(d) - 1)) == pytest.approx(1.41421, abs=1e-5)


def test_sp_errors_and_norm():
    with pytest.raises(ValueError):
        sp([[1, 1]])
    with pytest.raises(ValueError):
        sp([[0, 0], [1, 1]], norm="l3")
    f = [[0, 0], [1, 1], [3, 0]]
    assert sp(f, "l1") != sp(f, "l2")


@given(points)
def test_sp_two_points_and_permutation(f):
    f = np.array(f, float)
    assert sp(f[:2]) == 0.0
    perm = np.random.default_rng(len(f)).permutation(len(f))
    assert sp(f[perm]) == pytest.approx(sp(f), abs=1e-12)
    assert sp(f) >= 0


def test_nondominated_fraction_examples():
    assert nondominated_fraction([sol([1, 1])] * 4) == 1.0
    assert nondominated_fraction([sol([1, 1]), sol([2, 2]), sol([3, 3])]) == pytest.approx(1 / 3)
    assert nondominated_fraction([sol([0, 1]), sol([1, 0]), sol([0, 0], 0.5)]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        nondominated_fraction([])


def test_nondominated_fraction_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        pop = [sol(rng.integers(0, 6, 3), 0.0 if rng.random() < 0.7 else float(rng.integers(1, 4)))
               for _ in range(n)]

        def dom(a, b):
            if a.feasible != b.feasible:
                return a.feasible
            if not a.feasible:
                return a.violation < b.violation
            return all(a.f <= b.f) and any(a.f < b.f)

        free = sum(not any(dom(a, b) for a in pop if a is not b) for b in pop)
        assert nondominated_fraction(pop) == free / n


def test_iterations_to_stabilize_examples():
    assert iterations_to_stabilize([1.0, 1.0, 1.0]) == 0
    assert iterations_to_stabilize([0.2, 0.96, 0.5, 0.97, 1.0], 0.95) == 3
    assert iterations_to_stabilize([0.5, 0.99, 0.99], 1.0) is None
    assert iterations_to_stabilize([0.5, 0.6, 0.96]) == 2


def test_iterations_to_stabilize_errors():
    with pytest.raises(ValueError):
        iterations_to_stabilize([])
    with pytest.raises(ValueError):
        iterations_to_stabilize([1.0], threshold=0.0)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0.05, 1.0))
def test_iterations_to_stabilize_definition(h, thr):
    k = iterations_to_stabilize(h, thr)
    expected = next((i for i in range(len(h)) if all(v >= thr for v in h[i:])), None)
    assert k == expected


def test_reference_front_and_filter():
    a = [[0, 2], [1, 1]]
    b = [[1, 1], [2, 0], [2, 2]]
    ref = reference_front([a, b])
    assert sorted(map(tuple, ref.tolist())) == [(0, 2), (1, 1), (2, 0)]
    assert pareto_filter([[1, 1], [1, 1]]).shape == (1, 2)


def test_normalization_and_quality():
    lo, hi = union_bounds([[[0, 10], [10, 30]], [[5, 20]]])
    assert lo.tolist() == [0, 10] and hi.tolist() == [10, 30]
    assert normalize([[5, 20]], lo, hi).tolist() == [[0.5, 0.5]]
    assert normalize([[1, 4]], np.array([1, 4]), np.array([1, 4])).tolist() == [[0, 0]]
    q = front_quality([[0, 30], [10, 10]], [[0, 10], [10, 10]], bounds=(lo, hi))
    assert q.gd == pytest.approx(1.0 / 2)
    assert q.sp == 0.0
    assert math.isnan(front_quality([[0, 0]], [[0, 0]]).sp)


def _records():
    return [RunRecord("mopso", 1, 10, 2.0, 0.1, 0.5, 30),
            RunRecord("mopso", 2, None, 3.0, 0.3, 0.1, 20),
            RunRecord("mopso", 3, 20, 1.0, 0.2, 0.3, 25),
            RunRecord("nsga2", 1, 5, 1.5, 0.05, 0.2, 50)]


def test_run_stats_aggregates():
    agg = RunStats(_records()).aggregate()
    m = agg["mopso"]
    assert m["runs"] == 3 and m["not_stabilized"] == 1
    assert m["iterations_to_stabilize"] == {"min": 10.0, "max": 20.0, "mean": 15.0, "n": 2}
    assert m["elapsed"]["mean"] == pytest.approx(2.0)
    for algo in agg.values():
        for col in ("iterations_to_stabilize", "elapsed", "gd", "sp"):
            a = algo[col]
            assert a["min"] <= a["mean"] <= a["max"]


def test_run_stats_recompute_from_rows():
    recs = _records()
    stats = RunStats(recs)
    agg = stats.aggregate()
    for algo in ("mopso", "nsga2"):
        for col in ("elapsed", "gd", "sp"):
            vals = [getattr(r, col) for r in recs if r.algorithm == algo]
            assert agg[algo][col]["mean"] == math.fsum(vals) / len(vals)
            assert agg[algo][col]["max"] == max(vals) and agg[algo][col]["min"] == min(vals)


def test_stats_csv_column_order():
    text = stats_csv(RunStats(_records()))
    header, mopso, nsga2 = text.strip().splitlines()
    assert header.split(",")[:7] == ["algorithm", "iterations_to_stabilize_max",
                                     "iterations_to_stabilize_min", "iterations_to_stabilize_mean",
                                     "elapsed_max", "elapsed_min", "elapsed_mean"]
    assert mopso.split(",")[0] == "mopso" and mopso.split(",")[-2:] == ["3", "1"]
    assert nsga2.startswith("nsga2,5.0,5.0,5.0")
