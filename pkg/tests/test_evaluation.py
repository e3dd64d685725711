import dataclasses
import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hvdc_mopf.controls import base_setpoints
from hvdc_mopf.evaluation import (FAILED_VIOLATION, Encoding, OpfProblem, constraint_violation,
                                  evaluate, objective_emissions, objective_losses, objective_vdev,
                                  objective_vector, violation_terms, _excess)
from hvdc_mopf.grid import Generator
from hvdc_mopf.vsc import solve_coupled


def test_gene_layout_2t(case2t):
    enc = Encoding(case2t)
    assert enc.names == ("P_G2", "P_G3", "P_G4", "P_G5", "U_G1", "U_G2", "U_G3", "U_G4", "U_G5",
                         "P_s2", "Q_s1", "Q_s2", "U_dc1", "T1", "T2", "T3", "Q_C1")
    # the dc-slack converter has no P_s gene, the scheduled one no U_dc gene
    assert "P_s1" not in enc.names and "U_dc2" not in enc.names


def test_gene_layout_3t(case3t):
    names = Encoding(case3t).names
    assert [n for n in names if n.startswith(("P_s", "Q_s", "U_dc"))] == \
        ["P_s2", "P_s3", "Q_s1", "Q_s2", "Q_s3", "U_dc1"]


def test_decode_snaps_discrete_genes(case2t):
    enc = Encoding(case2t)
    x = enc.base_vector()
    t, q = enc.names.index("T1"), enc.names.index("Q_C1")
    x[t], x[q] = 1.013, 0.173
    sp = enc.decode(x)
    assert sp.taps[0] == pytest.approx(1.0125, abs=1e-12)
    assert sp.shunts[0] == pytest.approx(0.17, abs=1e-12)


def test_decode_clamps_and_keeps_bounds(case2t):
    enc = Encoding(case2t)
    x = enc.upper.copy()
    assert np.array_equal(enc.snap(x), x)
    x = enc.lower.copy()
    assert np.array_equal(enc.snap(x), x)
    y = enc.snap(enc.upper + 5.0)
    assert np.allclose(y, enc.upper)


def test_gene_count_mismatch(case2t):
    with pytest.raises(ValueError, match="expected 17 genes"):
        Encoding(case2t).decode(np.zeros(5))


def test_encode_decode_round_trip(case3t):
    enc = Encoding(case3t)
    sp = base_setpoints(case3t)
    back = enc.decode(enc.encode(sp))
    for name in ("p_gen", "u_gen", "conv_q", "conv_udc", "taps", "shunts"):
        assert np.allclose(getattr(back, name), getattr(sp, name))


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_snapped_vectors_respect_lattice(case2t, data):
    enc = Encoding(case2t)
    u = np.array(data.draw(st.lists(st.floats(-0.5, 1.5), min_size=len(enc), max_size=len(enc))))
    x = enc.snap(enc.lower + u * (enc.upper - enc.lower))
    assert np.all(x >= enc.lower - 1e-12) and np.all(x <= enc.upper + 1e-12)
    for v, g in zip(x, enc.genes):
        if g.discrete:
            k = (v - g.lo) / g.step
            assert abs(k - round(k)) < 1e-9


def test_emission_examples():
    g = Generator(1, 0.0, 1.0, 0.0, 5.0, -1.0, 1.0, alpha=0.01, beta=0.2, gamma=10.0)
    assert objective_emissions([2.0], [g]) == pytest.approx(10.44)
    assert objective_emissions([0.0, 0.0], [g, g]) == pytest.approx(20.0)


@given(st.floats(0, 3), st.floats(0, 1))
def test_emission_monotone(p, dp):
    g = Generator(1, 0.0, 1.0, 0.0, 5.0, -1.0, 1.0, alpha=3.0, beta=0.5, gamma=1.0)
    assert objective_emissions([p + dp], [g]) >= objective_emissions([p], [g])


def test_losses_equal_balance(case2t):
    sol = solve_coupled(case2t, base_setpoints(case2t))
    o = objective_losses(sol)
    balance_mw = (sol.p_gen.sum() - case2t.p_load().sum()) * case2t.base_mva
    assert o == pytest.approx(balance_mw, abs=1e-6 * case2t.base_mva)


def test_vdev_hand_sum(case_ac):
    sol = solve_coupled(case_ac, base_setpoints(case_ac))
    expected = sum((vm - b.u_set) ** 2 for vm, b in zip(sol.ac.vm, case_ac.ac_buses))
    assert objective_vdev(sol, case_ac) == pytest.approx(expected, rel=1e-12)
    vm = np.array([1.01, 0.99])
    assert float(np.sum((vm - 1.0) ** 2)) == pytest.approx(2e-4)


def test_vdev_includes_dc_buses(case2t):
    sol = solve_coupled(case2t, base_setpoints(case2t))
    ac_only = float(np.sum((sol.ac.vm - [b.u_set for b in case2t.ac_buses]) ** 2))
    dc = float(np.sum((sol.dc.u - 1.0) ** 2))
    assert objective_vdev(sol, case2t) == pytest.approx(ac_only + dc, rel=1e-12)


def test_excess_normalization():
    assert _excess(0.6, -0.4, 0.5) == pytest.approx(0.1 / 0.9)
    assert _excess(0.5, -0.4, 0.5) == 0.0
    assert _excess(0.0, -0.4, 0.5) == 0.0
    assert _excess(-0.5, -0.4, 0.5) == pytest.approx(0.1 / 0.9)


def test_base_point_evaluates(case2t):
    ev = evaluate(Encoding(case2t).base_vector(), case2t)
    assert ev.error is None and np.all(np.isfinite(ev.f))
    # standard reactive limits are exceeded at the pre-optimization dispatch
    terms = violation_terms(ev.solution, case2t)
    assert ev.violation == pytest.approx(sum(terms.values()))
    assert set(terms) <= {f"Q_G{k}" for k in range(1, 6)}


def test_capability_violation(case2t):
    enc = Encoding(case2t)
    x = enc.base_vector()
    x[enc.names.index("P_s2")] = 1.0
    x[enc.names.index("Q_s2")] = 1.0
    ev = evaluate(x, case2t)
    assert not ev.feasible and ev.violation > 0
    assert "S_cap2" in violation_terms(ev.solution, case2t)


def test_capability_boundary_is_feasible(case2t):
    cv = case2t.converters[1]
    r = cv.r_max
    assert _excess(r * r, cv.r_min**2, cv.r_max**2) == 0.0


def test_objectives_reproducible_from_solution(case3t):
    ev = evaluate(Encoding(case3t).base_vector(), case3t)
    assert np.array_equal(objective_vector(ev.solution, case3t), ev.objectives_all)
    assert constraint_violation(ev.solution, case3t) == ev.violation


def test_evaluate_is_deterministic(case2t):
    prob = OpfProblem(case2t)
    x = np.random.default_rng(3).random(17) * (prob.upper - prob.lower) + prob.lower
    a, b = prob.evaluate(x), prob.evaluate(x)
    assert np.array_equal(a.f, b.f) and a.violation == b.violation and np.array_equal(a.x, b.x)


def test_failed_solve_sentinel(case2t):
    heavy = dataclasses.replace(
        case2t, ac_buses=tuple(dataclasses.replace(b, p_load=b.p_load * 12) for b in case2t.ac_buses))
    ev = evaluate(Encoding(heavy).base_vector(), heavy)
    assert not ev.feasible
    assert ev.violation == FAILED_VIOLATION
    assert np.all(np.isinf(ev.f)) and ev.error


def test_problem_selection_and_pickle(case2t):
    prob = OpfProblem(case2t, ("O", "E"))
    assert prob.n_obj == 2
    clone = pickle.loads(pickle.dumps(prob))
    x = prob.encoding.base_vector()
    assert np.array_equal(clone.evaluate(x).f, prob.evaluate(x).f)
    assert prob.evaluate(x).solution is None
    with pytest.raises(ValueError):
        OpfProblem(case2t, ("O", "cost"))


def test_e_lower_bound_for_feasible_points(case2t):
    prob = OpfProblem(case2t)
    ev = prob.evaluate(prob.encoding.base_vector())
    assert ev.objectives_all[1] >= sum(g.gamma for g in case2t.generators)
    assert ev.objectives_all[0] >= 0 and ev.objectives_all[2] >= 0
    assert math.isfinite(ev.objectives_all[0])
