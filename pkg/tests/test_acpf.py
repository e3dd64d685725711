import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hvdc_mopf.acpf import (AcInjectionSet, branch_flows, build_admittance, flat_start,
                            mismatch_vector, solve_ac)
from hvdc_mopf.controls import base_setpoints
from hvdc_mopf.errors import ConvergenceError, NumericalError
from hvdc_mopf.grid import AcBus, Branch, Generator, NetworkCase
from hvdc_mopf.vsc import solve_coupled

from oracle_values import (IEEE14_LOAD_MW, IEEE14_PG_MW, IEEE14_VA_DEG, IEEE14_VM, TWO_BUS_VA,
                           TWO_BUS_VM)


def two_bus(p_load=0.1, q_load=0.0, r=0.0, x=0.1):
    return NetworkCase(
        base_mva=100.0,
        ac_buses=(AcBus(1, "slack", 0.0, 0.0), AcBus(2, "pq", p_load, q_load)),
        branches=(Branch(1, 2, r, x),),
        generators=(Generator(1, 0.0, 1.0, 0.0, 2.0, -2.0, 2.0),),
    )


def injections(case, sp=None):
    sp = sp or base_setpoints(case)
    p, q = -case.p_load(), -case.q_load()
    vt = np.ones(case.n_bus)
    for k, g in enumerate(case.generators):
        i = case.bus_index[g.bus]
        vt[i] = sp.u_gen[k]
        if i != case.slack_bus:
            p[i] += sp.p_gen[k]
    return AcInjectionSet(p, q, tuple(b.kind for b in case.ac_buses), vt)


def test_two_bus_closed_form():
    case = two_bus()
    sol = solve_ac(case, injections(case))
    assert sol.vm[1] == pytest.approx(TWO_BUS_VM, abs=1e-10)
    assert sol.va[1] == pytest.approx(TWO_BUS_VA, abs=1e-10)
    assert sol.va[1] == pytest.approx(-0.01, abs=1e-4)  # first-order estimate


def test_no_load_network_is_flat():
    case = two_bus(p_load=0.0)
    sol = solve_ac(case, injections(case))
    assert sol.iterations == 0
    assert np.allclose(sol.vm, 1.0) and np.allclose(sol.va, 0.0)
    assert sol.mismatch == 0.0


def test_ieee14_matches_reference_solver(case_ac):
    sol = solve_ac(case_ac, injections(case_ac))
    assert np.max(np.abs(sol.vm - IEEE14_VM)) < 1e-6
    assert np.max(np.abs(np.degrees(sol.va) - IEEE14_VA_DEG)) < 1e-5
    assert sol.va[case_ac.slack_bus] == 0.0
    assert sol.iterations <= 6


def test_ieee14_balance_from_branch_flows(case_ac):
    sol = solve_ac(case_ac, injections(case_ac))
    slack = case_ac.slack_bus
    p_gen = [g.p for g in case_ac.generators]
    p_gen[case_ac.slack_generator] = sol.p_inj[slack] + case_ac.p_load()[slack]
    assert np.array(p_gen) * 100 == pytest.approx(IEEE14_PG_MW, abs=1e-6)
    line_loss = sum(f.loss for f in branch_flows(case_ac, sol))
    shunt_loss = sum(b.gs * sol.vm[i] ** 2 for i, b in enumerate(case_ac.ac_buses))
    assert sum(p_gen) - case_ac.p_load().sum() - line_loss - shunt_loss == pytest.approx(0.0, abs=1e-8)
    assert case_ac.p_load().sum() * 100 == pytest.approx(IEEE14_LOAD_MW)


def test_live_reference_solver(case_ac):
    pypower = pytest.importorskip("pypower.api")
    res, ok = pypower.runpf(pypower.case14(), pypower.ppoption(VERBOSE=0, OUT_ALL=0, PF_TOL=1e-12))
    assert ok
    sol = solve_ac(case_ac, injections(case_ac))
    assert np.max(np.abs(sol.vm - res["bus"][:, 7])) < 1e-6


def test_mismatch_at_solution_is_below_tolerance(case_ac):
    inj = injections(case_ac)
    ybus = build_admittance(case_ac)
    sol = solve_ac(ybus, inj, tol=1e-10)
    assert np.max(np.abs(mismatch_vector(ybus, sol.v, inj))) <= 1e-10


def test_warm_start_converges_faster(case_ac):
    inj = injections(case_ac)
    cold = solve_ac(case_ac, inj)
    warm = solve_ac(case_ac, inj, cold)
    assert warm.iterations <= 1
    assert np.allclose(warm.vm, cold.vm, atol=1e-9)


def test_flat_start_respects_targets(case_ac):
    v = flat_start(injections(case_ac))
    assert v[0] == pytest.approx(1.06) and v[3] == 1.0


def test_divergence_is_reported_with_stage():
    case = two_bus(p_load=20.0)  # far beyond the line's transfer limit
    with pytest.raises(NumericalError) as info:
        solve_ac(case, injections(case), max_iter=15)
    assert info.value.stage == "ac"
    assert isinstance(info.value, ConvergenceError) or "singular" in str(info.value).lower()


def test_tap_off_lattice_rejected(case2t):
    with pytest.raises(ValueError):
        build_admittance(case2t, taps=[0.978, 0.975, 0.9375])


def test_tap_model_symmetric_and_scaled(case2t):
    y1 = build_admittance(case2t, taps=[1.0, 1.0, 1.0])
    y2 = build_admittance(case2t, taps=[1.05, 1.0, 1.0])
    assert np.allclose(y1, y1.T) and np.allclose(y2, y2.T)
    t = case2t.transformers[0]
    i, j = case2t.bus_index[t.from_bus], case2t.bus_index[t.to_bus]
    assert y2[i, j] == pytest.approx(y1[i, j] / 1.05)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.6), st.floats(-0.2, 0.3), st.floats(0.01, 0.05), st.floats(0.05, 0.3))
def test_two_bus_balance_property(p, q, r, x):
    case = two_bus(p, q, r, x)
    sol = solve_ac(case, injections(case))
    flow = branch_flows(case, sol)[0]
    slack_p = sol.p_inj[0]
    assert slack_p - p - flow.loss == pytest.approx(0.0, abs=1e-8)
    assert math.isclose(sol.va[0], 0.0)


def test_coupled_ac_only_case_matches_plain_solve(case_ac):
    sol = solve_coupled(case_ac, base_setpoints(case_ac))
    assert sol.dc is None or len(sol.dc.u) == 0
    assert np.max(np.abs(sol.ac.vm - IEEE14_VM)) < 1e-6
