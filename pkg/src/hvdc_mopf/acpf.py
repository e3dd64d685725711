"""Newton-Raphson AC power flow in polar coordinates.

Mismatches come from complex arithmetic, ``S_i = V_i * conj(sum_j Y_ij V_j)``,
rather than from a transcribed trigonometric form. Injections are positive
into the network. Generator reactive limits are not enforced here; they are
reported as constraint violations by :mod:`hvdc_mopf.evaluation`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SingularJacobianError
from .grid import NetworkCase, on_lattice

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 30


def build_admittance(case: NetworkCase, taps=None, shunts=None) -> np.ndarray:
    """Dense nodal admittance matrix (pu).

    ``taps`` and ``shunts`` default to the case's initial settings and must lie
    on their discrete lattices. A series element between buses i and j adds
    ``+y`` to both self terms and ``-y`` to the mutual terms, ``y = 1/(r+jx)``.
    """
    taps = [t.tap for t in case.transformers] if taps is None else list(taps)
    shunts = [s.q for s in case.shunt_comps] if shunts is None else list(shunts)
    if len(taps) != len(case.transformers) or len(shunts) != len(case.shunt_comps):
        raise ValueError("tap/shunt vector length does not match the case")
    for tr, tap in zip(case.transformers, taps):
        if not on_lattice(tap, tr.tap_min, tr.tap_max, tr.tap_step):
            raise ValueError(
                f"tap {tap} of transformer {tr.from_bus}-{tr.to_bus} is not an admissible position"
            )
    for sh, q in zip(case.shunt_comps, shunts):
        if not on_lattice(q, sh.q_min, sh.q_max, sh.q_step):
            raise ValueError(f"shunt value {q} at bus {sh.bus} is not an admissible position")

    idx = case.bus_index
    n = case.n_bus
    y = np.zeros((n, n), dtype=complex)
    for bus in case.ac_buses:
        y[idx[bus.id], idx[bus.id]] += bus.gs + 1j * bus.bs
    for br in case.branches:
        i, j = idx[br.from_bus], idx[br.to_bus]
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b
        y[i, i] += ys + ysh
        y[j, j] += ys + ysh
        y[i, j] -= ys
        y[j, i] -= ys
    for tr, tap in zip(case.transformers, taps):
        i, j = idx[tr.from_bus], idx[tr.to_bus]
        ys = 1.0 / complex(tr.r, tr.x)
        ysh = 0.5j * tr.b
        y[i, i] += (ys + ysh) / tap**2
        y[j, j] += ys + ysh
        y[i, j] -= ys / tap
        y[j, i] -= ys / tap
    for sh, q in zip(case.shunt_comps, shunts):
        y[idx[sh.bus], idx[sh.bus]] += 1j * q
    return y


@dataclass(frozen=True)
class AcInjectionSet:
    """Specified net injections and bus roles for one AC solve.

    ``kinds`` may differ from the case (a const-PV converter bus becomes
    ``"pv"``). ``v_target`` is read at slack and PV buses only.
    """

    p: np.ndarray
    q: np.ndarray
    kinds: tuple
    v_target: np.ndarray

    @property
    def slack(self) -> int:
        return self.kinds.index("slack")


@dataclass(frozen=True)
class AcSolution:
    vm: np.ndarray
    va: np.ndarray
    p_inj: np.ndarray  # net injection into the network at the solution
    q_inj: np.ndarray
    iterations: int
    mismatch: float  # max |dP|, |dQ| over the equations actually solved

    @property
    def v(self) -> np.ndarray:
        return self.vm * np.exp(1j * self.va)


def _index_sets(kinds):
    pv = np.array([i for i, k in enumerate(kinds) if k == "pv"], dtype=int)
    pq = np.array([i for i, k in enumerate(kinds) if k == "pq"], dtype=int)
    pvpq = np.sort(np.concatenate([pv, pq]))
    return pv, pq, pvpq


def mismatch_vector(ybus, v, inj: AcInjectionSet) -> np.ndarray:
    """[dP at pv+pq buses, dQ at pq buses] for the state ``v``."""
    _, pq, pvpq = _index_sets(inj.kinds)
    mis = v * np.conj(ybus @ v) - (inj.p + 1j * inj.q)
    return np.concatenate([mis[pvpq].real, mis[pq].imag])


def _jacobian(ybus, v, pq, pvpq):
    ibus = ybus @ v
    vnorm = v / np.abs(v)
    ds_dvm = v[:, None] * np.conj(ybus * vnorm[None, :]) + np.diag(np.conj(ibus) * vnorm)
    ds_dva = 1j * v[:, None] * np.conj(np.diag(ibus) - ybus * v[None, :])
    j11 = ds_dva[np.ix_(pvpq, pvpq)].real
    j12 = ds_dvm[np.ix_(pvpq, pq)].real
    j21 = ds_dva[np.ix_(pq, pvpq)].imag
    j22 = ds_dvm[np.ix_(pq, pq)].imag
    return np.block([[j11, j12], [j21, j22]])


def flat_start(inj: AcInjectionSet) -> np.ndarray:
    vm = np.ones(len(inj.kinds))
    for i, k in enumerate(inj.kinds):
        if k != "pq":
            vm[i] = inj.v_target[i]
    return vm.astype(complex)


def solve_ac(ybus, inj: AcInjectionSet, start=None, *, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> AcSolution:
    """Solve the nodal power balance for ``inj``.

    ``ybus`` is an admittance matrix or a case (built at its initial taps).

    ``start`` is ``None`` (flat start) or a previous :class:`AcSolution`; the
    voltage magnitudes at slack/PV buses are always reset to their targets.
    """
    if isinstance(ybus, NetworkCase):
        ybus = build_admittance(ybus)
    pv, pq, pvpq = _index_sets(inj.kinds)
    if inj.kinds.count("slack") != 1:
        raise ValueError("exactly one slack bus required")
    if start is None:
        v = flat_start(inj)
    else:
        v = start.v.copy()
        fixed = np.array([k != "pq" for k in inj.kinds])
        v[fixed] = inj.v_target[fixed] * np.exp(1j * np.angle(v[fixed]))
    s_sched = inj.p + 1j * inj.q
    npvpq = len(pvpq)

    it = 0
    while True:
        mis = v * np.conj(ybus @ v) - s_sched
        f = np.concatenate([mis[pvpq].real, mis[pq].imag])
        err = float(np.max(np.abs(f))) if f.size else 0.0
        if not np.isfinite(err):
            raise ConvergenceError("AC power flow diverged", stage="ac", iterations=it)
        if err <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"AC power flow did not converge in {max_iter} iterations (mismatch {err:.3e})",
                stage="ac", iterations=it,
            )
        jac = _jacobian(ybus, v, pq, pvpq)
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            raise SingularJacobianError("singular AC Jacobian", stage="ac", iterations=it) from None
        va = np.angle(v)
        vm = np.abs(v)
        va[pvpq] += dx[:npvpq]
        vm[pq] += dx[npvpq:]
        if np.any(vm <= 0):
            raise ConvergenceError("AC power flow produced a non-positive voltage", stage="ac", iterations=it)
        v = vm * np.exp(1j * va)
        it += 1

    va = np.angle(v)
    va = va - va[inj.slack]
    v = np.abs(v) * np.exp(1j * va)
    s = v * np.conj(ybus @ v)
    return AcSolution(vm=np.abs(v), va=va, p_inj=s.real, q_inj=s.imag, iterations=it, mismatch=err)


@dataclass(frozen=True)
class BranchFlow:
    from_bus: int
    to_bus: int
    s_from: complex  # power leaving from_bus into the element
    s_to: complex

    @property
    def loss(self) -> float:
        return (self.s_from + self.s_to).real


def branch_flows(case: NetworkCase, sol: AcSolution, taps=None) -> list[BranchFlow]:
    """Flows on every line and transformer, in case order (lines first)."""
    taps = [t.tap for t in case.transformers] if taps is None else list(taps)
    idx = case.bus_index
    v = sol.v
    out = []
    elems = [(br, 1.0) for br in case.branches] + list(zip(case.transformers, taps))
    for el, tap in elems:
        i, j = idx[el.from_bus], idx[el.to_bus]
        ys = 1.0 / complex(el.r, el.x)
        ysh = 0.5j * el.b
        i_f = ((ys + ysh) / tap**2) * v[i] - (ys / tap) * v[j]
        i_t = (ys + ysh) * v[j] - (ys / tap) * v[i]
        out.append(BranchFlow(el.from_bus, el.to_bus, v[i] * np.conj(i_f), v[j] * np.conj(i_t)))
    return out
