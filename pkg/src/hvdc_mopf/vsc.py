"""VSC converter model, DC network solver and the sequential AC/DC power flow.

Sign convention: ``P_s``/``Q_s`` flow from the AC bus into the converter,
``P_c``/``Q_c`` arrive at the converter terminal after the coupling
impedance, and ``P_dc`` is injected into the DC grid::

    P_s = P_c + r*|I|^2,   P_dc = P_c - loss(I_c)

The coupling impedance is handled with its exact admittance
``1/(r + jx)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .acpf import AcInjectionSet, AcSolution, BranchFlow, branch_flows, build_admittance, solve_ac
from .controls import Setpoints
from .errors import ConvergenceError, NumericalError, SingularJacobianError
from .grid import NetworkCase

SQRT3 = math.sqrt(3.0)


def converter_flow(us: complex, uc: complex, r: float, x: float):
    """Grid-side and converter-side complex powers across the phase reactor.

    Returns ``(P_s, Q_s, P_c, Q_c)``; ``P_s - P_c = r*|I|^2``.
    """
    if r < 0 or not x > 0:
        raise ValueError("coupling impedance needs r >= 0 and x > 0")
    cur = (us - uc) / complex(r, x)
    ss = us * np.conj(cur)
    sc = uc * np.conj(cur)
    return ss.real, ss.imag, sc.real, sc.imag


def converter_loss(pc: float, qc: float, uc: float, a: float, b: float, c: float) -> float:
    """Valve loss ``a + b*I_c + c*I_c**2`` with ``I_c = |S_c| / (sqrt(3) U_c)``."""
    if not uc > 0:
        raise ValueError("converter voltage magnitude must be positive")
    ic = math.hypot(pc, qc) / (SQRT3 * uc)
    return a + b * ic + c * ic * ic


@dataclass(frozen=True)
class ConverterState:
    us: complex
    uc: complex
    p_s: float
    q_s: float
    p_c: float
    q_c: float
    i_c: float
    loss: float  # valve loss
    coupling_loss: float  # r*|I|^2 in the phase reactor
    p_dc: float  # DC-side injection into the DC grid

    @property
    def station_loss(self) -> float:
        return self.loss + self.coupling_loss

    @property
    def balance_residual(self) -> float:
        """``P_s - (P_dc + valve loss + reactor loss)``."""
        return self.p_s - (self.p_dc + self.loss + self.coupling_loss)


def converter_state(us: complex, p_s: float, q_s: float, conv, p_dc=None) -> ConverterState:
    """State of a converter given its AC bus voltage and grid-side powers.

    ``p_dc`` overrides the DC-side power (used for the DC slack, whose value
    comes from the DC network solve); by default it is ``P_c - loss``.
    """
    cur = np.conj(complex(p_s, q_s) / us)
    uc = us - complex(conv.r, conv.x) * cur
    sc = uc * np.conj(cur)
    ic = abs(sc) / (SQRT3 * abs(uc))
    loss = conv.a + conv.b * ic + conv.c * ic * ic
    closs = conv.r * abs(cur) ** 2
    dc = sc.real - loss if p_dc is None else p_dc
    return ConverterState(us, uc, p_s, q_s, sc.real, sc.imag, ic, loss, closs, dc)


def slack_grid_power(us: complex, q_s: float, p_dc: float, conv, *, tol=1e-13, max_iter=60) -> float:
    """Grid-side ``P_s`` that delivers ``p_dc`` into the DC grid at fixed ``Q_s``."""
    p = p_dc
    for _ in range(max_iter):
        st = converter_state(us, p, q_s, conv)
        p_new = p_dc + st.loss + st.coupling_loss
        if abs(p_new - p) <= tol:
            return p_new
        p = p_new
    raise ConvergenceError("slack converter power did not converge", stage="coupling")


# ---------------------------------------------------------------------------
# DC network


@dataclass(frozen=True)
class DcSolution:
    u: np.ndarray  # bus voltages
    p: np.ndarray  # injections into the DC grid, slack buses included
    line_current: np.ndarray  # from -> to
    line_loss: float
    iterations: int
    residual: float


def dc_conductance(n: int, lines) -> np.ndarray:
    g = np.zeros((n, n))
    for i, j, r in lines:
        y = 1.0 / r
        g[i, i] += y
        g[j, j] += y
        g[i, j] -= y
        g[j, i] -= y
    return g


def _components(n, lines):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j, _ in lines:
        parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def solve_dc_network(lines, p_inj, slack_u: dict, *, tol=1e-10, max_iter=20) -> DcSolution:
    """Newton solve of ``P_i = U_i * sum_j (U_i - U_j)/r_ij`` on a monopolar DC grid.

    ``lines`` holds ``(i, j, r)`` in bus-index space, ``p_inj`` the injections
    (ignored at slack buses) and ``slack_u`` maps slack bus index to voltage.
    Every island needs exactly one slack.
    """
    p_inj = np.asarray(p_inj, dtype=float)
    n = len(p_inj)
    lines = list(lines)
    for comp in _components(n, lines):
        k = sum(1 for i in comp if i in slack_u)
        if k != 1:
            raise NumericalError(f"DC island {sorted(comp)} has {k} slack buses (need 1)", stage="dc")
    g = dc_conductance(n, lines)
    u = np.ones(n)
    for comp in _components(n, lines):
        s = next(i for i in comp if i in slack_u)
        u[comp] = slack_u[s]
    free = np.array([i for i in range(n) if i not in slack_u], dtype=int)

    it = 0
    while True:
        gu = g @ u
        f = u[free] * gu[free] - p_inj[free]
        res = float(np.max(np.abs(f))) if f.size else 0.0
        if not np.isfinite(res):
            raise ConvergenceError("DC power flow diverged", stage="dc", iterations=it)
        if res <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"DC power flow did not converge (residual {res:.3e})", stage="dc", iterations=it)
        jac = (np.diag(gu) + u[:, None] * g)[np.ix_(free, free)]
        try:
            u[free] -= np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            raise SingularJacobianError("singular DC Jacobian", stage="dc", iterations=it) from None
        it += 1

    p = u * (g @ u)
    cur = np.array([(u[i] - u[j]) / r for i, j, r in lines])
    loss = float(sum(r * c * c for (_, _, r), c in zip(lines, cur)))
    return DcSolution(u=u, p=p, line_current=cur, line_loss=loss, iterations=it, residual=res)


# ---------------------------------------------------------------------------
# sequential AC/DC


@dataclass(frozen=True)
class CoupledSolution:
    ac: AcSolution
    dc: DcSolution | None
    converters: tuple[ConverterState, ...]
    outer_iterations: int
    p_gen: np.ndarray
    q_gen: np.ndarray
    ac_loss: float  # sum of AC nodal injections (branch and shunt losses)
    flows: tuple[BranchFlow, ...]
    setpoints: Setpoints
    base_mva: float
    coupling_residual: float

    @property
    def converter_loss(self) -> float:
        return float(sum(c.station_loss for c in self.converters))

    @property
    def dc_line_loss(self) -> float:
        return 0.0 if self.dc is None else self.dc.line_loss

    @property
    def total_loss(self) -> float:
        """System active loss in pu: AC network + converter stations + DC lines."""
        return self.ac_loss + self.converter_loss + self.dc_line_loss

    @property
    def total_loss_mw(self) -> float:
        return self.total_loss * self.base_mva

    @property
    def loss_rate(self) -> float:
        """Losses divided by total active generation."""
        return self.total_loss / float(np.sum(self.p_gen))


def _ac_injections(case: NetworkCase, sp: Setpoints, conv_p, conv_q):
    n = case.n_bus
    idx = case.bus_index
    p = -case.p_load()
    q = -case.q_load()
    kinds = [b.kind for b in case.ac_buses]
    vt = np.ones(n)
    for k, g in enumerate(case.generators):
        i = idx[g.bus]
        vt[i] = sp.u_gen[k]
        if i != case.slack_bus:
            p[i] += sp.p_gen[k]
    for k, cv in enumerate(case.converters):
        i = idx[cv.ac_bus]
        p[i] -= conv_p[k]
        if cv.mode == "const-pv":
            kinds[i] = "pv"
            vt[i] = sp.conv_v[k]
        else:
            q[i] -= conv_q[k]
    return AcInjectionSet(p=p, q=q, kinds=tuple(kinds), v_target=vt)


def solve_coupled(case: NetworkCase, sp: Setpoints, *, tol=1e-6, max_outer=50, ac_tol=1e-8,
                  dc_tol=1e-10, ybus=None) -> CoupledSolution:
    """Alternate AC and DC solves until the DC slack's AC-side power settles.

    Each outer pass: AC solve with converter powers as loads; converter-side
    powers and losses for the scheduled converters; DC solve with their DC
    injections; DC slack grid-side power recomputed from the DC slack power
    plus its losses. Stops when that power moves less than ``tol``.
    """
    if ybus is None:
        ybus = build_admittance(case, sp.taps, sp.shunts)
    idx = case.bus_index
    convs = case.converters
    nconv = len(convs)
    slack_conv = [k for k, cv in enumerate(convs) if cv.mode == "dc-slack-q"]
    conv_p = np.array(sp.conv_p, dtype=float)
    conv_q = np.array(sp.conv_q, dtype=float)

    # lossless first guess for the DC slack
    dcidx = case.dc_bus_index
    island_of = {}
    for n_isl, isl in enumerate(case.dc_islands):
        for i in isl:
            island_of[i] = n_isl
    for k in slack_conv:
        isl = island_of[dcidx[convs[k].dc_bus]]
        conv_p[k] = -sum(conv_p[m] for m in range(nconv)
                         if m != k and island_of[dcidx[convs[m].dc_bus]] == isl)

    lines = [(dcidx[ln.from_bus], dcidx[ln.to_bus], ln.r) for ln in case.dc_lines]
    slack_u = {dcidx[convs[k].dc_bus]: float(sp.conv_udc[k]) for k in slack_conv}

    ac = None
    dc = None
    delta = 0.0
    states: list = [None] * nconv
    outer = 0
    while True:
        outer += 1
        inj = _ac_injections(case, sp, conv_p, conv_q)
        ac = solve_ac(ybus, inj, ac, tol=ac_tol)
        v = ac.v
        for k, cv in enumerate(convs):
            i = idx[cv.ac_bus]
            if cv.mode == "const-pv":
                conv_q[k] = -ac.q_inj[i] - case.ac_buses[i].q_load
            if k not in slack_conv:
                states[k] = converter_state(v[i], conv_p[k], conv_q[k], cv)
        if not nconv:
            break
        p_dc = np.zeros(len(case.dc_buses))
        for k, cv in enumerate(convs):
            if k not in slack_conv:
                p_dc[dcidx[cv.dc_bus]] = states[k].p_dc
        dc = solve_dc_network(lines, p_dc, slack_u, tol=dc_tol)
        delta = 0.0
        new_p = {}
        for k in slack_conv:
            cv = convs[k]
            i = idx[cv.ac_bus]
            pdc = float(dc.p[dcidx[cv.dc_bus]])
            states[k] = converter_state(v[i], conv_p[k], conv_q[k], cv, p_dc=pdc)
            new_p[k] = slack_grid_power(v[i], conv_q[k], pdc, cv)
            delta = max(delta, abs(new_p[k] - conv_p[k]))
        if delta < tol:
            break
        if outer >= max_outer:
            raise ConvergenceError(
                f"sequential AC/DC loop did not converge in {max_outer} iterations (change {delta:.3e})",
                stage="coupling", iterations=outer,
            )
        for k, p in new_p.items():
            conv_p[k] = p

    # generator outputs from the AC solution
    p_gen = np.array(sp.p_gen, dtype=float)
    q_gen = np.zeros(len(case.generators))
    conv_p_at = np.zeros(case.n_bus)
    conv_q_at = np.zeros(case.n_bus)
    for k, cv in enumerate(convs):
        conv_p_at[idx[cv.ac_bus]] += conv_p[k]
        conv_q_at[idx[cv.ac_bus]] += conv_q[k]
    for k, g in enumerate(case.generators):
        i = idx[g.bus]
        b = case.ac_buses[i]
        q_gen[k] = ac.q_inj[i] + b.q_load + conv_q_at[i]
        if i == case.slack_bus:
            p_gen[k] = ac.p_inj[i] + b.p_load + conv_p_at[i]
    final_sp = sp.replace(conv_p=conv_p, conv_q=conv_q)
    return CoupledSolution(
        ac=ac,
        dc=dc,
        converters=tuple(states),
        outer_iterations=outer,
        p_gen=p_gen,
        q_gen=q_gen,
        ac_loss=float(np.sum(ac.p_inj)),
        flows=tuple(branch_flows(case, ac, sp.taps)),
        setpoints=final_sp,
        base_mva=case.base_mva,
        coupling_residual=delta,
    )
