"""Hybrid-coded decision vectors, objectives and constraint violation.

Gene layout, in order::

    P_G (non-slack generators), U_G (all generators),
    P_s (converters that schedule P), Q_s (converters that schedule Q),
    U_ac (const-pv converters), U_dc (dc-slack converters),
    T (transformer taps), Q_C (switched shunts)

The dc-slack converter has no ``P_s`` gene (DC balance fixes it) and the
scheduled converters have no ``U_dc`` gene (the DC solve fixes those).
Taps and shunts are discrete; decode snaps them to their lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controls import Setpoints, base_setpoints
from .errors import NumericalError
from .grid import NetworkCase, lattice, snap
from .vsc import CoupledSolution, solve_coupled

OBJECTIVES = ("O", "E", "V_de")
OBJECTIVE_UNITS = {"O": "MW", "E": "lb/h", "V_de": "pu2"}

FEASIBILITY_TOL = 1e-9
FAILED_VIOLATION = 1e6


@dataclass(frozen=True)
class Gene:
    name: str
    lo: float
    hi: float
    step: float = 0.0  # 0 for continuous genes

    @property
    def discrete(self) -> bool:
        return self.step > 0

    def values(self) -> np.ndarray:
        return lattice(self.lo, self.hi, self.step)


class Encoding:
    """Maps between raw gene vectors and :class:`Setpoints` for one case."""

    def __init__(self, case: NetworkCase):
        self.case = case
        genes: list[Gene] = []
        slot: list[tuple[str, int]] = []  # (setpoint field, element index)
        gens = case.generators
        for k, g in enumerate(gens):
            if k != case.slack_generator:
                genes.append(Gene(f"P_G{k + 1}", g.p_min, g.p_max))
                slot.append(("p_gen", k))
        for k, g in enumerate(gens):
            genes.append(Gene(f"U_G{k + 1}", g.u_min, g.u_max))
            slot.append(("u_gen", k))
        convs = case.converters
        for k, cv in enumerate(convs):
            if cv.mode != "dc-slack-q":
                genes.append(Gene(f"P_s{k + 1}", cv.p_s_min, cv.p_s_max))
                slot.append(("conv_p", k))
        for k, cv in enumerate(convs):
            if cv.mode != "const-pv":
                genes.append(Gene(f"Q_s{k + 1}", cv.q_s_min, cv.q_s_max))
                slot.append(("conv_q", k))
        for k, cv in enumerate(convs):
            if cv.mode == "const-pv":
                bus = case.ac_buses[case.bus_index[cv.ac_bus]]
                genes.append(Gene(f"U_ac{k + 1}", bus.u_min, bus.u_max))
                slot.append(("conv_v", k))
        for k, cv in enumerate(convs):
            if cv.mode == "dc-slack-q":
                genes.append(Gene(f"U_dc{k + 1}", cv.u_dc_min, cv.u_dc_max))
                slot.append(("conv_udc", k))
        for k, t in enumerate(case.transformers):
            genes.append(Gene(f"T{k + 1}", t.tap_min, t.tap_max, t.tap_step))
            slot.append(("taps", k))
        for k, s in enumerate(case.shunt_comps):
            genes.append(Gene(f"Q_C{k + 1}", s.q_min, s.q_max, s.q_step))
            slot.append(("shunts", k))
        self.genes = tuple(genes)
        self._slot = tuple(slot)
        self.lower = np.array([g.lo for g in genes])
        self.upper = np.array([g.hi for g in genes])
        self.step = np.array([g.step for g in genes])
        self.names = tuple(g.name for g in genes)

    def __len__(self) -> int:
        return len(self.genes)

    def snap(self, x) -> np.ndarray:
        """Clamp continuous genes to bounds and snap discrete genes to their lattice."""
        x = np.asarray(x, dtype=float)
        if x.shape != (len(self.genes),):
            raise ValueError(f"expected {len(self.genes)} genes, got shape {x.shape}")
        out = np.clip(x, self.lower, self.upper)
        for i, g in enumerate(self.genes):
            if g.discrete:
                out[i] = snap(x[i], g.lo, g.hi, g.step)
        return out

    def decode(self, x) -> Setpoints:
        x = self.snap(x)
        base = base_setpoints(self.case)
        fields = {k: np.array(getattr(base, k), dtype=float) for k in base.__dataclass_fields__}
        for value, (name, k) in zip(x, self._slot):
            fields[name][k] = value
        return Setpoints(**fields)

    def encode(self, sp: Setpoints) -> np.ndarray:
        return np.array([getattr(sp, name)[k] for name, k in self._slot], dtype=float)

    def base_vector(self) -> np.ndarray:
        return self.encode(base_setpoints(self.case))


# ---------------------------------------------------------------------------
# objectives


def objective_losses(sol: CoupledSolution) -> float:
    """Total active loss (MW): AC network + converter stations + DC lines."""
    return sol.total_loss * sol.base_mva


def objective_emissions(p_gen, generators) -> float:
    return float(sum(g.alpha * p * p + g.beta * p + g.gamma for g, p in zip(generators, p_gen)))


def objective_vdev(sol: CoupledSolution, case: NetworkCase) -> float:
    ac_set = np.array([b.u_set for b in case.ac_buses])
    total = float(np.sum((sol.ac.vm - ac_set) ** 2))
    if sol.dc is not None and len(case.dc_buses):
        dc_set = np.array([b.u_set for b in case.dc_buses])
        total += float(np.sum((sol.dc.u - dc_set) ** 2))
    return total


def objective_vector(sol: CoupledSolution, case: NetworkCase) -> np.ndarray:
    return np.array([
        objective_losses(sol),
        objective_emissions(sol.p_gen, case.generators),
        objective_vdev(sol, case),
    ])


# ---------------------------------------------------------------------------
# constraints


def _excess(value, lo, hi):
    span = hi - lo
    span = span if span > 0 else 1.0
    if value > hi:
        return (value - hi) / span
    if value < lo:
        return (lo - value) / span
    return 0.0


def violation_terms(sol: CoupledSolution, case: NetworkCase) -> dict[str, float]:
    """Normalized bound excess per constrained quantity (only non-zero entries)."""
    terms: dict[str, float] = {}

    def add(name, amount):
        if amount > 0:
            terms[name] = amount

    for k, g in enumerate(case.generators):
        if k == case.slack_generator:
            add(f"P_G{k + 1}", _excess(sol.p_gen[k], g.p_min, g.p_max))
        add(f"Q_G{k + 1}", _excess(sol.q_gen[k], g.q_min, g.q_max))
    for i, b in enumerate(case.ac_buses):
        if b.kind == "pq":
            add(f"U_bus{b.id}", _excess(sol.ac.vm[i], b.u_min, b.u_max))
    for k, (cv, st) in enumerate(zip(case.converters, sol.converters)):
        d2 = (st.p_s - cv.p0) ** 2 + (st.q_s - cv.q0) ** 2
        add(f"S_cap{k + 1}", _excess(d2, cv.r_min**2, cv.r_max**2))
        if cv.mode == "dc-slack-q":
            add(f"P_s{k + 1}", _excess(st.p_s, cv.p_s_min, cv.p_s_max))
        if cv.mode == "const-pv":
            add(f"Q_s{k + 1}", _excess(st.q_s, cv.q_s_min, cv.q_s_max))
    if sol.dc is not None:
        for i, b in enumerate(case.dc_buses):
            add(f"U_dc_bus{b.id}", _excess(sol.dc.u[i], b.u_min, b.u_max))
        for k, ln in enumerate(case.dc_lines):
            add(f"I_dc{k + 1}", _excess(sol.dc.line_current[k], ln.i_min, ln.i_max))
    return terms


def constraint_violation(sol: CoupledSolution, case: NetworkCase) -> float:
    return float(sum(violation_terms(sol, case).values()))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvaluatedSolution:
    x: np.ndarray  # decoded genes (discrete ones on-lattice)
    f: np.ndarray  # selected objectives, minimized
    violation: float
    feasible: bool
    objectives_all: np.ndarray  # (O, E, V_de) whatever the selection
    solution: CoupledSolution | None = None
    error: str | None = None


def failed(x, n_obj: int, error: str) -> EvaluatedSolution:
    inf = np.full(n_obj, math.inf)
    return EvaluatedSolution(np.asarray(x, dtype=float), inf, FAILED_VIOLATION, False,
                             np.full(3, math.inf), None, error)


class OpfProblem:
    """The multi-objective OPF as seen by the optimizers.

    ``objectives`` picks a subset of ``("O", "E", "V_de")``, for example
    ``("O", "E")`` for a loss/emission trade-off.
    """

    def __init__(self, case: NetworkCase, objectives=OBJECTIVES, keep_solution: bool = False):
        bad = set(objectives) - set(OBJECTIVES)
        if bad or not objectives:
            raise ValueError(f"unknown objectives {sorted(bad)}")
        self.case = case
        self.encoding = Encoding(case)
        self.objectives = tuple(objectives)
        self._sel = [OBJECTIVES.index(o) for o in self.objectives]
        self.keep_solution = keep_solution
        self.lower = self.encoding.lower
        self.upper = self.encoding.upper
        self.step = self.encoding.step

    @property
    def n_obj(self) -> int:
        return len(self.objectives)

    def snap(self, x):
        return self.encoding.snap(x)

    def evaluate(self, x) -> EvaluatedSolution:
        return evaluate(x, self.case, encoding=self.encoding, select=self._sel,
                        keep_solution=self.keep_solution)

    def __getstate__(self):
        return {"case": self.case, "objectives": self.objectives, "keep_solution": self.keep_solution}

    def __setstate__(self, state):
        self.__init__(state["case"], state["objectives"], state["keep_solution"])


def evaluate(x, case: NetworkCase, *, encoding: Encoding | None = None, select=(0, 1, 2),
             keep_solution: bool = True) -> EvaluatedSolution:
    """Decode, run the sequential AC/DC flow, and score one decision vector.

    Never raises for numerical trouble: a failed power flow returns a
    sentinel with ``violation = 1e6`` and infinite objectives.
    """
    enc = encoding or Encoding(case)
    xs = enc.snap(x)
    sp = enc.decode(xs)
    try:
        with np.errstate(all="ignore"):
            sol = solve_coupled(case, sp)
            full = objective_vector(sol, case)
            viol = constraint_violation(sol, case)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        return failed(xs, len(select), str(exc))
    if not np.all(np.isfinite(full)) or not math.isfinite(viol):
        return failed(xs, len(select), "non-finite objective")
    return EvaluatedSolution(
        x=xs,
        f=full[list(select)],
        violation=viol,
        feasible=viol <= FEASIBILITY_TOL,
        objectives_all=full,
        solution=sol if keep_solution else None,
    )
