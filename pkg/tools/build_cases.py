"""Regenerate the bundled IEEE 14-bus case files in src/hvdc_mopf/data/.

Network data is the standard IEEE 14-bus set (MATPOWER ``case14``) on a
100 MVA base. The hybrid variants replace AC branch 4-5 by a VSC-HVDC link.

    python tools/build_cases.py
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "hvdc_mopf" / "data"

# id, kind, Pd, Qd (MW/MVAr)
BUSES = [
    (1, "slack", 0.0, 0.0),
    (2, "pv", 21.7, 12.7),
    (3, "pv", 94.2, 19.0),
    (4, "pq", 47.8, -3.9),
    (5, "pq", 7.6, 1.6),
    (6, "pv", 11.2, 7.5),
    (7, "pq", 0.0, 0.0),
    (8, "pv", 0.0, 0.0),
    (9, "pq", 29.5, 16.6),
    (10, "pq", 9.0, 5.8),
    (11, "pq", 3.5, 1.8),
    (12, "pq", 6.1, 1.6),
    (13, "pq", 13.5, 5.8),
    (14, "pq", 14.9, 5.0),
]

LINES = [
    (1, 2, 0.01938, 0.05917, 0.0528),
    (1, 5, 0.05403, 0.22304, 0.0492),
    (2, 3, 0.04699, 0.19797, 0.0438),
    (2, 4, 0.05811, 0.17632, 0.0340),
    (2, 5, 0.05695, 0.17388, 0.0346),
    (3, 4, 0.06701, 0.17103, 0.0128),
    (4, 5, 0.01335, 0.04211, 0.0),
    (6, 11, 0.09498, 0.19890, 0.0),
    (6, 12, 0.12291, 0.25581, 0.0),
    (6, 13, 0.06615, 0.13027, 0.0),
    (7, 8, 0.0, 0.17615, 0.0),
    (7, 9, 0.0, 0.11001, 0.0),
    (9, 10, 0.03181, 0.08450, 0.0),
    (9, 14, 0.12711, 0.27038, 0.0),
    (10, 11, 0.08205, 0.19207, 0.0),
    (12, 13, 0.22092, 0.19988, 0.0),
    (13, 14, 0.17093, 0.34802, 0.0),
]

# from, to, x, original tap, tap snapped to the 0.9 + k*0.0125 lattice
XFMRS = [
    (4, 7, 0.20912, 0.978, 0.975),
    (4, 9, 0.55618, 0.969, 0.975),
    (5, 6, 0.25202, 0.932, 0.9375),
]

# bus, P0, U0, Pmin, Pmax, Qmin, Qmax (pu); emission alpha, beta, gamma
# (illustrative emission coefficients, lb/h with P in pu)
GENS = [
    (1, 2.324, 1.060, 0.32, 3.32, -0.20, 0.10, 200.0, 10.0, 20.0),
    (2, 0.400, 1.045, 0.40, 1.40, -0.40, 0.50, 150.0, 20.0, 20.0),
    (3, 0.000, 1.010, 0.00, 0.30, 0.00, 0.40, 300.0, 400.0, 30.0),
    (6, 0.000, 1.070, 0.00, 0.10, -0.06, 0.24, 300.0, 500.0, 30.0),
    (8, 0.000, 1.090, 0.00, 0.10, -0.06, 0.24, 300.0, 500.0, 30.0),
]


def buses(shunt_as_bus):
    out = []
    for bid, kind, pd, qd in BUSES:
        row = {"id": bid, "kind": kind, "p_load": pd / 100.0, "q_load": qd / 100.0,
               "u_min": 0.94, "u_max": 1.06, "u_set": 1.0}
        if shunt_as_bus and bid == 9:
            row["bs"] = 0.19
        out.append(row)
    return out


def generators():
    out = []
    for bus, p, u, pmin, pmax, qmin, qmax, a, b, c in GENS:
        out.append({"bus": bus, "p": p, "u": u, "p_min": pmin, "p_max": pmax,
                    "q_min": qmin, "q_max": qmax, "u_min": 0.95, "u_max": 1.10,
                    "alpha": a, "beta": b, "gamma": c})
    return out


def lines(skip=()):
    return [{"from_bus": f, "to_bus": t, "r": r, "x": x, "b": b}
            for f, t, r, x, b in LINES if (f, t) not in skip]


def transformers(fixed):
    out = []
    for f, t, x, tap0, tap in XFMRS:
        if fixed:
            out.append({"from_bus": f, "to_bus": t, "r": 0.0, "x": x, "tap": tap0,
                        "tap_min": tap0, "tap_max": tap0, "tap_step": 0.0125})
        else:
            out.append({"from_bus": f, "to_bus": t, "r": 0.0, "x": x, "tap": tap,
                        "tap_min": 0.9, "tap_max": 1.1, "tap_step": 0.0125})
    return out


SHUNT = [{"bus": 9, "q": 0.19, "q_min": 0.0, "q_max": 0.25, "q_step": 0.01}]


def converter(ac, dc, r, x, mode, p, q, udc=1.0):
    return {"ac_bus": ac, "dc_bus": dc, "r": r, "x": x, "mode": mode,
            "p_s": p, "q_s": q, "u_dc": udc,
            "a": 0.011, "b": 0.003, "c": 0.004,
            "p0": 0.0, "q0": 0.0, "r_min": 0.0, "r_max": 1.1,
            "p_s_min": -1.0, "p_s_max": 1.0, "q_s_min": -1.0, "q_s_max": 1.0,
            "u_dc_min": 0.95, "u_dc_max": 1.10}


def dc_bus(i):
    return {"id": i, "u_min": 0.9, "u_max": 1.1, "u_set": 1.0}


def dc_line(f, t):
    return {"from_bus": f, "to_bus": t, "r": 0.01, "i_min": -1.2, "i_max": 1.2}


def case_ac():
    return {"schema_version": 1, "name": "ieee14-ac", "base_mva": 100.0,
            "ac_buses": buses(True), "branches": lines(), "generators": generators(),
            "transformers": transformers(True)}


def case_2t():
    return {"schema_version": 1, "name": "ieee14-2t", "base_mva": 100.0,
            "ac_buses": buses(False), "branches": lines(skip={(4, 5)}),
            "generators": generators(), "transformers": transformers(False),
            "shunt_comps": SHUNT,
            "dc_buses": [dc_bus(1), dc_bus(2)],
            "dc_lines": [dc_line(1, 2)],
            "converters": [
                converter(5, 1, 0.0015, 0.1211, "dc-slack-q", -0.495, -0.105),
                converter(4, 2, 0.0015, 0.1211, "const-pq", 0.492, 0.116),
            ]}


def case_3t():
    return {"schema_version": 1, "name": "ieee14-3t", "base_mva": 100.0,
            "ac_buses": buses(False), "branches": lines(skip={(4, 5)}),
            "generators": generators(), "transformers": transformers(False),
            "shunt_comps": SHUNT,
            "dc_buses": [dc_bus(1), dc_bus(2), dc_bus(3)],
            "dc_lines": [dc_line(1, 2), dc_line(2, 3)],
            "converters": [
                converter(2, 1, 0.006, 0.150, "dc-slack-q", -0.839, 0.142),
                converter(4, 2, 0.006, 0.150, "const-pq", 0.968, 0.016),
                converter(5, 3, 0.006, 0.150, "const-pq", -0.129, 0.134),
            ]}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for fname, doc in (("ieee14_ac.json", case_ac()), ("ieee14_2t.json", case_2t()),
                       ("ieee14_3t.json", case_3t())):
        (OUT / fname).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
