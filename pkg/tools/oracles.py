"""Independent reference values frozen into the test-suite.

Run with ``python tools/oracles.py``; needs ``pypower`` (not a package
dependency). Each block prints the literal pasted into ``tests/oracle_values.py``.
"""

import math

import numpy as np


def ieee14_reference():
    from pypower.api import case14, ppoption, runpf

    opt = ppoption(VERBOSE=0, OUT_ALL=0, PF_TOL=1e-12)
    res, ok = runpf(case14(), opt)
    assert ok
    vm = res["bus"][:, 7].tolist()
    va = res["bus"][:, 8].tolist()
    pg = res["gen"][:, 1].tolist()
    return vm, va, pg


def two_bus_lossless(x=0.1, p_load=0.1):
    # P2 = -p = (1/x) V2 sin(theta2), Q2 = 0 = (V2^2 - V2 cos(theta2)) / x  => V2 = cos(theta2)
    theta = -0.5 * math.asin(2 * x * p_load)
    return math.cos(theta), theta


def dc_two_bus(r=0.01, p=-0.5, u1=1.0):
    # p = U (U - u1) / r  => U^2 - u1 U - p r = 0, root nearest u1
    return (u1 + math.sqrt(u1 * u1 + 4 * p * r)) / 2


def fcm_two_groups():
    # iterate the update formulas on {0, 0, 2, 2} from a fixed asymmetric start
    w = np.array([0.0, 0.0, 2.0, 2.0])
    u = np.array([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.4, 0.6]])
    while True:
        v = (u.T**2 @ w) / (u**2).sum(axis=0)
        d = np.abs(w[:, None] - v[None, :])
        if np.any(d == 0):  # centers sit on the data; memberships are crisp
            return v.tolist()
        u = 1.0 / ((d[:, :, None] / d[:, None, :]) ** 2).sum(axis=2)


if __name__ == "__main__":
    vm, va, pg = ieee14_reference()
    print("IEEE14_VM =", vm)
    print("IEEE14_VA_DEG =", va)
    print("IEEE14_PG_MW =", pg)
    print("TWO_BUS =", two_bus_lossless())
    print("DC_TWO_BUS_U =", dc_two_bus())
    print("FCM_CENTERS =", fcm_two_groups())
