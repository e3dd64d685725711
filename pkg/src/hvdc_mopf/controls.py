"""Decoded control setpoints shared by the coupled solver and the encoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import NetworkCase


@dataclass(frozen=True)
class Setpoints:
    """One value per element, in case order.

    Entries that a control mode does not use are carried but ignored: the
    slack generator's ``p_gen``, the dc-slack converter's ``conv_p`` (fixed
    by DC balance), ``conv_q`` of const-pv converters (read back from the AC
    solution) and ``conv_udc`` of non-slack converters.
    """

    p_gen: np.ndarray
    u_gen: np.ndarray
    conv_p: np.ndarray
    conv_q: np.ndarray
    conv_v: np.ndarray
    conv_udc: np.ndarray
    taps: np.ndarray
    shunts: np.ndarray

    def replace(self, **changes) -> "Setpoints":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update({k: np.asarray(v, dtype=float) for k, v in changes.items()})
        return Setpoints(**fields)


def base_setpoints(case: NetworkCase) -> Setpoints:
    """The operating point written in the case file (the pre-optimization state)."""
    f = np.array
    return Setpoints(
        p_gen=f([g.p for g in case.generators], dtype=float),
        u_gen=f([g.u for g in case.generators], dtype=float),
        conv_p=f([c.p_s for c in case.converters], dtype=float),
        conv_q=f([c.q_s for c in case.converters], dtype=float),
        conv_v=f([c.v_ac for c in case.converters], dtype=float),
        conv_udc=f([c.u_dc for c in case.converters], dtype=float),
        taps=f([t.tap for t in case.transformers], dtype=float),
        shunts=f([s.q for s in case.shunt_comps], dtype=float),
    )
