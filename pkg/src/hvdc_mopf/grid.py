"""Hybrid AC/DC case data model, case-file parsing and validation.

All electrical quantities are per unit on ``base_mva``; angles are radians.
A case file is a JSON document whose top-level keys mirror
:class:`NetworkCase` (see ``docs/case_format.md``).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import CaseParseError, CaseValidationError

SCHEMA_VERSION = 1

BUS_KINDS = ("slack", "pv", "pq")
CONVERTER_MODES = ("dc-slack-q", "const-pq", "const-pv")

_LATTICE_EPS = 1e-9


@dataclass(frozen=True)
class AcBus:
    id: int
    kind: str
    p_load: float = 0.0
    q_load: float = 0.0
    gs: float = 0.0
    bs: float = 0.0
    u_min: float = 0.94
    u_max: float = 1.06
    u_set: float = 1.0


@dataclass(frozen=True)
class Generator:
    bus: int
    p: float
    u: float
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    u_min: float = 0.95
    u_max: float = 1.10
    # emission coefficients: lb/h per pu^2, lb/h per pu, lb/h
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float = 0.0


@dataclass(frozen=True)
class TapTransformer:
    """Off-nominal tap transformer; the tap sits on the ``from_bus`` side."""

    from_bus: int
    to_bus: int
    r: float
    x: float
    tap: float
    tap_min: float
    tap_max: float
    tap_step: float
    b: float = 0.0


@dataclass(frozen=True)
class ShuntCompensator:
    """Switched capacitor bank. ``q`` is the injection at 1 pu voltage."""

    bus: int
    q: float
    q_min: float
    q_max: float
    q_step: float


@dataclass(frozen=True)
class DcBus:
    id: int
    u_min: float = 0.9
    u_max: float = 1.1
    u_set: float = 1.0


@dataclass(frozen=True)
class DcLine:
    from_bus: int
    to_bus: int
    r: float = 0.01
    i_min: float = -1.2
    i_max: float = 1.2


@dataclass(frozen=True)
class Converter:
    """VSC station: coupling impedance plus valve with quadratic losses.

    ``p_s``/``q_s`` are grid-side powers flowing from the AC bus into the
    converter. For ``const-pv`` converters ``v_ac`` is the AC voltage target
    and ``q_s`` is only an initial value.
    """

    ac_bus: int
    dc_bus: int
    r: float
    x: float
    mode: str
    p_s: float = 0.0
    q_s: float = 0.0
    u_dc: float = 1.0
    v_ac: float = 1.0
    a: float = 0.011
    b: float = 0.003
    c: float = 0.004
    p0: float = 0.0
    q0: float = 0.0
    r_min: float = 0.0
    r_max: float = 1.1
    p_s_min: float = -1.0
    p_s_max: float = 1.0
    q_s_min: float = -1.0
    q_s_max: float = 1.0
    u_dc_min: float = 0.95
    u_dc_max: float = 1.10


@dataclass(frozen=True)
class NetworkCase:
    base_mva: float
    ac_buses: tuple[AcBus, ...]
    branches: tuple[Branch, ...] = ()
    generators: tuple[Generator, ...] = ()
    transformers: tuple[TapTransformer, ...] = ()
    shunt_comps: tuple[ShuntCompensator, ...] = ()
    dc_buses: tuple[DcBus, ...] = ()
    dc_lines: tuple[DcLine, ...] = ()
    converters: tuple[Converter, ...] = ()
    name: str = ""

    # -- index helpers (the case is immutable, so these are cached) --

    @cached_property
    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.ac_buses)}

    @cached_property
    def dc_bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.dc_buses)}

    @cached_property
    def slack_bus(self) -> int:
        return next(i for i, b in enumerate(self.ac_buses) if b.kind == "slack")

    @cached_property
    def slack_generator(self) -> int:
        """Index of the generator at the slack bus."""
        sb = self.ac_buses[self.slack_bus].id
        return next(i for i, g in enumerate(self.generators) if g.bus == sb)

    @cached_property
    def dc_islands(self) -> list[list[int]]:
        """Connected components of the DC grid as lists of DC bus indices."""
        n = len(self.dc_buses)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for line in self.dc_lines:
            i, j = self.dc_bus_index[line.from_bus], self.dc_bus_index[line.to_bus]
            parent[find(i)] = find(j)
        groups: dict[int, list[int]] = {}
        for i in range(n):
            groups.setdefault(find(i), []).append(i)
        return sorted(groups.values())

    @property
    def n_bus(self) -> int:
        return len(self.ac_buses)

    def p_load(self) -> np.ndarray:
        return np.array([b.p_load for b in self.ac_buses])

    def q_load(self) -> np.ndarray:
        return np.array([b.q_load for b in self.ac_buses])


def lattice(lo: float, hi: float, step: float) -> np.ndarray:
    """All admissible values of a discrete control, anchored at ``lo``."""
    n = int(math.floor((hi - lo) / step + _LATTICE_EPS)) + 1
    return lo + step * np.arange(n)


def snap(value: float, lo: float, hi: float, step: float) -> float:
    n = int(math.floor((hi - lo) / step + _LATTICE_EPS))
    k = min(max(round((value - lo) / step), 0), n)
    return lo + k * step


def on_lattice(value: float, lo: float, hi: float, step: float, tol: float = 1e-9) -> bool:
    if value < lo - tol or value > hi + tol:
        return False
    k = (value - lo) / step
    return abs(k - round(k)) * step <= tol


# ---------------------------------------------------------------------------
# validation


def _is_integer_multiple(span: float, step: float) -> bool:
    k = span / step
    return abs(k - round(k)) < 1e-6


def validate_case(case: NetworkCase) -> list[str]:
    """Return one human-readable entry per violated invariant (empty if valid)."""
    out: list[str] = []
    if not case.base_mva > 0:
        out.append(f"case: base_mva must be > 0 (got {case.base_mva})")

    ids = [b.id for b in case.ac_buses]
    if len(set(ids)) != len(ids):
        out.append("ac_buses: duplicate bus id")
    known = set(ids)
    slack = [b.id for b in case.ac_buses if b.kind == "slack"]
    if len(slack) != 1:
        out.append(f"ac_buses: exactly one slack bus required (found {len(slack)})")
    for b in case.ac_buses:
        tag = f"ac_bus {b.id}"
        if b.kind not in BUS_KINDS:
            out.append(f"{tag}: kind must be one of {BUS_KINDS} (got {b.kind!r})")
        if b.u_min > b.u_max:
            out.append(f"{tag}: u_min <= u_max violated ({b.u_min} > {b.u_max})")
        elif not (b.u_min <= b.u_set <= b.u_max):
            out.append(f"{tag}: u_min <= u_set <= u_max violated (u_set={b.u_set})")

    def ref(tag, bus):
        if bus not in known:
            out.append(f"{tag}: references nonexistent AC bus {bus}")

    gen_buses = []
    for k, g in enumerate(case.generators):
        tag = f"generator {k} (bus {g.bus})"
        ref(tag, g.bus)
        gen_buses.append(g.bus)
        for lo, hi, nm in ((g.p_min, g.p_max, "p"), (g.q_min, g.q_max, "q"), (g.u_min, g.u_max, "u")):
            if lo > hi:
                out.append(f"{tag}: {nm}_min <= {nm}_max violated ({lo} > {hi})")
        if g.alpha < 0:
            out.append(f"{tag}: emission alpha must be >= 0")
    if len(set(gen_buses)) != len(gen_buses):
        out.append("generators: at most one generator per bus")
    kinds = {b.id: b.kind for b in case.ac_buses}
    for b in case.ac_buses:
        if b.kind in ("slack", "pv") and b.id not in gen_buses:
            out.append(f"ac_bus {b.id}: {b.kind} bus has no generator")
    for g in case.generators:
        if kinds.get(g.bus) == "pq":
            out.append(f"generator at bus {g.bus}: connected to a pq bus")

    for k, br in enumerate(case.branches):
        tag = f"branch {k} ({br.from_bus}-{br.to_bus})"
        ref(tag, br.from_bus)
        ref(tag, br.to_bus)
        if br.r == 0 and br.x == 0:
            out.append(f"{tag}: zero impedance")
    for k, t in enumerate(case.transformers):
        tag = f"transformer {k} ({t.from_bus}-{t.to_bus})"
        ref(tag, t.from_bus)
        ref(tag, t.to_bus)
        if t.r == 0 and t.x == 0:
            out.append(f"{tag}: zero impedance")
        if not t.tap_step > 0:
            out.append(f"{tag}: tap_step must be > 0")
        elif t.tap_min > t.tap_max:
            out.append(f"{tag}: tap_min <= tap_max violated")
        else:
            if not _is_integer_multiple(t.tap_max - t.tap_min, t.tap_step):
                out.append(f"{tag}: tap range is not an integer multiple of tap_step")
            if not on_lattice(t.tap, t.tap_min, t.tap_max, t.tap_step):
                out.append(f"{tag}: initial tap {t.tap} is not an admissible position")
    for k, s in enumerate(case.shunt_comps):
        tag = f"shunt {k} (bus {s.bus})"
        ref(tag, s.bus)
        if not s.q_step > 0:
            out.append(f"{tag}: q_step must be > 0")
        elif s.q_min > s.q_max:
            out.append(f"{tag}: q_min <= q_max violated")
        else:
            if not _is_integer_multiple(s.q_max - s.q_min, s.q_step):
                out.append(f"{tag}: q range is not an integer multiple of q_step")
            if not on_lattice(s.q, s.q_min, s.q_max, s.q_step):
                out.append(f"{tag}: initial q {s.q} is not an admissible position")

    dc_ids = [b.id for b in case.dc_buses]
    dc_known = set(dc_ids)
    dc_dangling = False
    if len(dc_known) != len(dc_ids):
        out.append("dc_buses: duplicate bus id")
    for b in case.dc_buses:
        tag = f"dc_bus {b.id}"
        if b.u_min > b.u_max:
            out.append(f"{tag}: u_min <= u_max violated ({b.u_min} > {b.u_max})")
        elif not (b.u_min <= b.u_set <= b.u_max):
            out.append(f"{tag}: u_min <= u_set <= u_max violated (u_set={b.u_set})")
    for k, ln in enumerate(case.dc_lines):
        tag = f"dc_line {k} ({ln.from_bus}-{ln.to_bus})"
        for end in (ln.from_bus, ln.to_bus):
            if end not in dc_known:
                dc_dangling = True
                out.append(f"{tag}: references nonexistent DC bus {end}")
        if not ln.r > 0:
            out.append(f"{tag}: r must be > 0")
        if ln.i_min > ln.i_max:
            out.append(f"{tag}: i_min <= i_max violated")

    conv_dc = []
    for k, cv in enumerate(case.converters):
        tag = f"converter {k} (ac bus {cv.ac_bus})"
        ref(tag, cv.ac_bus)
        if cv.dc_bus not in dc_known:
            out.append(f"{tag}: references nonexistent DC bus {cv.dc_bus}")
        conv_dc.append(cv.dc_bus)
        if cv.mode not in CONVERTER_MODES:
            out.append(f"{tag}: mode must be one of {CONVERTER_MODES} (got {cv.mode!r})")
        if cv.mode == "const-pv" and kinds.get(cv.ac_bus) != "pq":
            out.append(f"{tag}: const-pv converter must sit on a pq bus")
        if not cv.x > 0:
            out.append(f"{tag}: x must be > 0")
        if cv.r < 0:
            out.append(f"{tag}: r must be >= 0")
        if not (0 <= cv.r_min <= cv.r_max):
            out.append(f"{tag}: 0 <= r_min <= r_max violated")
        for lo, hi, nm in (
            (cv.p_s_min, cv.p_s_max, "p_s"),
            (cv.q_s_min, cv.q_s_max, "q_s"),
            (cv.u_dc_min, cv.u_dc_max, "u_dc"),
        ):
            if lo > hi:
                out.append(f"{tag}: {nm}_min <= {nm}_max violated")
    if len(set(conv_dc)) != len(conv_dc):
        out.append("converters: at most one converter per DC bus")

    # one dc-slack converter per DC island
    if not dc_dangling:
        dc_slack = {case.dc_bus_index[cv.dc_bus] for cv in case.converters
                    if cv.mode == "dc-slack-q" and cv.dc_bus in dc_known}
        for island in case.dc_islands:
            n = sum(1 for i in island if i in dc_slack)
            names = ",".join(str(case.dc_buses[i].id) for i in island)
            if n != 1:
                out.append(f"dc island {{{names}}}: exactly one dc-slack-q converter required (found {n})")
    return out


def check_case(case: NetworkCase) -> NetworkCase:
    problems = validate_case(case)
    if problems:
        raise CaseValidationError(problems)
    return case


# ---------------------------------------------------------------------------
# parsing / serialization

_LISTS = {
    "ac_buses": AcBus,
    "branches": Branch,
    "generators": Generator,
    "transformers": TapTransformer,
    "shunt_comps": ShuntCompensator,
    "dc_buses": DcBus,
    "dc_lines": DcLine,
    "converters": Converter,
}


def _coerce(value: Any, typ: str, where: str):
    if typ in ("float",):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CaseParseError(f"field {where}: expected a number, got {value!r}")
        return float(value)
    if typ == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise CaseParseError(f"field {where}: expected an integer, got {value!r}")
        return value
    if typ == "str":
        if not isinstance(value, str):
            raise CaseParseError(f"field {where}: expected a string, got {value!r}")
        return value
    raise AssertionError(typ)


def _record(cls, raw: Any, where: str):
    if not isinstance(raw, dict):
        raise CaseParseError(f"field {where}: expected an object")
    kwargs = {}
    names = set()
    for f in dataclasses.fields(cls):
        names.add(f.name)
        if f.name in raw:
            kwargs[f.name] = _coerce(raw[f.name], f.type, f"{where}.{f.name}")
        elif f.default is dataclasses.MISSING:
            raise CaseParseError(f"field {where}.{f.name}: required field missing")
    extra = set(raw) - names
    if extra:
        raise CaseParseError(f"field {where}: unknown key(s) {sorted(extra)}")
    return cls(**kwargs)


def case_from_dict(doc: dict, *, validate: bool = True) -> NetworkCase:
    if not isinstance(doc, dict):
        raise CaseParseError("case document must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise CaseParseError(f"field schema_version: unsupported version {version!r}")
    if "base_mva" not in doc:
        raise CaseParseError("field base_mva: required field missing")
    allowed = set(_LISTS) | {"schema_version", "base_mva", "name"}
    extra = set(doc) - allowed
    if extra:
        raise CaseParseError(f"case: unknown top-level key(s) {sorted(extra)}")
    if "ac_buses" not in doc:
        raise CaseParseError("field ac_buses: required field missing")
    parts = {}
    for key, cls in _LISTS.items():
        items = doc.get(key, [])
        if not isinstance(items, list):
            raise CaseParseError(f"field {key}: expected a list")
        parts[key] = tuple(_record(cls, item, f"{key}[{i}]") for i, item in enumerate(items))
    case = NetworkCase(
        base_mva=_coerce(doc["base_mva"], "float", "base_mva"),
        name=_coerce(doc.get("name", ""), "str", "name"),
        **parts,
    )
    return check_case(case) if validate else case


def case_to_dict(case: NetworkCase) -> dict:
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "name": case.name, "base_mva": case.base_mva}
    for key in _LISTS:
        doc[key] = [dataclasses.asdict(item) for item in getattr(case, key)]
    return doc


def loads_case(text: str, source: str = "<string>", *, validate: bool = True) -> NetworkCase:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return case_from_dict(doc, validate=validate)
    except CaseParseError as exc:
        raise CaseParseError(f"{source}: {exc}") from None


def load_case(path, *, validate: bool = True) -> NetworkCase:
    """Read and validate a case file.

    Raises :class:`CaseParseError` (with line/column or field path) for
    malformed content and :class:`CaseValidationError` listing every violated
    invariant otherwise.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CaseParseError(f"{path}: cannot read case file ({exc.strerror})") from None
    return loads_case(text, str(path), validate=validate)


def dumps_case(case: NetworkCase) -> str:
    return json.dumps(case_to_dict(case), indent=1)


def save_case(case: NetworkCase, path) -> None:
    Path(path).write_text(dumps_case(case) + "\n")


BUILTIN_CASES = {
    "ieee14-2t": "ieee14_2t.json",
    "ieee14-3t": "ieee14_3t.json",
    "ieee14-ac": "ieee14_ac.json",
}


def builtin_case(name: str) -> NetworkCase:
    """Bundled modified IEEE 14-bus cases (plus the plain AC ``ieee14-ac``)."""
    try:
        fname = BUILTIN_CASES[name]
    except KeyError:
        raise KeyError(f"unknown builtin case {name!r}; choose from {sorted(BUILTIN_CASES)}") from None
    text = resources.files("hvdc_mopf.data").joinpath(fname).read_text()
    return loads_case(text, f"builtin:{name}")


def resolve_case(ref: str) -> NetworkCase:
    """Builtin name or path to a case file."""
    if ref in BUILTIN_CASES:
        return builtin_case(ref)
    return load_case(ref)
