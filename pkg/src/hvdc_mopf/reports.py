"""Versioned CSV/JSON artifacts written and read by the command line.

``pareto.csv`` starts with a ``# hvdc-mopf pareto v1`` line, then a header::

    algo,run,id,<gene columns...>,O,E,V_de,feasible,violation[,cluster,d]

Floats are written with ``repr`` so a read-back reproduces them exactly.
The optional ``cluster`` and ``d`` columns are added by ``decide``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HvdcMopfError

PARETO_MAGIC = "# hvdc-mopf pareto v"
PARETO_VERSION = 1
REPORT_VERSION = 1
STATS_VERSION = 1
OBJECTIVE_COLUMNS = ("O", "E", "V_de")


class DataError(HvdcMopfError):
    """Malformed or unusable input file."""


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class ParetoRow:
    algo: str
    run: int
    id: int
    genes: dict
    objectives: tuple  # (O, E, V_de)
    feasible: bool
    violation: float
    extra: dict = field(default_factory=dict)


def rows_from_result(result, run: int) -> list[ParetoRow]:
    rows = []
    for k, m in enumerate(result.members):
        genes = dict(zip(result.gene_names, (float(v) for v in m.x)))
        rows.append(ParetoRow(result.algorithm, run, k, genes,
                              tuple(float(v) for v in m.objectives_all),
                              bool(m.feasible), float(m.violation)))
    return rows


def dumps_pareto(rows) -> str:
    gene_cols: list[str] = []
    extra_cols: list[str] = []
    for r in rows:
        for g in r.genes:
            if g not in gene_cols:
                gene_cols.append(g)
        for e in r.extra:
            if e not in extra_cols:
                extra_cols.append(e)
    buf = io.StringIO()
    buf.write(f"{PARETO_MAGIC}{PARETO_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algo", "run", "id", *gene_cols, *OBJECTIVE_COLUMNS, "feasible", "violation", *extra_cols])
    for r in rows:
        w.writerow([r.algo, r.run, r.id, *(fmt(r.genes[g]) if g in r.genes else "" for g in gene_cols),
                    *(fmt(v) for v in r.objectives), fmt(r.feasible), fmt(r.violation),
                    *(fmt(r.extra.get(e, "")) for e in extra_cols)])
    return buf.getvalue()


def _float(text, where):
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{where}: not a number: {text!r}") from None


def loads_pareto(text: str, source: str = "<string>") -> list[ParetoRow]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(PARETO_MAGIC):
        raise DataError(f"{source}:1: missing '{PARETO_MAGIC}{PARETO_VERSION}' header line")
    version = lines[0][len(PARETO_MAGIC):].strip()
    if version != str(PARETO_VERSION):
        raise DataError(f"{source}:1: unsupported pareto schema version {version!r}")
    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{source}:2: missing column header") from None
    required = ["algo", "run", "id", *OBJECTIVE_COLUMNS, "feasible", "violation"]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{source}:2: missing columns {missing}")
    pos = {c: i for i, c in enumerate(header)}
    o_at, v_at = pos["O"], pos["violation"]
    gene_cols = header[pos["id"] + 1:o_at]
    extra_cols = header[v_at + 1:]
    rows = []
    for n, rec in enumerate(reader, start=3):
        if not rec:
            continue
        where = f"{source}:{n}"
        if len(rec) != len(header):
            raise DataError(f"{where}: expected {len(header)} fields, got {len(rec)}")
        try:
            run, ident = int(rec[pos["run"]]), int(rec[pos["id"]])
        except ValueError:
            raise DataError(f"{where}: run and id must be integers") from None
        genes = {g: _float(rec[pos[g]], where) for g in gene_cols if rec[pos[g]] != ""}
        objs = tuple(_float(rec[pos[c]], where) for c in OBJECTIVE_COLUMNS)
        feas = rec[pos["feasible"]]
        if feas not in ("0", "1"):
            raise DataError(f"{where}: feasible must be 0 or 1")
        extra = {e: rec[pos[e]] for e in extra_cols}
        rows.append(ParetoRow(rec[pos["algo"]], run, ident, genes, objs, feas == "1",
                              _float(rec[pos["violation"]], where), extra))
    return rows


def read_pareto(path) -> list[ParetoRow]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    return loads_pareto(text, str(path))


def write_text(path, text: str):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def report_dict(report, rows, *, source=None, extra=None) -> dict:
    """Serializable form of a :class:`~hvdc_mopf.decision.CompromiseReport`."""
    d_all = report.d_for_rows()
    names = ("I", "II", "III")

    def row_view(i):
        r = rows[i]
        return {"algo": r.algo, "run": r.run, "id": r.id,
                **dict(zip(OBJECTIVE_COLUMNS, r.objectives)), "d": d_all[i]}

    clusters = []
    for c in report.clusters:
        members = sorted((int(report.order[k]) for k in c.members))
        sel = int(report.order[c.selected])
        clusters.append({"label": c.label, "size": len(members), "compromise": row_view(sel),
                         "members": [row_view(i) for i in members]})
    compromises = []
    for name, c in zip(names, report.clusters):
        sel = int(report.order[c.selected])
        compromises.append({"name": name, "label": c.label, **row_view(sel),
                            "genes": rows[sel].genes})
    out = {
        "schema_version": REPORT_VERSION,
        "weights": dict(zip(OBJECTIVE_COLUMNS, report.weights)),
        "source": source or {},
        "fcm": {"iterations": report.fcm.iterations, "loss": report.fcm.loss},
        "compromises": compromises,
        "clusters": clusters,
    }
    if extra:
        out.update(extra)
    return clean(out)
