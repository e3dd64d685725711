"""Command line: ``hvdc-mopf {pf,opt,decide,pipeline,metrics}``.

Exit codes: 0 success, 1 usage error, 2 data error (case, CSV, config),
3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .controls import base_setpoints
from .decision import normalize_weights, select_compromise
from .errors import CaseError, NumericalError
from .evaluation import OBJECTIVES, Encoding, OpfProblem, evaluate, objective_vector
from .grid import BUILTIN_CASES, NetworkCase, resolve_case
from .metrics import (RunRecord, RunStats, front_quality, iterations_to_stabilize,
                      reference_front, stats_csv, union_bounds)
from .optimizers import MopsoParams, Nsga2Params, mopso_run, nsga2_run
from .reports import (STATS_VERSION, DataError, ParetoRow, clean, dumps_json, dumps_pareto,
                      read_pareto, report_dict, rows_from_result, write_text)
from .vsc import solve_coupled

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
ALGOS = ("mopso", "nsga2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    case: str
    algo: str = "mopso"
    runs: int = 1
    seed: int = 0
    out: str = "out"
    objectives: tuple = OBJECTIVES
    workers: int = 1
    sp_norm: str = "l2"
    threshold: float = 0.95
    normalize: bool = True
    weights: tuple = (1.0, 1.0, 1.0)
    progress: bool = False
    mopso: MopsoParams = field(default_factory=MopsoParams)
    nsga2: Nsga2Params = field(default_factory=Nsga2Params)

    def __post_init__(self):
        if self.algo not in (*ALGOS, "both"):
            raise UsageError(f"unknown algorithm {self.algo!r}")
        if self.runs < 1:
            raise UsageError("runs must be >= 1")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if self.sp_norm not in ("l1", "l2"):
            raise UsageError("sp-norm must be l1 or l2")
        if not 0 < self.threshold <= 1:
            raise UsageError("threshold must lie in (0, 1]")
        bad = [o for o in self.objectives if o not in OBJECTIVES]
        if bad or len(set(self.objectives)) != len(self.objectives) or not self.objectives:
            raise UsageError(f"objectives must be a subset of {','.join(OBJECTIVES)}")
        try:
            if len(self.weights) != 3:
                raise ValueError("three weights required")
            normalize_weights(self.weights)
        except ValueError as exc:
            raise UsageError(f"weights: {exc}") from None

    @property
    def algorithms(self) -> tuple:
        return ALGOS if self.algo == "both" else (self.algo,)


_SCALAR_KEYS = {"algo", "runs", "seed", "out", "objectives", "workers", "sp_norm",
                "threshold", "normalize", "weights", "progress"}


def _params(cls, raw, name):
    if not isinstance(raw, dict):
        raise DataError(f"config: '{name}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise DataError(f"config: unknown {name} keys {unknown}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise DataError(f"config: {name}: {exc}") from None


def load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise DataError(f"{path}: config must be a JSON object")
    unknown = sorted(set(doc) - _SCALAR_KEYS - {"mopso", "nsga2", "case"})
    if unknown:
        raise DataError(f"{path}: unknown config keys {unknown}")
    return doc


def build_config(args) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    doc = load_config(args.config) if getattr(args, "config", None) else {}
    values = {k: doc[k] for k in _SCALAR_KEYS if k in doc}
    mopso_raw = dict(doc.get("mopso", {}))
    nsga_raw = dict(doc.get("nsga2", {}))
    for key in _SCALAR_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    for key in ("iterations", "population"):
        v = getattr(args, key, None)
        if v is not None:
            mopso_raw[key] = v
            nsga_raw[key] = v
    if isinstance(values.get("objectives"), str):
        values["objectives"] = tuple(s.strip() for s in values["objectives"].split(","))
    if "objectives" in values:
        values["objectives"] = tuple(values["objectives"])
    if "weights" in values:
        values["weights"] = tuple(float(w) for w in values["weights"])
    case = args.case if getattr(args, "case", None) else doc.get("case")
    if not case:
        raise UsageError("no case given")
    return RunConfig(case=case, mopso=_params(MopsoParams, mopso_raw, "mopso"),
                     nsga2=_params(Nsga2Params, nsga_raw, "nsga2"), **values)


def run_seed(master: int, run: int) -> int:
    """Seed of repetition ``run``; the same for every algorithm."""
    return int(np.random.SeedSequence([int(master), int(run)]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# optimization batch


def _run_one(task):
    case, objectives, algo, params, progress = task
    problem = OpfProblem(case, objectives)
    fn = mopso_run if algo == "mopso" else nsga2_run
    return fn(problem, params, progress=progress)


def _progress_printer(algo, run):
    def report(iteration, archive, fraction):
        rec = {"algo": algo, "run": run, "iteration": iteration, "archive": archive,
               "nd_fraction": fraction}
        print(json.dumps(rec), file=sys.stderr, flush=True)
    return report


def run_batch(cfg: RunConfig, case: NetworkCase) -> list:
    """All (algo, run, ParetoSet) triples in deterministic order.

    With several runs and ``workers > 1`` whole runs go to worker processes;
    with a single run the workers evaluate its populations instead.
    """
    tasks, keys = [], []
    parallel_runs = cfg.workers > 1 and cfg.runs * len(cfg.algorithms) > 1
    for algo in cfg.algorithms:
        base = cfg.mopso if algo == "mopso" else cfg.nsga2
        for run in range(cfg.runs):
            params = dataclasses.replace(base, seed=run_seed(cfg.seed, run),
                                         workers=1 if parallel_runs else cfg.workers)
            progress = _progress_printer(algo, run) if cfg.progress and not parallel_runs else None
            tasks.append((case, cfg.objectives, algo, params, progress))
            keys.append((algo, run))
    if parallel_runs:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    return [(a, r, res) for (a, r), res in zip(keys, results)]


def batch_stats(batch, cfg: RunConfig) -> tuple[RunStats, dict]:
    fronts = [res.objectives() for _, _, res in batch if len(res)]
    records, runs = [], []
    if fronts:
        ref = reference_front(fronts)
        bounds = union_bounds(fronts) if cfg.normalize else None
    for algo, run, res in batch:
        its = iterations_to_stabilize(res.history, cfg.threshold) if res.history else None
        if len(res) and fronts:
            q = front_quality(res.objectives(), ref, bounds=bounds, sp_norm=cfg.sp_norm)
            g, s = q.gd, q.sp
        else:
            g = s = math.nan
        rec = RunRecord(algo, run, its, res.elapsed, g, s, len(res))
        records.append(rec)
        runs.append({"algo": algo, "run": run, "seed": res.seed,
                     "iterations_to_stabilize": its, "elapsed": res.elapsed, "gd": g, "sp": s,
                     "front_size": len(res), "history": list(res.history)})
    stats = RunStats(records)
    doc = {
        "schema_version": STATS_VERSION,
        "case": cfg.case,
        "objectives": list(cfg.objectives),
        "seed": cfg.seed,
        "threshold": cfg.threshold,
        "sp_norm": cfg.sp_norm,
        "normalized": cfg.normalize,
        "reference_front_size": len(ref) if fronts else 0,
        "runs": runs,
        "aggregate": stats.aggregate(),
    }
    return stats, clean(doc)


def _pareto_rows(batch) -> list[ParetoRow]:
    rows = []
    for _, run, res in batch:
        rows.extend(rows_from_result(res, run))
    return rows


def _write_opt(batch, cfg, out: Path):
    rows = _pareto_rows(batch)
    write_text(out / "pareto.csv", dumps_pareto(rows))
    stats, doc = batch_stats(batch, cfg)
    write_text(out / "stats.json", dumps_json(doc))
    write_text(out / "stats.csv", stats_csv(stats))
    return rows, stats


def _print_stats(stats: RunStats):
    agg = stats.aggregate()
    for algo in stats.algorithms():
        a = agg[algo]
        parts = [f"{algo}: runs={a['runs']}", f"not_stabilized={a['not_stabilized']}"]
        for name in ("iterations_to_stabilize", "gd", "sp", "elapsed"):
            m = a[name]["mean"]
            parts.append(f"{name}_mean={'n/a' if m is None else f'{m:.6g}'}")
        print("  ".join(parts))


# ---------------------------------------------------------------------------
# decision stage


def _pick_rows(rows, algo=None, run=None):
    if not rows:
        raise DataError("pareto file has no rows")
    algo = algo or rows[0].algo
    pool = [i for i, r in enumerate(rows) if r.algo == algo]
    if not pool:
        raise DataError(f"no rows for algorithm {algo!r}")
    run = min(rows[i].run for i in pool) if run is None else run
    picked = [i for i in pool if rows[i].run == run and rows[i].feasible]
    if len(picked) < 3:
        raise DataError(f"need at least 3 feasible rows for {algo} run {run}, found {len(picked)}")
    return algo, run, picked


def decide_rows(rows, weights, seed, algo=None, run=None, extra=None):
    algo, run, picked = _pick_rows(rows, algo, run)
    sub = [rows[i] for i in picked]
    f = np.array([r.objectives for r in sub], dtype=float)
    rep = select_compromise(f, weights, seed=seed)
    doc = report_dict(rep, sub, source={"algo": algo, "run": run, "rows": len(sub)}, extra=extra)
    labels = {c.label: c for c in rep.clusters}
    d_all = rep.d_for_rows()
    annotated = []
    for i, r in enumerate(rows):
        extra_cols = {"cluster": "", "d": ""}
        if i in picked:
            k = picked.index(i)
            lab = next(c.label for c in labels.values() if c.cluster == rep.assignment[k])
            extra_cols = {"cluster": lab, "d": float(d_all[k])}
        annotated.append(dataclasses.replace(r, extra={**r.extra, **extra_cols}))
    return doc, annotated


def _print_report(doc):
    print(f"{'solution':<10}{'cluster':<9}{'O (MW)':>12}{'E (lb/h)':>14}{'V_de (pu2)':>13}{'d':>9}")
    for c in doc["compromises"]:
        print(f"{c['name']:<10}{c['label']:<9}{c['O']:>12.4f}{c['E']:>14.2f}{c['V_de']:>13.5f}{c['d']:>9.4f}")


def _operating_point(case, genes: dict | None):
    enc = Encoding(case)
    x = enc.base_vector() if genes is None else np.array([genes[n] for n in enc.names])
    ev = evaluate(x, case, encoding=enc)
    if ev.solution is None:
        raise NumericalError(ev.error or "power flow failed", stage="evaluate")
    sol = ev.solution
    return {"O": ev.objectives_all[0], "E": ev.objectives_all[1], "V_de": ev.objectives_all[2],
            "loss_rate_percent": 100.0 * sol.loss_rate, "violation": ev.violation}


# ---------------------------------------------------------------------------
# subcommands


def cmd_pf(args) -> int:
    case = resolve_case(args.case)
    sol = solve_coupled(case, base_setpoints(case))
    f = objective_vector(sol, case)
    if args.json:
        doc = {
            "case": case.name or args.case,
            "buses": [{"id": b.id, "vm": sol.ac.vm[i], "va_deg": math.degrees(sol.ac.va[i])}
                      for i, b in enumerate(case.ac_buses)],
            "generators": [{"bus": g.bus, "p": sol.p_gen[k], "q": sol.q_gen[k]}
                           for k, g in enumerate(case.generators)],
            "converters": [{"ac_bus": cv.ac_bus, "dc_bus": cv.dc_bus, "mode": cv.mode, "p_s": st.p_s,
                            "q_s": st.q_s, "u_dc": sol.dc.u[case.dc_bus_index[cv.dc_bus]],
                            "loss": st.station_loss}
                           for cv, st in zip(case.converters, sol.converters)],
            "objectives": dict(zip(OBJECTIVES, f)),
            "loss_rate_percent": 100.0 * sol.loss_rate,
            "outer_iterations": sol.outer_iterations,
        }
        print(dumps_json(clean(doc)), end="")
        return EXIT_OK
    print(f"case {case.name or args.case}: {case.n_bus} AC buses, {len(case.dc_buses)} DC buses, "
          f"{len(case.converters)} converters; converged in {sol.outer_iterations} outer iterations")
    print(f"\n{'bus':>4}{'U (pu)':>10}{'angle (deg)':>13}")
    for i, b in enumerate(case.ac_buses):
        print(f"{b.id:>4}{sol.ac.vm[i]:>10.4f}{math.degrees(sol.ac.va[i]):>13.4f}")
    print(f"\n{'gen':>4}{'bus':>5}{'P_G (pu)':>10}{'Q_G (pu)':>10}")
    for k, g in enumerate(case.generators):
        print(f"{k + 1:>4}{g.bus:>5}{sol.p_gen[k]:>10.4f}{sol.q_gen[k]:>10.4f}")
    if case.converters:
        print(f"\n{'vsc':>4}{'ac':>4}{'dc':>4}  {'mode':<11}{'P_s (pu)':>10}{'Q_s (pu)':>10}"
              f"{'U_dc (pu)':>11}{'loss (pu)':>11}")
        for k, (cv, st) in enumerate(zip(case.converters, sol.converters)):
            udc = sol.dc.u[case.dc_bus_index[cv.dc_bus]]
            print(f"{k + 1:>4}{cv.ac_bus:>4}{cv.dc_bus:>4}  {cv.mode:<11}{st.p_s:>10.4f}{st.q_s:>10.4f}"
                  f"{udc:>11.4f}{st.station_loss:>11.5f}")
    print(f"\nO = {f[0]:.4f} MW   E = {f[1]:.2f} lb/h   V_de = {f[2]:.5f} pu2   "
          f"loss rate = {100 * sol.loss_rate:.2f} %")
    return EXIT_OK


def cmd_opt(args) -> int:
    cfg = build_config(args)
    case = resolve_case(cfg.case)
    batch = run_batch(cfg, case)
    out = Path(cfg.out)
    rows, stats = _write_opt(batch, cfg, out)
    print(f"wrote {len(rows)} rows to {out / 'pareto.csv'}; stats in {out / 'stats.json'}")
    _print_stats(stats)
    return EXIT_OK


def cmd_decide(args) -> int:
    weights = args.weights if args.weights is not None else (1.0, 1.0, 1.0)
    rows = read_pareto(args.pareto)
    doc, annotated = decide_rows(rows, weights, args.seed, args.algo, args.run)
    out = Path(args.out)
    write_text(out / "report.json", dumps_json(doc))
    write_text(out / "pareto_annotated.csv", dumps_pareto(annotated))
    _print_report(doc)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = build_config(args)
    case = resolve_case(cfg.case)
    batch = run_batch(cfg, case)
    out = Path(cfg.out)
    rows, stats = _write_opt(batch, cfg, out)
    base = _operating_point(case, None)
    doc, annotated = decide_rows(rows, cfg.weights, cfg.seed, cfg.algorithms[0], 0,
                                 extra={"case": cfg.case, "seed": cfg.seed, "base": base})
    for comp in doc["compromises"]:
        comp["operating_point"] = clean(_operating_point(case, comp["genes"]))
    write_text(out / "report.json", dumps_json(doc))
    write_text(out / "pareto_annotated.csv", dumps_pareto(annotated))
    _print_stats(stats)
    print(f"base: O={base['O']:.4f} MW  E={base['E']:.2f} lb/h  V_de={base['V_de']:.5f} pu2  "
          f"loss rate={base['loss_rate_percent']:.2f} %")
    _print_report(doc)
    return EXIT_OK


def _front_from_csv(path, objectives):
    rows = read_pareto(path)
    if not rows:
        raise DataError(f"{path}: no rows")
    cols = [OBJECTIVES.index(o) for o in objectives]
    return np.array([[r.objectives[c] for c in cols] for r in rows], dtype=float)


def cmd_metrics(args) -> int:
    objectives = tuple(args.objectives.split(",")) if args.objectives else OBJECTIVES
    if any(o not in OBJECTIVES for o in objectives):
        raise UsageError(f"objectives must be a subset of {','.join(OBJECTIVES)}")
    fronts = [_front_from_csv(p, objectives) for p in args.fronts]
    ref = _front_from_csv(args.ref, objectives) if args.ref else reference_front(fronts)
    bounds = union_bounds([*fronts, ref]) if args.normalize else None
    print("front,gd,sp")
    for path, f in zip(args.fronts, fronts):
        q = front_quality(f, ref, bounds=bounds, sp_norm=args.sp_norm)
        print(f"{path},{q.gd!r},{'' if math.isnan(q.sp) else repr(q.sp)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _weights(text: str):
    try:
        w = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if len(w) != 3:
        raise argparse.ArgumentTypeError("exactly three weights (O,E,V_de) required")
    try:
        normalize_weights(w)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return w


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _opt_arguments(p, with_weights):
    p.add_argument("case", nargs="?", help=f"case file or builtin ({', '.join(BUILTIN_CASES)})")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--algo", choices=(*ALGOS, "both"))
    p.add_argument("--runs", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--objectives", help="comma list drawn from O,E,V_de (default: all three)")
    p.add_argument("--iterations", type=int, help="iterations for both optimizers")
    p.add_argument("--population", type=_positive_int, help="population for both optimizers")
    p.add_argument("--workers", type=_positive_int, help="worker processes")
    p.add_argument("--sp-norm", dest="sp_norm", choices=("l2", "l1"))
    p.add_argument("--threshold", type=float, help="stabilization threshold (default 0.95)")
    p.add_argument("--no-normalize", dest="normalize", action="store_const", const=False,
                   help="compute GD/SP on raw objective scales")
    p.add_argument("--progress", action="store_const", const=True,
                   help="stream per-iteration JSON lines to stderr")
    if with_weights:
        p.add_argument("--weights", type=_weights, help="GRP weights for O,E,V_de, e.g. 2,1,1")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hvdc-mopf", description="Multi-objective optimal power flow for AC grids "
                     "with VSC-HVDC links: swarm optimization plus clustering-based decision support.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pf", help="coupled AC/DC power flow at the case's base operating point")
    p.add_argument("case")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_pf)

    p = sub.add_parser("opt", help="run the optimizer(s) and write pareto.csv and stats.json")
    _opt_arguments(p, with_weights=False)
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("decide", help="cluster a front and select compromise solutions")
    p.add_argument("pareto", help="pareto.csv written by opt")
    p.add_argument("--weights", type=_weights)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algo", help="rows of this algorithm (default: first in file)")
    p.add_argument("--run", type=int, help="rows of this run (default: lowest)")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("pipeline", help="opt followed by decide on the first run")
    _opt_arguments(p, with_weights=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("metrics", help="GD and SP of fronts against a reference")
    p.add_argument("fronts", nargs="+", help="pareto CSV files")
    p.add_argument("--ref", help="reference pareto CSV (default: non-dominated union of fronts)")
    p.add_argument("--objectives", help="comma list drawn from O,E,V_de (default: all three)")
    p.add_argument("--sp-norm", dest="sp_norm", choices=("l2", "l1"), default="l2")
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hvdc-mopf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CaseError, DataError) as exc:
        print(f"hvdc-mopf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"hvdc-mopf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"hvdc-mopf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
