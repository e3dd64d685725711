import json
from importlib import resources

import numpy as np
import pytest

from hvdc_mopf.cli import main, run_seed
from hvdc_mopf.reports import ParetoRow, DataError, dumps_pareto, loads_pareto, read_pareto

SMALL = ["--iterations", "10", "--population", "30"]


def _synthetic_csv(path, objs):
    rows = [ParetoRow("mopso", 0, i, {"P_G2": 0.1 * i}, tuple(map(float, o)), True, 0.0)
            for i, o in enumerate(objs)]
    path.write_text(dumps_pareto(rows))
    return path


def test_pf_table(capsys):
    assert main(["pf", "ieee14-2t"]) == 0
    out = capsys.readouterr().out
    assert "loss rate" in out and "dc-slack" in out


def test_pf_json_three_terminal(capsys):
    assert main(["pf", "ieee14-3t", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["converters"]) == 3 and len(doc["buses"]) == 14
    assert set(doc["objectives"]) == {"O", "E", "V_de"}


def test_pf_missing_file(tmp_path, capsys):
    assert main(["pf", str(tmp_path / "nope.json")]) == 2
    assert "nope.json" in capsys.readouterr().err


def test_pf_bad_case_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["pf", str(bad)]) == 2


def test_usage_errors(capsys):
    assert main(["opt"]) == 1
    assert main(["decide", "x.csv", "--weights", "1,2"]) == 1
    assert main(["decide", "x.csv", "--weights", "0,0,0"]) == 1
    assert main(["opt", "ieee14-2t", "--runs", "0"]) == 1
    assert main(["opt", "ieee14-2t", "--objectives", "O,cost"]) == 1


def test_numeric_failure_exit_code(tmp_path, capsys):
    doc = json.loads((resources.files("hvdc_mopf") / "data" / "ieee14_ac.json").read_text())
    for b in doc["ac_buses"]:
        b["p_load"] *= 15
    p = tmp_path / "heavy.json"
    p.write_text(json.dumps(doc))
    assert main(["pf", str(p)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_run_seed_is_stable():
    assert run_seed(7, 0) == run_seed(7, 0)
    assert run_seed(7, 0) != run_seed(7, 1)


def test_opt_writes_readable_csv(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["opt", "ieee14-2t", "--algo", "both", "--seed", "7", "--out", str(out), *SMALL]) == 0
    rows = read_pareto(out / "pareto.csv")
    assert {r.algo for r in rows} == {"mopso", "nsga2"}
    assert all(r.feasible for r in rows)
    assert len(rows[0].genes) == 17
    assert loads_pareto(dumps_pareto(rows)) == rows
    stats = json.loads((out / "stats.json").read_text())
    assert stats["schema_version"] == 1 and len(stats["runs"]) == 2
    assert (out / "stats.csv").read_text().startswith("algorithm,iterations_to_stabilize_max")


def test_opt_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["opt", "ieee14-2t", "--runs", "1", "--seed", "7", "--out", str(d), *SMALL]) == 0
    assert (a / "pareto.csv").read_bytes() == (b / "pareto.csv").read_bytes()


def test_nsga2_same_schema(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["opt", "ieee14-2t", "--algo", "mopso", "--seed", "1", "--out", str(a), *SMALL])
    main(["opt", "ieee14-2t", "--algo", "nsga2", "--seed", "1", "--out", str(b), *SMALL])
    ha = (a / "pareto.csv").read_text().splitlines()[:2]
    hb = (b / "pareto.csv").read_text().splitlines()[:2]
    assert ha == hb


def test_decide_three_separated_rows(tmp_path, capsys):
    csv = _synthetic_csv(tmp_path / "p.csv", [[0, 10, 10], [10, 0, 10], [10, 10, 0]])
    out = tmp_path / "d"
    assert main(["decide", str(csv), "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["weights"] == pytest.approx({"O": 1 / 3, "E": 1 / 3, "V_de": 1 / 3})
    assert [c["size"] for c in doc["clusters"]] == [1, 1, 1]
    assert [c["d"] for c in doc["compromises"]] == [1.0, 1.0, 1.0]
    assert [c["label"] for c in doc["compromises"]] == ["O", "E", "V_de"]
    annotated = read_pareto(out / "pareto_annotated.csv")
    assert {r.extra["cluster"] for r in annotated} == {"O", "E", "V_de"}


def test_decide_weights_normalized(tmp_path, capsys):
    csv = _synthetic_csv(tmp_path / "p.csv", [[0, 10, 10], [10, 0, 10], [10, 10, 0], [5, 5, 5]])
    assert main(["decide", str(csv), "--weights", "2,1,1", "--out", str(tmp_path / "d")]) == 0
    doc = json.loads((tmp_path / "d" / "report.json").read_text())
    assert doc["weights"] == {"O": 0.5, "E": 0.25, "V_de": 0.25}


def test_decide_data_errors(tmp_path, capsys):
    csv = _synthetic_csv(tmp_path / "p.csv", [[0, 1, 1], [1, 0, 1]])
    assert main(["decide", str(csv), "--out", str(tmp_path / "d")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("algo,run\nx,1\n")
    assert main(["decide", str(bad), "--out", str(tmp_path / "d")]) == 2


def test_loads_pareto_rejects_bad_rows():
    good = dumps_pareto([ParetoRow("mopso", 0, 0, {"a": 1.0}, (1.0, 2.0, 3.0), True, 0.0)])
    with pytest.raises(DataError, match="version"):
        loads_pareto(good.replace("v1", "v9"))
    with pytest.raises(DataError, match="not a number"):
        loads_pareto(good.replace("2.0", "two"))
    with pytest.raises(DataError, match="fields"):
        loads_pareto(good + "mopso,0\n")


def test_pipeline_artifacts_and_determinism(tmp_path, capsys):
    runs = {}
    for name, workers in (("a", "1"), ("b", "1"), ("c", "2")):
        out = tmp_path / name
        assert main(["pipeline", "ieee14-3t", "--seed", "3", "--workers", workers,
                     "--out", str(out), *SMALL]) == 0
        runs[name] = out
    for f in ("pareto.csv", "report.json", "stats.json"):
        assert (runs["a"] / f).exists()
    for other in ("b", "c"):
        assert (runs["a"] / "pareto.csv").read_bytes() == (runs[other] / "pareto.csv").read_bytes()
        assert (runs["a"] / "report.json").read_bytes() == (runs[other] / "report.json").read_bytes()
    doc = json.loads((runs["a"] / "report.json").read_text())
    assert len(doc["compromises"]) == 3 and "base" in doc


def test_metrics_examples(tmp_path, capsys):
    front = _synthetic_csv(tmp_path / "f.csv", [[1, 1, 0]])
    ref = _synthetic_csv(tmp_path / "r.csv", [[0, 0, 0], [2, 2, 0]])
    assert main(["metrics", str(front), "--ref", str(ref), "--no-normalize"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[1]
    assert float(line.split(",")[1]) == pytest.approx(1.41421, abs=1e-5)

    assert main(["metrics", str(ref), "--ref", str(ref)]) == 0
    assert float(capsys.readouterr().out.strip().splitlines()[1].split(",")[1]) == 0.0


def test_metrics_permutation_invariant(tmp_path, capsys):
    pts = [[1, 5, 0], [2, 3, 0], [4, 1, 0], [3, 2.5, 0]]
    a = _synthetic_csv(tmp_path / "a.csv", pts)
    b = _synthetic_csv(tmp_path / "b.csv", pts[::-1])
    ref = _synthetic_csv(tmp_path / "r.csv", [[0, 4, 0], [3, 0, 0]])
    main(["metrics", str(a), "--ref", str(ref)])
    out_a = capsys.readouterr().out.splitlines()[1].split(",")[1:]
    main(["metrics", str(b), "--ref", str(ref)])
    out_b = capsys.readouterr().out.splitlines()[1].split(",")[1:]
    assert np.allclose(np.array(out_a, float), np.array(out_b, float), atol=1e-12)


def test_metrics_dimension_mismatch(tmp_path, capsys):
    f = _synthetic_csv(tmp_path / "f.csv", [[1, 1, 0], [0, 2, 0]])
    assert main(["metrics", str(f), "--objectives", "O,X"]) == 1


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"case": "ieee14-2t", "seed": 5, "mopso": {"population": 10, "iterations": 2},
                               "nsga2": {"population": 10, "iterations": 2}}))
    out = tmp_path / "o"
    assert main(["opt", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads((out / "stats.json").read_text())["runs"][0]["seed"] == run_seed(5, 0)
    cfg.write_text("[1, 2")
    assert main(["opt", "--config", str(cfg)]) == 2
