"""Problem-file parsing, report round-trips, CLI exit codes."""

from __future__ import annotations

import json

import numpy as np
import pytest

from opsyslab import problems
from opsyslab.cli import main
from opsyslab.errors import InputError


def doc_unperforated_instance() -> str:
    return json.dumps(
        {
            "kind": "unperforated",
            "payload": {
                "S": [[[0, 2], [2, 0]]],
                "T": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]],
                "a": [[0, 2], [2, 0]],
                "b": [[1, 0], [0, 5]],
            },
        }
    )


def test_parse_perf_document_matrices():
    doc = problems.parse_problem(doc_unperforated_instance())
    assert doc.kind == "unperforated"
    assert np.allclose(doc.payload["a"], np.array([[0, 2], [2, 0]]))
    assert np.allclose(doc.payload["b"], np.diag([1, 5]))


def test_parse_rejects_empty_matrix_list():
    bad = json.dumps({"kind": "unperforated", "payload": {"S": [], "T": [[[1]]]}})
    with pytest.raises(InputError) as err:
        problems.parse_problem(bad)
    assert "payload.S" in str(err.value)


def test_parse_rejects_bad_entry_with_path():
    bad = json.dumps(
        {
            "kind": "unperforated",
            "payload": {"S": [[[1, "x"], [0, 1]]], "T": [[[1]]]},
        }
    )
    with pytest.raises(InputError) as err:
        problems.parse_problem(bad)
    assert "payload.S[0]" in str(err.value)


def test_parse_rejects_non_hermitian():
    bad = json.dumps(
        {"kind": "purity", "payload": {"state": [[0, 1], [0, 0]]}}
    )
    with pytest.raises(InputError):
        problems.parse_problem(bad)


def test_parse_rejects_unknown_kind():
    with pytest.raises(InputError):
        problems.parse_problem(json.dumps({"kind": "nope", "payload": {}}))


def test_run_perf_document_infeasible():
    doc = problems.parse_problem(doc_unperforated_instance())
    report = problems.run(doc)
    assert report["schema"] == "opsyslab/1"
    assert report["results"]["verdict"] == "INFEASIBLE"
    assert report["results"]["certificate"]


def test_report_roundtrip_and_determinism():
    doc = problems.parse_problem(doc_unperforated_instance())
    report = problems.run(doc)
    rendered = problems.render_value(report)
    echoed = json.loads(rendered)["problem"]
    doc2 = problems.parse_problem(problems.render_value(echoed))
    assert doc2.canonical == doc.canonical
    report2 = problems.run(doc2)
    r1 = dict(report, wall_time_s=None)
    r2 = dict(report2, wall_time_s=None)
    assert problems.render_value(r1) == problems.render_value(r2)


def test_float_rendering_roundtrips():
    values = [0.5, 1 / 3, 2.5e-8, np.pi, 1e300, -0.0024999999999999467]
    for v in values:
        assert float(json.loads(problems.render_value(v))) == v


def test_cli_repro_exit_zero(capsys):
    assert main(["repro", "--id", "E:perf"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["verdict"] == "INFEASIBLE"
    assert out["provenance"] == "E:perf"


def test_cli_repro_unknown_id(capsys):
    assert main(["repro", "--id", "nope"]) == 2


def test_cli_korovkin_inline(capsys):
    assert main(["korovkin", "--n", "100", "--grid-size", "1001"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["deviations"]["x^2"] == pytest.approx(0.0025, abs=1e-12)


def test_cli_file_mode(tmp_path, capsys):
    path = tmp_path / "perf.json"
    path.write_text(doc_unperforated_instance())
    assert main(["check-unperforated", "--file", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["verdict"] == "INFEASIBLE"


def test_cli_kind_mismatch(tmp_path, capsys):
    path = tmp_path / "perf.json"
    path.write_text(doc_unperforated_instance())
    assert main(["purity", "--file", str(path)]) == 2


def test_cli_missing_file(capsys):
    assert main(["uep", "--file", "/nonexistent/x.json"]) == 2


def test_cli_batch_jobs(tmp_path, capsys):
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    p1.write_text(doc_unperforated_instance())
    p2.write_text(doc_unperforated_instance())
    assert main(["check-unperforated", "--file", str(p1), "--file", str(p2), "--jobs", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert isinstance(out, list) and len(out) == 2
    assert all(r["results"]["verdict"] == "INFEASIBLE" for r in out)


def test_cli_search_mode_with_seed(tmp_path, capsys):
    doc = json.dumps(
        {
            "kind": "unperforated",
            "payload": {
                "S": [[[0, 1], [1, 0]]],
                "T": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]],
                "trials": 10,
            },
            "seed": 5,
        }
    )
    path = tmp_path / "search.json"
    path.write_text(doc)
    assert main(["check-unperforated", "--file", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["verdict"] == "INFEASIBLE"


def test_cli_uep_document(tmp_path, capsys):
    doc = json.dumps(
        {
            "kind": "uep",
            "payload": {
                "S": [
                    [[1, 0], [0, 1]],
                    [[0, 1], [1, 0]],
                    [[[0, 0], [0, 1]], [[0, -1], [0, 0]]],
                ],
                "state": [[1, 0], [0, 0]],
            },
        }
    )
    path = tmp_path / "uep.json"
    path.write_text(doc)
    assert main(["uep", "--file", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["holds"] is False
    witness = np.array([[complex(*c) for c in row] for row in out["results"]["witness"]])
    assert np.allclose(witness, np.diag([1.0, 0.0]))


def test_cli_riesz_document(tmp_path, capsys):
    doc = json.dumps(
        {
            "kind": "riesz",
            "payload": {
                "B": [[[1, 0], [0, 1]]],
                "a": [[0, 0], [0, 1]],
                "lowers": [[[0, 0], [0, 0]]],
                "uppers": [[[1, 0], [0, 1]]],
                "epsilon": 1.0,
                "N": 3,
            },
        }
    )
    path = tmp_path / "riesz.json"
    path.write_text(doc)
    assert main(["riesz", "--file", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["results"]["betas"]) == 3
    assert all(nm <= (1 + 1.0 / (i + 1)) + 1e-6 for i, nm in enumerate(out["results"]["norms"]))


def test_cli_table_mode(capsys):
    assert main(["repro", "--id", "korovkin", "--table"]) == 0
    out = capsys.readouterr().out
    assert "deviations.x^2" in out


def test_cli_repro_list(capsys):
    assert main(["repro", "--list"]) == 0
    out = capsys.readouterr().out
    assert "E:unpmatrices" in out and "ideal-uep" in out
