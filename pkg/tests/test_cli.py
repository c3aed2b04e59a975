from __future__ import annotations

import io
import json

import numpy as np
import pytest

from cli_cases import CASES, GOLDEN_DIR, compare, corrupted_mcz, render_case, run_pipeline
from mpukit import __version__
from mpukit.cli import EXIT_CAP, EXIT_FAIL, EXIT_OK, EXIT_USAGE, run
from mpukit.io import chain_from_doc, loads
from mpukit.mpo import materialize


def _run(argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdin=io.StringIO(stdin), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name", sorted(CASES))
def test_structured_report_matches_golden(name):
    want = json.loads((GOLDEN_DIR / f"{name}.json").read_text())
    got = render_case(name)
    assert got["exit"] == want["exit"]
    assert compare(got["report"], want["report"]) == []


def test_golden_reports_embed_reproducibility_fields():
    for path in GOLDEN_DIR.glob("*.json"):
        rep = json.loads(path.read_text())["report"]
        for key in ("version", "seed", "tol", "rank_tol", "passed", "command"):
            assert key in rep, (path.name, key)


def test_mcz_pipeline_exits_zero():
    code, text, _ = run_pipeline([["gallery", "mcz", "--n", "3"], ["check"]])
    assert code == EXIT_OK
    assert "passed: true" in text


def test_corrupted_file_exits_one_with_site(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(corrupted_mcz())
    code, text, _ = _run(["check", str(path), "--format", "structured"])
    assert code == EXIT_FAIL
    assert json.loads(text)["failed_at"] == 4


def test_control_x_uniform_is_unitary_but_not_semisimple():
    code, text, _ = run_pipeline([["gallery", "cx", "--n", "4"], ["uniform", "--format", "structured"]])
    rep = json.loads(text)
    assert code == EXIT_OK
    assert rep["unitarity"]["passed"] is True
    assert rep["semisimple"]["passed"] is False


@pytest.mark.parametrize(
    "argv, stdin",
    [
        (["check"], "{not json"),
        (["check"], '{"kind": "chain", "sites": []}'),
        (["check", "/nonexistent/file.json"], ""),
        (["frobnicate"], ""),
        (["check", "--tol", "-1"], ""),
        (["check", "--format", "yaml"], ""),
        (["uniform", "--n-range", "5:2"], ""),
        (["lme"], '{"kind": "gates", "gates": [[[[1, 0]]]]}'),
        (["schmidt", "--cut", "9"], None),
    ],
)
def test_usage_and_parse_errors_exit_two(argv, stdin):
    if stdin is None:
        _, stdin, _ = _run(["gallery", "mcz", "--n", "3"])
    code, _, err = _run(argv, stdin)
    assert code == EXIT_USAGE
    assert err


def test_parse_error_names_line():
    code, _, err = _run(["check"], '{\n "sites": [\n}')
    assert code == EXIT_USAGE
    assert "line 3" in err


def test_resource_cap_exits_three():
    _, chain, _ = _run(["gallery", "mcz", "--n", "5"])
    code, _, err = _run(["oracle", "--max-oracle-n", "4"], chain)
    assert code == EXIT_CAP
    assert "resource cap" in err


def test_dense_cap_exits_three():
    _, chain, _ = _run(["gallery", "mcz", "--n", "13"])
    code, _, _ = _run(["oracle", "--max-oracle-n", "20"], chain)
    assert code == EXIT_CAP


def test_canon_round_trip_passes_check():
    _, chain, _ = _run(["gallery", "automaton", "--n", "5", "--seed", "9"])
    code, canon, _ = _run(["canon"], chain)
    assert code == EXIT_OK
    np.testing.assert_allclose(
        materialize(chain_from_doc(loads(canon))), materialize(chain_from_doc(loads(chain))), atol=1e-10
    )
    code, text, _ = _run(["check", "--format", "structured"], canon)
    rep = json.loads(text)
    assert code == EXIT_OK and rep["canonical"]["passed"] and rep["prop1"]["passed"]


def test_output_flag_writes_file(tmp_path):
    target = tmp_path / "mcz.json"
    code, text, _ = _run(["gallery", "mcz", "--n", "2", "-o", str(target)])
    assert code == EXIT_OK and text == ""
    assert chain_from_doc(loads(target.read_text())).n == 2


def test_gallery_staircase_from_gate_file(tmp_path):
    from mpukit.gallery import haar_unitary
    from mpukit.io import dumps, gates_to_doc
    from mpukit.oracle import staircase_circuit

    rng = np.random.default_rng(0)
    gates = [haar_unitary(4, rng) for _ in range(3)]
    path = tmp_path / "gates.json"
    path.write_text(dumps(gates_to_doc(gates)))
    code, text, _ = _run(["gallery", "staircase", "--gates", str(path)])
    assert code == EXIT_OK
    np.testing.assert_allclose(materialize(chain_from_doc(loads(text))), staircase_circuit(gates), atol=1e-10)


def test_seed_controls_randomness():
    a = _run(["gallery", "staircase", "--n", "2", "--seed", "1"])[1]
    b = _run(["gallery", "staircase", "--n", "2", "--seed", "1"])[1]
    c = _run(["gallery", "staircase", "--n", "2", "--seed", "2"])[1]
    assert a == b and a != c


def test_version_flag():
    code, _, _ = _run(["--version"])
    assert code == EXIT_OK


def test_text_report_has_version():
    _, chain, _ = _run(["gallery", "mcz", "--n", "2"])
    _, text, _ = _run(["check"], chain)
    assert f'version: "{__version__}"' in text


def test_corpus_sweep():
    code, text, _ = _run(["oracle", "--corpus", "--max-oracle-n", "3", "--format", "structured"])
    rep = json.loads(text)
    assert code == EXIT_OK and rep["failures"] == 0 and rep["entries"] > 20
