import io
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blineq.cli import describe_subspace, main
from blineq.datum import BLDatum
from blineq.geometric import loomis_whitney_datum, young_datum
from blineq.io import dumps_datum, loads_datum
from blineq.matcore import Subspace, ValidationError


def run(capsys, monkeypatch, argv, stdin=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def gen(capsys, monkeypatch, *argv):
    code, out, _ = run(capsys, monkeypatch, ["generate", *argv])
    assert code == 0
    return out


def test_datum_document_format():
    text = dumps_datum(young_datum())
    doc = json.loads(text)
    assert list(doc) == ["entries", "format_version", "n"]
    assert doc["format_version"] == 1 and doc["n"] == 2
    assert doc["entries"][0] == {"B": [[0, 1]], "p": "2/3"}


def test_negative_zero_normalised():
    d = BLDatum(([[-0.0, 1.0]],), (2,))
    assert "-0" not in dumps_datum(d)


@given(st.integers(0, 2**32 - 1))
def test_round_trip_byte_identical(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    maps = tuple(rng.standard_normal((int(rng.integers(1, n + 1)), n)) * 10.0 ** rng.integers(-5, 5)
                 for _ in range(int(rng.integers(1, 4))))
    ps = tuple(f"{int(rng.integers(1, 9))}/{int(rng.integers(1, 9))}" for _ in maps)
    text = dumps_datum(BLDatum(maps, ps))
    again = dumps_datum(loads_datum(text))
    assert again == text
    assert all(np.array_equal(a, b) for a, b in zip(loads_datum(text).maps, maps))


def test_bad_documents():
    for text in ["not json", "[]", '{"format_version": 2, "n": 1, "entries": []}',
                 '{"format_version": 1, "n": 2, "entries": [{"B": [[1]], "p": "1"}]}',
                 '{"format_version": 1, "n": 1, "entries": [{"B": [[1]]}]}',
                 '{"format_version": 1, "n": 1, "entries": [{"B": [[1]], "p": true}]}']:
        with pytest.raises(ValidationError):
            loads_datum(text)


def test_decimal_exponents_snap_to_rationals():
    d = loads_datum('{"entries": [{"B": [[1]], "p": 0.2}], "format_version": 1, "n": 1}')
    assert str(d.exponents[0]) == "1/5"


def test_describe_subspace():
    assert describe_subspace(Subspace.span([1.0, 0.0])) == "{y = 0}"
    assert describe_subspace(Subspace.span([1.0, 1.0])) == "{x - y = 0}"
    assert describe_subspace(Subspace.full(3)) == "R^3"
    assert describe_subspace(Subspace.span([0.0, 0.0, 1.0])) == "{x = 0, y = 0}"


def test_generate_young_polytope(capsys, monkeypatch):
    doc = gen(capsys, monkeypatch, "young")
    code, out, _ = run(capsys, monkeypatch, ["polytope", "-", "--vertices"], stdin=doc)
    assert code == 0
    tail = out.split("# vertices (3)\n")[1].splitlines()[:3]
    assert tail == ["(1, 1, 0)", "(1, 0, 1)", "(0, 1, 1)"]


def test_generate_lw_solve(capsys, monkeypatch):
    doc = gen(capsys, monkeypatch, "lw", "--n", "3")
    code, out, _ = run(capsys, monkeypatch, ["solve"], stdin=doc)
    assert code == 0 and "estimate: 1.0\n" in out


def test_certify_young(capsys, monkeypatch, tmp_path):
    path = tmp_path / "young.json"
    gen(capsys, monkeypatch, "young", "--out", str(path))
    code, out, _ = run(capsys, monkeypatch, ["certify", str(path), "--p", "1.2,0.6,0.2"])
    assert code == 1
    assert "witness: {y = 0}" in out and "slack: 1/5" in out
    code, out, _ = run(capsys, monkeypatch, ["certify", str(path), "--p", "1.2,0.6,0.2", "--json"])
    doc = json.loads(out)
    assert doc["certificate"]["slack"] == "1/5" and doc["certificate"]["image_dims"] == [0, 1, 1]
    assert doc["input"] == json.loads(path.read_text()) and doc["args"]["seed"] == 0
    code, out, _ = run(capsys, monkeypatch, ["certify", str(path)])
    assert code == 0 and "no violating subspace" in out


def test_certify_scaling_failure(capsys, monkeypatch):
    doc = gen(capsys, monkeypatch, "young")
    code, out, _ = run(capsys, monkeypatch, ["certify", "-", "--p", "1/2,1/2,1/2"], stdin=doc)
    assert code == 1 and "scaling condition fails" in out


def test_solve_divergent(capsys, monkeypatch, tmp_path):
    doc = gen(capsys, monkeypatch, "young", "--p", "6/5,3/5,1/5")
    trace = tmp_path / "trace.tsv"
    code, out, _ = run(capsys, monkeypatch, ["solve", "--trace", str(trace)], stdin=doc)
    assert code == 1 and "Diverged" in out and "{y = 0}" in out
    assert trace.read_text().startswith("iter\tkind\tfactor\tproj_res\tiso_res\testimate\n")


def test_solve_json(capsys, monkeypatch):
    doc = gen(capsys, monkeypatch, "young")
    code, out, _ = run(capsys, monkeypatch, ["solve", "--json", "--eps", "1e-9"], stdin=doc)
    res = json.loads(out)
    assert code == 0 and res["status"] == "Converged"
    assert res["estimate"] == pytest.approx(3 ** 0.5 / 2)
    assert res["args"]["eps"] == 1e-9 and res["input"]["n"] == 2


def test_validate(capsys, monkeypatch):
    code, out, _ = run(capsys, monkeypatch, ["validate"], stdin=gen(capsys, monkeypatch, "hoelder", "--n", "2"))
    assert code == 0 and "valid" in out
    bad = dumps_datum(BLDatum(([[0.0, 0.0]], [[1.0, 0.0]], [[0.0, 1.0]]), ("2/3",) * 3))
    code, out, _ = run(capsys, monkeypatch, ["validate"], stdin=bad)
    assert code == 2 and "not surjective" in out


def test_invalid_input_exit_code(capsys, monkeypatch):
    code, _, err = run(capsys, monkeypatch, ["solve"], stdin="{")
    assert code == 2 and "error:" in err
    code, _, _ = run(capsys, monkeypatch, ["solve", "/nonexistent/file.json"])
    assert code == 2
    code, _, _ = run(capsys, monkeypatch, ["frobnicate"])
    assert code == 2
    code, _, _ = run(capsys, monkeypatch, ["generate", "cover", "--n", "3", "--sets", "1,2;2,3"])
    assert code == 2


@pytest.mark.parametrize("argv", [["frame", "--shape", "polygon", "--m", "5"],
                                  ["frame", "--shape", "cube", "--n", "3"],
                                  ["simplex-lift", "--shape", "simplex", "--n", "2"],
                                  ["simplex-lift", "--shape", "cube", "--n", "2"],
                                  ["cover", "--n", "4", "--sets", "1,2;3,4;1,3;2,4"],
                                  ["lw", "--n", "4"]])
def test_generated_data_are_geometric(capsys, monkeypatch, argv):
    doc = gen(capsys, monkeypatch, *argv)
    assert dumps_datum(loads_datum(doc)) == doc
    code, out, _ = run(capsys, monkeypatch, ["solve"], stdin=doc)
    assert code == 0 and "estimate: 1.0" in out


def test_verify_commands(capsys, monkeypatch):
    code, out, _ = run(capsys, monkeypatch, ["verify", "geometry", "--n", "4"])
    assert code == 0 and "equality" in out and "fails" not in out
    code, out, _ = run(capsys, monkeypatch, ["verify", "quadrature", "--sides", "1,2,3"])
    assert code == 0 and "holds" in out
    code, out, _ = run(capsys, monkeypatch, ["verify", "barthe", "-"], stdin=gen(capsys, monkeypatch, "lw", "--n", "2"))
    assert code == 0
    code, out, _ = run(capsys, monkeypatch, ["verify", "gaussian", "-", "--json"], stdin=gen(capsys, monkeypatch, "young"))
    doc = json.loads(out)
    assert code == 0 and doc["holds"] and doc["max_ratio"] <= doc["estimate"] * (1 + 1e-6)


def test_deterministic_under_seed(capsys, monkeypatch):
    doc = gen(capsys, monkeypatch, "young")
    outs = [run(capsys, monkeypatch, ["polytope", "--seed", "7", "--budget", "20"], stdin=doc)[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_console_script_pipeline():
    gen_out = subprocess.run([sys.executable, "-m", "blineq.cli", "generate", "young"],
                             capture_output=True, text=True, check=True).stdout
    res = subprocess.run([sys.executable, "-m", "blineq.cli", "polytope", "--vertices"], input=gen_out,
                         capture_output=True, text=True)
    assert res.returncode == 0 and "(0, 1, 1)" in res.stdout
