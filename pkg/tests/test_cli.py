import json
import subprocess
import sys

import numpy as np
import pytest

from opequiv.cli import main
from opequiv.connections import BundleConnectionJet, levi_civita, quantize
from opequiv.io import operator_to_doc, symbol_to_doc, write_json
from opequiv.jets import JetPoly
from opequiv.models import ChartOperator, Grid
from opequiv.operators import OperatorJet
from opequiv.samples import random_gauge, random_jet, random_operator, random_symbol, scalar_symbol

from conftest import draw_pair, draw_symbol

BOX = ((-0.5, -0.5), (0.5, 0.5))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def put_symbol(path, s):
    write_json(path, symbol_to_doc(s))
    return path


def put_operator(path, op, gauge=None):
    write_json(path, operator_to_doc(ChartOperator(op, gauge), BOX))
    return path


def regular_operator(seed):
    rng = np.random.default_rng(seed)
    return random_operator(3, 2, seed=rng, base=draw_symbol(3, 2, rng))


# -- invariants ------------------------------------------------------------------------

def test_invariants_regular(tmp_path, capsys):
    s = draw_symbol(3, 2, np.random.default_rng(0))
    code, out, _ = run(capsys, "invariants", put_symbol(tmp_path / "s.json", s))
    assert code == 0
    doc = json.loads(out)
    assert doc["regularity"]["overall"] is True
    names = [e["word"] for e in doc["fingerprint"]]
    assert names[:3] == ["R0", "R1", "R2"]
    assert doc["reproducibility"]["seed"] == 0 and "tol" in doc["reproducibility"]


def test_invariants_csv(tmp_path, capsys):
    s = draw_symbol(3, 2, np.random.default_rng(1))
    code, out, _ = run(capsys, "invariants", put_symbol(tmp_path / "s.json", s), "--csv",
                       "--words", 2)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "word,value" and lines[1].startswith("R0,")
    assert all(len(line.split(",")) == 2 for line in lines)


def test_invariants_scalar_symbol(tmp_path, capsys):
    s = scalar_symbol(np.array([[2.0, 0.1], [0.1, 1.0]]), 2)
    code, out, _ = run(capsys, "invariants", put_symbol(tmp_path / "s.json", s))
    assert code == 2
    failing = json.loads(out)["regularity"]["failing"]
    assert "cond2" in failing and "cond4" in failing


def test_invariants_bad_input(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"schema": ')
    code, _, err = run(capsys, "invariants", p)
    assert code == 1 and "line 1" in err
    code, _, _ = run(capsys, "invariants", tmp_path / "nope.json")
    assert code == 1


# -- equiv-symbols ---------------------------------------------------------------------

def test_equiv_symbols_verdicts(tmp_path, capsys):
    rng = np.random.default_rng(2)
    s = draw_symbol(3, 2, rng)
    A, B = draw_pair(3, 2, rng)
    a = put_symbol(tmp_path / "a.json", s)
    b = put_symbol(tmp_path / "b.json", s.act(A, B))
    c = put_symbol(tmp_path / "c.json", draw_symbol(3, 2, rng))
    code, out, _ = run(capsys, "equiv-symbols", a, b)
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"] == "equivalent" and np.array(doc["A"]).shape == (3, 3)
    assert doc["conjugacy"]["residual"] < 1e-8
    assert run(capsys, "equiv-symbols", a, c)[0] == 3
    t = s.act(A, B)
    d = random_symbol(3, 2, rng)
    t = t + d * (1e-8 * np.linalg.norm(t.comp) / np.linalg.norm(d.comp))
    code, out, _ = run(capsys, "equiv-symbols", a, put_symbol(tmp_path / "d.json", t))
    assert code == 4 and json.loads(out)["fingerprint_deviation"] > 0


def test_equiv_symbols_shape_mismatch(tmp_path, capsys):
    a = put_symbol(tmp_path / "a.json", random_symbol(3, 2, 0))
    b = put_symbol(tmp_path / "b.json", random_symbol(2, 2, 0))
    assert run(capsys, "equiv-symbols", a, b)[0] == 1


def test_equiv_symbols_admissible_gate(tmp_path, capsys):
    rng = np.random.default_rng(3)
    s = draw_symbol(2, 2, rng, gate="admissible")
    A, B = draw_pair(2, 2, rng)
    a = put_symbol(tmp_path / "a.json", s)
    b = put_symbol(tmp_path / "b.json", s.act(A, B))
    assert run(capsys, "equiv-symbols", a, b)[0] == 2
    assert run(capsys, "equiv-symbols", a, b, "--require", "admissible")[0] == 0


# -- decompose -------------------------------------------------------------------------

def quantized_operator(seed, K=3):
    rng = np.random.default_rng(seed)
    m = n = 2
    a = random_jet(n, K, (n, n, m, m), rng, 0.2)
    a = JetPoly(n, K, a.coeffs + np.swapaxes(a.coeffs, 1, 2))
    a.coeffs[0] += random_symbol(m, n, rng).comp + 3 * np.einsum("ij,ab->ijab", np.eye(n), np.eye(m))
    g = JetPoly(n, K, np.trace(a.coeffs, axis1=3, axis2=4))
    return quantize(a, BundleConnectionJet(random_jet(n, K - 1, (n, m, m), rng)), levi_civita(g))


def test_decompose_quantized(tmp_path, capsys):
    op = quantized_operator(4)
    code, out, _ = run(capsys, "decompose", put_operator(tmp_path / "q.json", op))
    assert code == 0
    doc = json.loads(out)
    # c was computed to degree 1, so the subsymbol vanishes to that degree
    low = [t["value"] for t in doc["subsymbol"] if sum(t["multi_index"]) <= op.c.order]
    assert np.abs(low).max() < 1e-10
    assert doc["recombination_residual"] <= 1e-10
    assert doc["first_order_remainder"] < 1e-10


def test_decompose_constant_shift(tmp_path, capsys):
    op = quantized_operator(5)
    c = np.array([[1.0, -2.0], [0.5, 3.0]])
    bumped = OperatorJet(op.a, op.b, op.c + JetPoly.constant(c, 2, op.c.order))
    code, out, _ = run(capsys, "decompose", put_operator(tmp_path / "q.json", bumped))
    assert code == 0
    sub = json.loads(out)["subsymbol"]
    assert np.allclose(sub[0]["value"], c, atol=1e-10)
    rest = [t["value"] for t in sub[1:] if sum(t["multi_index"]) <= op.c.order]
    assert np.abs(rest).max() < 1e-10


def test_decompose_random_and_point(tmp_path, capsys):
    p = put_operator(tmp_path / "o.json", regular_operator(6))
    for extra in [(), ("--at", 0.1, -0.2)]:
        code, out, _ = run(capsys, "decompose", p, *extra)
        assert code == 0 and json.loads(out)["recombination_residual"] <= 1e-10
    assert run(capsys, "decompose", p, "--at", 0.1)[0] == 1


def test_decompose_not_regular(tmp_path, capsys):
    assert run(capsys, "decompose", put_operator(tmp_path / "z.json", OperatorJet.zero(2, 2, 2)))[0] == 2


# -- model / compare-models --------------------------------------------------------------

def test_model_constant_coefficients(tmp_path, capsys):
    op = regular_operator(7)
    const = OperatorJet(JetPoly.constant(op.a.value, 2, 2), JetPoly.constant(op.b.value, 2, 2),
                        JetPoly.constant(op.c.value, 2, 2))
    code, _, err = run(capsys, "model", put_operator(tmp_path / "c.json", const))
    assert code == 2 and "regularity failure" in err


def test_model_scalar_symbol(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "scalar-operator", "--m", 2, "--n", 2,
                       "--out", tmp_path / "s.json")
    assert code == 0
    code, _, err = run(capsys, "model", tmp_path / "s.json", "--grid", 3)
    assert code == 2 and "cond2" in err


def build(capsys, tmp_path, name, op, gauge=None, *extra):
    src = put_operator(tmp_path / f"{name}.op.json", op, gauge)
    out = tmp_path / f"{name}.model.json"
    code, _, _ = run(capsys, "model", src, "--out", out, *extra)
    assert code == 0
    return out


def test_model_and_compare(tmp_path, capsys):
    op = regular_operator(8)
    grid = Grid.cube(2, 0.5, 5)
    m1 = build(capsys, tmp_path, "a", op)
    m2 = build(capsys, tmp_path, "b", op, random_gauge(3, 2, seed=9, points=grid.points),
               "--like", m1)
    m3 = build(capsys, tmp_path, "c", regular_operator(10), None, "--like", m1)
    code, out, _ = run(capsys, "compare-models", m1, m1)
    assert code == 0 and json.loads(out)["worst_deviation"] == 0.0
    code, out, _ = run(capsys, "compare-models", m1, m2)
    assert code == 0 and json.loads(out)["worst_deviation"] < 1e-6
    assert run(capsys, "compare-models", m1, m3)[0] == 3
    a, b = json.loads(m1.read_text()), json.loads(m2.read_text())
    assert a["words"] == b["words"]
    assert np.allclose(a["values"], b["values"], rtol=1e-9, atol=0)


def test_model_budget_and_grid(tmp_path, capsys):
    op = put_operator(tmp_path / "o.json", regular_operator(11))
    code, out, _ = run(capsys, "model", op, "--budget", 2, "--grid", 3, 4)
    assert code == 0
    doc = json.loads(out)
    assert max(w.count("*") for w in doc["words"]) <= 1
    assert doc["grid"]["shape"] == [3, 4]
    assert run(capsys, "model", op, "--grid", 3, 3, 3)[0] == 1


def test_compare_models_incompatible(tmp_path, capsys):
    m1 = build(capsys, tmp_path, "a", regular_operator(12))
    m2 = build(capsys, tmp_path, "b", regular_operator(13), None, "--budget", 2)
    assert run(capsys, "compare-models", m1, m2)[0] == 1


# -- reproducibility -------------------------------------------------------------------

def test_generate_deterministic(tmp_path, capsys):
    outs = [run(capsys, "generate", "operator", "--m", 3, "--seed", 4, "--gauge-seed", 5)[1]
            for _ in range(2)]
    assert outs[0] == outs[1] and json.loads(outs[0])["gauge"]["terms"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "opequiv", "generate", "symbol", "--seed", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["schema"] == "opequiv.symbol/1"
    proc = subprocess.run([sys.executable, "-m", "opequiv", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0


def test_threads_env_does_not_change_output(tmp_path, monkeypatch, capsys):
    op = put_operator(tmp_path / "o.json", regular_operator(14))
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("OPEQUIV_THREADS", threads)
        outs.append(run(capsys, "model", op, "--grid", 3)[1])
    assert outs[0] == outs[1]


@pytest.mark.parametrize("argv", [["invariants"], ["nope"], ["model", "x", "--grid", "a"]])
def test_usage_errors_are_input_errors(argv, capsys):
    assert main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_default_tolerances_per_command(tmp_path, capsys):
    s = put_symbol(tmp_path / "s.json", draw_symbol(3, 2, np.random.default_rng(15)))
    assert json.loads(run(capsys, "invariants", s)[1])["reproducibility"]["tol"] == 1e-9
    m = build(capsys, tmp_path, "a", regular_operator(16))
    assert json.loads(run(capsys, "compare-models", m, m)[1])["tolerance"] == 1e-6
