import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opequiv.errors import DocumentError
from opequiv.io import (dumps, load_model, load_operator, load_symbol, loads, model_from_doc,
                        model_to_doc, operator_from_doc, operator_to_doc, save_model,
                        symbol_from_doc, symbol_to_doc, write_json)
from opequiv.models import ChartOperator, Grid, build_model
from opequiv.samples import random_gauge, random_operator, random_symbol

from conftest import draw_symbol

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=30)
@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_symbol_round_trip_bit_exact(seed, m, n):
    s = random_symbol(m, n, seed)
    back = symbol_from_doc(loads(dumps(symbol_to_doc(s))))
    assert np.array_equal(back.comp, s.comp)


@settings(max_examples=15)
@given(seeds)
def test_operator_round_trip_bit_exact(seed):
    rng = np.random.default_rng(seed)
    op = random_operator(2, 2, degree=3, seed=rng)
    A = random_gauge(2, 2, seed=rng)
    box = ((-0.5, -0.25), (0.5, 0.75))
    chart, box2 = operator_from_doc(loads(dumps(operator_to_doc(ChartOperator(op, A), box, "x"))))
    assert box2 == box
    for u, v in [(chart.base.a, op.a), (chart.base.b, op.b), (chart.base.c, op.c), (chart.gauge, A)]:
        assert np.array_equal(u.coeffs, v.coeffs)


def test_model_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    op = random_operator(3, 2, seed=rng, base=draw_symbol(3, 2, rng))
    model = build_model(ChartOperator(op), Grid.cube(2, 0.5, 3))
    path = tmp_path / "m.json"
    save_model(path, model)
    back = load_model(path)
    assert back.words == model.words and back.coord_words == model.coord_words
    assert back.grid == model.grid
    assert np.array_equal(back.values, model.values)
    assert back.jacobian_min == model.jacobian_min and back.settings == model.settings
    assert dumps(model_to_doc(back)) == path.read_text()


def test_file_helpers(tmp_path):
    s = random_symbol(2, 2, 1)
    write_json(tmp_path / "s.json", symbol_to_doc(s))
    assert np.array_equal(load_symbol(tmp_path / "s.json").comp, s.comp)
    op = random_operator(2, 2, seed=2)
    write_json(tmp_path / "o.json", operator_to_doc(op))
    chart, box = load_operator(tmp_path / "o.json")
    assert box is None and chart.gauge is None
    with pytest.raises(DocumentError):
        load_symbol(tmp_path / "missing.json")


def test_dumps_deterministic_and_rejects_nan():
    doc = symbol_to_doc(random_symbol(2, 2, 3))
    assert dumps(doc) == dumps(json.loads(dumps(doc)))
    with pytest.raises(DocumentError):
        loads('{"x": NaN}')
    with pytest.raises(DocumentError):
        loads('{"x": Infinity}')
    with pytest.raises(DocumentError):
        loads('{"x": ')


def sym_doc():
    return json.loads(dumps(symbol_to_doc(random_symbol(2, 2, 4))))


@pytest.mark.parametrize("edit", [
    lambda d: d.update(schema="opequiv.symbol/9"),
    lambda d: d.pop("comp"),
    lambda d: d.update(m=0),
    lambda d: d.update(m=True),
    lambda d: d.update(m=3),
    lambda d: d["comp"][0][1][0].__setitem__(0, d["comp"][0][1][0][0] + 1.0),
    lambda d: d["comp"][0][0][0].__setitem__(0, "a"),
])
def test_symbol_doc_rejected(edit):
    d = sym_doc()
    edit(d)
    with pytest.raises(DocumentError):
        symbol_from_doc(d)


def op_doc():
    return json.loads(dumps(operator_to_doc(random_operator(2, 2, seed=5), ((-1, -1), (1, 1)))))


@pytest.mark.parametrize("edit", [
    lambda d: d["a"][0].update(multi_index=[0]),
    lambda d: d["a"][0].update(multi_index=[-1, 0]),
    lambda d: d["a"][0].update(multi_index=[3, 0]),
    lambda d: d["a"][0].update(multi_index=[0.0, 0]),
    lambda d: d["b"][0].update(matrix=[[1.0]]),
    lambda d: d["a"][0]["matrix"][0][1][0].__setitem__(0, 99.0),
    lambda d: d["chart"].update(hi=[-2, 1]),
    lambda d: d.update(gauge={"K": 0, "terms": [{"multi_index": [0, 0],
                                                  "matrix": [[1.0, 1.0], [1.0, 1.0]]}]}),
    lambda d: d.update(schema="opequiv.symbol/1"),
])
def test_operator_doc_rejected(edit):
    d = op_doc()
    edit(d)
    with pytest.raises(DocumentError):
        operator_from_doc(d)


def test_model_doc_rejected():
    rng = np.random.default_rng(6)
    op = random_operator(3, 2, seed=rng, base=draw_symbol(3, 2, rng))
    good = json.loads(dumps(model_to_doc(build_model(ChartOperator(op), Grid.cube(2, 0.5, 3)))))
    for edit in [lambda d: d.update(coord_words=["nope", d["words"][0]]),
                 lambda d: d.update(coord_words=d["words"][:1]),
                 lambda d: d["values"].pop(),
                 lambda d: d["grid"].update(shape=[3, 1])]:
        d = json.loads(json.dumps(good))
        edit(d)
        with pytest.raises(DocumentError):
            model_from_doc(d)
