"""JSON documents for symbols, operators, models and reports.

Every document carries a ``schema`` tag. Floats are written with Python's
shortest round-trip representation, so ``load(save(x))`` reproduces every
float bit for bit; non-finite values are rejected on input and written as
``null`` in reports.
"""
import json
import math
from pathlib import Path

import numpy as np

from .errors import DocumentError
from .jets import JetPoly, monomial_index, monomials
from .models import ChartOperator, Grid, ModelDoc
from .operators import OperatorJet
from .tensors import SymbolTensor

SYMBOL_SCHEMA = "opequiv.symbol/1"
OPERATOR_SCHEMA = "opequiv.operator/1"
MODEL_SCHEMA = "opequiv.model/1"
REPORT_SCHEMA = "opequiv.report/1"


# ---------------------------------------------------------------------------
# generic helpers
# ---------------------------------------------------------------------------

def to_plain(obj):
    """Convert numpy containers/scalars to JSON-ready values (non-finite -> None)."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_plain(obj.real), "im": to_plain(obj.imag)}
    return obj


def dumps(doc):
    return json.dumps(to_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _reject_constant(name):
    raise DocumentError(f"non-finite number {name} is not allowed")


def loads(text, source="<string>"):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DocumentError(f"{path}: {exc.strerror}") from exc
    return loads(text, str(path))


def write_json(path, doc):
    Path(path).write_text(dumps(doc))


def _field(doc, key, where):
    if not isinstance(doc, dict):
        raise DocumentError(f"{where}: expected an object")
    if key not in doc:
        raise DocumentError(f"{where}.{key}: missing field")
    return doc[key]


def _int(doc, key, where, minimum=1):
    v = _field(doc, key, where)
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise DocumentError(f"{where}.{key}: expected an integer >= {minimum}")
    return v


def _array(value, shape, where):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{where}: not a numeric array") from exc
    if arr.shape != tuple(shape):
        raise DocumentError(f"{where}: expected shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DocumentError(f"{where}: non-finite entries")
    return arr


def _schema(doc, expected, where):
    got = _field(doc, "schema", where)
    if got != expected:
        raise DocumentError(f"{where}.schema: expected {expected!r}, got {got!r}")


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

def symbol_to_doc(sigma, label=None):
    doc = {"schema": SYMBOL_SCHEMA, "m": sigma.m, "n": sigma.n, "comp": sigma.comp}
    if label is not None:
        doc["label"] = label
    return doc


def symbol_from_doc(doc, where="symbol"):
    _schema(doc, SYMBOL_SCHEMA, where)
    m, n = _int(doc, "m", where), _int(doc, "n", where)
    comp = _array(_field(doc, "comp", where), (n, n, m, m), f"{where}.comp")
    for i in range(n):
        for j in range(i + 1, n):
            if not np.array_equal(comp[i, j], comp[j, i]):
                raise DocumentError(f"{where}.comp[{i}][{j}]: differs from comp[{j}][{i}]")
    return SymbolTensor(comp)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _jet_table(jet):
    return [{"multi_index": list(alpha), "matrix": coeff}
            for alpha, coeff in zip(monomials(jet.n, jet.order), jet.coeffs)
            if np.any(coeff != 0)]


def _jet_from_table(table, n, order, vshape, where):
    if not isinstance(table, list):
        raise DocumentError(f"{where}: expected a list of terms")
    index = monomial_index(n, order)
    jet = JetPoly.zeros(n, order, vshape)
    for k, term in enumerate(table):
        tw = f"{where}[{k}]"
        alpha = _field(term, "multi_index", tw)
        if (not isinstance(alpha, list) or len(alpha) != n
                or not all(isinstance(a, int) and not isinstance(a, bool) and a >= 0 for a in alpha)):
            raise DocumentError(f"{tw}.multi_index: expected {n} non-negative integers")
        if sum(alpha) > order:
            raise DocumentError(f"{tw}.multi_index: degree {sum(alpha)} exceeds K={order}")
        jet.coeffs[index[tuple(alpha)]] += _array(_field(term, "matrix", tw), vshape, f"{tw}.matrix")
    return jet


def operator_to_doc(chart_op, box=None, label=None):
    if isinstance(chart_op, OperatorJet):
        chart_op = ChartOperator(chart_op)
    base = chart_op.base
    # coefficients are polynomials; K is the largest degree present
    K = max(base.a.order, base.b.order, base.c.order)
    doc = {"schema": OPERATOR_SCHEMA, "m": base.m, "n": base.n, "K": K,
           "a": _jet_table(base.a), "b": _jet_table(base.b), "c": _jet_table(base.c)}
    if chart_op.gauge is not None:
        doc["gauge"] = {"K": chart_op.gauge.order, "terms": _jet_table(chart_op.gauge)}
    if box is not None:
        doc["chart"] = {"lo": list(box[0]), "hi": list(box[1])}
    if label is not None:
        doc["label"] = label
    return doc


def operator_from_doc(doc, where="operator"):
    """Returns ``(ChartOperator, box or None)``."""
    _schema(doc, OPERATOR_SCHEMA, where)
    m, n = _int(doc, "m", where), _int(doc, "n", where)
    K = _int(doc, "K", where, minimum=0)
    a = _jet_from_table(_field(doc, "a", where), n, K, (n, n, m, m), f"{where}.a")
    if not np.array_equal(a.coeffs, np.swapaxes(a.coeffs, 1, 2)):
        raise DocumentError(f"{where}.a: a^ij must equal a^ji")
    b = _jet_from_table(_field(doc, "b", where), n, K, (n, m, m), f"{where}.b")
    c = _jet_from_table(_field(doc, "c", where), n, K, (m, m), f"{where}.c")
    gauge = None
    if "gauge" in doc:
        g = doc["gauge"]
        gK = _int(g, "K", f"{where}.gauge", minimum=0)
        gauge = _jet_from_table(_field(g, "terms", f"{where}.gauge"), n, gK, (m, m),
                                f"{where}.gauge.terms")
        if abs(np.linalg.det(gauge.value)) == 0:
            raise DocumentError(f"{where}.gauge: A(0) is singular")
    box = None
    if "chart" in doc:
        ch = doc["chart"]
        lo = _array(_field(ch, "lo", f"{where}.chart"), (n,), f"{where}.chart.lo")
        hi = _array(_field(ch, "hi", f"{where}.chart"), (n,), f"{where}.chart.hi")
        if np.any(hi <= lo):
            raise DocumentError(f"{where}.chart: empty box")
        box = (tuple(lo.tolist()), tuple(hi.tolist()))
    return ChartOperator(OperatorJet(a, b, c), gauge), box


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def model_to_doc(model, label=None):
    doc = {"schema": MODEL_SCHEMA, "m": model.m, "n": model.n, "words": list(model.words),
           "coord_words": list(model.coord_words), "grid": model.grid.as_dict(),
           "values": model.values, "jacobian_min": model.jacobian_min, "radius": model.radius,
           "settings": model.settings}
    if label is not None:
        doc["label"] = label
    return doc


def model_from_doc(doc, where="model"):
    _schema(doc, MODEL_SCHEMA, where)
    m, n = _int(doc, "m", where), _int(doc, "n", where)
    words = _field(doc, "words", where)
    coords = _field(doc, "coord_words", where)
    if not all(isinstance(w, str) for w in words) or not all(w in words for w in coords):
        raise DocumentError(f"{where}.coord_words: must be a subset of words")
    if len(coords) != n:
        raise DocumentError(f"{where}.coord_words: expected {n} coordinates")
    g = _field(doc, "grid", where)
    shape = _field(g, "shape", f"{where}.grid")
    lo = _array(_field(g, "lo", f"{where}.grid"), (n,), f"{where}.grid.lo")
    hi = _array(_field(g, "hi", f"{where}.grid"), (n,), f"{where}.grid.hi")
    try:
        grid = Grid(tuple(lo.tolist()), tuple(hi.tolist()), tuple(int(s) for s in shape))
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{where}.grid: {exc}") from exc
    P = int(np.prod(grid.shape))
    values = _array(_field(doc, "values", where), (P, len(words)), f"{where}.values")
    jmin = float(_field(doc, "jacobian_min", where))
    radius = float(_field(doc, "radius", where))
    settings = doc.get("settings", {})
    return ModelDoc(m, n, tuple(words), tuple(coords), grid, values, jmin, radius, settings)


def save_model(path, model):
    write_json(path, model_to_doc(model))


def load_model(path):
    return model_from_doc(read_json(path), str(path))


def load_symbol(path):
    return symbol_from_doc(read_json(path), str(path))


def load_operator(path):
    return operator_from_doc(read_json(path), str(path))
