"""Invariant fields of an operator over a box chart, and its model.

At each grid point the operator's jets give a symbol sigma and, through the
canonical decomposition, a subsymbol sigma_0. Traces of words in
``R_0..R_N, sigma_0`` are gauge invariants; a choice of n of them with
independent differentials gives natural coordinates, and the remaining ones
become functions of those coordinates. The sampled triple is the model.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import cKDTree

from .connections import decompose, regularity_iso
from .errors import (IncompatibleWords, NoIndependentInvariants, NotAFunction,
                     NotRegular, RegularityError, RegularityHole)
from .invariants import (evaluate_words, extended_codimension, necklace_words, parse_word,
                         r_alphabet, regularity_report, symbol_pipeline, word_name)
from .jets import JetPoly, n_monomials
from .operators import OperatorJet, gauge_transform
from .orbits import EQUIVALENT, INCONCLUSIVE, INEQUIVALENT, symbols_equivalent
from .tensors import DEFAULT_TOL, SymbolTensor

DEFAULT_MODEL_WORD_LENGTH = 3
EVAL_ORDER = 2


def thread_count():
    try:
        return max(1, int(os.environ.get("OPEQUIV_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Charts and operators on them
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    lo: tuple
    hi: tuple
    shape: tuple

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.shape)):
            raise ValueError("grid bounds and shape must have one entry per coordinate")
        if any(s < 2 for s in self.shape):
            raise ValueError("grid needs at least two points per axis")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("grid box is empty")

    @classmethod
    def cube(cls, n, half_width=0.5, points=5):
        return cls((-half_width,) * n, (half_width,) * n, (points,) * n)

    @property
    def n(self):
        return len(self.shape)

    @property
    def axes(self):
        return [np.linspace(l, h, s) for l, h, s in zip(self.lo, self.hi, self.shape)]

    @property
    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @property
    def center(self):
        return 0.5 * (np.asarray(self.lo, dtype=float) + np.asarray(self.hi, dtype=float))

    def as_dict(self):
        return {"lo": list(map(float, self.lo)), "hi": list(map(float, self.hi)),
                "shape": list(map(int, self.shape))}


def _pad(jet, order):
    if jet.order >= order:
        return jet.truncate(order)
    c = np.zeros((n_monomials(jet.n, order),) + jet.vshape)
    c[: jet.coeffs.shape[0]] = jet.coeffs
    return JetPoly(jet.n, order, c)


@dataclass(frozen=True)
class ChartOperator:
    """Operator with polynomial coefficients, optionally conjugated by a
    polynomial gauge ``A(x)``: the represented operator is ``A o base o A^{-1}``."""

    base: OperatorJet
    gauge: JetPoly = None

    @property
    def m(self):
        return self.base.m

    @property
    def n(self):
        return self.base.n

    def jet_at(self, point, order=EVAL_ORDER):
        point = np.asarray(point, dtype=float)
        b = self.base
        op = OperatorJet(_pad(b.a.shift(point), order), _pad(b.b.shift(point), order),
                         _pad(b.c.shift(point), order))
        if self.gauge is not None:
            A = _pad(self.gauge.shift(point), order + 2)
            op = gauge_transform(op, A)
        return op


# ---------------------------------------------------------------------------
# Pointwise invariants
# ---------------------------------------------------------------------------

def extended_family(sigma, sigma0, tol=DEFAULT_TOL):
    """R_0..R_N followed by the subsymbol, shape (N+2, m, m)."""
    _, _, rs = symbol_pipeline(sigma, tol)
    return np.concatenate([rs.R, np.asarray(sigma0, dtype=float)[None]], axis=0)


def _gate(sigma, tol, require):
    rep = regularity_report(sigma, tol)
    ok = rep.overall if require == "regular" else rep.admissible
    if not ok:
        failing = rep.failing()
        if require == "admissible" and rep.cond2_spectral.passed and "cond2" in failing:
            failing.remove("cond2")
        return "fails " + ", ".join(failing)
    _, rcond = regularity_iso(sigma)
    if rcond < tol:
        return "pairing with the symbol is not invertible"
    return None


def point_family(op_jet, tol=DEFAULT_TOL, require="regular"):
    """(sigma, sigma_0, extended family) at the base point of ``op_jet``."""
    sigma = SymbolTensor(op_jet.a.value)
    reason = _gate(sigma, tol, require)
    if reason is not None:
        raise NotRegular(reason, condition="symbol")
    sigma0 = decompose(op_jet, tol).sigma0.value
    return sigma, sigma0, extended_family(sigma, sigma0, tol)


@dataclass(frozen=True)
class InvariantField:
    word: tuple
    name: str
    values: np.ndarray  # one value per grid point, grid order


def _word_tuples(words, alphabet):
    return [parse_word(w, alphabet) if isinstance(w, str) else tuple(w) for w in words]


def invariant_fields(chart_op, words, grid, tol=DEFAULT_TOL, require="regular", threads=None):
    """Trace-word fields over the grid; raises RegularityHole listing bad points."""
    alphabet = r_alphabet(chart_op.n, with_subsymbol=True)
    words = _word_tuples(words, alphabet)
    points = grid.points

    def work(p):
        try:
            _, _, mats = point_family(chart_op.jet_at(p), tol, require)
        except RegularityError as exc:
            return None, str(exc)
        return evaluate_words(mats, words), None

    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, points))
    else:
        results = [work(p) for p in points]
    bad = [(tuple(map(float, p)), r) for p, (v, r) in zip(points, results) if v is None]
    if bad:
        raise RegularityHole(f"operator is not regular at {len(bad)} of {len(points)} grid points",
                             points=[b[0] for b in bad], reasons=[b[1] for b in bad])
    values = np.array([v for v, _ in results])
    return [InvariantField(w, word_name(w, alphabet), values[:, k]) for k, w in enumerate(words)]


# ---------------------------------------------------------------------------
# Basic invariants
# ---------------------------------------------------------------------------

def _word_jacobian(sigma, sigma0, words, tol):
    """Finite-difference Jacobian of word values in the extended symbol space."""
    m = sigma.m
    x0 = np.concatenate([sigma.pair_coords().ravel(), np.asarray(sigma0).ravel()])
    P = sigma.pair_coords().shape[0]

    def f(x):
        s = SymbolTensor.from_pair_coords(x[: P * m * m].reshape(P, m, m))
        return evaluate_words(extended_family(s, x[P * m * m:].reshape(m, m), tol), words)

    h = 1e-4 * max(1.0, np.abs(x0).max())
    cols = []
    for k in range(len(x0)):
        e = np.zeros_like(x0)
        e[k] = h
        # five-point stencil: the rank decision below needs ~1e-10 accuracy
        cols.append((8 * (f(x0 + e) - f(x0 - e)) - (f(x0 + 2 * e) - f(x0 - 2 * e))) / (12 * h))
    return np.array(cols).T, f(x0), np.abs(x0).max()


def basic_words(sigma, sigma0, max_len=DEFAULT_MODEL_WORD_LENGTH, tol=DEFAULT_TOL, rank_rtol=1e-9):
    """Words of length <= max_len, in order, kept while their differentials
    at (sigma, sigma_0) stay independent; at most nu_0 of them."""
    m, n = sigma.m, sigma.n
    cap = extended_codimension(m, n)
    alphabet = r_alphabet(n, with_subsymbol=True)
    candidates = list(necklace_words(len(alphabet), max_len))
    J, vals, xscale = _word_jacobian(sigma, sigma0, candidates, tol)
    norms = np.linalg.norm(J, axis=1)
    kept, rows = [], []
    for w, row, nr, v in zip(candidates, J, norms, vals):
        if len(kept) >= cap:
            break
        # a differential at the level of finite-difference noise counts as zero
        if nr * max(xscale, 1.0) <= 1e-8 * max(abs(v), np.finfo(float).tiny):
            continue
        trial = np.array(rows + [row / nr])
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] > rank_rtol * s[0]:
            kept.append(w)
            rows.append(row / nr)
    return kept


# ---------------------------------------------------------------------------
# Natural coordinates
# ---------------------------------------------------------------------------

def _normalize_fields(values):
    """Scale each field to unit range over the grid; numerically flat fields become 0."""
    values = np.asarray(values, dtype=float)
    span = values.max(axis=0) - values.min(axis=0)
    mag = np.abs(values).max(axis=0)
    flat = span <= 1e-9 * np.maximum(mag, np.finfo(float).tiny)
    out = (values - values.min(axis=0)) / np.where(flat, 1.0, span)
    out[:, flat] = 0.0
    return out


def field_jacobians(values, grid):
    """d(values)/dx on the grid, shape (points, words, n), central differences."""
    V = np.asarray(values, dtype=float).reshape(tuple(grid.shape) + (-1,))
    grads = np.gradient(V, *grid.axes, axis=tuple(range(grid.n)))
    if grid.n == 1:
        grads = [grads]
    return np.stack([g.reshape(-1, V.shape[-1]) for g in grads], axis=2)


def independence_scores(values, grid):
    """Pointwise smallest singular value of the row-normalized Jacobian.

    Each gradient is scaled to unit length, so the score measures how far
    the differentials are from being dependent (1 for orthonormal ones)
    regardless of the magnitude of the invariants. A gradient that is
    negligible against the value of its field, across the chart, counts
    as zero.
    """
    values = np.asarray(values, dtype=float)
    J = field_jacobians(values, grid)
    diam = float(np.linalg.norm(np.asarray(grid.hi) - np.asarray(grid.lo)))
    norms = np.linalg.norm(J, axis=2)
    flat = norms * diam <= 1e-8 * np.maximum(np.abs(values), np.finfo(float).tiny)
    unit = J / np.where(flat, 1.0, norms)[:, :, None]
    unit[flat] = 0.0
    return np.linalg.svd(unit, compute_uv=False)[:, -1]


def select_natural_coordinates(fields, grid, tol=1e-6):
    """Greedily pick n fields maximizing the worst independence score over the
    grid. Returns (indices, jacobian_min)."""
    n = grid.n
    if len(fields) < n:
        raise NoIndependentInvariants(f"need at least {n} invariant fields, got {len(fields)}")
    values = np.stack([f.values for f in fields], axis=1)
    chosen = []
    best_score = 0.0
    for _ in range(n):
        best = (-1.0, None)
        for k in range(len(fields)):
            if k in chosen:
                continue
            score = float(independence_scores(values[:, chosen + [k]], grid).min())
            if score > best[0]:
                best = (score, k)
        best_score, k = best
        if k is None or best_score < tol:
            raise NoIndependentInvariants(
                f"no {n} invariants with independent differentials over the grid "
                f"(best independence score {max(best_score, 0.0):.3e})",
                diagnostic=max(best_score, 0.0))
        chosen.append(k)
    return chosen, best_score


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelDoc:
    """Sampled model: coordinates phi, the image cloud and the graphs F_j."""

    m: int
    n: int
    words: tuple          # word names, basic invariants in order
    coord_words: tuple    # names of the natural coordinates
    grid: Grid
    values: np.ndarray    # (points, len(words))
    jacobian_min: float
    radius: float
    settings: dict = field(default_factory=dict)

    @property
    def coord_index(self):
        return [self.words.index(w) for w in self.coord_words]

    @property
    def graph_words(self):
        return tuple(w for w in self.words if w not in self.coord_words)

    @property
    def coords(self):
        return self.values[:, self.coord_index]

    @property
    def graph(self):
        idx = [self.words.index(w) for w in self.graph_words]
        return self.values[:, idx]


def _check_function(coords, graph, rtol):
    if graph.shape[1] == 0 or len(coords) < 2:
        return
    gscale = np.maximum(np.abs(graph).max(axis=0), np.finfo(float).tiny)
    tree = cKDTree(_normalize_fields(coords))
    for i, j in sorted(tree.query_pairs(rtol)):
        if np.any(np.abs(graph[i] - graph[j]) > 1e-6 * gscale):
            raise NotAFunction(f"grid points {i} and {j} share coordinates but differ in "
                               "a remaining invariant")


def _cloud_radius(coords):
    if len(coords) < 2:
        return 0.0
    d, _ = cKDTree(coords).query(coords, k=2)
    return float(d[:, 1].max())


def build_model(chart_op, grid, words=None, coord_words=None, like=None,
                max_len=DEFAULT_MODEL_WORD_LENGTH, tol=DEFAULT_TOL, jac_tol=1e-6,
                require="regular", threads=None):
    """Model of ``chart_op`` over ``grid``.

    Basic invariants are chosen at the grid center unless given, either
    directly or through ``like`` (another model, whose words and
    coordinates are reused so the two are comparable). Prescribed
    coordinates that turn out dependent on this grid are not an error: the
    model records ``coordinates_ok = False`` and can still be compared.
    """
    if grid.n != chart_op.n:
        raise ValueError(f"grid has {grid.n} axes, chart has {chart_op.n}")
    alphabet = r_alphabet(chart_op.n, with_subsymbol=True)
    if like is not None:
        if (like.m, like.n) != (chart_op.m, chart_op.n):
            raise IncompatibleWords("reference model has different dimensions")
        words, coord_words = list(like.words), list(like.coord_words)
    if words is None:
        sigma, sigma0, _ = point_family(chart_op.jet_at(grid.center), tol, require)
        words = basic_words(sigma, sigma0, max_len, tol)
    words = _word_tuples(words, alphabet)
    names = tuple(word_name(w, alphabet) for w in words)
    if len(words) > extended_codimension(chart_op.m, chart_op.n):
        raise IncompatibleWords("more basic invariants requested than the orbit codimension allows")
    fields = invariant_fields(chart_op, words, grid, tol, require, threads)
    values = np.stack([f.values for f in fields], axis=1)
    strict = like is None and coord_words is None
    if coord_words is None:
        idx, jmin = select_natural_coordinates(fields, grid, jac_tol)
        coord_names = tuple(names[k] for k in idx)
    else:
        coord_names = tuple(word_name(w, alphabet) if not isinstance(w, str) else w
                            for w in coord_words)
        missing = [w for w in coord_names if w not in names]
        if missing:
            raise IncompatibleWords(f"coordinate words {missing} are not among the basic words")
        idx = [names.index(w) for w in coord_names]
        jmin = float(independence_scores(values[:, idx], grid).min())
    coords_ok = bool(jmin >= jac_tol)
    model = ModelDoc(chart_op.m, chart_op.n, names, coord_names, grid, values, float(jmin),
                     _cloud_radius(values[:, idx]),
                     {"tol": tol, "jac_tol": jac_tol, "require": require, "max_len": max_len,
                      "coordinates_ok": coords_ok})
    if coords_ok:
        _check_function(model.coords, model.graph, 1e-9)
    elif strict:
        raise NoIndependentInvariants("selected coordinates are dependent", diagnostic=jmin)
    return model


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceVerdict:
    verdict: str
    worst_deviation: float
    details: dict
    method: str
    overlap: float
    tolerance: float


def _word_scales(v1, v2):
    s = np.maximum(np.abs(v1).max(axis=0), np.abs(v2).max(axis=0))
    return np.where(s > 0, s, 1.0)


def _interpolate(coords, values, query):
    if coords.shape[1] == 1:
        order = np.argsort(coords[:, 0])
        x = coords[order, 0]
        out = np.full((len(query), values.shape[1]), np.nan)
        inside = (query[:, 0] >= x[0]) & (query[:, 0] <= x[-1])
        for k in range(values.shape[1]):
            out[inside, k] = np.interp(query[inside, 0], x, values[order, k])
        return out
    return LinearNDInterpolator(coords, values)(query)


def _interpolation_error(model, gidx, scales):
    """Error of the graph interpolant rebuilt from every other grid point,
    measured at the dropped points: a pessimistic bound for the full one."""
    shape = tuple(model.grid.shape)
    keep = np.zeros(shape, dtype=bool)
    keep[tuple(slice(None, None, 2) for _ in shape)] = True
    keep = keep.ravel()
    coords, graph = model.coords, model.values[:, gidx]
    if keep.sum() <= coords.shape[1] or keep.all():
        return float("inf")
    try:
        est = _interpolate(coords[keep], graph[keep], coords[~keep]) - graph[~keep]
    except Exception:  # degenerate hull of the subsample
        return float("inf")
    est = np.abs(est) / scales
    est = est[~np.isnan(est).any(axis=1)]
    return float(est.max()) if len(est) else float("inf")


def compare_models(m1, m2, tol=1e-6, interp_margin=10.0):
    """Verdict on whether two models coincide.

    On a shared grid the models are compared point by point (gauge
    equivalence on one chart keeps every invariant fixed at each point).
    Otherwise each model's graphs are interpolated at the other model's
    sample points inside the convex hull of its image. Scattered linear
    interpolation is far coarser than ``tol``, so a deviation within
    ``interp_margin`` times the estimated interpolation error is
    inconclusive rather than inequivalent.
    """
    if (m1.m, m1.n) != (m2.m, m2.n):
        raise IncompatibleWords("models have different dimensions")
    if tuple(m1.words) != tuple(m2.words) or tuple(m1.coord_words) != tuple(m2.coord_words):
        raise IncompatibleWords("models are built from different basic invariants")
    scales = _word_scales(m1.values, m2.values)
    if m1.grid == m2.grid:
        per_word = (np.abs(m1.values - m2.values) / scales).max(axis=0)
        worst = float(per_word.max())
        details = {w: float(d) for w, d in zip(m1.words, per_word)}
        verdict = EQUIVALENT if worst <= tol else INEQUIVALENT
        return EquivalenceVerdict(verdict, worst, details, "pointwise", 1.0, tol)

    def undecided(overlap):
        return EquivalenceVerdict(INCONCLUSIVE, float("nan"), {}, "none", overlap, tol)

    if not (m1.settings.get("coordinates_ok", True) and m2.settings.get("coordinates_ok", True)):
        return undecided(0.0)
    gidx = [m1.words.index(w) for w in m1.graph_words]
    if not gidx:
        return undecided(0.0)
    c1, c2 = m1.coords, m2.coords
    g1, g2 = m1.values[:, gidx], m2.values[:, gidx]
    a = (_interpolate(c1, g1, c2) - g2) / scales[gidx]
    b = (_interpolate(c2, g2, c1) - g1) / scales[gidx]
    ok_a, ok_b = ~np.isnan(a).any(axis=1), ~np.isnan(b).any(axis=1)
    overlap = float(0.5 * (ok_a.mean() + ok_b.mean()))
    diffs = np.abs(np.vstack([a[ok_a], b[ok_b]]))
    if not len(diffs):
        return undecided(overlap)
    per_word = np.zeros(len(m1.words))
    per_word[gidx] = diffs.max(axis=0)
    worst = float(per_word.max())
    details = {w: float(d) for w, d in zip(m1.words, per_word)}
    interp = max(_interpolation_error(m, gidx, scales[gidx]) for m in (m1, m2))
    details["interpolation_error"] = interp
    if worst <= tol:
        verdict = EQUIVALENT
    elif worst <= interp_margin * interp:
        verdict = INCONCLUSIVE
    else:
        verdict = INEQUIVALENT
    return EquivalenceVerdict(verdict, worst, details, "interpolated", overlap, tol)


def pointwise_certificates(op1, op2, grid, tol=DEFAULT_TOL, require="regular"):
    """Symbol-level verdicts at each grid point, with the subsymbol check.

    For each point the symbols are compared; when a conjugator A is found,
    ``A sigma_0 A^{-1}`` is compared with the second subsymbol.
    """
    out = []
    for p in grid.points:
        j1, j2 = op1.jet_at(p), op2.jet_at(p)
        s1, s2 = SymbolTensor(j1.a.value), SymbolTensor(j2.a.value)
        res = symbols_equivalent(s1, s2, tol, require=require)
        sub_dev = float("nan")
        if res.verdict == EQUIVALENT:
            z1 = decompose(j1, tol).sigma0.value
            z2 = decompose(j2, tol).sigma0.value
            A = res.A
            sub_dev = float(np.linalg.norm(A @ z1 @ np.linalg.inv(A) - z2) /
                            max(np.linalg.norm(z2), 1e-300))
        out.append({"point": [float(x) for x in p], "verdict": res.verdict,
                    "subsymbol_deviation": sub_dev})
    return out
