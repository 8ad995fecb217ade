"""Connections, quantization and the canonical decomposition of an operator.

Index conventions (all jets in chart coordinates):

* bundle connection: ``nabla_i s = d_i s + Gamma[i] s``, ``Gamma`` has value
  shape (n, m, m);
* cotangent connection: Christoffel symbols ``Gc[k, i, j] = Gamma^k_ij``;
* the symbol is the cometric-like field ``sigma^{ij}`` of value shape
  (n, n, m, m).

The quantization is ``Q(sigma)(s) = sigma^{ij} (d_nabla^2 s)_ij``; with this
weight the principal symbol of ``Q(sigma)`` is ``sigma`` itself. Shifting the
connection by ``alpha`` moves the first-order part by
``<sigma, alpha>^k = 2 sigma^{kj} alpha_j``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, DimensionMismatch, NotRegular
from .jets import JetPoly
from .operators import OperatorJet
from .tensors import DEFAULT_TOL, SymbolTensor


@dataclass(frozen=True)
class BundleConnectionJet:
    Gamma: JetPoly  # (n, m, m)

    @classmethod
    def zero(cls, m, n, order):
        return cls(JetPoly.zeros(n, order, (n, m, m)))

    def __add__(self, alpha):
        other = alpha.Gamma if isinstance(alpha, BundleConnectionJet) else alpha
        return BundleConnectionJet(self.Gamma + other)

    def gauge(self, A):
        """Connection A o nabla o A^{-1}: Gamma' = A Gamma A^{-1} - dA A^{-1}."""
        B = A.inv()
        n = self.Gamma.n
        terms = [A.dot(self.Gamma[i]).dot(B) - A.deriv(i).dot(B) for i in range(n)]
        return BundleConnectionJet(JetPoly.stack(terms))


@dataclass(frozen=True)
class ChristoffelJet:
    Gamma_c: JetPoly  # (n, n, n), index [k, i, j]

    def __post_init__(self):
        c = self.Gamma_c.coeffs
        if np.abs(c - np.swapaxes(c, 2, 3)).max(initial=0.0) > 1e-10 * max(1.0, np.abs(c).max(initial=0.0)):
            raise DimensionMismatch("Christoffel symbols must be symmetric in the lower indices")

    @classmethod
    def zero(cls, n, order):
        return cls(JetPoly.zeros(n, order, (n, n, n)))


@dataclass(frozen=True)
class TotalSymbol:
    """sigma2 (principal), sigma1 (first order) and sigma0 (subsymbol)."""

    sigma2: JetPoly
    sigma1: JetPoly
    sigma0: JetPoly
    connection: BundleConnectionJet
    christoffel: ChristoffelJet

    def recombine(self):
        q = quantize(self.sigma2, self.connection, self.christoffel)
        n, m = q.n, q.m
        extra = OperatorJet(JetPoly.zeros(n, self.sigma0.order, (n, n, m, m)),
                            self.sigma1, self.sigma0)
        return q + extra


def _as_symbol_jet(sigma, n, order):
    if isinstance(sigma, SymbolTensor):
        return JetPoly.constant(sigma.comp, n, order)
    return sigma


def levi_civita(g, tol=DEFAULT_TOL):
    """Christoffel symbols of the metric whose inverse is the cometric jet ``g``."""
    if g.vshape[0] != g.vshape[1] or len(g.vshape) != 2:
        raise DimensionMismatch("cometric must have value shape (n, n)")
    if 1.0 / np.linalg.cond(g.value) < tol:
        raise Degenerate("cometric is degenerate at the base point",
                         diagnostic=float(1.0 / np.linalg.cond(g.value)))
    n = g.n
    h = g.inv()
    dh = [h.deriv(i) for i in range(n)]
    gt = g.truncate(h.order - 1)
    terms = []
    for k in range(n):
        row = []
        for i in range(n):
            col = []
            for j in range(n):
                acc = None
                for l in range(n):
                    t = dh[i][j, l] + dh[j][i, l] - dh[l][i, j]
                    t = gt[k, l] * t
                    acc = t if acc is None else acc + t
                col.append(acc * 0.5)
            row.append(JetPoly.stack(col))
        terms.append(JetPoly.stack(row))
    return ChristoffelJet(JetPoly.stack(terms))


def covariant_differential(s, nabla):
    """(d_nabla s)_i = d_i s + Gamma_i s; leading value axis is i."""
    n = s.n
    return JetPoly.stack([s.deriv(i) + nabla.Gamma[i].dot(s) for i in range(n)])


def covariant_square(s, nabla, christoffel):
    """Symmetrized second covariant differential; value shape (n, n) + s.vshape."""
    n = s.n
    t = covariant_differential(s, nabla)
    G, Gc = nabla.Gamma, christoffel.Gamma_c
    rows = []
    for i in range(n):
        col = []
        for j in range(n):
            v = t[j].deriv(i) + G[i].dot(t[j])
            for k in range(n):
                v = v - Gc[k, i, j] * t[k]
            col.append(v)
        rows.append(col)
    sym = [[(rows[i][j] + rows[j][i]) * 0.5 for j in range(n)] for i in range(n)]
    return JetPoly.stack([JetPoly.stack(r) for r in sym])


def quantize(sigma, nabla, christoffel):
    """Operator s -> sigma^{ij} (d_nabla^2 s)_ij."""
    G, Gc = nabla.Gamma, christoffel.Gamma_c
    n = G.n
    order = max(G.order, Gc.order) + 1
    sigma = _as_symbol_jet(sigma, n, order)
    b_terms = []
    for k in range(n):
        acc = None
        for j in range(n):
            t = sigma[k, j].dot(G[j]) * 2.0
            acc = t if acc is None else acc + t
        for i in range(n):
            for j in range(n):
                acc = acc - sigma[i, j] * Gc[k, i, j]
        b_terms.append(acc)
    c = None
    for i in range(n):
        for j in range(n):
            inner = G[j].deriv(i) + G[i].dot(G[j])
            for k in range(n):
                inner = inner - Gc[k, i, j] * G[k]
            t = sigma[i, j].dot(inner)
            c = t if c is None else c + t
    return OperatorJet(sigma, JetPoly.stack(b_terms), c)


def first_order_part(op, nabla, christoffel):
    """sigma_1(D, nabla) = b - b_Q, the first-order coefficient of D - Q(sigma)."""
    q = quantize(op.a, nabla, christoffel)
    return op.b - q.b


def pairing_sigma_alpha(sigma, alpha):
    """<sigma, alpha>^k = 2 sum_j sigma^{kj} alpha_j (arrays or jets)."""
    if isinstance(sigma, SymbolTensor):
        sigma = sigma.comp
    if isinstance(alpha, BundleConnectionJet):
        alpha = alpha.Gamma
    if isinstance(sigma, JetPoly) or isinstance(alpha, JetPoly):
        if not isinstance(sigma, JetPoly):
            sigma = JetPoly.constant(sigma, alpha.n, alpha.order)
        if not isinstance(alpha, JetPoly):
            alpha = JetPoly.constant(alpha, sigma.n, sigma.order)
        n = sigma.vshape[0]
        terms = []
        for k in range(n):
            acc = None
            for j in range(n):
                t = sigma[k, j].dot(alpha[j])
                acc = t if acc is None else acc + t
            terms.append(acc * 2.0)
        return JetPoly.stack(terms)
    sigma = np.asarray(sigma)
    alpha = np.asarray(alpha)
    if sigma.shape[0] != alpha.shape[0] or sigma.shape[2] != alpha.shape[1]:
        raise DimensionMismatch("symbol and one-form have incompatible shapes")
    return 2.0 * np.einsum("kjab,jbc->kac", sigma, alpha)


def subsymbol_shift_check(op, nabla, alpha, christoffel):
    """max |sigma_1(D, nabla) - sigma_1(D, nabla + alpha) - <sigma, alpha>|."""
    if isinstance(alpha, np.ndarray):
        alpha = JetPoly.constant(alpha, op.n, nabla.Gamma.order)
    s1 = first_order_part(op, nabla, christoffel)
    s2 = first_order_part(op, nabla + alpha, christoffel)
    pair = pairing_sigma_alpha(op.a, alpha)
    return float((s1 - s2 - pair).max_abs())


def _block(sigma):
    """sigma^{kj}[a, c] arranged as an (n m) x (n m) matrix (array or jet)."""
    if isinstance(sigma, JetPoly):
        n, _, m, _ = sigma.vshape
        return sigma.transpose(0, 2, 1, 3).reshape(n * m, n * m)
    n, _, m, _ = sigma.shape
    return np.transpose(sigma, (0, 2, 1, 3)).reshape(n * m, n * m)


def regularity_iso(sigma, tol=DEFAULT_TOL):
    """Matrix of alpha -> <sigma, alpha> and its reciprocal condition number.

    Coordinates are alpha[j, c, d] -> out[k, a, d], flattened row-major; the
    matrix is ``2 * kron(block(sigma), I_m)`` with block rows (k, a).
    """
    comp = sigma.comp if isinstance(sigma, SymbolTensor) else np.asarray(sigma)
    m = comp.shape[2]
    mat = 2.0 * np.kron(_block(comp), np.eye(m))
    s = np.linalg.svd(mat, compute_uv=False)
    rcond = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    return mat, rcond


def associated_connection(op, tol=DEFAULT_TOL):
    """The unique bundle connection with sigma_1(D, nabla) = 0.

    The cotangent connection is Levi-Civita for g_sigma. Returns
    ``(nabla, christoffel)``.
    """
    n, m = op.n, op.m
    _, rcond = regularity_iso(op.a.value)
    if rcond < tol:
        raise NotRegular("pairing with the symbol is not invertible", condition="iso",
                         diagnostic=rcond)
    g = op.a.transpose(2, 3, 0, 1)
    g = JetPoly(n, g.order, np.trace(g.coeffs, axis1=1, axis2=2))
    christoffel = levi_civita(g, tol)
    Gc = christoffel.Gamma_c
    r = []
    for k in range(n):
        acc = op.b[k]
        for i in range(n):
            for j in range(n):
                acc = acc + op.a[i, j] * Gc[k, i, j]
        r.append(acc)
    r = JetPoly.stack(r).reshape(n * m, m)
    blk = _block(op.a).truncate(r.order)
    alpha = (blk.inv().dot(r) * 0.5).reshape(n, m, m)
    return BundleConnectionJet(alpha), christoffel


def decompose(op, tol=DEFAULT_TOL):
    """Split D = Q_nabla(sigma) + sigma_0 with nabla the associated connection."""
    nabla, christoffel = associated_connection(op, tol)
    q = quantize(op.a, nabla, christoffel)
    rest = op - q
    return TotalSymbol(op.a, rest.b, rest.c, nabla, christoffel)


def subsymbol(op, tol=DEFAULT_TOL):
    return decompose(op, tol).sigma0
