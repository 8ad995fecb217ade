"""Truncated multivariate Taylor polynomials with tensor-valued coefficients.

A :class:`JetPoly` of order ``K`` in ``n`` variables stores the coefficients
``c_alpha`` for every multi-index ``|alpha| <= K``; the base point is the
origin of the local coordinates. Monomials are kept in graded order, so the
coefficient array of a lower-order truncation is a prefix of the higher-order
one. Every coefficient carries the same value shape (``()`` for scalar jets,
``(m, m)`` for endomorphism-valued jets, and so on).

Products truncate at the smaller of the two orders and derivatives lower the
order by one, so the ``order`` attribute always records how far a jet is
known exactly.
"""
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from . import kernels
from .errors import DimensionMismatch, NonInvertibleGauge, OrderUnderflow


@lru_cache(maxsize=None)
def monomials(n, order):
    """Multi-indices of total degree <= order, graded then lexicographic."""
    out = []
    for deg in range(order + 1):
        for combo in combinations_with_replacement(range(n), deg):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(n, order):
    return {alpha: k for k, alpha in enumerate(monomials(n, order))}


def n_monomials(n, order):
    return comb(n + order, order)


@lru_cache(maxsize=None)
def _product_table(n, order):
    mons = monomials(n, order)
    index = monomial_index(n, order)
    degs = [sum(a) for a in mons]
    triples = []
    for ka, a in enumerate(mons):
        for kb, b in enumerate(mons):
            if degs[ka] + degs[kb] > order:
                continue
            c = tuple(x + y for x, y in zip(a, b))
            triples.append((index[c], ka, kb))
    triples.sort()
    ic = np.array([t[0] for t in triples], dtype=np.intp)
    ia = np.array([t[1] for t in triples], dtype=np.intp)
    ib = np.array([t[2] for t in triples], dtype=np.intp)
    starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]]).astype(np.intp)
    return ia, ib, ic, starts


@lru_cache(maxsize=None)
def _deriv_table(n, order, i):
    """Source slots and factors for d/dx_i of an order-``order`` jet."""
    src_index = monomial_index(n, order)
    src, fac = [], []
    for beta in monomials(n, order - 1):
        alpha = list(beta)
        alpha[i] += 1
        src.append(src_index[tuple(alpha)])
        fac.append(float(alpha[i]))
    return np.array(src, dtype=np.intp), np.array(fac)


@lru_cache(maxsize=None)
def _shift_tables(n, order):
    mons = np.array(monomials(n, order), dtype=int).reshape(-1, n)
    diff = mons[:, None, :] - mons[None, :, :]
    valid = np.all(diff >= 0, axis=2)
    binom = np.ones(valid.shape)
    for a in range(mons.shape[0]):
        for b in range(mons.shape[0]):
            if valid[a, b]:
                binom[a, b] = np.prod([comb(int(x), int(y)) for x, y in zip(mons[a], mons[b])])
    return np.where(valid[..., None], diff, 0), valid, binom


def shift_matrix(n, order, point):
    """Matrix T with ``P(point + y) = sum_b (T.T @ c)[b] y^b`` for P = sum_a c_a x^a."""
    diff, valid, binom = _shift_tables(n, order)
    point = np.asarray(point, dtype=float)
    powers = np.prod(point[None, None, :] ** diff, axis=2)
    return np.where(valid, binom * powers, 0.0)


class JetPoly:
    """Order-``order`` jet in ``n`` variables with tensor-valued coefficients."""

    __slots__ = ("n", "order", "coeffs")

    def __init__(self, n, order, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if order < 0:
            raise OrderUnderflow("jet order became negative")
        if coeffs.shape[0] != n_monomials(n, order):
            raise DimensionMismatch(
                f"expected {n_monomials(n, order)} coefficients for n={n}, order={order}, "
                f"got {coeffs.shape[0]}")
        self.n = n
        self.order = order
        self.coeffs = coeffs

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, n, order, vshape=()):
        return cls(n, order, np.zeros((n_monomials(n, order),) + tuple(vshape)))

    @classmethod
    def constant(cls, value, n, order):
        value = np.asarray(value, dtype=float)
        out = np.zeros((n_monomials(n, order),) + value.shape)
        out[0] = value
        return cls(n, order, out)

    @classmethod
    def variable(cls, i, n, order):
        out = cls.zeros(n, order)
        if order >= 1:
            e = [0] * n
            e[i] = 1
            out.coeffs[monomial_index(n, order)[tuple(e)]] = 1.0
        return out

    @classmethod
    def from_terms(cls, n, order, terms, vshape=()):
        """Build from a mapping ``{alpha: value}``; terms above ``order`` are dropped."""
        out = cls.zeros(n, order, vshape)
        index = monomial_index(n, order)
        for alpha, value in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise DimensionMismatch(f"multi-index {alpha} has wrong length for n={n}")
            k = index.get(alpha)
            if k is not None:
                out.coeffs[k] += np.asarray(value, dtype=float)
        return out

    @classmethod
    def stack(cls, jets, axis=0):
        order = min(j.order for j in jets)
        n = jets[0].n
        arrs = [j.truncate(order).coeffs for j in jets]
        ax = axis + 1 if axis >= 0 else axis
        return cls(n, order, np.stack(arrs, axis=ax))

    # basic properties -------------------------------------------------------
    @property
    def vshape(self):
        return self.coeffs.shape[1:]

    @property
    def value(self):
        return self.coeffs[0]

    def __repr__(self):
        return f"JetPoly(n={self.n}, order={self.order}, vshape={self.vshape})"

    def truncate(self, order):
        if order > self.order:
            raise OrderUnderflow(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return JetPoly(self.n, order, self.coeffs[: n_monomials(self.n, order)])

    def terms(self):
        return dict(zip(monomials(self.n, self.order), self.coeffs))

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    # value-axis manipulation -------------------------------------------
    def _vmap(self, fn):
        return JetPoly(self.n, self.order, fn(self.coeffs))

    def transpose(self, *axes):
        return self._vmap(lambda c: np.transpose(c, (0,) + tuple(a + 1 for a in axes)))

    def reshape(self, *shape):
        return self._vmap(lambda c: c.reshape((c.shape[0],) + tuple(shape)))

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return self._vmap(lambda c: c[(slice(None),) + idx])

    def sum(self, axis):
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        return self._vmap(lambda c: c.sum(axis=tuple(a + 1 for a in axes)))

    def vapply(self, matrix_left=None, matrix_right=None):
        """Multiply every coefficient by constant matrices on the left/right."""
        c = self.coeffs
        if matrix_left is not None:
            c = np.matmul(matrix_left, c)
        if matrix_right is not None:
            c = np.matmul(c, matrix_right)
        return JetPoly(self.n, self.order, c)

    # arithmetic -------------------------------------------------------------
    def _common(self, other):
        if self.n != other.n:
            raise DimensionMismatch("jets in different numbers of variables")
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order), order

    def __add__(self, other):
        if isinstance(other, JetPoly):
            a, b, order = self._common(other)
            return JetPoly(self.n, order, a.coeffs + b.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] + other
        return JetPoly(self.n, self.order, out)

    __radd__ = __add__

    def __neg__(self):
        return JetPoly(self.n, self.order, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, JetPoly):
            if other.vshape == ():
                return other._scalar_times(self)
            if self.vshape == ():
                return self._scalar_times(other)
            raise DimensionMismatch("use dot() for products of tensor-valued jets")
        return JetPoly(self.n, self.order, self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return JetPoly(self.n, self.order, self.coeffs / scalar)

    def _scalar_times(self, other):
        a, b, order = self._common(other)
        M = n_monomials(self.n, order)
        x = a.coeffs.reshape(M, 1, 1)
        y = b.coeffs.reshape(M, 1, -1)
        out = kernels.conv_matmul(x, y, *_product_table(self.n, order))
        return JetPoly(self.n, order, out.reshape((M,) + b.vshape))

    def dot(self, other):
        """Contract the last value axis of ``self`` with the first of ``other``."""
        if self.vshape == () or other.vshape == ():
            return self * other
        if self.vshape[-1] != other.vshape[0]:
            raise DimensionMismatch(f"cannot contract {self.vshape} with {other.vshape}")
        a, b, order = self._common(other)
        M = n_monomials(self.n, order)
        q = self.vshape[-1]
        x = a.coeffs.reshape(M, -1, q)
        y = b.coeffs.reshape(M, q, -1)
        out = kernels.conv_matmul(x, y, *_product_table(self.n, order))
        return JetPoly(self.n, order, out.reshape((M,) + self.vshape[:-1] + other.vshape[1:]))

    __matmul__ = dot

    # calculus -------------------------------------------------------------
    def deriv(self, i):
        if self.order == 0:
            raise OrderUnderflow("derivative of an order-0 jet is unknown")
        src, fac = _deriv_table(self.n, self.order, i)
        c = self.coeffs[src] * fac.reshape((-1,) + (1,) * len(self.vshape))
        return JetPoly(self.n, self.order - 1, c)

    def grad(self):
        """Jet of partial derivatives; the new leading value axis is the variable."""
        return JetPoly.stack([self.deriv(i) for i in range(self.n)], axis=0)

    def inv(self):
        """Inverse of a scalar- or square-matrix-valued jet."""
        if self.vshape == ():
            if self.value == 0:
                raise NonInvertibleGauge("scalar jet vanishes at the base point")
            return (self.reshape(1, 1).inv()).reshape()
        if len(self.vshape) != 2 or self.vshape[0] != self.vshape[1]:
            raise DimensionMismatch("inverse needs a square-matrix-valued jet")
        try:
            a0inv = np.linalg.inv(self.value)
        except np.linalg.LinAlgError as exc:
            raise NonInvertibleGauge("matrix jet singular at the base point") from exc
        if not np.all(np.isfinite(a0inv)):
            raise NonInvertibleGauge("matrix jet singular at the base point")
        n, order = self.n, self.order
        base = JetPoly.constant(a0inv, n, order)
        nil = self - JetPoly.constant(self.value, n, order)
        step = JetPoly(n, order, -np.matmul(a0inv, nil.coeffs))
        x = base
        for _ in range(order):
            x = base + step.dot(x)
        return x

    def evaluate(self, point):
        point = np.asarray(point, dtype=float)
        mons = np.array(monomials(self.n, self.order), dtype=int).reshape(-1, self.n)
        w = np.prod(point[None, :] ** mons, axis=1)
        return np.tensordot(w, self.coeffs, axes=(0, 0))

    def shift(self, point, order=None):
        """Re-expand this jet, read as an exact polynomial, about ``point``."""
        T = shift_matrix(self.n, self.order, point)
        c = np.tensordot(T.T, self.coeffs, axes=(1, 0))
        out = JetPoly(self.n, self.order, c)
        return out if order is None else out.truncate(min(order, self.order))

    def allclose(self, other, atol=1e-12):
        a, b, _ = self._common(other)
        return bool(np.allclose(a.coeffs, b.coeffs, rtol=0, atol=atol))


def jet_diff(a, b):
    """Max coefficient difference of two jets over their common order."""
    x, y, _ = a._common(b)
    return float(np.max(np.abs(x.coeffs - y.coeffs))) if x.coeffs.size else 0.0
