"""Second-order matrix differential operators on a chart, as jets.

An operator acts on sections s: R^n -> R^m by

    (D s) = a^{ij} d_i d_j s + b^i d_i s + c s

with a^{ij} = a^{ji}. Coefficients are :class:`~opequiv.jets.JetPoly`
objects with value shapes (n, n, m, m), (n, m, m) and (m, m).

The commutator with a function is taken as ``delta_f(D) = D o f - f o D``,
so that ``delta_f(d_i) = d_i f`` and ``delta_f^2(D) / 2 = a(df, df)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonInvertibleGauge
from .jets import JetPoly
from .tensors import SymbolTensor


def _left(A, X):
    """A . X for A with value shape (m, m) and X with value shape (..., m, m)."""
    k = len(X.vshape)
    if k == 2:
        return A.dot(X)
    lead = tuple(range(k - 2))
    moved = X.transpose(k - 2, *lead, k - 1)
    out = A.dot(moved)
    inv = [0] * k
    order = (k - 2,) + lead + (k - 1,)
    for pos, ax in enumerate(order):
        inv[ax] = pos
    return out.transpose(*inv)


def _hessian_apply(a, s):
    n = a.vshape[0]
    out = None
    for i in range(n):
        di = s.deriv(i)
        for j in range(n):
            term = a[i, j].dot(di.deriv(j))
            out = term if out is None else out + term
    return out


@dataclass(frozen=True)
class OperatorJet:
    a: JetPoly
    b: JetPoly
    c: JetPoly

    def __post_init__(self):
        n = self.a.n
        if not (self.b.n == self.c.n == n):
            raise DimensionMismatch("coefficients live in different charts")
        av, bv, cv = self.a.vshape, self.b.vshape, self.c.vshape
        if len(av) != 4 or av[0] != av[1] or av[0] != n or av[2] != av[3]:
            raise DimensionMismatch(f"a must have value shape (n, n, m, m), got {av}")
        m = av[2]
        if bv != (n, m, m) or cv != (m, m):
            raise DimensionMismatch(f"b, c must have value shapes {(n, m, m)}, {(m, m)}")
        asym = self.a.coeffs - np.swapaxes(self.a.coeffs, 1, 2)
        if np.abs(asym).max(initial=0.0) > 1e-12 * max(1.0, self.a.max_abs()):
            raise DimensionMismatch("a^{ij} must be symmetric in i, j")

    # construction ---------------------------------------------------------
    @classmethod
    def zero(cls, m, n, order):
        return cls(JetPoly.zeros(n, order, (n, n, m, m)), JetPoly.zeros(n, order, (n, m, m)),
                   JetPoly.zeros(n, order, (m, m)))

    @classmethod
    def constant(cls, a, b, c):
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        order = 0
        return cls(JetPoly.constant(a, n, order), JetPoly.constant(b, n, order),
                   JetPoly.constant(c, n, order))

    @property
    def n(self):
        return self.a.n

    @property
    def m(self):
        return self.a.vshape[2]

    @property
    def order(self):
        return min(self.a.order, self.b.order, self.c.order)

    @property
    def differential_order(self):
        if self.a.max_abs() > 0:
            return 2
        if self.b.max_abs() > 0:
            return 1
        return 0

    def truncate(self, order):
        return OperatorJet(self.a.truncate(order), self.b.truncate(order), self.c.truncate(order))

    def shift(self, point, order=None):
        """Re-expand polynomial coefficients about ``point``."""
        return OperatorJet(self.a.shift(point, order), self.b.shift(point, order),
                           self.c.shift(point, order))

    def __add__(self, other):
        return OperatorJet(self.a + other.a, self.b + other.b, self.c + other.c)

    def __sub__(self, other):
        return OperatorJet(self.a - other.a, self.b - other.b, self.c - other.c)

    def __mul__(self, scalar):
        return OperatorJet(self.a * scalar, self.b * scalar, self.c * scalar)

    __rmul__ = __mul__

    def max_diff(self, other):
        from .jets import jet_diff
        return max(jet_diff(self.a, other.a), jet_diff(self.b, other.b), jet_diff(self.c, other.c))


def apply(op, s):
    """Apply ``op`` to a section jet ``s`` (value shape (m,) or (m, k))."""
    if s.vshape[0] != op.m:
        raise DimensionMismatch(f"section has fibre dimension {s.vshape[0]}, operator {op.m}")
    out = _hessian_apply(op.a, s)
    for i in range(op.n):
        out = out + op.b[i].dot(s.deriv(i))
    return out + op.c.dot(s)


def delta_f(op, f):
    """The operator D o f - f o D for a scalar jet ``f``."""
    if f.vshape != ():
        raise DimensionMismatch("delta_f needs a scalar function jet")
    n, m = op.n, op.m
    df = [f.deriv(i) for i in range(n)]
    b_new = []
    for k in range(n):
        acc = None
        for j in range(n):
            t = op.a[k, j] * df[j]
            acc = t if acc is None else acc + t
        b_new.append(acc * 2.0)
    c_new = None
    for i in range(n):
        t = op.b[i] * df[i]
        for j in range(n):
            t = t + op.a[i, j] * df[i].deriv(j)
        c_new = t if c_new is None else c_new + t
    b_new = JetPoly.stack(b_new)
    order = min(b_new.order, c_new.order)
    return OperatorJet(JetPoly.zeros(n, order, (n, n, m, m)), b_new.truncate(order),
                       c_new.truncate(order))


def symbol_of(op):
    """Jet of the principal symbol; its value shape is (n, n, m, m)."""
    return op.a


def symbol_at(op, point=None):
    a = op.a if point is None else op.a.shift(point, 0)
    return SymbolTensor(a.value)


def gauge_transform(op, A):
    """A o D o A^{-1} for a matrix jet ``A`` invertible at the base point.

    The result has order ``min(op.order, A.order - 2)``; supply ``A`` two
    orders higher than the operator to keep full precision.
    """
    if A.vshape != (op.m, op.m):
        raise DimensionMismatch(f"gauge must have value shape {(op.m, op.m)}")
    if A.order < 2:
        raise NonInvertibleGauge("gauge jets need order >= 2 to transform second-order terms")
    B = A.inv()
    n = op.n
    dB = [B.deriv(i) for i in range(n)]
    a_new = _left(A, op.a.dot(B))
    b_terms = []
    for k in range(n):
        acc = op.b[k].dot(B)
        for j in range(n):
            acc = acc + op.a[k, j].dot(dB[j]) * 2.0
        b_terms.append(A.dot(acc))
    c_acc = op.c.dot(B)
    for i in range(n):
        c_acc = c_acc + op.b[i].dot(dB[i])
        for j in range(n):
            c_acc = c_acc + op.a[i, j].dot(dB[i].deriv(j))
    c_new = A.dot(c_acc)
    b_new = JetPoly.stack(b_terms)
    order = min(a_new.order, b_new.order, c_new.order)
    return OperatorJet(a_new.truncate(order), b_new.truncate(order), c_new.truncate(order))
