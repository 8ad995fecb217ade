"""Random and structured fixtures: symbols, gauges, polynomial operators."""
import numpy as np

from .jets import JetPoly, n_monomials
from .operators import OperatorJet
from .tensors import SymbolTensor


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_symbol(m, n, seed=None):
    rng = _rng(seed)
    c = rng.normal(size=(n, n, m, m))
    return SymbolTensor(0.5 * (c + c.transpose(1, 0, 2, 3)))


def scalar_symbol(g, m):
    return SymbolTensor.scalar(np.asarray(g, dtype=float), m)


def random_gl(k, seed=None, max_cond=1e3):
    """Gaussian matrix, redrawn until its condition number is below ``max_cond``."""
    rng = _rng(seed)
    while True:
        A = rng.normal(size=(k, k))
        if np.linalg.cond(A) < max_cond:
            return A


def random_jet(n, order, vshape=(), seed=None, scale=1.0):
    rng = _rng(seed)
    return JetPoly(n, order, scale * rng.normal(size=(n_monomials(n, order),) + tuple(vshape)))


def random_operator(m, n, degree=2, seed=None, scale=0.3, base=None):
    """Polynomial-coefficient operator; ``base`` fixes a(0) (default random)."""
    rng = _rng(seed)
    a = random_jet(n, degree, (n, n, m, m), rng, scale)
    a = JetPoly(n, degree, 0.5 * (a.coeffs + np.swapaxes(a.coeffs, 1, 2)))
    a.coeffs[0] = random_symbol(m, n, rng).comp if base is None else np.asarray(base.comp)
    b = random_jet(n, degree, (n, m, m), rng)
    c = random_jet(n, degree, (m, m), rng)
    return OperatorJet(a, b, c)


def scalar_operator(m, n, degree=2, seed=None):
    """Operator whose symbol is g(x) (x) id at every point."""
    rng = _rng(seed)
    g = random_jet(n, degree, (n, n), rng, 0.2)
    g = JetPoly(n, degree, 0.5 * (g.coeffs + np.swapaxes(g.coeffs, 1, 2)))
    g.coeffs[0] += 2.0 * np.eye(n)
    a = JetPoly(n, degree, np.einsum("kij,ab->kijab", g.coeffs, np.eye(m)))
    return OperatorJet(a, random_jet(n, degree, (n, m, m), rng), random_jet(n, degree, (m, m), rng))


def random_gauge(m, n, degree=2, seed=None, scale=0.3, points=None, max_cond=50.0):
    """Polynomial matrix field A(x), redrawn until cond A(p) <= max_cond at
    every point of ``points`` (default: the origin only).

    Invariants of A o D o A^{-1} are evaluated from its coefficients, which
    carry rounding errors growing like a power of cond A; keeping the gauge
    tame keeps those errors near machine precision.
    """
    rng = _rng(seed)
    points = np.zeros((1, n)) if points is None else np.asarray(points, dtype=float)
    while True:
        A = random_jet(n, degree, (m, m), rng, scale)
        A.coeffs[0] = random_gl(m, rng, max_cond=20.0)
        if all(np.linalg.cond(A.evaluate(p)) <= max_cond for p in points):
            return A
