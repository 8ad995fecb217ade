"""Dense tensor types over E (dim m) and T (dim n).

A symbol at a point is stored as an array ``comp`` of shape ``(n, n, m, m)``:
``comp[i, j]`` is the endomorphism attached to the symmetric slot pair
``(i, j)``. Quadratic forms are plain symmetric ``(n, n)`` arrays; whether a
form lives on T* (``S^2 T``) or on T (``S^2 T*``) is tracked by the caller.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import Degenerate, DimensionMismatch, NearDefective

DEFAULT_TOL = 1e-9


@lru_cache(maxsize=None)
def sym_pairs(n):
    """Lexicographic list of pairs ``(i, j)`` with ``i <= j``."""
    return tuple((i, j) for i in range(n) for j in range(i, n))


@lru_cache(maxsize=None)
def sym_pair_index(n):
    return {p: k for k, p in enumerate(sym_pairs(n))}


def pair_count(n):
    return n * (n + 1) // 2


def sym_to_vec(form):
    """Coordinates of a symmetric matrix in the basis ``E_ij = e_i e_j + e_j e_i`` (i<j)."""
    n = form.shape[0]
    return np.array([form[i, j] for i, j in sym_pairs(n)])


def vec_to_sym(vec, n):
    out = np.zeros((n, n) + np.shape(vec)[1:], dtype=np.result_type(vec, float))
    for k, (i, j) in enumerate(sym_pairs(n)):
        out[i, j] = vec[k]
        out[j, i] = vec[k]
    return out


@dataclass(frozen=True)
class SymbolTensor:
    """An element of End(E) (x) S^2 T at a point."""

    comp: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.comp)
        if comp.ndim != 4 or comp.shape[0] != comp.shape[1] or comp.shape[2] != comp.shape[3]:
            raise DimensionMismatch(f"symbol components must have shape (n, n, m, m), got {comp.shape}")
        if not np.all(np.isfinite(comp)):
            raise ValueError("symbol has non-finite entries")
        if not np.allclose(comp, comp.transpose(1, 0, 2, 3), rtol=0, atol=1e-12 * (1 + np.abs(comp).max())):
            raise ValueError("symbol is not symmetric in its two tensor slots")
        comp = 0.5 * (comp + comp.transpose(1, 0, 2, 3))
        comp.setflags(write=False)
        object.__setattr__(self, "comp", comp)

    @property
    def n(self):
        return self.comp.shape[0]

    @property
    def m(self):
        return self.comp.shape[2]

    @classmethod
    def scalar(cls, g, m):
        """The symbol ``id_E (x) g``."""
        g = np.asarray(g, dtype=float)
        return cls(np.einsum("ij,ab->ijab", g, np.eye(m)))

    def pair_coords(self):
        """Components at the lexicographic symmetric pairs, shape ``(N+1, m, m)``."""
        return np.array([self.comp[i, j] for i, j in sym_pairs(self.n)])

    @classmethod
    def from_pair_coords(cls, coords):
        coords = np.asarray(coords)
        P = coords.shape[0]
        n = int(round((np.sqrt(8 * P + 1) - 1) / 2))
        return cls(vec_to_sym(coords, n))

    def act(self, A, B):
        """Group action of ``(A, B)`` in GL(E) x GL(T).

        Each slot is pushed forward by B and each endomorphism is conjugated
        by A.
        """
        A = np.asarray(A)
        B = np.asarray(B)
        Ainv = np.linalg.inv(A)
        inner = np.einsum("ab,ijbc,cd->ijad", A, self.comp, Ainv)
        return SymbolTensor(np.einsum("ik,jl,klab->ijab", B, B, inner))

    def __add__(self, other):
        return SymbolTensor(self.comp + other.comp)

    def __sub__(self, other):
        return SymbolTensor(self.comp - other.comp)

    def __mul__(self, scalar):
        return SymbolTensor(self.comp * scalar)

    __rmul__ = __mul__


def _check(sigma, theta):
    theta = np.asarray(theta)
    if theta.shape != (sigma.n, sigma.n):
        raise DimensionMismatch(f"form of shape {theta.shape} does not match n={sigma.n}")
    return theta


def value_on(sigma, theta):
    """Value of the symbol on a form ``theta`` in S^2 T*: sum theta_ij sigma^ij."""
    theta = _check(sigma, theta)
    return np.einsum("ij,ijab->ab", theta, sigma.comp)


def trace_quadric(sigma):
    """The form ``g_sigma`` in S^2 T with <g, theta> = Tr(sigma_theta)."""
    return np.einsum("ijaa->ij", sigma.comp)


def invert_quadric(g, tol=DEFAULT_TOL):
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionMismatch("quadric must be square")
    rcond = 1.0 / np.linalg.cond(g) if np.all(np.isfinite(g)) else 0.0
    if not rcond >= tol:
        raise Degenerate(f"quadric is degenerate (reciprocal condition {rcond:.3e} < {tol:g})",
                         diagnostic=rcond)
    inv = np.linalg.inv(g)
    return 0.5 * (inv + inv.T)


def sort_spectrum(values):
    """Order by real part, conjugate pairs adjacent with positive imaginary part first."""
    return sorted(range(len(values)), key=lambda k: (values[k].real, -values[k].imag))


def eigen_covectors(A, tol=DEFAULT_TOL, check_gap=True):
    """Eigenvalues and eigenvectors of a real matrix over C, sorted deterministically.

    Returns ``(values, vectors)`` with eigenvectors as columns. Raises
    :class:`NearDefective` when two eigenvalues are closer than ``tol * |A|``.
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    vals, vecs = np.linalg.eig(A)
    order = sort_spectrum(vals)
    vals = vals[order].astype(complex)
    vecs = vecs[:, order].astype(complex)
    scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    if len(vals) > 1:
        gaps = np.abs(vals[:, None] - vals[None, :]) + np.diag(np.full(len(vals), np.inf))
        gap = float(gaps.min())
        if check_gap and gap < tol * scale:
            raise NearDefective(f"eigenvalues nearly coincide (gap {gap:.3e})", diagnostic=gap / scale)
    resid = np.linalg.norm(A @ vecs - vecs * vals[None, :], axis=0) / np.linalg.norm(vecs, axis=0)
    if check_gap and np.any(resid > tol * scale):
        raise NearDefective("eigenvector residual too large", diagnostic=float(resid.max()))
    return vals, vecs
