"""Invariants of a symbol under GL(E) x GL(T).

The pipeline for a symbol ``sigma`` is::

    derived_quadrics -> g1_operator -> eigenframe -> r_family -> fingerprint

``r_family`` produces endomorphisms R_0..R_N of E (N + 1 = n(n+1)/2) that
transform by simultaneous conjugation under GL(E) and do not see GL(T);
traces of words in them are therefore G-invariants of the symbol.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from . import kernels
from .errors import (DimensionMismatch, NullNorm,
                     RealityViolation, RegularityError)
from .tensors import (DEFAULT_TOL, eigen_covectors, invert_quadric,
                      pair_count, sym_pairs, sym_to_vec, trace_quadric, value_on,
                      vec_to_sym)

DEFAULT_WORD_LENGTH = 4


@dataclass(frozen=True)
class DerivedQuadrics:
    g: np.ndarray
    g_inv: np.ndarray
    g1: np.ndarray
    g2: np.ndarray


@dataclass(frozen=True)
class EigenFrame:
    """Normalized eigencovectors of the g1-operator.

    ``estar[:, i]`` is the i-th eigencovector and ``edual[:, i]`` the dual
    vector; ``norms[i]`` is g(e*_i, e*_i) after normalization.
    """

    lam: np.ndarray
    estar: np.ndarray
    edual: np.ndarray
    norms: tuple
    raw_norms: np.ndarray = field(repr=False, default=None)

    def permuted(self, perm, signs=None):
        perm = list(perm)
        signs = np.ones(len(perm)) if signs is None else np.asarray(signs, dtype=float)
        return EigenFrame(self.lam[perm], self.estar[:, perm] * signs,
                          self.edual[:, perm] * signs,
                          tuple(self.norms[k] for k in perm))


@dataclass(frozen=True)
class RFamily:
    R: np.ndarray  # (N+1, m, m), real
    imag_residual: float

    def __len__(self):
        return self.R.shape[0]


@dataclass(frozen=True)
class Fingerprint:
    words: tuple
    values: np.ndarray
    scales: np.ndarray
    alphabet: tuple
    m: int
    n: int
    max_len: int

    @property
    def meta(self):
        return (self.m, self.n, self.max_len)

    def as_dict(self):
        return {word_name(w, self.alphabet): float(v) for w, v in zip(self.words, self.values)}


# ---------------------------------------------------------------------------
# Trace tensors
# ---------------------------------------------------------------------------

def artin_procesi_tensor(sigma, thetas, order):
    """Tr(sigma_{theta[order[0]]} ... sigma_{theta[order[-1]]}).

    ``order`` is a 0-based permutation of ``range(len(thetas))``.
    """
    if len(thetas) != len(order):
        raise DimensionMismatch("need one form per letter of the permutation")
    mats = [value_on(sigma, th) for th in thetas]
    prod = np.eye(sigma.m)
    for k in order:
        prod = prod @ mats[k]
    return float(np.trace(prod))


def h2_h3(sigma):
    """Components of h2, h3 on lexicographic symmetric pairs.

    ``h2[p, q] = Tr(sigma^p sigma^q)`` and ``h3[p, q, r] = Tr(sigma^p sigma^q sigma^r)``
    where p, q, r index the pairs ``i <= j``.
    """
    S = sigma.pair_coords()
    h2 = np.einsum("pab,qba->pq", S, S)
    h3 = np.einsum("pab,qbc,rca->pqr", S, S, S)
    return h2, h3


def derived_quadrics(sigma, tol=DEFAULT_TOL):
    """g_sigma, its inverse, and the contracted forms g1, g2 (all symmetric).

    ``g1[k, l] = Tr(M sigma^kl)`` and ``g2[k, l] = Tr(M M sigma^kl)`` with
    ``M = sigma_{g^-1}``; the inverse form is contracted into the leading
    slots of h2 and h3.
    """
    g = trace_quadric(sigma)
    g_inv = invert_quadric(g, tol)
    M = value_on(sigma, g_inv)
    g1 = np.einsum("ab,klba->kl", M, sigma.comp)
    g2 = np.einsum("ab,bc,klca->kl", M, M, sigma.comp)
    scale = max(np.abs(g2).max(), 1.0)
    if np.abs(g2 - g2.T).max() > 1e-10 * scale:
        raise RuntimeError("contracted cubic form is not symmetric")
    return DerivedQuadrics(g, g_inv, 0.5 * (g1 + g1.T), 0.5 * (g2 + g2.T))


def g1_operator(dq):
    """Operator A on T* with g(A theta, eta) = g1(theta, eta)."""
    return dq.g_inv @ dq.g1


def sym_square_operator(A):
    """Matrix of theta -> A theta A^T on S^2 T* in lexicographic pair coordinates."""
    A = np.asarray(A)
    n = A.shape[0]
    P = pair_count(n)
    out = np.zeros((P, P), dtype=A.dtype)
    for col in range(P):
        unit = np.zeros(P)
        unit[col] = 1.0
        out[:, col] = sym_to_vec(A @ vec_to_sym(unit, n) @ A.T)
    return out


# ---------------------------------------------------------------------------
# Eigenframe and R-family
# ---------------------------------------------------------------------------

def _sign_fix(v, tol):
    mags = np.abs(v)
    k = int(np.argmax(mags > tol * mags.max()))
    lead = v[k]
    if lead.real < 0 or (lead.real == 0 and lead.imag < 0):
        return -v
    return v


def eigenframe(sigma, dq, tol=DEFAULT_TOL, strict=True):
    """Eigencovectors of the g1-operator normalized to g(e*, e*) = +-1.

    Real eigenvectors are scaled by a real factor, so their norm keeps the
    sign of g; complex ones are scaled to norm +1. With ``strict=False`` the
    eigenvalue-gap check is skipped (used to probe non-generic symbols).
    """
    A = g1_operator(dq)
    lam, vecs = eigen_covectors(A, tol, check_gap=strict)
    G = dq.g
    gscale = np.linalg.norm(G, 2)
    cols, norms, raw = [], [], []
    for k in range(len(lam)):
        v = vecs[:, k]
        if lam[k].imag == 0:
            v = v.real
        v = v / np.linalg.norm(v)
        z = v @ G @ v
        raw.append(abs(z) / gscale)
        if abs(z) < tol * gscale:
            raise NullNorm(f"eigencovector {k} is null for g_sigma (|g(e,e)| = {abs(z):.3e})",
                           diagnostic=abs(z) / gscale)
        if np.isrealobj(v):
            v = v / np.sqrt(abs(z))
            norms.append(int(np.sign(z)))
        else:
            v = v / np.sqrt(complex(z))
            norms.append(1)
        cols.append(_sign_fix(v.astype(complex), 1e-8))
    estar = np.column_stack(cols)
    edual = np.linalg.inv(estar).T
    return EigenFrame(lam, estar, edual, tuple(norms), np.array(raw))


def frame_components(sigma, frame):
    """sigma_ij with sigma = sum sigma_ij e_i (x) e_j, shape (n, n, m, m), complex."""
    P = frame.estar
    return np.einsum("ai,bj,abxy->ijxy", P, P, sigma.comp)


def lambda_forms(dq, frame, count=None):
    """Forms sum_ij lam_i^l lam_j^l g2(e*_i, e*_j) e*_i e*_j for l = 0..count-1."""
    n = len(frame.lam)
    count = pair_count(n) if count is None else count
    P = frame.estar
    g2e = P.T @ dq.g2 @ P
    out = []
    for l in range(count):
        w = np.outer(frame.lam ** l, frame.lam ** l) * g2e
        out.append(P @ w @ P.T)
    return out


def r_family(sigma, dq, frame, tol=DEFAULT_TOL):
    """R_l = sum_ij lam_i^l lam_j^l g2(e*_i, e*_j) sigma_ij for l = 0..N.

    Computed over C; the imaginary parts must vanish to ``tol`` relative to
    each R_l, otherwise :class:`RealityViolation` is raised.
    """
    P = frame.estar
    sig_ij = frame_components(sigma, frame)
    g2e = P.T @ dq.g2 @ P
    lam = frame.lam
    Rs = []
    resid = 0.0
    for l in range(pair_count(sigma.n)):
        w = np.outer(lam ** l, lam ** l) * g2e
        R = np.einsum("ij,ijxy->xy", w, sig_ij)
        norm = np.linalg.norm(R)
        if norm > 0:
            resid = max(resid, float(np.abs(R.imag).max() / norm))
        Rs.append(R.real)
    if resid > tol:
        raise RealityViolation(f"R-family has imaginary residual {resid:.3e}", diagnostic=resid)
    return RFamily(np.array(Rs), resid)


def symbol_pipeline(sigma, tol=DEFAULT_TOL):
    """Run derived quadrics, eigenframe and R-family; returns the three."""
    dq = derived_quadrics(sigma, tol)
    frame = eigenframe(sigma, dq, tol)
    return dq, frame, r_family(sigma, dq, frame, tol)


# ---------------------------------------------------------------------------
# Trace words
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def necklace_words(k, max_len):
    """Words over ``range(k)`` of length 1..max_len, one per cyclic class.

    Each class is represented by its lexicographically minimal rotation;
    the list is ordered by length, then lexicographically.
    """
    out = []
    for L in range(1, max_len + 1):
        for w in product(range(k), repeat=L):
            if all(w <= w[r:] + w[:r] for r in range(1, L)):
                out.append(w)
    return tuple(out)


def canonical_word(word):
    word = tuple(word)
    return min(word[r:] + word[:r] for r in range(len(word)))


def r_alphabet(n, with_subsymbol=False):
    names = tuple(f"R{l}" for l in range(pair_count(n)))
    return names + ("S0",) if with_subsymbol else names


def word_name(word, alphabet):
    return "*".join(alphabet[i] for i in word)


def parse_word(name, alphabet):
    index = {a: i for i, a in enumerate(alphabet)}
    try:
        return tuple(index[t] for t in name.split("*"))
    except KeyError as exc:
        raise ValueError(f"unknown letter in word {name!r}") from exc


def encode_words(words):
    L = max(len(w) for w in words)
    arr = np.zeros((len(words), L), dtype=np.intp)
    for r, w in enumerate(words):
        arr[r, : len(w)] = w
    return arr, np.array([len(w) for w in words], dtype=np.intp)


def evaluate_words(mats, words):
    arr, lengths = encode_words(words)
    return kernels.trace_words(mats, arr, lengths)


def fingerprint(rs, extra=None, max_len=DEFAULT_WORD_LENGTH, words=None):
    """Traces of all cyclic word classes of length <= max_len.

    The alphabet is R_0..R_N, followed by the subsymbol when ``extra`` is
    given. ``words`` restricts evaluation to an explicit list.
    """
    if max_len < 1:
        raise ValueError("word length must be >= 1")
    R = rs.R if isinstance(rs, RFamily) else np.asarray(rs)
    mats = R if extra is None else np.concatenate([R, np.asarray(extra, dtype=float)[None]], axis=0)
    m = mats.shape[1]
    n = int(round((np.sqrt(8 * R.shape[0] + 1) - 1) / 2))
    alphabet = r_alphabet(n, extra is not None)
    if words is None:
        words = necklace_words(len(alphabet), max_len)
    else:
        words = tuple(canonical_word(w) for w in words)
        max_len = max(len(w) for w in words)
    values = evaluate_words(mats, words)
    norms = np.linalg.norm(mats, axis=(1, 2))
    scales = np.array([np.prod(norms[list(w)]) for w in words])
    return Fingerprint(tuple(words), values, scales, alphabet, m, n, max_len)


# ---------------------------------------------------------------------------
# Regularity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    diagnostic: float
    message: str = ""


@dataclass(frozen=True)
class RegularityReport:
    """The four genericity conditions.

    ``cond2`` is the conjunction of its spectral part (distinct eigenvalues of
    the g1-operator and of S, S invertible) and its cyclic part (the Krylov
    forms of g2 span S^2 T); both parts are also kept separately.
    ``admissible`` drops only the cyclic part: it is exactly what the
    eigenframe, R-family and fingerprints need to be well defined, while
    reconstruction of the symbol from its R-family needs full regularity.
    """

    cond1: ConditionResult
    cond2: ConditionResult
    cond3: ConditionResult
    cond4: ConditionResult
    cond2_spectral: ConditionResult = None
    cond2_cyclic: ConditionResult = None

    @property
    def overall(self):
        return self.cond1.passed and self.cond2.passed and self.cond3.passed and self.cond4.passed

    @property
    def admissible(self):
        spectral = self.cond2_spectral.passed if self.cond2_spectral is not None else self.cond2.passed
        return self.cond1.passed and spectral and self.cond3.passed and self.cond4.passed

    def failing(self):
        return [name for name in ("cond1", "cond2", "cond3", "cond4") if not getattr(self, name).passed]

    def as_dict(self):
        out = {}
        for name in ("cond1", "cond2", "cond3", "cond4", "cond2_spectral", "cond2_cyclic"):
            c = getattr(self, name)
            if c is None:
                continue
            out[name] = {"passed": bool(c.passed), "diagnostic": float(c.diagnostic), "message": c.message}
        out["overall"] = bool(self.overall)
        out["admissible"] = bool(self.admissible)
        out["failing"] = list(self.failing())
        return out


def _min_gap(values):
    values = np.asarray(values)
    if len(values) < 2:
        return np.inf
    d = np.abs(values[:, None] - values[None, :]) + np.diag(np.full(len(values), np.inf))
    return float(d.min())


def krylov_rank(dq, tol=DEFAULT_TOL):
    """Rank of g2, S*(g2), ..., (S*)^N(g2) and the relative smallest singular value."""
    A = g1_operator(dq)
    n = A.shape[0]
    P = pair_count(n)
    rows = []
    q = dq.g2
    for _ in range(P):
        v = sym_to_vec(q)
        rows.append(v / np.linalg.norm(v) if np.linalg.norm(v) > 0 else v)
        q = A.T @ q @ A
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    rel = s / s[0] if s[0] > 0 else np.zeros_like(s)
    return int(np.sum(rel >= tol)), float(rel[-1])


def regularity_report(sigma, tol=DEFAULT_TOL, samples=20, seed=0):
    """Check the four genericity conditions; failures are recorded, not raised."""
    skipped = ConditionResult(False, float("nan"), "not evaluated (earlier condition failed)")
    g = trace_quadric(sigma)
    rcond = 1.0 / np.linalg.cond(g)
    cond1 = ConditionResult(bool(rcond >= tol), float(rcond), "g_sigma nondegenerate" if rcond >= tol
                            else "g_sigma is degenerate")
    if not cond1.passed:
        return RegularityReport(cond1, skipped, skipped, _cond4(sigma, tol, samples, seed),
                                skipped, skipped)

    dq = derived_quadrics(sigma, tol)
    A = g1_operator(dq)
    lam = np.linalg.eigvals(A)
    ascale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    gap_a = _min_gap(lam) / ascale
    S = sym_square_operator(A)
    mu = np.linalg.eigvals(S)
    sscale = max(np.linalg.norm(S, 2), np.finfo(float).tiny)
    gap_s = _min_gap(mu) / sscale
    iso = float(np.abs(mu).min() / sscale)
    rank, kdiag = krylov_rank(dq, tol)
    P = pair_count(sigma.n)
    diag2 = min(gap_a, gap_s, iso, kdiag)
    spectral = []
    if gap_a < tol:
        spectral.append("g1-operator has repeated eigenvalues")
    if gap_s < tol:
        spectral.append("S has repeated eigenvalues")
    if iso < tol:
        spectral.append("S is not an isomorphism")
    cond2_spectral = ConditionResult(not spectral, min(gap_a, gap_s, iso),
                                     "; ".join(spectral) or "distinct spectra")
    cyclic_msg = f"Krylov forms of g2 span rank {rank} of {P}"
    cond2_cyclic = ConditionResult(rank == P, kdiag, cyclic_msg)
    problems = spectral + ([cyclic_msg] if rank < P else [])
    cond2 = ConditionResult(not problems, diag2, "; ".join(problems) or "distinct spectra, cyclic g2")

    if cond2.passed or gap_a >= tol:
        try:
            frame = eigenframe(sigma, dq, tol)
            d3 = float(frame.raw_norms.min())
            cond3 = ConditionResult(True, d3, "eigencovectors are non-null")
        except NullNorm as exc:
            cond3 = ConditionResult(False, float(exc.diagnostic), str(exc))
        except RegularityError as exc:
            cond3 = ConditionResult(False, float("nan"), str(exc))
    else:
        cond3 = skipped
    return RegularityReport(cond1, cond2, cond3, _cond4(sigma, tol, samples, seed),
                            cond2_spectral, cond2_cyclic)


def _cond4(sigma, tol, samples, seed):
    rng = np.random.default_rng(seed)
    n = sigma.n
    worst_comm = np.inf
    worst_gap = np.inf
    for _ in range(samples):
        t1 = rng.normal(size=(n, n))
        t2 = rng.normal(size=(n, n))
        s1 = value_on(sigma, t1 + t1.T)
        s2 = value_on(sigma, t2 + t2.T)
        denom = np.linalg.norm(s1) * np.linalg.norm(s2)
        comm = np.linalg.norm(s1 @ s2 - s2 @ s1) / denom if denom > 0 else 0.0
        worst_comm = min(worst_comm, comm)
        for s in (s1, s2):
            nrm = np.linalg.norm(s)
            worst_gap = min(worst_gap, _min_gap(np.linalg.eigvals(s)) / nrm if nrm > 0 else 0.0)
    passed = worst_comm >= tol and worst_gap >= tol
    msgs = []
    if worst_comm < tol:
        msgs.append("sampled commutators vanish")
    if worst_gap < tol:
        msgs.append("sampled sigma_theta has repeated eigenvalues")
    return ConditionResult(bool(passed), float(min(worst_comm, worst_gap)),
                           "; ".join(msgs) or f"all {samples} samples generic")


# ---------------------------------------------------------------------------
# Orbit dimension
# ---------------------------------------------------------------------------

def infinitesimal_action(sigma):
    """Rows: the m^2 + n^2 generators of gl(E) + gl(T) applied to sigma.

    Each row is the flattened variation in lexicographic pair coordinates.
    """
    m, n = sigma.m, sigma.n
    C = sigma.comp
    rows = []
    for a in range(m):
        for b in range(m):
            X = np.zeros((m, m))
            X[a, b] = 1.0
            d = np.einsum("xy,ijyz->ijxz", X, C) - np.einsum("ijxy,yz->ijxz", C, X)
            rows.append(np.array([d[i, j] for i, j in sym_pairs(n)]).ravel())
    for k in range(n):
        for l in range(n):
            F = np.zeros((n, n))
            F[k, l] = 1.0
            d = np.einsum("ip,pjab->ijab", F, C) + np.einsum("jq,iqab->ijab", F, C)
            rows.append(np.array([d[i, j] for i, j in sym_pairs(n)]).ravel())
    return np.array(rows)


def orbit_rank(sigma, rtol=1e-10):
    s = np.linalg.svd(infinitesimal_action(sigma), compute_uv=False)
    return int(np.sum(s > rtol * s[0]))


def symbol_codimension(m, n):
    """Codimension of a regular orbit in the symbol space."""
    return m * m * (n + 2) * (n - 1) // 2 - n * n + 1


def extended_codimension(m, n):
    """Codimension of a regular orbit in the extended symbol space (with subsymbol)."""
    return symbol_codimension(m, n) + m * m
