"""Deciding equivalence of two symbols.

Two symbols lie in one GL(E) x GL(T) orbit exactly when their R-families are
simultaneously conjugate and the conjugator, together with the matching of
eigenframes, carries one symbol onto the other. The decision below produces
an explicit pair (X, B) for positive answers and checks it directly.
"""
from dataclasses import dataclass, field
from itertools import permutations, product

import numpy as np

from .errors import NotRegular, ShapeMismatch, SingularBasis
from .invariants import (DEFAULT_WORD_LENGTH, Fingerprint, RFamily, fingerprint,
                         regularity_report, symbol_pipeline)
from .tensors import DEFAULT_TOL, SymbolTensor, pair_count, sym_pairs

NULL_RTOL = 1e-7
GRAY_RTOL = 1e-4
CERT_TOL = 1e-8
MAX_DRAWS = 16
TRANSFORM_GRAY = 1e-2
# Singular lambda-form systems sit at rounding level (<= 1e-14 relative);
# regular ones stay above ~1e-10, so the cut goes in between.
BASIS_RTOL = 1e-13

EQUIVALENT = "equivalent"
INEQUIVALENT = "inequivalent"
INCONCLUSIVE = "inconclusive"


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------

def reconstruct_symbol(rs, dq, frame, tol=BASIS_RTOL):
    """Recover sigma from its R-family, the quadrics and the eigenframe.

    The pairings with the forms lambda_l determine sigma when those forms
    span S^2 T*. In the eigenframe this is a Vandermonde system in the
    products lam_i lam_j, which is solved after rescaling the nodes.
    Accuracy degrades like (machine epsilon) / (relative smallest singular
    value of that system), which is small near the non-cyclic locus.
    """
    R = rs.R if isinstance(rs, RFamily) else np.asarray(rs)
    lam = frame.lam
    n = len(lam)
    P = pair_count(n)
    if R.shape[0] != P:
        raise ShapeMismatch(f"need {P} R-matrices, got {R.shape[0]}")
    pairs = sym_pairs(n)
    g2e = frame.estar.T @ dq.g2 @ frame.estar
    mu = np.array([lam[i] * lam[j] for i, j in pairs])
    coef = np.array([(1.0 if i == j else 2.0) * g2e[i, j] for i, j in pairs])
    mmax = max(np.abs(mu).max(), np.finfo(float).tiny)
    V = (mu / mmax)[None, :] ** np.arange(P)[:, None]
    scale = np.abs(coef).max()
    if scale == 0:
        raise SingularBasis("g2 vanishes on the eigenframe", diagnostic=0.0)
    system = V * (coef / scale)[None, :]
    s = np.linalg.svd(system, compute_uv=False)
    rel = s[-1] / s[0] if s[0] > 0 else 0.0
    if rel < tol:
        raise SingularBasis(f"lambda forms span rank {int(np.sum(s > tol * s[0]))} of {P}",
                            diagnostic=float(rel))
    rhs = R.astype(complex) / (scale * mmax ** np.arange(P))[:, None, None]
    y = np.linalg.solve(system, rhs.reshape(P, -1)).reshape(P, *R.shape[1:])
    comp = np.zeros((n, n) + R.shape[1:], dtype=complex)
    for p, (i, j) in enumerate(pairs):
        comp[i, j] = y[p]
        comp[j, i] = y[p]
    E = frame.edual
    out = np.einsum("ai,bj,ijxy->abxy", E, E, comp)
    return SymbolTensor(out.real)


# ---------------------------------------------------------------------------
# Fingerprint comparison
# ---------------------------------------------------------------------------

def fingerprint_deviation(f1, f2):
    """Worst relative deviation between two fingerprints over shared words."""
    if not isinstance(f1, Fingerprint) or not isinstance(f2, Fingerprint):
        raise TypeError("expected Fingerprint objects")
    if f1.meta != f2.meta or f1.words != f2.words:
        raise ShapeMismatch("fingerprints were built with different word sets")
    a, b = f1.values, f2.values
    denom = np.maximum.reduce([np.abs(a), np.abs(b), f1.scales, f2.scales])
    denom = np.where(denom > 0, denom, 1.0)
    return float((np.abs(a - b) / denom).max())


def trace_separation(f1, f2, rtol=1e-7):
    return "equal" if fingerprint_deviation(f1, f2) <= rtol else "distinct"


# ---------------------------------------------------------------------------
# Simultaneous conjugacy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjugacyCertificate:
    """Outcome of a simultaneous conjugacy test.

    For an ``equivalent`` verdict ``X`` is invertible with
    ``X R_l = R'_l X`` up to ``residual`` (relative to ||X|| ||R_l||).
    """

    verdict: str
    X: np.ndarray = None
    residual: float = float("nan")
    null_dim: int = 0
    singular_values: np.ndarray = field(default=None, repr=False)


def _relative_residual(X, R1, R2):
    nx = np.linalg.norm(X)
    worst = 0.0
    for a, b in zip(R1, R2):
        denom = nx * max(np.linalg.norm(a), np.linalg.norm(b))
        if denom > 0:
            worst = max(worst, np.linalg.norm(X @ a - b @ X) / denom)
    return float(worst)


def simultaneous_conjugacy(rs1, rs2, tol=DEFAULT_TOL, seed=0, null_rtol=NULL_RTOL,
                           gray_rtol=GRAY_RTOL, draws=MAX_DRAWS):
    R1 = rs1.R if isinstance(rs1, RFamily) else np.asarray(rs1, dtype=float)
    R2 = rs2.R if isinstance(rs2, RFamily) else np.asarray(rs2, dtype=float)
    if R1.shape != R2.shape:
        raise ShapeMismatch(f"families have shapes {R1.shape} and {R2.shape}")
    m = R1.shape[1]
    I = np.eye(m)
    blocks = []
    for a, b in zip(R1, R2):
        w = max(np.linalg.norm(a), np.linalg.norm(b))
        if w > 0:
            # row-major vec: vec(X a) = (I kron a^T) vec X, vec(b X) = (b kron I) vec X
            blocks.append((np.kron(I, a.T) - np.kron(b, I)) / w)
    if not blocks:
        return ConjugacyCertificate(EQUIVALENT, I, 0.0, m * m)
    K = np.vstack(blocks)
    _, s, Vt = np.linalg.svd(K)
    smax = s[0] if s[0] > 0 else 1.0
    rel = s / smax
    null = Vt[rel <= null_rtol]
    if len(null) == 0:
        verdict = INCONCLUSIVE if rel[-1] <= gray_rtol else INEQUIVALENT
        return ConjugacyCertificate(verdict, None, float(rel[-1]), 0, s)
    rng = np.random.default_rng(seed)
    best = None
    for k in range(draws):
        coeffs = np.ones(1) if len(null) == 1 else rng.normal(size=len(null))
        X = (coeffs @ null).reshape(m, m)
        X = X / np.linalg.norm(X)
        sv = np.linalg.svd(X, compute_uv=False)
        if sv[-1] / sv[0] > tol:
            best = X
            break
        if len(null) == 1:
            break
    if best is None:
        return ConjugacyCertificate(INEQUIVALENT, None, float(rel[-1]), len(null), s)
    if np.trace(best) < 0:
        best = -best
    res = _relative_residual(best, R1, R2)
    verdict = EQUIVALENT if res <= null_rtol else INCONCLUSIVE
    return ConjugacyCertificate(verdict, best, res, len(null), s)


# ---------------------------------------------------------------------------
# Symbol equivalence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolEquivalence:
    verdict: str
    A: np.ndarray = None
    B: np.ndarray = None
    fingerprint_deviation: float = float("nan")
    transform_residual: float = float("nan")
    certificate: ConjugacyCertificate = None
    reason: str = ""


def _candidate_frames(lam1, lam2, norms1, norms2, match_tol):
    n = len(lam1)
    scale = max(np.abs(lam1).max(), np.abs(lam2).max(), 1.0)
    for perm in permutations(range(n)):
        if np.abs(lam1 - lam2[list(perm)]).max() > match_tol * scale:
            continue
        if any(norms1[i] != norms2[perm[i]] for i in range(n)):
            continue
        yield perm


def _frame_map(frame1, frame2, perm, signs):
    """B with B e1_i = s_i e2_perm(i) on the dual eigenvectors."""
    E1, E2 = frame1.edual, frame2.edual
    B = E2[:, list(perm)] @ np.diag(signs) @ np.linalg.inv(E1)
    return B


def symbols_equivalent(sigma1, sigma2, tol=DEFAULT_TOL, rtol=1e-7, seed=0,
                       require="regular", max_len=DEFAULT_WORD_LENGTH,
                       transform_rtol=1e-5):
    """Decide whether sigma2 = (A, B) . sigma1 for some (A, B) in GL(E) x GL(T).

    ``require`` selects the genericity gate: ``"regular"`` (all four
    conditions) or ``"admissible"`` (everything but cyclicity of g2, which
    is what the invariants themselves need). Positive verdicts always come
    with an explicit pair that is checked against the symbols.
    """
    if sigma1.comp.shape != sigma2.comp.shape:
        raise ShapeMismatch(f"symbols have shapes {sigma1.comp.shape} and {sigma2.comp.shape}")
    if require not in ("regular", "admissible"):
        raise ValueError("require must be 'regular' or 'admissible'")
    for label, sig in (("first", sigma1), ("second", sigma2)):
        rep = regularity_report(sig, tol)
        ok = rep.overall if require == "regular" else rep.admissible
        if not ok:
            failing = rep.failing()
            if require == "admissible" and "cond2" in failing and rep.cond2_spectral.passed:
                failing.remove("cond2")
            raise NotRegular(f"{label} symbol fails {', '.join(failing)}",
                             condition=failing[0] if failing else None, report=rep)
    dq1, fr1, rs1 = symbol_pipeline(sigma1, tol)
    dq2, fr2, rs2 = symbol_pipeline(sigma2, tol)
    dev = fingerprint_deviation(fingerprint(rs1, max_len=max_len), fingerprint(rs2, max_len=max_len))
    if dev > rtol:
        verdict = INCONCLUSIVE if dev <= GRAY_RTOL else INEQUIVALENT
        return SymbolEquivalence(verdict, fingerprint_deviation=dev,
                                 reason="trace words differ")
    cert = simultaneous_conjugacy(rs1, rs2, tol, seed)
    if cert.verdict != EQUIVALENT:
        return SymbolEquivalence(cert.verdict, fingerprint_deviation=dev, certificate=cert,
                                 reason="R-families are not simultaneously conjugate")
    X = cert.X
    target = np.linalg.norm(sigma2.comp)
    best = (np.inf, None)
    n = sigma1.n
    for perm in _candidate_frames(fr1.lam, fr2.lam, fr1.norms, fr2.norms, 1e-6):
        for signs in product((1.0, -1.0), repeat=n):
            B = _frame_map(fr1, fr2, perm, signs)
            if np.abs(B.imag).max() > 1e-6 * np.abs(B).max():
                continue
            B = B.real
            moved = sigma1.act(X, B)
            res = np.linalg.norm(moved.comp - sigma2.comp) / target
            if res < best[0]:
                best = (res, B)
    res, B = best
    if B is not None and res <= transform_rtol:
        return SymbolEquivalence(EQUIVALENT, X, B, dev, float(res), cert, "explicit pair found")
    verdict = INEQUIVALENT if cert.null_dim == 1 and res > TRANSFORM_GRAY else INCONCLUSIVE
    return SymbolEquivalence(verdict, fingerprint_deviation=dev, transform_residual=float(res),
                             certificate=cert, reason="no frame matching carries one symbol to the other")
