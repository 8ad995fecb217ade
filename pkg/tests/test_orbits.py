import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opequiv.errors import NotRegular, ShapeMismatch, SingularBasis
from opequiv.invariants import derived_quadrics, eigenframe, fingerprint, r_family, symbol_pipeline
from opequiv.orbits import (EQUIVALENT, INCONCLUSIVE, INEQUIVALENT, reconstruct_symbol,
                            simultaneous_conjugacy, symbols_equivalent, trace_separation)
from opequiv.samples import random_gl, random_symbol, scalar_symbol
from opequiv.tensors import SymbolTensor

from conftest import draw_pair, draw_symbol

seeds = st.integers(0, 2**32 - 1)


def relerr(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


# -- reconstruction ---------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(seeds)
def test_reconstruction_round_trip(seed):
    s = draw_symbol(3, 2, np.random.default_rng(seed))
    dq, fr, rs = symbol_pipeline(s)
    assert relerr(reconstruct_symbol(rs, dq, fr).comp, s.comp) <= 1e-7


def test_reconstruction_accuracy_tracks_conditioning():
    # With six lambda forms the system is often close to the non-cyclic
    # locus; the error then grows like eps / (relative singular value).
    rng = np.random.default_rng(14)
    errs = []
    for _ in range(40):
        s = draw_symbol(3, 3, rng)
        dq, fr, rs = symbol_pipeline(s)
        rel = 1.0
        try:
            reconstruct_symbol(rs, dq, fr, tol=1.0)
        except SingularBasis as exc:
            rel = exc.diagnostic
        err = relerr(reconstruct_symbol(rs, dq, fr).comp, s.comp)
        errs.append(err)
        assert err <= 1e-13 / rel
    assert np.median(errs) <= 1e-10


def test_reconstruction_scalar_symbol():
    s = scalar_symbol(np.array([[2.0, 0.3], [0.3, 1.0]]), 2)
    dq = derived_quadrics(s)
    fr = eigenframe(s, dq, strict=False)
    rs = r_family(s, dq, fr)
    with pytest.raises(SingularBasis):
        reconstruct_symbol(rs, dq, fr)


def test_reconstruction_impossible_for_two_dimensional_fibre():
    # g2 is diagonal in the eigenframe when m = 2, so the lambda forms span n < n(n+1)/2.
    s = draw_symbol(2, 2, np.random.default_rng(1), gate="admissible")
    dq, fr, rs = symbol_pipeline(s)
    with pytest.raises(SingularBasis):
        reconstruct_symbol(rs, dq, fr)


# -- trace separation ------------------------------------------------------------------

def fp(s, L=4):
    return fingerprint(symbol_pipeline(s)[2], max_len=L)


def test_trace_separation_self_and_action():
    rng = np.random.default_rng(2)
    s = draw_symbol(3, 2, rng)
    A, B = draw_pair(3, 2, rng)
    assert trace_separation(fp(s), fp(s)) == "equal"
    assert trace_separation(fp(s), fp(s.act(A, B))) == "equal"


def test_trace_separation_perturbation():
    rng = np.random.default_rng(3)
    hits = 0
    for _ in range(20):
        s = draw_symbol(3, 2, rng)
        d = random_symbol(3, 2, rng)
        t = s + d * (0.1 / np.linalg.norm(d.comp))
        hits += trace_separation(fp(s), fp(t)) == "distinct"
    assert hits == 20


def test_trace_separation_shape_mismatch():
    rng = np.random.default_rng(4)
    with pytest.raises(ShapeMismatch):
        trace_separation(fp(draw_symbol(3, 2, rng), 2), fp(draw_symbol(3, 2, rng), 3))


# -- simultaneous conjugacy ------------------------------------------------------------

def test_conjugacy_constructed():
    rng = np.random.default_rng(5)
    Rs = rng.normal(size=(3, 3, 3))
    X0 = random_gl(3, rng, 30)
    cert = simultaneous_conjugacy(Rs, X0 @ Rs @ np.linalg.inv(X0))
    assert cert.verdict == EQUIVALENT and cert.residual < 1e-8
    for a, b in zip(Rs, X0 @ Rs @ np.linalg.inv(X0)):
        assert np.linalg.norm(cert.X @ a - b @ cert.X) <= 1e-8 * np.linalg.norm(cert.X) * np.linalg.norm(a)
    assert abs(np.linalg.det(cert.X)) > 1e-9


def test_conjugacy_transposed_member():
    rng = np.random.default_rng(6)
    Rs = rng.normal(size=(3, 3, 3))
    other = Rs.copy()
    other[1] = other[1].T
    assert simultaneous_conjugacy(Rs, other).verdict == INEQUIVALENT
    words = [(0, 1, 2), (0, 2, 1)]
    assert not np.allclose(fingerprint(Rs, words=words).values, fingerprint(other, words=words).values)


def test_conjugacy_identity():
    Rs = np.random.default_rng(7).normal(size=(3, 2, 2))
    cert = simultaneous_conjugacy(Rs, Rs)
    assert cert.verdict == EQUIVALENT
    X = cert.X / cert.X[0, 0]
    assert np.allclose(X, np.eye(2), atol=1e-9)


# -- symbol equivalence -------------------------------------------------------------

@pytest.mark.parametrize("dims,gate", [((3, 2), "regular"), ((3, 3), "regular"),
                                       ((2, 2), "admissible"), ((2, 3), "admissible")])
def test_equivalent_under_action(dims, gate):
    rng = np.random.default_rng(8)
    for _ in range(10):
        s = draw_symbol(*dims, rng, gate)
        A, B = draw_pair(*dims, rng)
        t = s.act(A, B)
        res = symbols_equivalent(s, t, require=gate)
        assert res.verdict == EQUIVALENT
        # soundness: the returned pair carries s onto t
        assert relerr(s.act(res.A, res.B).comp, t.comp) <= 1e-6


@pytest.mark.parametrize("dims,gate", [((3, 2), "regular"), ((2, 2), "admissible")])
def test_independent_symbols_inequivalent(dims, gate):
    rng = np.random.default_rng(9)
    for _ in range(10):
        s, t = draw_symbol(*dims, rng, gate), draw_symbol(*dims, rng, gate)
        assert symbols_equivalent(s, t, require=gate).verdict == INEQUIVALENT


def test_symbol_equivalent_to_itself():
    s = draw_symbol(3, 2, np.random.default_rng(10))
    res = symbols_equivalent(s, s)
    assert res.verdict == EQUIVALENT
    assert np.allclose(res.A / res.A[0, 0], np.eye(3), atol=1e-6)


def test_non_regular_symbol_rejected():
    s = scalar_symbol(np.eye(2), 2)
    with pytest.raises(NotRegular) as info:
        symbols_equivalent(s, s)
    assert info.value.condition is not None
    with pytest.raises(NotRegular):
        symbols_equivalent(random_symbol(2, 2, 0), random_symbol(2, 2, 1))


def test_near_equivalent_pair_is_inconclusive():
    rng = np.random.default_rng(11)
    s = draw_symbol(3, 2, rng)
    A, B = draw_pair(3, 2, rng)
    t = s.act(A, B)
    d = random_symbol(3, 2, rng)
    t = t + d * (1e-8 * np.linalg.norm(t.comp) / np.linalg.norm(d.comp))
    assert symbols_equivalent(s, t).verdict == INCONCLUSIVE


def test_agreement_of_separation_and_conjugacy():
    rng = np.random.default_rng(12)
    for k in range(40):
        dims = [(3, 2), (3, 3)][k % 2]
        s = draw_symbol(*dims, rng)
        if k % 4 < 2:
            A, B = draw_pair(*dims, rng)
            t = s.act(A, B)
        else:
            t = draw_symbol(*dims, rng)
        sep = trace_separation(fp(s), fp(t))
        cert = simultaneous_conjugacy(symbol_pipeline(s)[2], symbol_pipeline(t)[2])
        assert (sep == "equal") == (cert.verdict == EQUIVALENT)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        symbols_equivalent(random_symbol(3, 2, 0), random_symbol(2, 2, 0))
    with pytest.raises(ShapeMismatch):
        simultaneous_conjugacy(np.zeros((3, 2, 2)), np.zeros((2, 2, 2)))


def test_symbol_tensor_unchanged():
    s = draw_symbol(3, 2, np.random.default_rng(13))
    before = s.comp.copy()
    symbols_equivalent(s, s)
    assert np.array_equal(before, s.comp)
    assert isinstance(s, SymbolTensor)
