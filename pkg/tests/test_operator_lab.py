import dataclasses
import math

import numpy as np
import pytest

from conftest import poly
from hypocrit.criterion import H0_semi_numeric
from hypocrit.errors import DomainError, InputError, NumericError
from hypocrit.operator_lab import (Grid1D, build_operators, nonlinear_eigs, schrodinger_eigen, semiclassical_fit,
                                   trace_Dk, traces_on_grid)
from hypocrit.symbol import make_spec


@pytest.fixture(scope="module")
def harmonic():
    return make_spec(poly(1, {(2,): 1.0}))


@pytest.fixture(scope="module")
def ops_small(xx1):
    return build_operators(xx1, 0.1, Grid1D(6.0, 50))


def test_grid():
    g = Grid1D(1.0, 3)
    assert g.spacing == 0.5
    np.testing.assert_allclose(g.points, [-0.5, 0.0, 0.5])
    with pytest.raises(InputError):
        Grid1D(1.0, 2)


def test_operator_invariants(harmonic):
    ops = build_operators(harmonic, 0.1, Grid1D(8.0, 400))
    assert ops.L_eigs[0] >= 1 - 1e-3
    np.testing.assert_allclose(ops.A @ ops.L, np.eye(400), atol=1e-10)
    np.testing.assert_allclose(ops.Ahalf @ ops.Ahalf, ops.A, atol=1e-10 * np.abs(ops.A).max())
    for M in (ops.A, ops.Ahalf, ops.B):
        assert np.abs(M - M.T).max() <= 1e-12 * np.abs(M).max()
    assert np.linalg.eigvalsh(ops.Ahalf).min() > 0
    N = ops.N
    np.testing.assert_array_equal(ops.D[:N, N:], ops.Ahalf)
    np.testing.assert_array_equal(ops.D[N:, :N], -ops.Ahalf)
    np.testing.assert_array_equal(ops.D[N:, N:], 0.0)


def test_block_identity_for_D_squared(ops_small):
    o = ops_small
    N = o.N
    D2 = o.D @ o.D
    scale = np.abs(D2).max()
    np.testing.assert_allclose(D2[:N, :N], 4 * o.B @ o.B - o.A, atol=1e-10 * scale)
    np.testing.assert_allclose(D2[:N, N:], 2 * o.B @ o.Ahalf, atol=1e-10 * scale)
    np.testing.assert_allclose(D2[N:, :N], -2 * o.Ahalf @ o.B, atol=1e-10 * scale)
    np.testing.assert_allclose(D2[N:, N:], -o.A, atol=1e-10 * scale)
    assert trace_Dk(o, 2) == pytest.approx(4 * np.trace(o.B @ o.B) - 2 * np.trace(o.A), rel=1e-10)


def test_odd_traces_vanish_without_B(ops_small):
    o = ops_small
    D = o.D.copy()
    D[:o.N, :o.N] = 0.0
    o0 = dataclasses.replace(o, B=np.zeros_like(o.B), D=D)
    for k in (3, 5, 7):
        assert trace_Dk(o0, k) == 0.0


def test_trace_matches_eigenvalue_sum(ops_small):
    mu = np.linalg.eigvals(ops_small.D)
    for k in (2, 3, 4, 5):
        tr = trace_Dk(ops_small, k)
        assert isinstance(tr, float)
        assert tr == pytest.approx(np.sum(mu**k).real, rel=1e-8)
    with pytest.raises(InputError):
        trace_Dk(ops_small, 1)


def test_h_too_large(harmonic):
    # the constant part cancels P_m + 1 at the origin once weighted by h^{2/3}
    weak = make_spec(poly(1, {(2,): 1.0, (0,): -(0.1 ** (-2 / 3))}))
    with pytest.raises(InputError, match="h too large"):
        build_operators(weak, 0.1, Grid1D(4.0, 200))


def test_n2_not_supported(disk):
    with pytest.raises(DomainError):
        build_operators(disk, 0.1)


def test_fit_recovers_synthetic_expansion(xx1):
    hs = np.geomspace(0.02, 0.2, 8)
    coef = [-0.86, 0.3, -1.2, 2.0, 0.5]
    scaled = sum(c * hs ** (j / 3) for j, c in enumerate(coef))
    traces = scaled / (2 * np.pi * hs)
    ex = semiclassical_fit(xx1, 3, hs, jmax=4, traces=traces)
    np.testing.assert_allclose([t.H for t in ex.terms], coef, rtol=1e-6, atol=1e-8)
    assert ex.residual < 1e-12
    assert set(ex.subfits) == {"dropSmallest", "dropLargest"}
    assert ex.H0_stability < 1e-6
    assert np.all(np.diff(ex.h_grid) < 0)


def test_fit_halves_used_when_determined(xx1):
    hs = np.geomspace(0.02, 0.2, 8)
    traces = (1.0 + hs**2) / (2 * np.pi * hs)
    ex = semiclassical_fit(xx1, 3, hs, exponents=[0, 2], traces=traces)
    assert set(ex.subfits) == {"upperHalf", "lowerHalf"}
    assert ex.H0 == pytest.approx(1.0)


def test_fit_errors(xx1):
    with pytest.raises(InputError):
        semiclassical_fit(xx1, 3, [0.1, 0.2, 0.3], jmax=4, traces=[1, 1, 1])
    hs = np.linspace(0.1, 0.1001, 12)
    with pytest.raises(NumericError):
        semiclassical_fit(xx1, 3, hs, jmax=6, traces=np.ones(12))


def test_fit_resolved_grid_matches_semi_numeric(xx1):
    """With spacing fine enough for h in [0.1, 0.2], the lab and the symbol route agree."""
    hs = np.geomspace(0.1, 0.2, 4)
    ex = semiclassical_fit(xx1, 3, hs, Grid1D(4.0, 1599), exponents=[0, 2])
    assert ex.H0 == pytest.approx(H0_semi_numeric(xx1, 3).value, rel=0.05)


def test_parity_resolved_grid(quartic1):
    hs = np.geomspace(0.1, 0.2, 4)
    scaled = 2 * np.pi * hs * traces_on_grid(quartic1, 3, hs, Grid1D(3.0, 1199))
    # leading term vanishes: the scaled trace decays as h decreases
    assert np.all(np.abs(scaled[:-1]) < np.abs(scaled[1:]))
    ex = semiclassical_fit(quartic1, 3, hs, Grid1D(3.0, 1199), exponents=[0, 2], traces=scaled / (2 * np.pi * hs))
    # zero within the fit's own sub-grid stability, and small next to the data
    assert abs(ex.H0) <= 3 * ex.H0_stability
    assert abs(ex.H0) <= 0.1 * abs(scaled).max()


def test_nonlinear_eigs_small(ops_small):
    pairs = nonlinear_eigs(ops_small, tol=1e-8)
    assert pairs and all(abs(p.mu) > 1e-6 for p in pairs)
    assert [p.residual_u for p in pairs] == sorted(p.residual_u for p in pairs)
    mus = np.array([p.mu for p in pairs])
    for p in pairs:
        assert np.min(np.abs(mus - np.conj(p.mu))) <= 1e-10 * np.abs(mus).max()
        assert p.lambda_prime == pytest.approx(1 / p.mu)
        np.testing.assert_allclose(p.v, ops_small.Ahalf @ p.u)
        if p.accepted:
            assert p.residual_u <= 1e-8
            # rel_v <= lambda_max(L) rel_u up to rounding
            assert p.residual_v <= p.residual_bound


def test_schrodinger_harmonic():
    W = poly(1, {(1,): 1.0})
    assert schrodinger_eigen(W) == pytest.approx(1.0, abs=1e-6)
    assert schrodinger_eigen(W, index=1) == pytest.approx(3.0, abs=1e-5)
    assert schrodinger_eigen(W, Grid1D(20.0, 4001)) == pytest.approx(schrodinger_eigen(W), abs=1e-8)
    plain = schrodinger_eigen(W, extrapolate=False)
    assert 1e-7 < abs(plain - 1.0) < 1e-4
    with pytest.raises(InputError):
        schrodinger_eigen(poly(1, {(0,): 2.0}))
