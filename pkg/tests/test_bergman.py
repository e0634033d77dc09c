import functools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergvar.bergman import (
    RadialBump,
    Weight,
    bergman_project,
    bergman_space,
    default_probes,
    gram_matrix,
    kernel_eval,
    kf_functional,
    orthonormal_basis,
    reproduce_residual,
)
from bergvar.errors import ConfigError, DegreeTooHigh, RankDeficient
from bergvar.family import AffineMotion, RadialFamily, TrivialMotion
from bergvar.geometry import build_reference_quadrature, pushforward_area

DISC = TrivialMotion.identity()
ELLIPSE = AffineMotion([0, 0.6])  # a(0.5) = 0.3


@pytest.fixture(scope="module")
def disc40():
    return bergman_space(DISC, 0.0, 40)


@pytest.fixture(scope="module")
def ellipse20():
    return bergman_space(ELLIPSE, 0.5, 20)


def test_weight_reality():
    with pytest.raises(ConfigError):
        Weight({(1, 0, 0, 1): 1.0})
    w = Weight({(1, 0, 0, 1): 0.5j, (0, 1, 1, 0): -0.5j, (0, 0, 1, 1): 1.0})
    assert np.isrealobj(w.value(0.3, np.array([0.1 + 0.2j])))
    assert Weight.from_list(w.to_list()).terms == w.terms


def test_weight_derivatives_against_finite_differences():
    w = Weight.from_list([[0, 0, 1, 1, 1.0], [1, 0, 0, 1, 0.1, 0.05], [0, 1, 1, 0, 0.1, -0.05], [1, 1, 0, 0, 0.125]])
    t, mu, h = 0.2 - 0.1j, 0.3 + 0.4j, 1e-4
    phi = lambda s, m: w.value(s, m)  # noqa: E731
    lap_t = (phi(t + h, mu) + phi(t - h, mu) + phi(t + 1j * h, mu) + phi(t - 1j * h, mu) - 4 * phi(t, mu)) / (4 * h**2)
    lap_mu = (phi(t, mu + h) + phi(t, mu - h) + phi(t, mu + 1j * h) + phi(t, mu - 1j * h) - 4 * phi(t, mu)) / (4 * h**2)
    assert w.phi_ttbar(t, mu) == pytest.approx(lap_t, abs=1e-6)
    assert w.phi_mumubar(t, mu) == pytest.approx(lap_mu, abs=1e-6)


def test_gram_unit_disc():
    q = pushforward_area(DISC, 0.0, build_reference_quadrature())
    G = gram_matrix(q, None, 20)
    j = np.arange(21)
    assert np.allclose(np.diag(G), 2 * np.pi / (j + 1), rtol=1e-12)
    assert np.max(np.abs(G - np.diag(np.diag(G)))) < 1e-13


@pytest.mark.parametrize("r", [0.5, 0.8])
def test_gram_scaled_disc(r):
    sp = bergman_space(RadialFamily.constant(r), 0.0, 12)
    j = np.arange(13)
    assert np.allclose(np.diag(sp.gram), 2 * np.pi * r ** (2 * j + 2) / (j + 1), rtol=1e-12)


def test_gram_ellipse_is_not_diagonal(ellipse20):
    a = 0.3
    G = ellipse20.gram
    # reflection symmetry of the ellipse kills odd offsets; 0-2 coupling is the first one
    assert abs(G[0, 1]) < 1e-14
    assert G[0, 2] == pytest.approx(2 * np.pi * a * (1 - a**2), rel=1e-12)
    assert abs(G[0, 2]) > 0.1


def test_degree_budget():
    q = pushforward_area(DISC, 0.0, build_reference_quadrature(8, 96))
    gram_matrix(q, None, 14)
    with pytest.raises(DegreeTooHigh):
        gram_matrix(q, None, 15)
    q2 = pushforward_area(DISC, 0.0, build_reference_quadrature(24, 16))
    with pytest.raises(DegreeTooHigh):
        gram_matrix(q2, None, 8)


def test_orthonormal_diagonal():
    d = np.array([4.0, 1.0, 0.25])
    B, diag = orthonormal_basis(np.diag(d))
    assert np.allclose(B, np.diag(d**-0.5))
    assert diag.truncated == 0


def test_orthonormal_unit_disc(disc40):
    j = np.arange(41)
    assert np.allclose(np.diag(disc40.basis), np.sqrt((j + 1) / (2 * np.pi)), rtol=1e-12)
    assert np.max(np.abs(disc40.basis - np.diag(np.diag(disc40.basis)))) < 1e-12


def test_orthonormal_rank_deficient():
    with pytest.raises(RankDeficient):
        orthonormal_basis(np.zeros((3, 3)))


def test_near_singular_truncates():
    sp = bergman_space(RadialFamily.constant(1e-3), 0.0, 20)
    assert sp.diagnostics.truncated > 0
    assert sp.modes < 21


def test_basis_orthonormal_and_inverse(ellipse20):
    B, G = ellipse20.basis, ellipse20.gram
    assert np.max(np.abs(B.conj().T @ G @ B - np.eye(B.shape[1]))) < 1e-8
    assert np.max(np.abs(ellipse20.kernel_matrix @ G - np.eye(21))) < 1e-6
    U = ellipse20.basis_values(ellipse20.quad.nodes)
    pair = 2 * (U.conj().T * ellipse20.quad.weights) @ U
    assert np.max(np.abs(pair - np.eye(21))) < 1e-8


def test_disc_kernel_origin(disc40):
    assert kernel_eval(disc40, 0, 0) == pytest.approx(1 / (2 * np.pi), abs=1e-14)
    sp = bergman_space(RadialFamily.constant(0.6), 0.0, 10)
    assert sp.kernel(0, 0) == pytest.approx(1 / (2 * np.pi * 0.36), rel=1e-12)


def test_disc_kernel_closed_form(disc40):
    r = 0.7 * np.array([0, 0.3, 0.6, 1.0])
    th = np.array([0, 1.1, 2.5, 4.0])
    P = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    K = disc40.kernel_grid(P, P)
    exact = 1 / (2 * np.pi * (1 - P[:, None] * np.conj(P[None, :])) ** 2)
    assert np.max(np.abs(K - exact)) < 1e-8


def test_classical_is_twice_form(ellipse20):
    P = default_probes(ellipse20)
    assert np.allclose(ellipse20.classical_kernel(P, P), 2 * ellipse20.kernel(P, P), rtol=0, atol=1e-15)


@pytest.mark.parametrize(
    "coeffs,degree,tol",
    [([1.0], 20, 1e-10), ([0, 0, 0, 0, 0, 1.0], 20, 1e-8), ([0.5, -1j, 0.2, 0, 0.3], 12, 1e-8)],
)
def test_reproducing_unit_disc(coeffs, degree, tol):
    sp = bergman_space(DISC, 0.0, degree)
    assert reproduce_residual(sp, coeffs).function_residual < tol


def test_reproducing_ellipse(ellipse20):
    res = reproduce_residual(ellipse20, [0, 0, 0, 0, 0, 1.0])
    assert res.function_residual < 1e-8
    assert res.kernel_residual < 1e-6
    with pytest.raises(ConfigError):
        reproduce_residual(ellipse20, np.ones(30))


def test_projection_examples():
    sp = bergman_space(DISC, 0.0, 10)
    z = sp.quad.nodes
    assert np.max(np.abs(bergman_project(sp, np.conj(z)))) < 1e-13
    one = bergman_project(sp, np.ones_like(z))
    assert np.allclose(one, np.eye(11)[0], atol=1e-13)
    mix = bergman_project(sp, z**2 + np.conj(z))
    assert np.allclose(mix, np.eye(11)[2], atol=1e-13)


@pytest.mark.parametrize("r", [1.0, 0.7])
def test_kf_constant_function(r):
    sp = bergman_space(RadialFamily.constant(r), 0.0, 10)
    assert kf_functional(sp, np.ones(sp.quad.nodes.size)) == pytest.approx(np.pi * r**2, rel=1e-12)


def test_kf_antiholomorphic():
    sp = bergman_space(DISC, 0.0, 10)
    assert kf_functional(sp, np.conj(sp.quad.nodes)) < 1e-26


@pytest.mark.parametrize("r", [1.0, 0.8])
def test_kf_bump(r):
    bump = RadialBump(0.1, 4)
    sp = bergman_space(RadialFamily.constant(r), 0.0, 20)
    sq = bump.support_quadrature()
    assert sq.integrate(bump(sq.nodes)) == pytest.approx(bump.mass, rel=1e-12)
    assert kf_functional(sp, bump(sq.nodes), sq) == pytest.approx(bump.mass**2 / (np.pi * r**2), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 0.65), st.floats(0, 2 * np.pi)), min_size=2, max_size=8),
)
def test_kernel_hermitian_and_psd(points):
    sp = _ellipse_space()
    P = np.array([r * np.exp(1j * th) for r, th in points])
    K = sp.kernel_grid(P, P)
    assert np.max(np.abs(K - K.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(K)))
    assert np.min(np.linalg.eigvalsh(0.5 * (K + K.conj().T))) >= -1e-8
    assert np.all(np.real(np.diag(K)) > 0)


@functools.lru_cache(maxsize=1)
def _ellipse_space():
    return bergman_space(ELLIPSE, 0.5, 20)


def test_mobius_transformation_rule(disc40):
    a = 0.3 + 0.2j
    F = lambda z: (z - a) / (1 - np.conj(a) * z)  # noqa: E731
    dF = lambda z: (1 - abs(a) ** 2) / (1 - np.conj(a) * z) ** 2  # noqa: E731
    P = 0.6 * np.array([0, 0.5, 1.0, 0.8j, -0.7 + 0.3j, 0.4 - 0.9j])
    lhs = disc40.kernel_grid(P, P)
    rhs = disc40.kernel_grid(F(P), F(P)) * dF(P)[:, None] * np.conj(dF(P))[None, :]
    assert np.max(np.abs(lhs - rhs)) < 1e-6


def test_mobius_motion_fiber_transformation(disc40):
    # g(t, .) maps the unit disc onto the fiber, so it transports the kernel
    fam, t = TrivialMotion.mobius(0.3), 0.4
    sp = bergman_space(fam, t, 40)
    c = 0.3 * t
    P = np.array([0, 0.3, -0.5j, 0.4 + 0.4j, -0.6])
    g = fam.fiber_map(t, P)
    dg = 1 / (1 - c * P) ** 2
    lhs = disc40.kernel_grid(P, P)
    rhs = sp.kernel_grid(g, g) * dg[:, None] * np.conj(dg)[None, :]
    assert np.max(np.abs(lhs - rhs)) < 1e-6


def test_diagonal_monotone_under_shrinking():
    vals = [bergman_space(RadialFamily.constant(r), 0.0, 8).kernel(0, 0).real for r in (0.5, 0.7, 0.9, 1.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_weighted_space_gaussian():
    # phi = |mu|^2 on the unit disc: G_00 = 2 * pi * (1 - e^{-1})
    sp = bergman_space(DISC, 0.0, 10, Weight({(0, 0, 1, 1): 1.0}))
    assert sp.gram[0, 0].real == pytest.approx(2 * np.pi * (1 - np.exp(-1)), rel=1e-12)
    assert np.max(np.abs(sp.basis.conj().T @ sp.gram @ sp.basis - np.eye(11))) < 1e-10
