import numpy as np
import pytest
from hypothesis import given, strategies as st

from qfsim import linops as lo
from qfsim.lindblad import make_decay_generator, superop_from_generator
from qfsim.squeeze import (SqueezeError, SqueezeParams, complex_structure, covariance_matrix,
                           effective_coupling, ito_coeffs_from_quadratures, make_squeeze,
                           quadrature_coeffs, quadrature_parts, squeezed_ito_coeffs)

R6 = np.sqrt(6.0)
fock_n = st.floats(0, 50)
phases = st.floats(0, 2 * np.pi)


def test_vacuum():
    p = make_squeeze(0, 0)
    assert p.s == 1
    np.testing.assert_array_equal(covariance_matrix(p), np.eye(2))
    np.testing.assert_array_equal(complex_structure(p), [[0, -1], [1, 0]])
    q = quadrature_coeffs(p)
    assert (q.mu, q.nu) == (0, 1)
    assert squeezed_ito_coeffs(p) == {"AdAd": 0, "AdA": 0, "AAd": 1, "AA": 0}


def test_squeezed_example_parameters():
    p = make_squeeze(2, R6)
    assert p.s == pytest.approx(5 + 2 * R6, abs=1e-14)
    np.testing.assert_allclose(covariance_matrix(p), np.diag([5 + 2 * R6, 5 - 2 * R6]), atol=1e-14)
    q = quadrature_coeffs(p)
    assert q.mu == pytest.approx(np.sqrt(2), abs=1e-14)
    assert q.nu == pytest.approx(np.sqrt(3), abs=1e-14)
    table = squeezed_ito_coeffs(p)
    assert table["AAd"] == pytest.approx(3)
    assert table["AA"] == pytest.approx(R6)
    assert ito_coeffs_from_quadratures(q)["AAd"] == pytest.approx(3, abs=1e-13)
    assert ito_coeffs_from_quadratures(q)["AA"] == pytest.approx(R6, abs=1e-13)


def test_default_c_is_real_root():
    assert make_squeeze(4).c == pytest.approx(np.sqrt(20))


@pytest.mark.parametrize("n,c", [(1, 2), (0, 0.1), (2, 2.0)])
def test_fock_condition_enforced(n, c):
    with pytest.raises(SqueezeError):
        make_squeeze(n, c)


def test_negative_n_rejected():
    with pytest.raises(SqueezeError):
        make_squeeze(-0.5, 0)


def test_complex_structure_detects_non_fock_parameters():
    bad = SqueezeParams(n=1.0, c=2.0)
    J = complex_structure(bad)
    assert np.max(np.abs(J @ J + np.eye(2))) > 1e-3


@given(fock_n, phases)
def test_fock_valid_algebra(n, phase):
    p = make_squeeze(n, np.sqrt(n * (n + 1)) * np.exp(1j * phase))
    Q = covariance_matrix(p)
    np.testing.assert_allclose(Q, Q.T)
    assert np.all(np.linalg.eigvalsh(Q) > 0)
    assert np.linalg.det(Q) == pytest.approx(1, abs=1e-10 * max(1, Q.max() ** 2))
    J = complex_structure(p)
    np.testing.assert_allclose(J @ J, -np.eye(2), atol=1e-10 * max(1, np.abs(Q).max() ** 2))
    q = quadrature_coeffs(p)
    assert abs(abs(q.nu) ** 2 - abs(q.mu) ** 2 - 1) <= 1e-10 * max(1, n)


@given(st.floats(0, 20), st.floats(0, 25), phases)
def test_determinant_one_iff_fock(n, r, phase):
    p = SqueezeParams(n=n, c=r * np.exp(1j * phase))
    fock = abs(n * (n + 1) - r**2) <= 1e-10
    det_one = abs(np.linalg.det(covariance_matrix(p)) - 1) <= 4e-10 + 1e-12 * (2 * n + 1) ** 2
    if fock:
        assert det_one
    if abs(n * (n + 1) - r**2) > 1e-6:
        assert not det_one


def test_table_from_coefficients_random_real_c():
    rng = np.random.default_rng(20)
    for n in rng.uniform(0, 30, size=20):
        p = make_squeeze(n, np.sqrt(n * (n + 1)))
        ref = squeezed_ito_coeffs(p)
        got = ito_coeffs_from_quadratures(quadrature_coeffs(p))
        for key in ref:
            assert abs(got[key] - ref[key]) <= 1e-10 * max(1, n)


@given(fock_n, phases)
def test_table_from_coefficients_complex_c(n, phase):
    p = make_squeeze(n, np.sqrt(n * (n + 1)) * np.exp(1j * phase))
    ref = squeezed_ito_coeffs(p)
    got = ito_coeffs_from_quadratures(quadrature_coeffs(p))
    for key in ref:
        assert abs(got[key] - ref[key]) <= 1e-10 * max(1, n)


def test_effective_coupling_vacuum():
    gen = make_decay_generator(0.6, 0.8)
    eff = effective_coupling(make_squeeze(0, 0), gen)
    np.testing.assert_allclose(eff.V_nc, gen.couplings[gen.side], atol=1e-15)
    np.testing.assert_allclose(superop_from_generator(eff.generator), superop_from_generator(gen),
                               atol=1e-15)


def test_effective_coupling_example():
    ks = 0.8
    eff = effective_coupling(make_squeeze(2, R6), make_decay_generator(0.6, ks))
    np.testing.assert_allclose(eff.V_nc, ks * np.array([[0, -np.sqrt(2)], [np.sqrt(3), 0]]),
                               atol=1e-14)
    np.testing.assert_allclose(eff.W_R @ eff.W_I + eff.W_I @ eff.W_R, 0, atol=1e-14)


@given(fock_n, st.floats(0.05, 1))
def test_effective_coupling_scaling_real_c(n, ks):
    p = make_squeeze(n)
    gen = make_decay_generator(np.sqrt(1 - ks**2), ks)
    eff = effective_coupling(p, gen)
    VR, VI = quadrature_parts(gen.couplings[gen.side])
    for W in (eff.W_R, eff.W_I):
        np.testing.assert_allclose(W, W.conj().T, atol=1e-12)
    np.testing.assert_allclose(eff.V_nc, eff.W_R + 1j * eff.W_I, atol=1e-12)
    np.testing.assert_allclose(eff.W_R, VR / np.sqrt(p.s), atol=1e-12)
    np.testing.assert_allclose(eff.W_I, np.sqrt(p.s) * VI, atol=1e-10 * np.sqrt(p.s))
    assert np.linalg.norm(eff.W_I, 2) == pytest.approx(np.sqrt(p.s) * np.linalg.norm(VI, 2))
    assert np.linalg.norm(eff.W_R, 2) == pytest.approx(np.linalg.norm(VR, 2) / np.sqrt(p.s))
    assert len(eff.generator.couplings) == 2


def test_quadrature_parts_of_lowering():
    VR, VI = quadrature_parts(lo.LOWERING)
    np.testing.assert_allclose(VR, lo.SIGMA_X / 2)
    np.testing.assert_allclose(VI, -lo.SIGMA_Y / 2)
