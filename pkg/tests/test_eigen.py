"""Complex-symmetric eigensolver contracts."""

import numpy as np
import pytest

from cqed.eigen import DefectiveMatrixError, diag_complex_symmetric
from cqed.params import SystemParams, project_operators


def random_complex_symmetric(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


def test_diagonal_input_is_trivial():
    h = np.diag([1.0 - 0.5j, 2.0 - 0.1j])
    es = diag_complex_symmetric(h, passive=True)
    np.testing.assert_allclose(es.lambdas, [1.0 - 0.5j, 2.0 - 0.1j])
    np.testing.assert_allclose(es.u, np.eye(2), atol=1e-14)


def test_single_emitter_closed_form():
    # omega_c = omega_e = 0, kappa = 1, gamma = 0.01, g = 2:
    # lambda_pm = -i (kappa + gamma) / 4 +- sqrt(g^2 - (kappa - gamma)^2 / 16)
    p = SystemParams.in_kappa_units(0.0, 0.5, 0.5, [(0.0, 0.01, 2.0)])
    es = diag_complex_symmetric(project_operators(p).h1, passive=True)
    root = np.sqrt(4.0 - 0.99**2 / 16.0)
    expected = np.array([-root - 0.2525j, root - 0.2525j])
    np.testing.assert_allclose(es.lambdas, expected, atol=1e-12)
    assert es.lambdas[1].real == pytest.approx(1.98463, abs=1e-5)


def test_subradiant_degeneracy_five_identical():
    p = SystemParams.in_kappa_units(0.0, 0.5, 0.5, [(0.0, 0.02, 0.7)] * 5)
    es = diag_complex_symmetric(project_operators(p).h1, passive=True)
    lam_e = 0.0 - 0.01j
    n_sub = np.sum(np.abs(es.lambdas - lam_e) < 1e-10)
    assert n_sub == 4


def test_sorting_convention():
    rng = np.random.default_rng(2)
    h = random_complex_symmetric(40, rng)
    es = diag_complex_symmetric(h)
    re = es.lambdas.real
    assert np.all(np.diff(re) >= -1e-12)


@pytest.mark.parametrize("n", [5, 40, 200, 2000])
def test_reconstruction_and_orthonormality(n):
    rng = np.random.default_rng(n)
    h = random_complex_symmetric(n, rng)
    es = diag_complex_symmetric(h)
    assert es.ortho_defect() < 1e-10
    residual = np.linalg.norm(es.reconstruct() - h) / np.linalg.norm(h)
    assert residual < 1e-9
    assert np.all(np.diff(es.lambdas.real) >= -1e-12)


def test_spectral_invariance_under_permutation():
    rng = np.random.default_rng(5)
    h = random_complex_symmetric(24, rng)
    perm = rng.permutation(24)
    es1 = diag_complex_symmetric(h)
    es2 = diag_complex_symmetric(h[np.ix_(perm, perm)])
    np.testing.assert_allclose(es1.lambdas, es2.lambdas, atol=1e-10)


def test_real_symmetric_agrees_with_hermitian_solver():
    rng = np.random.default_rng(6)
    a = rng.standard_normal((30, 30))
    h = 0.5 * (a + a.T)
    es = diag_complex_symmetric(h)
    expected = np.linalg.eigvalsh(h)
    np.testing.assert_allclose(np.sort(es.lambdas.real), expected, atol=1e-12)
    assert np.abs(es.lambdas.imag).max() < 1e-12


def test_exceptional_point_raises():
    # [[1, i], [i, -1]] has a double eigenvalue 0 with a single
    # self-orthogonal eigenvector (1, i): a textbook exceptional point.
    h = np.array([[1.0, 1j], [1j, -1.0]])
    with pytest.raises(DefectiveMatrixError):
        diag_complex_symmetric(h)


def test_near_exceptional_point_raises_or_solves():
    h = np.array([[1.0, 1j], [1j, -1.0]]) + np.diag([1e-13, -1e-13])
    try:
        es = diag_complex_symmetric(h)
    except DefectiveMatrixError:
        return
    assert es.ortho_defect() < 1e-10


def test_asymmetric_input_rejected():
    h = np.array([[1.0, 2.0], [2.1, 1.0]], dtype=complex)
    with pytest.raises(ValueError):
        diag_complex_symmetric(h)


def test_passivity_check():
    h = np.diag([1.0 + 0.5j])  # gain, not loss
    with pytest.raises(ValueError):
        diag_complex_symmetric(h, passive=True)
    diag_complex_symmetric(h, passive=False)


def test_exact_degenerate_manifolds_identical_emitters():
    """Giant exactly degenerate subspaces keep full precision."""
    for omega_e, g, n in [(0.8, 0.2, 24), (0.0, 2.0, 16)]:
        p = SystemParams.in_kappa_units(0.0, 0.5, 0.5,
                                        [(omega_e, 0.01, g)] * n)
        blocks = project_operators(p)
        es = diag_complex_symmetric(blocks.h2, level=2, passive=True)
        assert es.ortho_defect() < 1e-10
        residual = (np.linalg.norm(es.reconstruct() - blocks.h2)
                    / np.linalg.norm(blocks.h2))
        assert residual < 1e-9


def test_sign_convention_reproducible():
    rng = np.random.default_rng(9)
    h = random_complex_symmetric(15, rng)
    u1 = diag_complex_symmetric(h).u
    u2 = diag_complex_symmetric(h.copy()).u
    np.testing.assert_array_equal(u1, u2)
    for k in range(15):
        j = int(np.argmax(np.abs(u1[:, k])))
        assert u1[j, k].real > 0
