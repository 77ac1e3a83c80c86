"""Basis enumeration and operator projection."""

import math

import numpy as np
import pytest

from cqed.params import (
    Emitter,
    SystemParams,
    UnsupportedLevelError,
    basis_dim,
    build_basis,
    project_operators,
)


def make_params(omegas, gammas, gs, omega_c=0.0, kappa_b=0.5, kappa_c=0.5):
    return SystemParams.in_kappa_units(
        omega_c, kappa_b, kappa_c, list(zip(omegas, gammas, gs)))


class TestBasis:
    def test_single_excitation_two_emitters(self):
        basis = build_basis(1, 2)
        assert basis.states == ((1, ()), (0, (0,)), (0, (1,)))

    def test_two_excitations_two_emitters(self):
        basis = build_basis(2, 2)
        assert basis.states == ((2, ()), (1, (0,)), (1, (1,)), (0, (0, 1)))

    def test_dimension_fifty(self):
        assert build_basis(2, 50).dim == 1276

    def test_dimension_formulas_up_to_64(self):
        for n in range(65):
            assert build_basis(0, n).dim == 1
            assert build_basis(1, n).dim == n + 1
            assert build_basis(2, n).dim == 1 + n + n * (n - 1) // 2
            assert basis_dim(2, n) == build_basis(2, n).dim

    def test_no_duplicates_and_conserved_excitation(self):
        for m in (0, 1, 2):
            basis = build_basis(m, 6)
            assert len(set(basis.states)) == basis.dim
            for n_ph, excited in basis.states:
                assert n_ph + len(excited) == m
                assert tuple(sorted(excited)) == excited

    def test_ordering_photon_major_then_lexicographic(self):
        states = build_basis(2, 4).states
        photons = [s[0] for s in states]
        assert photons == sorted(photons, reverse=True)
        pairs = [s[1] for s in states if s[0] == 0]
        assert pairs == sorted(pairs)

    def test_level_three_rejected(self):
        with pytest.raises(UnsupportedLevelError):
            build_basis(3, 2)


class TestProjection:
    def test_single_emitter_h1(self):
        p = make_params([0.3], [0.01], [2.0])
        blocks = project_operators(p)
        expected = np.array([[0.0 - 0.5j, 2.0], [2.0, 0.3 - 0.005j]])
        np.testing.assert_allclose(blocks.h1, expected, atol=1e-15)

    def test_exact_symmetry(self):
        rng = np.random.default_rng(0)
        for n in (1, 3, 6):
            p = make_params(rng.uniform(-1, 1, n), rng.uniform(0, 0.1, n),
                            rng.uniform(-1.5, 1.5, n))
            blocks = project_operators(p)
            assert np.abs(blocks.h1 - blocks.h1.T).max() == 0.0
            assert np.abs(blocks.h2 - blocks.h2.T).max() == 0.0

    def test_diagonal_loss_signs(self):
        p = make_params([0.3, -0.2], [0.02, 0.05], [0.5, 0.7])
        blocks = project_operators(p)
        assert np.all(np.diag(blocks.h1).imag <= 0)
        assert np.all(np.diag(blocks.h2).imag <= 0)

    def test_decoupled_blocks_are_diagonal(self):
        p = make_params([0.4, 0.9], [0.01, 0.01], [0.0, 0.0])
        blocks = project_operators(p)
        assert np.abs(blocks.h1 - np.diag(np.diag(blocks.h1))).max() == 0
        assert np.abs(blocks.h2 - np.diag(np.diag(blocks.h2))).max() == 0

    def test_ladder_factors(self):
        p = make_params([0.4, 0.9], [0.01, 0.01], [0.5, 0.5])
        blocks = project_operators(p)
        # <G| a |1 photon> = 1; two-photon ladder via a twice gives sqrt(2).
        assert blocks.a01[0, 0] == 1.0
        assert np.all(blocks.a01[0, 1:] == 0)
        aa = blocks.a01 @ blocks.a12
        assert aa[0, 0] == pytest.approx(math.sqrt(2.0), abs=1e-15)
        assert np.all(blocks.a12 >= 0)

    def test_photon_number_commutes_when_decoupled(self):
        # With g_i = 0 the blocks commute with the photon-number projector.
        rng = np.random.default_rng(1)
        p = make_params(rng.uniform(-1, 1, 3), rng.uniform(0, 0.1, 3),
                        [0.0, 0.0, 0.0])
        blocks = project_operators(p)
        n_ph = np.diag([s[0] for s in blocks.basis2.states]).astype(complex)
        comm = blocks.h2 @ n_ph - n_ph @ blocks.h2
        assert np.abs(comm).max() == 0.0


def full_space_effective_hamiltonian(params, n_fock):
    """Dense H_eff on the full (Fock x qubits) space, for brute force."""
    n = params.n_emitters
    dim_f = n_fock + 1
    destroy = np.diag(np.sqrt(np.arange(1, dim_f)), 1)
    sm = np.array([[0.0, 1.0], [0.0, 0.0]])

    def emb(op, slot):
        # slot -1 is the cavity; emitters are 0..n-1
        mats = [op if slot == -1 else np.eye(dim_f)]
        mats += [op if slot == j else np.eye(2) for j in range(n)]
        out = mats[0]
        for mat in mats[1:]:
            out = np.kron(out, mat)
        return out

    a = emb(destroy, -1)
    sigmas = [emb(sm, j) for j in range(n)]
    lam_c = params.omega_c - 0.5j * params.kappa
    h = lam_c * (a.conj().T @ a)
    for e, sig in zip(params.emitters, sigmas):
        h = h + (e.omega - 0.5j * e.gamma) * (sig.conj().T @ sig)
        h = h + e.g * (a @ sig.conj().T + a.conj().T @ sig)
    number = a.conj().T @ a
    for sig in sigmas:
        number = number + sig.conj().T @ sig
    return h, number, a


@pytest.mark.parametrize("n_emitters", [1, 2, 3])
def test_brute_force_full_space_equivalence(n_emitters):
    """h1/h2 equal the dense full-space H_eff projected on n = 1, 2."""
    rng = np.random.default_rng(10 + n_emitters)
    p = make_params(rng.uniform(-1, 1, n_emitters),
                    rng.uniform(0.0, 0.1, n_emitters),
                    rng.uniform(-1.0, 1.5, n_emitters))
    blocks = project_operators(p)
    h_full, number, a_full = full_space_effective_hamiltonian(p, n_fock=3)
    occ = np.round(np.diag(number).real).astype(int)

    # Map projected basis states to full-space indices.
    def full_index(n_ph, excited):
        idx = n_ph
        for j in range(n_emitters):
            idx = idx * 2 + (1 if j in excited else 0)
        return idx

    for m, h_block, basis in ((1, blocks.h1, blocks.basis1),
                              (2, blocks.h2, blocks.basis2)):
        sel = [full_index(*state) for state in basis.states]
        assert all(occ[k] == m for k in sel)
        np.testing.assert_allclose(h_block, h_full[np.ix_(sel, sel)],
                                   atol=1e-14)
    # Ladder block against the full-space annihilation operator.
    sel1 = [full_index(*s) for s in blocks.basis1.states]
    sel2 = [full_index(*s) for s in blocks.basis2.states]
    np.testing.assert_allclose(blocks.a12, a_full[np.ix_(sel1, sel2)],
                               atol=1e-14)


class TestUnits:
    def test_kappa_normalization(self):
        p = SystemParams.in_kappa_units(3.0, 1.0, 2.0, [(6.0, 0.3, 1.5)])
        assert p.kappa == pytest.approx(1.0)
        assert p.omega_c == pytest.approx(1.0)
        assert p.emitters[0].omega == pytest.approx(2.0)
        assert p.emitters[0].gamma == pytest.approx(0.1)
        assert p.kappa_scale == pytest.approx(3.0)

    def test_ghz_2pi_normalization(self):
        # kappa = 2 pi * 25 GHz; a 30 GHz detuning becomes 1.2 kappa.
        p = SystemParams.in_ghz_2pi(0.0, 12.5, 12.5, [(30.0, 0.3, 5.0)])
        assert p.kappa == pytest.approx(1.0)
        assert p.emitters[0].omega == pytest.approx(1.2)
        assert p.emitters[0].g == pytest.approx(0.2)
        assert p.unit_tag == "ghz_2pi"
        assert p.kappa_scale == pytest.approx(2 * math.pi * 25.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            SystemParams.in_kappa_units(0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            SystemParams.in_kappa_units(0.0, -0.1, 0.6)
        with pytest.raises(ValueError):
            Emitter(0.0, -0.5, 0.2)
        with pytest.raises(ValueError):
            Emitter(0.0, 0.5, float("nan"))

    def test_bare_cavity_allowed(self):
        p = SystemParams.in_kappa_units(0.0, 0.5, 0.5)
        assert p.n_emitters == 0

    def test_hashable_for_caching(self):
        p1 = make_params([0.1], [0.01], [0.3])
        p2 = make_params([0.1], [0.01], [0.3])
        assert p1 == p2 and hash(p1) == hash(p2)
