"""System parameters and excitation-subspace operator construction.

A single cavity mode (photon annihilation operator ``a``) couples to ``N``
two-level emitters. The cavity leaks into an input and an output waveguide
at rates ``kappa_b`` and ``kappa_c``, each emitter into its own loss channel
at rate ``gamma_i``. Dissipation is folded into a non-Hermitian effective
Hamiltonian whose diagonal carries ``-i*kappa/2`` per photon and
``-i*gamma_i/2`` per emitter excitation; with real couplings ``g_i`` the
matrix is complex symmetric.

The effective Hamiltonian conserves the total excitation number, so it is
block diagonal over excitation subspaces. Only the 0-, 1- and 2-excitation
blocks are needed for single- and two-photon transport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

#: Accepted values for the unit tag recording the source unit system.
UNIT_TAGS = ("kappa_units", "ghz_2pi")


class UnsupportedLevelError(ValueError):
    """Raised for excitation levels beyond two-photon transport."""


@dataclass(frozen=True)
class Emitter:
    """One two-level emitter: transition frequency, decay rate, coupling."""

    omega: float
    gamma: float
    g: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.omega, self.gamma, self.g)):
            raise ValueError("emitter parameters must be finite")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class SystemParams:
    """Cavity and emitter parameters, stored in units where kappa = 1.

    Use the :meth:`in_kappa_units` or :meth:`in_ghz_2pi` factories rather
    than the raw constructor; they normalize all rates and frequencies by
    the total cavity decay ``kappa = kappa_b + kappa_c`` so that downstream
    eigenproblems are well scaled. ``kappa_scale`` remembers the original
    ``kappa`` in source (angular) units and ``unit_tag`` the source system.

    Attributes:
        omega_c: Cavity resonance frequency.
        kappa_b: Decay rate into the input waveguide.
        kappa_c: Decay rate into the output waveguide.
        emitters: Per-emitter parameters; may be empty (bare cavity).
    """

    omega_c: float
    kappa_b: float
    kappa_c: float
    emitters: tuple[Emitter, ...] = ()
    unit_tag: str = "kappa_units"
    kappa_scale: float = 1.0

    def __post_init__(self):
        if self.unit_tag not in UNIT_TAGS:
            raise ValueError(f"unknown unit_tag {self.unit_tag!r}")
        if self.kappa_b < 0 or self.kappa_c < 0:
            raise ValueError("waveguide decay rates must be nonnegative")
        if self.kappa_b + self.kappa_c <= 0:
            raise ValueError("total cavity decay kappa must be positive")

    @classmethod
    def in_kappa_units(cls, omega_c, kappa_b, kappa_c, emitters=()):
        """Build params from values in any consistent angular unit system.

        All frequencies and rates are divided by ``kappa = kappa_b + kappa_c``.
        ``emitters`` is an iterable of ``(omega, gamma, g)`` triples or
        :class:`Emitter` instances.
        """
        return cls._normalized(omega_c, kappa_b, kappa_c, emitters,
                               scale=1.0, unit_tag="kappa_units")

    @classmethod
    def in_ghz_2pi(cls, omega_c, kappa_b, kappa_c, emitters=()):
        """Build params from plain-GHz values, multiplied by 2*pi first."""
        return cls._normalized(omega_c, kappa_b, kappa_c, emitters,
                               scale=TWO_PI, unit_tag="ghz_2pi")

    @classmethod
    def _normalized(cls, omega_c, kappa_b, kappa_c, emitters, scale, unit_tag):
        emitters = tuple(e if isinstance(e, Emitter) else Emitter(*e)
                         for e in emitters)
        kappa = scale * (kappa_b + kappa_c)
        if kappa <= 0:
            raise ValueError("total cavity decay kappa must be positive")
        s = scale / kappa
        return cls(
            omega_c=omega_c * s,
            kappa_b=kappa_b * s,
            kappa_c=kappa_c * s,
            emitters=tuple(Emitter(e.omega * s, e.gamma * s, e.g * s)
                           for e in emitters),
            unit_tag=unit_tag,
            kappa_scale=kappa,
        )

    @property
    def kappa(self) -> float:
        return self.kappa_b + self.kappa_c

    @property
    def n_emitters(self) -> int:
        return len(self.emitters)

    def omega_e(self) -> np.ndarray:
        return np.array([e.omega for e in self.emitters], dtype=float)

    def gamma_e(self) -> np.ndarray:
        return np.array([e.gamma for e in self.emitters], dtype=float)

    def g_e(self) -> np.ndarray:
        return np.array([e.g for e in self.emitters], dtype=float)


def basis_dim(m: int, n_emitters: int) -> int:
    """Dimension of the m-excitation subspace for ``n_emitters`` emitters."""
    if m < 0:
        raise ValueError("excitation level must be nonnegative")
    return sum(math.comb(n_emitters, m - n) for n in range(m + 1))


@dataclass(frozen=True)
class ExcitationBasis:
    """Canonically ordered basis of an m-excitation subspace.

    Each state is ``(n_photons, excited)`` where ``excited`` is a sorted
    tuple of 0-based emitter indices and ``n_photons + len(excited) = m``.
    States are ordered by descending photon number, then lexicographically
    by the excited set, which makes the photon ladder blocks band
    structured and the ordering reproducible across runs and platforms.
    """

    m: int
    n_emitters: int
    states: tuple[tuple[int, tuple[int, ...]], ...]

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self) -> dict:
        """State -> position lookup table."""
        return {s: i for i, s in enumerate(self.states)}


def build_basis(m: int, n_emitters: int) -> ExcitationBasis:
    """Enumerate the m-excitation basis for ``n_emitters`` emitters.

    Args:
        m: Total excitation number; only 0, 1 and 2 are supported since
            the transport formulas use at most two photons.
        n_emitters: Number of two-level emitters (>= 0).

    Returns:
        The canonically ordered :class:`ExcitationBasis`.

    Raises:
        UnsupportedLevelError: For ``m > 2``.
    """
    if n_emitters < 0:
        raise ValueError("emitter count must be nonnegative")
    if m < 0:
        raise ValueError("excitation level must be nonnegative")
    if m > 2:
        raise UnsupportedLevelError(
            f"excitation level {m} not supported: single- and two-photon "
            "transport needs levels 0..2 only")
    states = []
    for n_ph in range(m, -1, -1):
        n_exc = m - n_ph
        for combo in _combinations(n_emitters, n_exc):
            states.append((n_ph, combo))
    return ExcitationBasis(m=m, n_emitters=n_emitters, states=tuple(states))


def _combinations(n: int, k: int):
    """Sorted k-subsets of range(n) in lexicographic order."""
    import itertools

    return itertools.combinations(range(n), k)


@dataclass(frozen=True)
class OperatorBlocks:
    """Effective-Hamiltonian and photon-ladder blocks on levels 0..2.

    ``h1`` and ``h2`` are the complex-symmetric effective Hamiltonian
    projections on the 1- and 2-excitation subspaces (symmetry holds
    exactly by construction). ``a01`` (1 x dim1) and ``a12`` (dim1 x dim2)
    are the projections of the photon annihilation operator; their entries
    are the real Fock factors ``sqrt(n_photons)``.
    """

    basis1: ExcitationBasis
    basis2: ExcitationBasis
    h1: np.ndarray = field(repr=False)
    h2: np.ndarray = field(repr=False)
    a01: np.ndarray = field(repr=False)
    a12: np.ndarray = field(repr=False)


def project_operators(params: SystemParams) -> OperatorBlocks:
    """Project the effective Hamiltonian and ladder operator onto levels 0..2.

    Diagonal entries collect ``omega_c - i*kappa/2`` per photon and
    ``omega_i - i*gamma_i/2`` per excited emitter; off-diagonals carry the
    couplings ``g_i`` times the Fock factor ``sqrt(n_photons)`` of the state
    losing a photon. Both triangle entries are assigned from the same value
    so ``h - h.T`` is exactly zero.
    """
    n = params.n_emitters
    basis1 = build_basis(1, n)
    basis2 = build_basis(2, n)
    lam_c = params.omega_c - 0.5j * params.kappa
    lam_e = np.array([e.omega - 0.5j * e.gamma for e in params.emitters])
    g = params.g_e()

    h1 = _project_h(basis1, lam_c, lam_e, g)
    h2 = _project_h(basis2, lam_c, lam_e, g)
    a01 = _project_a(build_basis(0, n), basis1)
    a12 = _project_a(basis1, basis2)
    return OperatorBlocks(basis1=basis1, basis2=basis2,
                          h1=h1, h2=h2, a01=a01, a12=a12)


def _project_h(basis: ExcitationBasis, lam_c, lam_e, g) -> np.ndarray:
    h = np.zeros((basis.dim, basis.dim), dtype=complex)
    idx = basis.index()
    for i, (n_ph, excited) in enumerate(basis.states):
        h[i, i] = n_ph * lam_c + sum(lam_e[k] for k in excited)
        if n_ph == 0:
            continue
        # Couple (n_ph, S) to (n_ph - 1, S + {k}); amplitude g_k * sqrt(n_ph).
        fock = math.sqrt(n_ph)
        for k in range(basis.n_emitters):
            if k in excited:
                continue
            j = idx[(n_ph - 1, tuple(sorted(excited + (k,))))]
            h[i, j] = h[j, i] = g[k] * fock
    return h


def _project_a(basis_lo: ExcitationBasis, basis_hi: ExcitationBasis) -> np.ndarray:
    a = np.zeros((basis_lo.dim, basis_hi.dim), dtype=float)
    idx_lo = basis_lo.index()
    for j, (n_ph, excited) in enumerate(basis_hi.states):
        if n_ph == 0:
            continue
        a[idx_lo[(n_ph - 1, excited)], j] = math.sqrt(n_ph)
    return a
