"""Fast path for N identical emitters via the collective-spin reduction.

When every emitter shares the same frequency, linewidth and coupling, the
emitter Hilbert space decomposes into collective-spin sectors and the
effective Hamiltonian blocks collapse dramatically:

* 1 excitation: a bright 2x2 problem (photon vs symmetric spin wave) plus
  N - 1 exactly degenerate subradiant states at ``omega_e - i gamma/2``;
* 2 excitations: a bright 3x3 problem (the only states with two-photon
  overlap), N - 1 copies of a dark 2x2 pair problem, and N(N-3)/2 deeply
  subradiant states at ``2 omega_e - i gamma``.

All transport observables follow from the bright blocks alone, so spectra
cost O(1) at any N; this module also provides the large-N asymptotic
eigenvalue series and the closed-form N -> infinity limits of T and g2,
plus a cross-validation harness against the general path.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import scattering
from .eigen import EigenSystem, diag_complex_symmetric
from .params import TWO_PI, Emitter, SystemParams
from .scattering import DipContribution, G2Components, G2Trace, SolvedSystem, Spectrum

#: Eigenvalue agreement tolerance for the fast-path/full-path cross check.
EQUIVALENCE_TOL = 1e-9
#: Full-path cross checks are capped here; beyond this the general solve is
#: no longer cheap enough to call "trivially exact".
EQUIVALENCE_MAX_N = 8


class FastpathMismatchError(RuntimeError):
    """Dicke-path spectrum disagrees with the general path."""


@dataclass(frozen=True)
class IdenticalParams:
    """N identical emitters, stored in units where kappa = 1."""

    omega_c: float
    kappa_b: float
    kappa_c: float
    omega_e: float
    gamma: float
    g: float
    n: int
    kappa_scale: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one emitter")
        if self.gamma < 0 or self.kappa_b < 0 or self.kappa_c < 0:
            raise ValueError("decay rates must be nonnegative")

    @classmethod
    def in_kappa_units(cls, omega_c, kappa_b, kappa_c, omega_e, gamma, g, n):
        kappa = kappa_b + kappa_c
        if kappa <= 0:
            raise ValueError("total cavity decay kappa must be positive")
        return cls(omega_c / kappa, kappa_b / kappa, kappa_c / kappa,
                   omega_e / kappa, gamma / kappa, g / kappa, int(n),
                   kappa_scale=kappa)

    @classmethod
    def in_ghz_2pi(cls, omega_c, kappa_b, kappa_c, omega_e, gamma, g, n):
        p = cls.in_kappa_units(omega_c, kappa_b, kappa_c, omega_e, gamma, g, n)
        return cls(p.omega_c, p.kappa_b, p.kappa_c, p.omega_e, p.gamma, p.g,
                   p.n, kappa_scale=p.kappa_scale * TWO_PI)

    @property
    def kappa(self) -> float:
        return self.kappa_b + self.kappa_c

    @property
    def lambda_c(self) -> complex:
        return self.omega_c - 0.5j * self.kappa

    @property
    def lambda_e(self) -> complex:
        return self.omega_e - 0.5j * self.gamma

    def system_params(self) -> SystemParams:
        """Equivalent general :class:`SystemParams` (for the full path)."""
        return SystemParams(
            omega_c=self.omega_c, kappa_b=self.kappa_b, kappa_c=self.kappa_c,
            emitters=tuple(Emitter(self.omega_e, self.gamma, self.g)
                           for _ in range(self.n)),
            kappa_scale=self.kappa_scale)


@dataclass(frozen=True)
class BrightEigen1:
    """Single-excitation eigendata: bright 2x2 plus subradiant manifold.

    ``coeffs`` columns are the (A, B) eigenvectors of the photon/spin-wave
    problem, transpose-normalized (A^2 + B^2 = 1 in complex arithmetic).
    """

    lambdas: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    subradiant_multiplicity: int = 0
    subradiant_lambda: complex = 0j


@dataclass(frozen=True)
class BrightEigen2:
    """Two-excitation eigendata: bright 3x3, dark pairs, deep subradiant.

    Only the three bright states carry two-photon overlap; at N = 1 the
    third channel decouples (its coupling ``g sqrt(2(N-1))`` vanishes) and
    at N = 2 the dark-pair block is diagonal with only the photon-side
    state physically present.
    """

    lambdas3: np.ndarray = field(repr=False)
    coeffs3: np.ndarray = field(repr=False)
    pair_lambdas: np.ndarray = field(repr=False)
    pair_multiplicity: int = 0
    deep_subradiant_multiplicity: int = 0
    deep_subradiant_lambda: complex = 0j


def bright1_matrix(p: IdenticalParams) -> np.ndarray:
    g_n = p.g * math.sqrt(p.n)
    return np.array([[p.lambda_c, g_n], [g_n, p.lambda_e]])


def bright2_matrix(p: IdenticalParams) -> np.ndarray:
    a = p.g * math.sqrt(2 * p.n)
    b = p.g * math.sqrt(2 * max(p.n - 1, 0))
    return np.array([
        [2 * p.lambda_c, a, 0.0],
        [a, p.lambda_c + p.lambda_e, b],
        [0.0, b, 2 * p.lambda_e],
    ])


def pair_matrix(p: IdenticalParams) -> np.ndarray:
    # Raising the lowest state of a spin-(N-2)/2 sector gives sqrt(2l) with
    # 2l = N - 2, times the sqrt(1) photon factor.
    b = p.g * math.sqrt(max(p.n - 2, 0))
    return np.array([[p.lambda_c + p.lambda_e, b], [b, 2 * p.lambda_e]])


def bright_single_eigen(p: IdenticalParams) -> BrightEigen1:
    """Diagonalize the single-excitation bright block."""
    es = diag_complex_symmetric(bright1_matrix(p), level=1, passive=True)
    return BrightEigen1(lambdas=es.lambdas, coeffs=es.u,
                        subradiant_multiplicity=p.n - 1,
                        subradiant_lambda=p.lambda_e)


def bright_two_eigen(p: IdenticalParams) -> BrightEigen2:
    """Diagonalize the two-excitation bright and dark-pair blocks."""
    es = diag_complex_symmetric(bright2_matrix(p), level=2, passive=True)
    pair = diag_complex_symmetric(pair_matrix(p), level=2, passive=True)
    return BrightEigen2(
        lambdas3=es.lambdas, coeffs3=es.u,
        pair_lambdas=pair.lambdas,
        pair_multiplicity=max(p.n - 1, 0),
        deep_subradiant_multiplicity=max(p.n * (p.n - 3) // 2, 0),
        deep_subradiant_lambda=2 * p.lambda_e)


def eigenvalue_multisets(p: IdenticalParams):
    """Exact eigenvalue multisets of both excitation blocks, from the fast path.

    Handles the small-N degeneracies of the collective reduction: at N = 1
    the decoupled third bright channel is dropped, and at N = 2 only the
    photon-side dark-pair state exists (its partner basis state would need
    two distinct excited emitters outside the symmetric sector).
    """
    b1 = bright_single_eigen(p)
    level1 = list(b1.lambdas) + [b1.subradiant_lambda] * b1.subradiant_multiplicity

    b2 = bright_two_eigen(p)
    if p.n == 1:
        # Third channel decoupled: drop the exact 2*lambda_e eigenvalue.
        drop = int(np.argmin(np.abs(b2.lambdas3 - b2.deep_subradiant_lambda)))
        level2 = [lam for k, lam in enumerate(b2.lambdas3) if k != drop]
    elif p.n == 2:
        level2 = list(b2.lambdas3) + [p.lambda_c + p.lambda_e]
    else:
        level2 = list(b2.lambdas3)
        for lam in b2.pair_lambdas:
            level2 += [lam] * b2.pair_multiplicity
        level2 += [b2.deep_subradiant_lambda] * b2.deep_subradiant_multiplicity
    return np.array(level1), np.array(level2)


@dataclass(frozen=True)
class FastpathReport:
    max_dev_level1: float
    max_dev_level2: float
    subradiant_count_level1: int
    deep_subradiant_count_level2: int


def fastpath_equivalence(p: IdenticalParams,
                         tol: float = EQUIVALENCE_TOL) -> FastpathReport:
    """Assert the Dicke-path eigenvalues match the general-path spectrum.

    Both multisets are sorted by (real, imaginary) part and compared
    elementwise; subradiant multiplicities are counted in the full spectrum.

    Raises:
        FastpathMismatchError: On any eigenvalue deviation beyond ``tol``.
        ValueError: For N beyond :data:`EQUIVALENCE_MAX_N`.
    """
    if p.n > EQUIVALENCE_MAX_N:
        raise ValueError(f"equivalence check supports N <= {EQUIVALENCE_MAX_N}")
    fast1, fast2 = eigenvalue_multisets(p)
    sol = scattering.solve_system(p.system_params())
    devs = []
    for fast, full, level in ((fast1, sol.es1.lambdas, 1),
                              (fast2, sol.es2.lambdas, 2)):
        if fast.size != full.size:
            raise FastpathMismatchError(
                f"level {level}: fast path predicts {fast.size} eigenvalues, "
                f"full path has {full.size}")
        # Greedy nearest matching: positional pairing after sorting is not
        # reliable when exact degeneracies jitter the sort order.
        pool = list(full)
        worst = 0.0
        for lam in fast:
            k = int(np.argmin([abs(lam - x) for x in pool]))
            dist = abs(lam - pool.pop(k))
            worst = max(worst, dist)
            if dist > tol:
                raise FastpathMismatchError(
                    f"level {level}: no full-path eigenvalue within {tol:g} "
                    f"of fast-path {lam:.12g} (closest at |diff| = {dist:.3e})")
        devs.append(worst)
    n_sub1 = int(np.sum(np.abs(sol.es1.lambdas - p.lambda_e) <= 10 * tol))
    n_deep2 = int(np.sum(np.abs(sol.es2.lambdas - 2 * p.lambda_e) <= 10 * tol))
    return FastpathReport(max_dev_level1=devs[0], max_dev_level2=devs[1],
                          subradiant_count_level1=n_sub1,
                          deep_subradiant_count_level2=n_deep2)


# ---------------------------------------------------------------------------
# Transport observables through the reduced (bright) blocks.

#: a restricted to the bright sector: |2,g> -> sqrt(2) |1,g>, |1,s> -> |0,s>.
_A12_RED = np.array([[math.sqrt(2.0), 0.0, 0.0], [0.0, 1.0, 0.0]])


@functools.lru_cache(maxsize=32)
def solve_identical(p: IdenticalParams) -> SolvedSystem:
    """Reduced eigensystems and transition amplitudes (cached per params).

    The returned bundle plugs into the same spectral formulas as the
    general path; dark states carry exactly zero weight and are omitted.
    """
    es1 = diag_complex_symmetric(bright1_matrix(p), level=1, passive=True)
    es2 = diag_complex_symmetric(bright2_matrix(p), level=2, passive=True)
    s = es1.u[0].copy()
    t = math.sqrt(2.0) * es2.u[0]
    pmat = es1.u.T @ (_A12_RED @ es2.u)
    return SolvedSystem(blocks=None, es1=es1, es2=es2, s=s, t=t, p=pmat)


def transmission_identical(p: IdenticalParams, omega_l):
    """T(omega_l) at any N, through the bright 2x2 block."""
    amp = scattering._amplitude(solve_identical(p), omega_l)
    return p.kappa_b * p.kappa_c * np.abs(amp) ** 2


def g2_zero_identical(p: IdenticalParams, omega_l: float):
    """g2(0; omega_l) and the three bright emission amplitudes Gamma."""
    return scattering._g2_zero_from(solve_identical(p),
                                    p.kappa_b * p.kappa_c, omega_l)


def g2_zero_grid_identical(p: IdenticalParams, omega_grid) -> np.ndarray:
    return scattering._g2_grid_from(solve_identical(p),
                                    p.kappa_b * p.kappa_c,
                                    np.asarray(omega_grid, dtype=float))


def g2_components_identical(p: IdenticalParams, omega_l: float) -> G2Components:
    return scattering._components_from(solve_identical(p),
                                       p.kappa_b * p.kappa_c, omega_l)


def g2_tau_identical(p: IdenticalParams, omega_l: float, taus) -> G2Trace:
    taus = np.asarray(taus, dtype=float)
    comp = g2_components_identical(p, omega_l)
    return G2Trace(taus=taus, g2=comp.evaluate(taus), omega_l=float(omega_l))


def compute_spectrum_identical(p: IdenticalParams, omega_grid) -> Spectrum:
    omega_grid = np.asarray(omega_grid, dtype=float)
    return Spectrum(omega_grid=omega_grid,
                    t=transmission_identical(p, omega_grid),
                    g2zero=g2_zero_grid_identical(p, omega_grid))


def bright_gamma_contributions(p: IdenticalParams,
                               omega_l: float) -> list[DipContribution]:
    """Gamma of the three bright two-excitation eigenstates, sorted by Re(lambda)."""
    _, contributions = g2_zero_identical(p, omega_l)
    return contributions


# ---------------------------------------------------------------------------
# Large-N asymptotics and closed-form limits.


@dataclass(frozen=True)
class AsymptoticEigen:
    """Perturbative large-N eigenvalues evaluated at a given finite N.

    The bright eigenvalues have the form ``centroid + sqrt(N) * mu`` (one
    excitation) and ``centroid2 + sqrt(N) * nu`` (two excitations) with the
    mu/nu series in inverse powers of N controlled by the complex detuning
    ``big_delta = omega_e - omega_c - i (gamma - kappa) / 2``. ``coeffs3``
    holds the as-printed asymptotic (A, B, C) triples of the bright
    two-excitation states, one column per nu in the order (+, -, 0).
    """

    big_delta: complex
    mu_plus: complex
    mu_minus: complex
    nu_plus: complex
    nu_minus: complex
    nu_zero: complex
    lambda1: np.ndarray = field(repr=False)
    lambda2: np.ndarray = field(repr=False)
    coeffs3: np.ndarray = field(repr=False)


def asymptotic_eigen(p: IdenticalParams, order: int = 4) -> AsymptoticEigen:
    """Evaluate the large-N eigenvalue series at ``p.n``.

    Args:
        order: Highest retained power of ``N**-0.5``; 4 keeps every printed
            term (1/N, 1/N**1.5 and 1/N**2 corrections).
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    n = p.n
    g = p.g
    if g <= 0:
        raise ValueError("asymptotics need g > 0")
    delta = p.omega_e - p.omega_c - 0.5j * (p.gamma - p.kappa)

    def term(power, value):
        return value if order >= power else 0.0

    mu_plus = (g + term(2, delta**2 / (8 * g * n))
               + term(4, -delta**4 / (128 * g**3 * n**2)))
    mu_minus = -mu_plus
    d2 = delta**2 - 2 * g**2
    nu_plus = (2 * g + term(2, d2 / (4 * g * n))
               + term(3, -delta / (4 * n * math.sqrt(n)))
               + term(4, d2**2 / (256 * g**3 * n**2)))
    nu_minus = (-2 * g + term(2, -d2 / (4 * g * n))
                + term(3, -delta / (4 * n * math.sqrt(n)))
                + term(4, -d2**2 / (256 * g**3 * n**2)))
    nu_zero = term(3, delta / (2 * n * math.sqrt(n)))

    centroid1 = 0.5 * (p.omega_e + p.omega_c) - 0.25j * (p.kappa + p.gamma)
    centroid2 = p.omega_e + p.omega_c - 0.5j * (p.kappa + p.gamma)
    rt_n = math.sqrt(n)
    lambda1 = centroid1 + rt_n * np.array([mu_plus, mu_minus])
    nus = np.array([nu_plus, nu_minus, nu_zero])
    lambda2 = centroid2 + rt_n * nus

    coeffs3 = np.empty((3, 3), dtype=complex)
    for k, nu in enumerate(nus):
        denom = np.sqrt((2 * nu**2 * n - delta**2) ** 2
                        + 4 * g**2 * n * (delta**2 + 2 * n * nu**2)
                        - 2 * g**2 * (delta + nu * math.sqrt(2 * n)) ** 2)
        if denom == 0:
            # The printed coefficient expressions are 0/0-indeterminate for
            # the central branch exactly on resonance.
            coeffs3[:, k] = np.nan
            continue
        coeffs3[:, k] = [
            g * (2 * n * nu - delta * math.sqrt(2 * n)) / denom,
            (2 * n * nu**2 - delta**2) / denom,
            g * (2 * n * nu + delta * math.sqrt(2 * n)) / denom,
        ]
    return AsymptoticEigen(big_delta=delta, mu_plus=mu_plus, mu_minus=mu_minus,
                           nu_plus=nu_plus, nu_minus=nu_minus, nu_zero=nu_zero,
                           lambda1=lambda1, lambda2=lambda2, coeffs3=coeffs3)


def limit_transmission(p: IdenticalParams, omega_l):
    """The N -> infinity limit of ``N**2 * T(omega_l)``.

    The exact 2x2 resolvent gives ``T -> kappa_b kappa_c |omega_l -
    lambda_e|^2 / (g^4 N^2)`` at fixed drive frequency: transmission decays
    as 1/N^2 because the polariton splitting runs away as sqrt(N).
    """
    if p.g <= 0:
        raise ValueError("limit requires g > 0")
    w = np.asarray(omega_l, dtype=float)
    val = (p.kappa_b * p.kappa_c / p.g**2) * np.abs((w - p.lambda_e) / p.g) ** 2
    return float(val) if w.ndim == 0 else val


def limit_g2(p: IdenticalParams, omega_l):
    """The N -> infinity limit of g2(0; omega_l).

    ``|1 + g^2 / ((omega_l - lambda_e)(2 omega_l - lambda_e - lambda_c))|^2``:
    resonant systems are bunched at every frequency, while detuning opens an
    interference antibunching window; both poles sit below the real axis, so
    real drive frequencies are always safe.
    """
    w = np.asarray(omega_l, dtype=float)
    corr = p.g**2 / ((w - p.lambda_e) * (2.0 * w - p.lambda_e - p.lambda_c))
    val = np.abs(1.0 + corr) ** 2
    return float(val) if w.ndim == 0 else val


def collective_spin_multiplicity(n_emitters: int, i: int) -> int:
    """Number of spin-(N/2 - i) sectors in the collective decomposition.

    Exact integer evaluation of ``(N + 1 - 2 i) / (N + 1) * C(N + 1, i)``.
    """
    if not 0 <= i <= n_emitters // 2:
        raise ValueError(f"sector index {i} out of range for N={n_emitters}")
    num = (n_emitters + 1 - 2 * i) * math.comb(n_emitters + 1, i)
    q, r = divmod(num, n_emitters + 1)
    if r:
        raise AssertionError("multiplicity formula did not divide evenly")
    return q
