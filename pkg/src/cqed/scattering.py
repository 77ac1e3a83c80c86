"""Transport observables from the excitation-subspace eigensystems.

Everything here is built from three ingredients that depend only on the
system parameters and are cached per parameter set:

* the single-photon emission amplitudes ``s_j = <G| a |phi_j^(1)>_T``,
* the two-photon overlaps ``t_i = <G| a^2 |phi_i^(2)>_T``,
* the inter-level ladder matrix ``P[j, i] = <phi_j^(1)| a |phi_i^(2)>_T``,

where ``<.>_T`` is the transpose (bilinear) product. The transmissivity is

    T(w) = kappa_b * kappa_c * | sum_j s_j^2 / (lambda_j^(1) - w) |^2

and the equal-time two-photon correlation is ``g2(0; w) = |sum_i Gamma_i|^2``
with per-eigenstate emission amplitudes

    Gamma_i(w) = (kappa_b * kappa_c / T) * t_i / (lambda_i^(2) - 2 w)
                 * sum_j P[j, i] * s_j / (lambda_j^(1) - w).

The delayed correlation decomposes over single-excitation eigenstates into a
disconnected part (two independent single-photon events, surviving at large
delay) and a connected part (passing through the two-excitation manifold):

    g2(tau; w) = | sum_j [ gd_j + (gc_j - gd_j) exp(-i (lambda_j^(1) - w) tau) ] |^2

The weights are normalized here so that no further prefactor is needed:
``sum_j gd_j`` has unit modulus (hence g2 -> 1 at large delay) and
``sum_j gc_j = sum_i Gamma_i`` (hence the tau = 0 value equals g2(0; w)).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenSystem, diag_complex_symmetric
from .params import OperatorBlocks, SystemParams, project_operators

#: Transmissivities below this are treated as exact Fano zeros where g2
#: diverges physically; callers should sample adjacent frequencies.
T_FLOOR = 1e-14
#: Two-photon overlaps below this classify an eigenstate as dark
#: (subradiant overlaps are exactly zero up to roundoff).
BRIGHT_TOL = 1e-10


class TransmissionZeroError(RuntimeError):
    """g2 is requested at a transmission zero, where it diverges.

    Raised when ``T(omega_L) < T_FLOOR``; evaluate at a nearby frequency
    instead of exactly on the Fano node.
    """


@dataclass(frozen=True)
class Spectrum:
    """Frequency-swept transmissivity and equal-time correlation."""

    omega_grid: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    g2zero: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.omega_grid) <= 0):
            raise ValueError("omega grid must be strictly increasing")
        if np.any(self.t < 0) or np.any(self.g2zero < 0):
            raise ValueError("T and g2 must be nonnegative")


@dataclass(frozen=True)
class G2Trace:
    """Delayed two-photon correlation at a fixed drive frequency."""

    taus: np.ndarray = field(repr=False)
    g2: np.ndarray = field(repr=False)
    omega_l: float = 0.0


@dataclass(frozen=True)
class G2Components:
    """Per-eigenstate kernel weights of the delayed correlation.

    ``disconnected_weights`` reconstructs the factorized two-single-photon
    contribution, ``connected_weights`` the contribution routed through the
    two-excitation manifold; both are indexed by single-excitation
    eigenstate, already normalized as described in the module docstring.
    """

    disconnected_weights: np.ndarray = field(repr=False)
    connected_weights: np.ndarray = field(repr=False)
    lambdas1: np.ndarray = field(repr=False)
    omega_l: float

    def evaluate(self, taus: np.ndarray) -> np.ndarray:
        """g2(tau) for nonnegative delays."""
        taus = np.asarray(taus, dtype=float)
        osc = np.exp(-1j * np.outer(self.lambdas1 - self.omega_l, taus))
        amp = (self.disconnected_weights.sum()
               + (self.connected_weights - self.disconnected_weights) @ osc)
        return np.abs(amp) ** 2


@dataclass(frozen=True)
class DipContribution:
    """One two-excitation eigenstate's equal-time emission amplitude."""

    index: int
    gamma: complex
    magnitude: float
    phase: float


@dataclass(frozen=True)
class AnharmonicityReport:
    """Mismatch between doubled single- and bright two-excitation energies.

    ``delta_omega_12`` is the minimum of ``|Re(2 lambda_i^(1)) - Re(lambda_j^(2))|``
    over all single-excitation states i and all two-excitation states j with
    nonzero two-photon overlap; ``delta_omega_2`` is ``|Im(lambda_j^(2))|`` of
    the minimizing two-excitation state.
    """

    delta_omega_12: float
    delta_omega_2: float
    pair: tuple[int, int]


@dataclass(frozen=True)
class SolvedSystem:
    """Eigensystems and transition amplitudes, precomputed once per params."""

    blocks: OperatorBlocks = field(repr=False)
    es1: EigenSystem = field(repr=False)
    es2: EigenSystem = field(repr=False)
    s: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)


@functools.lru_cache(maxsize=8)
def solve_system(params: SystemParams) -> SolvedSystem:
    """Diagonalize both blocks and precompute transition amplitudes.

    Results are memoized (thread-safe lru cache), so frequency sweeps cost
    O(dim^2) per point after a single O(dim^3) solve.
    """
    blocks = project_operators(params)
    es1 = diag_complex_symmetric(blocks.h1, level=1, passive=True)
    es2 = diag_complex_symmetric(blocks.h2, level=2, passive=True)
    s = (blocks.a01 @ es1.u)[0]
    t = (blocks.a01 @ (blocks.a12 @ es2.u))[0]
    p = es1.u.T @ (blocks.a12 @ es2.u)
    return SolvedSystem(blocks=blocks, es1=es1, es2=es2, s=s, t=t, p=p)


def _amplitude(sol: SolvedSystem, omega_l) -> np.ndarray | complex:
    w = np.asarray(omega_l, dtype=float)
    amp = (sol.s[:, None] ** 2
           / (sol.es1.lambdas[:, None] - w.ravel()[None, :])).sum(axis=0)
    return complex(amp[0]) if w.ndim == 0 else amp.reshape(w.shape)


def single_photon_amplitude(params: SystemParams, omega_l) -> np.ndarray | complex:
    """The resolvent sum ``sum_j s_j^2 / (lambda_j^(1) - omega_l)``."""
    return _amplitude(solve_system(params), omega_l)


def transmission(params: SystemParams, omega_l):
    """Transmissivity T(omega_l); accepts a scalar or an array of frequencies."""
    amp = single_photon_amplitude(params, omega_l)
    return params.kappa_b * params.kappa_c * np.abs(amp) ** 2


def _gamma_terms(sol: SolvedSystem, kbkc: float, w: float):
    """Per-two-excitation-state amplitudes Gamma_i and the weight vector y."""
    tr_amp = (sol.s**2 / (sol.es1.lambdas - w)).sum()
    t_val = kbkc * abs(tr_amp) ** 2
    if t_val < T_FLOOR:
        raise TransmissionZeroError(
            f"T({w:g}) = {t_val:.3e} is below the {T_FLOOR:g} floor (Fano "
            "zero); g2 diverges there, evaluate at an adjacent frequency")
    y = sol.p.T @ (sol.s / (sol.es1.lambdas - w))
    gammas = (kbkc / t_val) * sol.t * y / (sol.es2.lambdas - 2.0 * w)
    return gammas, y, tr_amp, t_val


def _g2_zero_from(sol: SolvedSystem, kbkc: float, omega_l: float):
    gammas, _, _, _ = _gamma_terms(sol, kbkc, float(omega_l))
    value = float(np.abs(gammas.sum()) ** 2)
    contributions = [
        DipContribution(index=i, gamma=complex(gam),
                        magnitude=float(abs(gam)),
                        phase=float(np.angle(gam)))
        for i, gam in enumerate(gammas)
    ]
    return value, contributions


def g2_zero(params: SystemParams, omega_l: float):
    """Equal-time correlation g2(0; omega_l) with per-eigenstate contributions.

    Returns:
        ``(value, contributions)`` where ``value = |sum_i Gamma_i|^2`` and
        ``contributions`` lists one :class:`DipContribution` per
        two-excitation eigenstate (dark states carry zero amplitude).

    Raises:
        TransmissionZeroError: When ``T(omega_l)`` is below :data:`T_FLOOR`.
    """
    return _g2_zero_from(solve_system(params),
                         params.kappa_b * params.kappa_c, float(omega_l))


def _components_from(sol: SolvedSystem, kbkc: float,
                     omega_l: float) -> G2Components:
    w = float(omega_l)
    gammas, y, tr_amp, t_val = _gamma_terms(sol, kbkc, w)
    res1 = sol.s / (sol.es1.lambdas - w)
    disconnected = (kbkc / t_val) * tr_amp * sol.s * res1
    connected = (kbkc / t_val) * sol.s * (
        sol.p @ (y / (sol.es2.lambdas - 2.0 * w)))
    return G2Components(disconnected_weights=disconnected,
                        connected_weights=connected,
                        lambdas1=sol.es1.lambdas.copy(), omega_l=w)


def g2_components(params: SystemParams, omega_l: float) -> G2Components:
    """Disconnected/connected kernel weights of g2(tau) at one frequency."""
    return _components_from(solve_system(params),
                            params.kappa_b * params.kappa_c, omega_l)


def g2_tau(params: SystemParams, omega_l: float, taus) -> G2Trace:
    """Delayed correlation g2(tau; omega_l) on a sorted nonnegative tau grid."""
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or np.any(np.diff(taus) < 0) or (taus.size and taus[0] < 0):
        raise ValueError("taus must be ascending and nonnegative")
    comp = g2_components(params, omega_l)
    return G2Trace(taus=taus, g2=comp.evaluate(taus), omega_l=float(omega_l))


def _g2_grid_from(sol: SolvedSystem, kbkc: float,
                  omega_grid: np.ndarray) -> np.ndarray:
    w = np.asarray(omega_grid, dtype=float)
    res1 = sol.s[:, None] / (sol.es1.lambdas[:, None] - w)
    t_val = kbkc * np.abs((sol.s[:, None] * res1).sum(axis=0)) ** 2
    bad = np.nonzero(t_val < T_FLOOR)[0]
    if bad.size:
        raise TransmissionZeroError(
            f"T({w[bad[0]]:g}) is below the {T_FLOOR:g} floor (Fano zero); "
            "g2 diverges there, drop or shift that grid point")
    y = sol.p.T @ res1
    total = (sol.t[:, None] * y / (sol.es2.lambdas[:, None] - 2.0 * w)).sum(axis=0)
    return (kbkc / t_val) ** 2 * np.abs(total) ** 2


def g2_zero_grid(params: SystemParams, omega_grid) -> np.ndarray:
    """Vectorized g2(0) over a frequency grid (no contribution lists)."""
    return _g2_grid_from(solve_system(params),
                         params.kappa_b * params.kappa_c,
                         np.asarray(omega_grid, dtype=float))


def compute_spectrum(params: SystemParams, omega_grid) -> Spectrum:
    """Sweep T and g2(0) over a strictly increasing frequency grid."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    return Spectrum(omega_grid=omega_grid,
                    t=transmission(params, omega_grid),
                    g2zero=g2_zero_grid(params, omega_grid))


def anharmonicity(params: SystemParams) -> AnharmonicityReport:
    """Locate the most harmonic bright two-excitation state.

    Both sides of the minimization are restricted to bright eigenstates:
    two-excitation states with ``|t_j| > BRIGHT_TOL`` (dark states cannot
    emit photon pairs) and single-excitation states with ``|s_i| >
    BRIGHT_TOL`` (subradiant states cannot be driven through the cavity,
    and their doubled energies would report a spurious zero mismatch for
    any resonant ensemble). Ties resolve to the smallest index pair.
    """
    sol = solve_system(params)
    bright1 = np.nonzero(np.abs(sol.s) > BRIGHT_TOL)[0]
    bright2 = np.nonzero(np.abs(sol.t) > BRIGHT_TOL)[0]
    if bright1.size == 0 or bright2.size == 0:
        raise ValueError("no bright eigenstates to compare")
    re1 = 2.0 * sol.es1.lambdas.real[bright1]
    re2 = sol.es2.lambdas.real[bright2]
    mismatch = np.abs(re1[:, None] - re2[None, :])
    flat = int(np.argmin(mismatch))
    ib, jb = divmod(flat, bright2.size)
    j = int(bright2[jb])
    return AnharmonicityReport(
        delta_omega_12=float(mismatch[ib, jb]),
        delta_omega_2=float(abs(sol.es2.lambdas[j].imag)),
        pair=(int(bright1[ib]), j))
