"""Diagonalization of complex symmetric matrices under the transpose product.

The effective Hamiltonian blocks are complex symmetric (not Hermitian), so
the natural decomposition is ``h = u @ diag(lambdas) @ u.T`` with a complex
orthogonal ``u``: eigenvectors are normalized with the bilinear transpose
product ``v.T @ v = 1`` rather than the usual conjugating inner product.
Such a decomposition exists whenever ``h`` is diagonalizable; it fails at
exceptional points, where an eigenvector becomes self-orthogonal
(``v.T @ v -> 0``). That case is surfaced as :class:`DefectiveMatrixError`
instead of silently returning garbage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Max allowed deviation of u.T @ u from the identity.
ORTHO_TOL = 1e-10
#: Max allowed positive imaginary part of an eigenvalue of a passive block.
PASSIVE_IM_TOL = 1e-12
#: Eigenvalue clusters closer than this (times frobenius(h)) are treated as
#: degenerate and re-orthogonalized together; subradiant manifolds are exact
#: degeneracies, so detection must be scale aware.
DEGENERACY_RTOL = 1e-8
#: An eigenvector with |v.T @ v| below this (for a unit 2-norm v) cannot be
#: transpose-normalized reliably; the matrix is at or near an exceptional
#: point.
SELF_ORTHO_TOL = 1e-10


class DefectiveMatrixError(np.linalg.LinAlgError):
    """The matrix is (numerically) defective under the transpose product.

    Attributes:
        eigenvalue: The eigenvalue whose eigenvector could not be
            transpose-normalized, when identifiable.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class EigenSystem:
    """Transpose-orthonormal eigendecomposition of one excitation block.

    Attributes:
        lambdas: Complex eigenvalues, sorted by real part ascending with
            ties broken by imaginary part ascending.
        u: Matrix with the corresponding eigenvectors as columns;
            satisfies ``u.T @ u = I`` within :data:`ORTHO_TOL`.
        level: Excitation index of the block this system diagonalizes.
    """

    lambdas: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    level: int = 0

    @property
    def dim(self) -> int:
        return self.lambdas.shape[0]

    def ortho_defect(self) -> float:
        """Max absolute deviation of ``u.T @ u`` from the identity."""
        n = self.u.shape[0]
        return float(np.abs(self.u.T @ self.u - np.eye(n)).max())

    def reconstruct(self) -> np.ndarray:
        """Assemble ``u @ diag(lambdas) @ u.T``."""
        return (self.u * self.lambdas) @ self.u.T


def diag_complex_symmetric(h: np.ndarray, level: int = 0,
                           passive: bool = False) -> EigenSystem:
    """Diagonalize a complex symmetric matrix with transpose-orthonormal vectors.

    A general dense eigensolve is followed by a transpose-product
    renormalization ``v -> v / sqrt(v.T @ v)`` (principal square root) and,
    within clusters of numerically degenerate eigenvalues, a Gram-Schmidt
    pass under the transpose product. The overall sign of each eigenvector
    is fixed so its largest-magnitude entry has positive real part, which
    keeps downstream emission amplitudes reproducible across runs.

    Args:
        h: Square complex symmetric matrix (symmetric to machine precision).
        level: Excitation index recorded on the result.
        passive: If True, additionally require every eigenvalue to satisfy
            ``Im(lambda) <= PASSIVE_IM_TOL``, as holds for any lossy block.

    Returns:
        The :class:`EigenSystem`.

    Raises:
        DefectiveMatrixError: If an eigenvector is numerically
            self-orthogonal (exceptional point) or the final transpose
            orthonormality check fails; callers may perturb parameters.
        ValueError: If ``h`` is not square or not symmetric.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    n = h.shape[0]
    scale = np.linalg.norm(h)
    asym = np.abs(h - h.T).max()
    if asym > 1e-12 * max(scale, 1.0):
        raise ValueError(f"matrix is not symmetric: max |h - h.T| = {asym:g}")

    lam, v = np.linalg.eig(h)
    tol = DEGENERACY_RTOL * max(scale, 1.0)

    # Cluster numerically degenerate eigenvalues by connected components
    # (gap chaining in Re, then in Im): an exactly degenerate eigenvalue
    # scatters into a small disc that must be treated as one eigenspace,
    # and the disc diameter can exceed any single pairwise threshold.
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    v = v[:, order]
    re_breaks = [0] + [k for k in range(1, n)
                       if lam[k].real - lam[k - 1].real >= tol] + [n]
    blocks_found = []
    for a, b in zip(re_breaks[:-1], re_breaks[1:]):
        sub = a + np.argsort(lam[a:b].imag, kind="stable")
        groups = [0] + [k for k in range(1, b - a)
                        if (lam[sub[k]].imag - lam[sub[k - 1]].imag) >= tol] \
            + [b - a]
        for ia, ib in zip(groups[:-1], groups[1:]):
            blocks_found.append(sub[ia:ib])

    # Re-orthogonalize inside each cluster, normalize everywhere, and
    # restore the global (Re, Im) eigenvalue ordering.
    perm = np.concatenate(blocks_found) if blocks_found else np.arange(0)
    lam = lam[perm]
    v = v[:, perm]
    start = 0
    for idx in blocks_found:
        stop = start + len(idx)
        _transpose_orthonormalize(h, v, start, stop, lam)
        start = stop
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    v = v[:, order]

    u = v
    if n:
        defect = float(np.abs(u.T @ u - np.eye(n)).max())
        if defect > ORTHO_TOL:
            raise DefectiveMatrixError(
                "transpose orthonormalization failed "
                f"(max |u.T u - I| = {defect:.3e}); the matrix is close to "
                "an exceptional point")
    if passive and n and lam.imag.max() > PASSIVE_IM_TOL:
        raise ValueError(
            f"passive block has eigenvalue with Im = {lam.imag.max():g} > 0")
    return EigenSystem(lambdas=lam, u=u, level=level)


def _fix_sign(col: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(col)))
    ref = col[j]
    if ref.real < 0 or (ref.real == 0 and ref.imag < 0):
        return -col
    return col


def _normalized(col: np.ndarray, lam_k: complex) -> np.ndarray:
    q = col @ col
    norm2 = np.linalg.norm(col) ** 2
    if abs(q) < SELF_ORTHO_TOL * max(norm2, 1e-300):
        raise DefectiveMatrixError(
            "eigenvector is self-orthogonal under the transpose product "
            f"(|v.T v| / |v|^2 = {abs(q) / max(norm2, 1e-300):.3e}) "
            f"for eigenvalue {lam_k:.6g}",
            eigenvalue=lam_k)
    return _fix_sign(col / np.sqrt(q))  # principal branch


def _transpose_orthonormalize(h: np.ndarray, v: np.ndarray, start: int,
                              stop: int, lam: np.ndarray) -> None:
    """Orthonormalize the cluster columns start..stop-1 under v.T @ v.

    Single vectors are just renormalized. Degenerate clusters of physical
    loss blocks span conjugation-closed subspaces, for which any real
    orthonormal basis is transpose-orthonormal; that basis is extracted
    from the spectral decomposition of the stacked real Gram and accepted
    only if it still consists of eigenvectors (sampled residual check, so
    a defective cluster masquerading as a real subspace is rejected).
    Genuinely complex clusters go through a pivoted modified Gram-Schmidt
    under the bilinear form, which surfaces self-orthogonal (exceptional
    point) directions as :class:`DefectiveMatrixError`.
    """
    m = stop - start
    if m == 1:
        v[:, start] = _normalized(v[:, start], lam[start])
        return
    block = v[:, start:stop]
    stacked = np.hstack([block.real, block.imag])
    s_gram = stacked.T @ stacked
    w_s, q_s = np.linalg.eigh(s_gram)
    rank_real = int(np.sum(w_s > 1e-14 * max(w_s[-1], 1e-300)))
    if rank_real == m:
        # A QR polish removes the conditioning loss of the Gram route.
        basis, _ = np.linalg.qr(stacked @ q_s[:, -m:])
        basis = basis.astype(complex)
        sample = np.unique(np.linspace(0, m - 1, min(m, 6)).astype(int))
        probe = np.column_stack([basis[:, sample],
                                 basis.mean(axis=1)])
        residual = np.abs(h @ probe - lam[start] * probe).max()
        if residual <= DEGENERACY_RTOL * max(np.linalg.norm(h), 1.0):
            for k in range(m):
                v[:, start + k] = _fix_sign(basis[:, k])
            return
    # Genuinely complex cluster: pivoted modified Gram-Schmidt under the
    # bilinear form (an unconjugated pivoted Cholesky of the Gram matrix),
    # stable whenever the form is nondegenerate on the cluster.
    cols = [block[:, j].copy() for j in range(m)]
    remaining = list(range(m))
    accepted = []
    while remaining:
        def normability(j):
            return abs(cols[j] @ cols[j]) / max(
                np.linalg.norm(cols[j]) ** 2, 1e-300)

        best = max(remaining, key=normability)
        col = cols[best]
        if accepted:  # twice-is-enough cleanup against accepted vectors
            basis = np.column_stack(accepted)
            for _ in range(2):
                col = col - basis @ (basis.T @ col)
        col = _normalized(col, lam[start])
        remaining.remove(best)
        for j in remaining:
            cols[j] = cols[j] - col * (col @ cols[j])
        accepted.append(col)
    for k, col in enumerate(accepted):
        v[:, start + k] = col
