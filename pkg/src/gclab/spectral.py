"""Dense symmetric eigendecomposition via cyclic Jacobi rotations.

The solver is a classical cyclic-by-rows Jacobi: sweep all (p, q) pairs in a
fixed order, annihilate A[p, q] with a Givens rotation, accumulate the
rotations into V. It stops when the off-diagonal Frobenius norm drops below
1e-12 times the input Frobenius norm (at most 100 sweeps). The fixed sweep
order makes results deterministic for identical input.

A numba-jitted kernel is used when numba is importable; the pure-numpy
fallback performs the identical rotation sequence, so both paths agree
bitwise. Matrices here are small (at most a few hundred rows), where Jacobi
is robust and the accumulated V stays orthonormal to ~1e-14.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericsError
from .graphs import BlockGraph, Graph, normalized_laplacian

_REL_TOL = 1e-12
_MAX_SWEEPS = 100


def _jacobi_kernel_py(a: np.ndarray, v: np.ndarray, tol: float, max_sweeps: int) -> int:
    """Rotation sweeps on a (symmetric, modified in place). Returns sweep count."""
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        off = np.sqrt(2.0 * off)
        if off <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return max_sweeps


try:  # pragma: no cover - exercised indirectly
    import numba

    _jacobi_kernel = numba.njit(cache=True)(_jacobi_kernel_py)
except Exception:  # pragma: no cover
    _jacobi_kernel = _jacobi_kernel_py


@dataclass
class EigenDecomposition:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T

    @property
    def size(self) -> int:
        return len(self.eigenvalues)


def sym_eig(matrix: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix.

    The caller must supply a symmetric matrix (to ~1e-12); input is
    symmetrized as 0.5*(M + M.T), which is a bitwise no-op on exactly
    symmetric input. Eigenvalues come back ascending with stable
    tie-breaking by original diagonal position.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    a = 0.5 * (m + m.T)
    fro = float(np.sqrt((a * a).sum()))
    v = np.eye(n)
    sweeps = _jacobi_kernel(a, v, _REL_TOL * fro, _MAX_SWEEPS)
    if sweeps >= _MAX_SWEEPS:
        raise NumericsError("Jacobi iteration did not converge in 100 sweeps")
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    return EigenDecomposition(eigenvalues=vals[order], eigenvectors=v[:, order])


def laplacian_spectrum(g: Graph | BlockGraph) -> EigenDecomposition:
    """Spectrum of the graph's normalized Laplacian (the graph frequencies)."""
    return sym_eig(normalized_laplacian(g))
