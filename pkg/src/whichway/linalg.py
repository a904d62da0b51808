"""Dense complex linear algebra on small operators.

All operators are plain complex ``numpy.ndarray``s in row-major layout; the
matrices appearing anywhere in this package are at most 4*d^2 x 4*d^2 with
spin dimension d <= 4, so robustness is preferred over speed throughout.

Tolerance policy: structural checks on constructed objects use
``ATOL_STRUCT`` (1e-10), derived numerical identities use ``ATOL_DERIVED``
(1e-9). Statistical tolerances live with the Monte Carlo code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PositivityError

ATOL_STRUCT = 1e-10
ATOL_DERIVED = 1e-9

__all__ = [
    "ATOL_STRUCT",
    "ATOL_DERIVED",
    "SpinState",
    "dagger",
    "fidelity",
    "hermitian_part",
    "is_hermitian",
    "ket",
    "matrix_sqrt",
    "max_entangled_state",
    "partial_trace",
    "trace_norm",
]


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(getattr(m, "matrix", m), dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(m).conj().T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    """(m + m^dag) / 2."""
    m = np.asarray(m)
    return (m + m.conj().T) / 2


def is_hermitian(m: np.ndarray, atol: float = ATOL_STRUCT) -> bool:
    m = _as_matrix(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T)) <= atol


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis vector |index> of the given dimension."""
    if not 0 <= index < dim:
        raise DimensionError(f"basis index {index} out of range for dim {dim}")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values of a square matrix."""
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"trace norm needs a square matrix, got {m.shape}")
    return float(np.linalg.svd(m, compute_uv=False).sum())


def matrix_sqrt(m: np.ndarray, atol: float = 1e-8) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [-atol, 0) are treated as round-off and clamped to zero;
    anything below -atol raises :class:`PositivityError`. Eigenvalues within
    1e-12 (relative) of zero are zeroed outright: taking the square root of
    eigensolver round-off would otherwise inject sqrt(eps) ~ 1e-8 noise into
    the null space of rank-deficient inputs, while zeroing perturbs the
    re-multiplication identity by at most 1e-12.
    """
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix_sqrt needs a square matrix, got {m.shape}")
    if not is_hermitian(m, atol=atol):
        raise PositivityError("matrix_sqrt input is not Hermitian within tolerance")
    w, v = np.linalg.eigh(hermitian_part(m))
    if w.min() < -atol:
        raise PositivityError(f"matrix not PSD: smallest eigenvalue {w.min():.3e}")
    w[w < max(w.max(), 0.0) * 1e-12] = 0.0
    return hermitian_part((v * np.sqrt(w)) @ v.conj().T)


def fidelity(rho, sigma) -> float:
    """||sqrt(rho) sqrt(sigma)||_1 for density matrices of equal dimension."""
    r, s = _as_matrix(rho), _as_matrix(sigma)
    if r.shape != s.shape:
        raise DimensionError(f"dimension mismatch: {r.shape} vs {s.shape}")
    return trace_norm(matrix_sqrt(r) @ matrix_sqrt(s))


def partial_trace(m: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    m : ndarray
        Operator on a tensor product space of shape (d0*d1, d0*d1).
    dims : (d0, d1)
        Dimensions of the two factors, in kron order.
    keep : int
        Which factor to keep (0 or 1).
    """
    m = _as_matrix(m)
    d0, d1 = dims
    if m.shape != (d0 * d1, d0 * d1):
        raise DimensionError(f"operator shape {m.shape} != declared factors {dims}")
    t = m.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("abcb->ac", t)
    if keep == 1:
        return np.einsum("abad->bd", t)
    raise DimensionError("keep must be 0 or 1")


def max_entangled_state(d: int) -> np.ndarray:
    """Normalized vector sum_l |l>|l> / sqrt(d) on two replicas."""
    if d < 1:
        raise DimensionError("dimension must be >= 1")
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


@dataclass(frozen=True)
class SpinState:
    """A validated density matrix on the internal (spin) subsystem.

    Hermiticity, positivity (smallest eigenvalue >= -1e-10) and unit trace
    are enforced at construction.
    """

    dim: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.shape != (self.dim, self.dim):
            raise DimensionError(f"state shape {m.shape} != ({self.dim}, {self.dim})")
        if np.max(np.abs(m - m.conj().T)) > ATOL_STRUCT:
            raise PositivityError("state is not Hermitian within 1e-10")
        w = np.linalg.eigvalsh(hermitian_part(m))
        if w.min() < -ATOL_STRUCT:
            raise PositivityError(f"state not PSD: smallest eigenvalue {w.min():.3e}")
        if abs(np.trace(m).real - 1.0) > ATOL_STRUCT or abs(np.trace(m).imag) > ATOL_STRUCT:
            raise PositivityError("state trace differs from one beyond 1e-10")

    @classmethod
    def pure(cls, psi: np.ndarray) -> "SpinState":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        n = np.linalg.norm(psi)
        if abs(n - 1.0) > ATOL_STRUCT:
            raise DimensionError(f"ket norm {n} differs from 1 beyond 1e-10")
        return cls(psi.size, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "SpinState":
        return cls(dim, np.eye(dim, dtype=complex) / dim)
