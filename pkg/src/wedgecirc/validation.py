"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import ContractionError, InvalidSizeError, UnitarityError

DEFAULT_TOL = 1e-10


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a 2-D ``complex128`` array (copy only if needed)."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise InvalidSizeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSizeError(f"{name} contains non-finite entries")
    return arr


def check_square(a, name: str = "matrix", allow_empty: bool = False) -> np.ndarray:
    arr = as_complex_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise InvalidSizeError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise InvalidSizeError(f"{name} must be at least 1x1")
    return arr


def unitarity_defect(u: np.ndarray) -> float:
    """Frobenius norm of ``u^H u - I``."""
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])))


def is_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    u = as_complex_matrix(u)
    return u.shape[0] == u.shape[1] and unitarity_defect(u) <= tol


def check_unitary(u, tol: float = DEFAULT_TOL, name: str = "matrix") -> np.ndarray:
    u = check_square(u, name)
    defect = unitarity_defect(u)
    if defect > tol:
        raise UnitarityError(
            f"{name} is not unitary: ||U^H U - I||_F = {defect:.3e} > {tol:.1e}"
        )
    return u


def check_contraction(u, tol: float = 1e-12, name: str = "matrix") -> np.ndarray:
    u = check_square(u, name)
    norm = float(np.linalg.norm(u, 2))
    if norm > 1.0 + tol:
        raise ContractionError(f"{name} has spectral norm {norm:.15g} > 1")
    return u


def check_fock_dim(dim: int, name: str = "state") -> int:
    """Return ``n`` such that ``dim == 2**n``."""
    if dim < 1 or dim & (dim - 1):
        raise InvalidSizeError(f"{name} length {dim} is not a power of two")
    return dim.bit_length() - 1


def check_fock_vectors(x, n: int | None = None, name: str = "X") -> np.ndarray:
    """Validate a batch of Fock-space amplitude vectors, shape ``(n_samples, 2**n)``.

    A single 1-D vector is promoted to a batch of one.
    """
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidSizeError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSizeError(f"{name} contains non-finite entries")
    got = check_fock_dim(arr.shape[1], name)
    if n is not None and got != n:
        raise InvalidSizeError(f"{name} has {got} modes, expected {n}")
    return arr
