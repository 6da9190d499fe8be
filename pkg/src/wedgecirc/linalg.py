"""Dense complex linear algebra used by the circuit synthesis.

Matrices are plain ``complex128`` numpy arrays. Row/column indices in the
public data structures (``PhasedGivens``, ``EliminationSchedule``) are
1-based, matching the mode labels used everywhere else in the package.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .exceptions import (
    CircuitParseError,
    DegenerateInputError,
    InvalidSizeError,
)
from .validation import DEFAULT_TOL, as_complex_matrix, check_square, check_unitary

__all__ = [
    "PhasedGivens",
    "EliminationSchedule",
    "GivensQR",
    "SvdResult",
    "complex_givens_for",
    "parallel_elimination_order",
    "givens_qr",
    "givens_reconstruct",
    "svd",
    "unitary_log",
    "determinant",
    "random_unitary",
    "random_contraction",
    "read_matrix",
    "write_matrix",
    "matrix_to_json",
    "matrix_from_json",
]

ZERO_TOL = 1e-14


def _principal_angle(z: complex) -> float:
    """``arg(z)`` on (-pi, pi]; exact zero maps to 0."""
    if z == 0:
        return 0.0
    a = math.atan2(z.imag, z.real)
    return math.pi if a <= -math.pi else a


@dataclass(frozen=True)
class PhasedGivens:
    """One complex Givens step ``g = r_pq(theta) p_q(phi_q) p_p(phi_p)``.

    ``p_k(phi)`` multiplies row ``k`` by ``exp(-i phi)``; ``r_pq(theta)`` is the
    real rotation ``[[cos, sin], [-sin, cos]]`` on rows ``(p, q)``.
    """

    p: int
    q: int
    theta: float
    phi_p: float
    phi_q: float
    layer: int = 0
    column: int = 0

    def matrix(self, n: int) -> np.ndarray:
        g = np.eye(n, dtype=np.complex128)
        c, s = math.cos(self.theta), math.sin(self.theta)
        ep = np.exp(-1j * self.phi_p)
        eq = np.exp(-1j * self.phi_q)
        i, j = self.p - 1, self.q - 1
        g[i, i], g[i, j] = c * ep, s * eq
        g[j, i], g[j, j] = -s * ep, c * eq
        return g


@dataclass(frozen=True)
class EliminationSchedule:
    """Layered elimination order; ``layers[k]`` holds 1-based ``(row, col)`` entries."""

    n: int
    layers: list[list[tuple[int, int]]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def entries(self) -> list[tuple[int, int]]:
        return [e for layer in self.layers for e in layer]


@dataclass
class GivensQR:
    steps: list[PhasedGivens]
    final_phase: float
    residual: np.ndarray
    n: int

    def reconstruct(self) -> np.ndarray:
        return givens_reconstruct(self.steps, self.final_phase, self.n)


@dataclass
class SvdResult:
    """``u = L @ diag(sigma) @ R`` with unitary ``L`` and ``R``."""

    L: np.ndarray
    sigma: np.ndarray
    R: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.L * self.sigma) @ self.R


def complex_givens_for(a: complex, b: complex, zero_tol: float = ZERO_TOL) -> tuple[float, float, float]:
    """Angles of the complex Givens rotation that uses ``a`` to eliminate ``b``.

    Returns ``(theta, phi_a, phi_b)`` such that ``exp(-i phi_a) a`` and
    ``exp(-i phi_b) b`` are real nonnegative and the rotation by ``theta``
    sends that pair to ``(sqrt(|a|^2 + |b|^2), 0)``. Entries with modulus
    below ``zero_tol`` count as zero and get phase 0.

    Raises:
        DegenerateInputError: if both entries are zero.
    """
    a, b = complex(a), complex(b)
    ra, rb = abs(a), abs(b)
    if ra < zero_tol and rb < zero_tol:
        raise DegenerateInputError("cannot build a Givens rotation from two zero entries")
    phi_a = _principal_angle(a) if ra >= zero_tol else 0.0
    if rb < zero_tol:
        return 0.0, phi_a, 0.0
    # atan2 equals arccos(|a| / rho) and stays accurate near 0 and pi/2
    theta = math.atan2(rb, ra) if ra >= zero_tol else math.pi / 2
    return theta, phi_a, _principal_angle(b)


def parallel_elimination_order(n: int) -> EliminationSchedule:
    """Diagonal-wavefront elimination order on adjacent rows.

    Entry ``(q, j)`` (row ``q`` > column ``j``) is eliminated with rows
    ``(q-1, q)`` at step ``n - q + 1 + 2 (j - 1)``, giving ``2n - 3`` steps for
    ``n >= 2``.
    """
    if n < 2:
        raise InvalidSizeError(f"elimination order needs n >= 2, got {n}")
    layers: list[list[tuple[int, int]]] = [[] for _ in range(2 * n - 3)]
    for j in range(1, n):
        for q in range(j + 1, n + 1):
            layers[n - q + 2 * (j - 1)].append((q, j))
    for layer in layers:
        layer.sort(key=lambda e: e[1])
    return EliminationSchedule(n, layers)


def givens_qr(u, tol: float = DEFAULT_TOL) -> GivensQR:
    """Complex Givens QR of a unitary matrix in the parallel order.

    After applying every step, the working matrix is upper triangular with
    diagonal ``(1, ..., 1, exp(i final_phase))``, so that
    ``u = g_1^H g_2^H ... g_K^H diag(1, ..., 1, exp(i final_phase))``.
    Elimination steps whose entries are both zero are kept with zero angles.
    """
    u = check_unitary(u, tol)
    n = u.shape[0]
    w = u.copy()
    steps: list[PhasedGivens] = []
    if n >= 2:
        sched = parallel_elimination_order(n)
        for k, layer in enumerate(sched.layers, start=1):
            for q, j in layer:
                i0, i1 = q - 2, q - 1
                try:
                    theta, phi_a, phi_b = complex_givens_for(w[i0, j - 1], w[i1, j - 1])
                except DegenerateInputError:
                    theta = phi_a = phi_b = 0.0
                step = PhasedGivens(q - 1, q, theta, phi_a, phi_b, layer=k, column=j)
                _apply_step(w, step)
                steps.append(step)
    final_phase = _principal_angle(complex(w[n - 1, n - 1]))
    diag_dev = np.abs(np.diag(w)[:-1] - 1.0)
    if diag_dev.size and diag_dev.max() > 10 * tol:
        warnings.warn(
            f"Givens QR diagonal deviates from (1, ..., 1, e^(i phi)) by {diag_dev.max():.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return GivensQR(steps, final_phase, w, n)


def _apply_step(w: np.ndarray, step: PhasedGivens) -> None:
    i, j = step.p - 1, step.q - 1
    ra = np.exp(-1j * step.phi_p) * w[i]
    rb = np.exp(-1j * step.phi_q) * w[j]
    c, s = math.cos(step.theta), math.sin(step.theta)
    w[i], w[j] = c * ra + s * rb, -s * ra + c * rb


def givens_reconstruct(steps: list[PhasedGivens], final_phase: float, n: int) -> np.ndarray:
    """Rebuild ``g_1^H ... g_K^H diag(1, ..., exp(i final_phase))``."""
    out = np.eye(n, dtype=np.complex128)
    out[n - 1, n - 1] = np.exp(1j * final_phase)
    for step in reversed(steps):
        out = step.matrix(n).conj().T @ out
    return out


# ---------------------------------------------------------------------------
# SVD
# ---------------------------------------------------------------------------

def _jacobi_sweeps(w: np.ndarray, v: np.ndarray, max_sweeps: int) -> int:
    n = w.shape[1]
    eps = np.finfo(float).eps
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                wi, wj = w[:, i], w[:, j]
                alpha = float(np.vdot(wi, wi).real)
                beta = float(np.vdot(wj, wj).real)
                gamma = complex(np.vdot(wi, wj))
                g = abs(gamma)
                if g <= eps * math.sqrt(alpha * beta) or g < 1e-300:
                    continue
                rotated = True
                # rotate column j's phase so the Gram entry becomes real positive
                ph = gamma / g
                zeta = (beta - alpha) / (2.0 * g)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                wj_ph = wj / ph
                vj_ph = v[:, j] / ph
                w[:, i], w[:, j] = c * wi - s * wj_ph, s * wi + c * wj_ph
                v[:, i], v[:, j] = c * v[:, i] - s * vj_ph, s * v[:, i] + c * vj_ph
        if not rotated:
            return sweep
    return max_sweeps


def _complete_orthonormal(cols: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the columns not in ``keep`` by an orthonormal completion."""
    m = cols.shape[0]
    out = cols.copy()
    basis = [out[:, k] for k in range(out.shape[1]) if keep[k]]
    for k in np.flatnonzero(~keep):
        best, best_norm = None, -1.0
        for e in range(m):
            cand = np.zeros(m, dtype=np.complex128)
            cand[e] = 1.0
            for _ in range(2):
                for b in basis:
                    cand -= np.vdot(b, cand) * b
            nrm = np.linalg.norm(cand)
            if nrm > best_norm:
                best, best_norm = cand, nrm
        vec = best / best_norm
        basis.append(vec)
        out[:, k] = vec
    return out


def svd(u, max_sweeps: int = 60) -> SvdResult:
    """Singular value decomposition by one-sided (Hestenes) Jacobi.

    Columns of ``u`` are orthogonalised by plane rotations until every pair is
    orthogonal to machine precision relative to the column norms. That
    relative criterion keeps small singular values accurate, which matters
    for the zero/one rounding downstream.

    Returns ``SvdResult(L, sigma, R)`` with ``sigma`` non-increasing and
    ``u = L diag(sigma) R``.
    """
    u = check_square(u, "u")
    n = u.shape[0]
    w = u.copy()
    v = np.eye(n, dtype=np.complex128)
    _jacobi_sweeps(w, v, max_sweeps)
    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, w, v = sigma[order], w[:, order], v[:, order]
    smax = sigma[0] if n else 0.0
    keep = sigma > max(n * np.finfo(float).eps * smax, 1e-300)
    lcols = np.zeros_like(w)
    lcols[:, keep] = w[:, keep] / sigma[keep]
    if not keep.all():
        lcols = _complete_orthonormal(lcols, keep)
    return SvdResult(lcols, sigma, v.conj().T)


def unitary_log(u, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Principal logarithm of a unitary matrix (eigenphases on (-pi, pi]).

    Uses the complex Schur form, which is diagonal with a unitary basis for
    normal matrices, so degenerate eigenvalues need no special care.
    """
    u = check_unitary(u, tol)
    t, z = scipy.linalg.schur(u, output="complex")
    lam = np.diag(t)
    phases = np.array([_principal_angle(complex(x)) for x in lam])
    h = (z * (1j * phases)) @ z.conj().T
    return 0.5 * (h - h.conj().T)


def determinant(a) -> complex:
    """Determinant by LU with partial pivoting; the 0x0 determinant is 1."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidSizeError(f"determinant needs a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(a))


# ---------------------------------------------------------------------------
# Random test matrices
# ---------------------------------------------------------------------------

def random_unitary(n: int, rng=None) -> np.ndarray:
    """Haar-random unitary (QR of a complex Ginibre matrix with phase fix)."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_contraction(n: int, rng=None, sigma=None) -> np.ndarray:
    """Random matrix with prescribed (or uniform in [0, 1]) singular values."""
    rng = np.random.default_rng(rng)
    if sigma is None:
        sigma = np.sort(rng.uniform(0.0, 1.0, n))[::-1]
    return (random_unitary(n, rng) * np.asarray(sigma, dtype=float)) @ random_unitary(n, rng)


# ---------------------------------------------------------------------------
# Matrix JSON: {"rows": n, "cols": n, "data": [[re, im], ...]} row-major
# ---------------------------------------------------------------------------

def matrix_to_json(a) -> dict:
    a = as_complex_matrix(a)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def matrix_from_json(doc) -> np.ndarray:
    if not isinstance(doc, dict):
        raise CircuitParseError("matrix document must be an object")
    extra = set(doc) - {"rows", "cols", "data"}
    if extra:
        raise CircuitParseError(f"unknown fields {sorted(extra)}")
    for key in ("rows", "cols", "data"):
        if key not in doc:
            raise CircuitParseError(f"missing field {key!r}")
    rows, cols, data = doc["rows"], doc["cols"], doc["data"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise CircuitParseError("rows and cols must be positive integers", "$.rows")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise CircuitParseError(f"data must hold rows*cols = {rows * cols} entries", "$.data")
    out = np.empty(rows * cols, dtype=np.complex128)
    for k, pair in enumerate(data):
        out[k] = _parse_complex(pair, f"$.data[{k}]")
    return out.reshape(rows, cols)


def _parse_complex(pair, where: str) -> complex:
    if (
        not isinstance(pair, list)
        or len(pair) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
    ):
        raise CircuitParseError("expected [re, im] pair of numbers", where)
    return complex(float(pair[0]), float(pair[1]))


def read_matrix(path) -> np.ndarray:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, f"line {exc.lineno} col {exc.colno}") from exc
    return matrix_from_json(doc)


def write_matrix(path, a) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(a)) + "\n")
