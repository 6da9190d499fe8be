"""Exterior-algebra (Fock space) oracles under the Jordan-Wigner encoding.

Bit convention: mode 1 is the most significant bit, so the occupation string
``n_1 n_2 ... n_n`` has index ``sum_i n_i 2**(n - i)``. The simulator uses the
same convention over its combined register.

Everything here is dense and exponential in the number of modes; it exists to
check circuits, not to be fast.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from .exceptions import CircuitParseError, InvalidSizeError
from .linalg import _parse_complex, determinant, unitary_log
from .validation import DEFAULT_TOL, check_fock_dim, check_square

MAX_ORACLE_MODES = 12
MAX_THOULESS_MODES = 10

_Z = np.diag([1.0, -1.0]).astype(np.complex128)
_RAISE = np.array([[0, 0], [1, 0]], dtype=np.complex128)  # |1><0|


@dataclass(frozen=True)
class OccupationState:
    """Occupation-number basis state ``|n_1 ... n_n>``."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidSizeError(f"occupations must be 0/1, got {self.bits}")

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        idx = 0
        for b in self.bits:
            idx = (idx << 1) | b
        return idx

    @property
    def particle_count(self) -> int:
        return sum(self.bits)

    @property
    def occupied(self) -> tuple[int, ...]:
        """1-based occupied modes in increasing order."""
        return tuple(i + 1 for i, b in enumerate(self.bits) if b)

    @classmethod
    def from_index(cls, index: int, n: int) -> "OccupationState":
        if not 0 <= index < (1 << n):
            raise InvalidSizeError(f"index {index} out of range for {n} modes")
        return cls(tuple((index >> (n - 1 - i)) & 1 for i in range(n)))

    @classmethod
    def from_modes(cls, modes, n: int) -> "OccupationState":
        modes = set(modes)
        if any(not 1 <= m <= n for m in modes):
            raise InvalidSizeError(f"modes {sorted(modes)} out of range 1..{n}")
        return cls(tuple(int(i + 1 in modes) for i in range(n)))

    @classmethod
    def from_string(cls, s: str) -> "OccupationState":
        return cls(tuple(int(c) for c in s))

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass
class ManyBodyState:
    """Amplitudes over the ``2**n`` occupation basis states."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if self.amplitudes.size != 1 << self.n:
            raise InvalidSizeError(
                f"expected {1 << self.n} amplitudes for n={self.n}, got {self.amplitudes.size}"
            )

    @classmethod
    def basis(cls, occ: OccupationState) -> "ManyBodyState":
        amps = np.zeros(1 << occ.n, dtype=np.complex128)
        amps[occ.index] = 1.0
        return cls(occ.n, amps)

    @classmethod
    def random(cls, n: int, rng=None) -> "ManyBodyState":
        rng = np.random.default_rng(rng)
        v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
        return cls(n, v / np.linalg.norm(v))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes],
        }

    @classmethod
    def from_json(cls, doc, extra_fields: tuple[str, ...] = ()) -> "ManyBodyState":
        if not isinstance(doc, dict):
            raise CircuitParseError("state document must be an object")
        unknown = set(doc) - {"n", "amplitudes", *extra_fields}
        if unknown:
            raise CircuitParseError(f"unknown fields {sorted(unknown)}")
        if "n" not in doc or "amplitudes" not in doc:
            raise CircuitParseError("state needs 'n' and 'amplitudes'")
        n, amps = doc["n"], doc["amplitudes"]
        if not isinstance(n, int) or n < 0:
            raise CircuitParseError("n must be a nonnegative integer", "$.n")
        if not isinstance(amps, list) or len(amps) != 1 << n:
            raise CircuitParseError(f"amplitudes must have length 2**n = {1 << n}", "$.amplitudes")
        vals = [_parse_complex(p, f"$.amplitudes[{k}]") for k, p in enumerate(amps)]
        return cls(n, np.array(vals, dtype=np.complex128))


def read_state(path) -> ManyBodyState:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, f"line {exc.lineno} col {exc.colno}") from exc
    return ManyBodyState.from_json(doc, extra_fields=("norm_tracking",))


def write_state(path, state: ManyBodyState) -> None:
    Path(path).write_text(json.dumps(state.to_json()) + "\n")


# ---------------------------------------------------------------------------
# Jordan-Wigner operators
# ---------------------------------------------------------------------------

def _check_mode(i: int, n: int) -> None:
    if not 1 <= n <= MAX_ORACLE_MODES:
        raise InvalidSizeError(f"mode count {n} outside 1..{MAX_ORACLE_MODES}")
    if not 1 <= i <= n:
        raise InvalidSizeError(f"mode {i} outside 1..{n}")


def _kron_all(factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for f in factors:
        out = np.kron(out, f)
    return out


def creation_op(i: int, n: int) -> np.ndarray:
    """``Z_1 ... Z_{i-1} (|1><0|)_i I ... I`` as a dense ``2**n`` matrix."""
    _check_mode(i, n)
    eye = np.eye(2, dtype=np.complex128)
    return _kron_all([_Z] * (i - 1) + [_RAISE] + [eye] * (n - i))


def annihilation_op(i: int, n: int) -> np.ndarray:
    return creation_op(i, n).conj().T


def number_op(i: int, n: int) -> np.ndarray:
    return creation_op(i, n) @ annihilation_op(i, n)


# ---------------------------------------------------------------------------
# Wedge map and overlaps
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _sector_indices(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based occupied-mode lists and Fock indices of all ``k``-particle states."""
    combos = list(itertools.combinations(range(n), k))
    modes = np.array(combos, dtype=np.intp).reshape(len(combos), k)
    weights = 1 << (n - 1 - modes)
    return modes, weights.sum(axis=1).astype(np.intp)


def wedge_oracle(u) -> np.ndarray:
    """Dense matrix of the wedged map of ``u`` on the ``2**n`` Fock space.

    ``<I| wedge(u) |J> = det u[occ(I), occ(J)]`` when ``I`` and ``J`` hold the
    same number of particles and 0 otherwise; occupied modes are taken in
    increasing order, so no extra permutation signs appear.
    """
    u = check_square(u, "u")
    n = u.shape[0]
    if n > MAX_ORACLE_MODES:
        raise InvalidSizeError(f"wedge oracle limited to n <= {MAX_ORACLE_MODES}, got {n}")
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[0, 0] = 1.0
    for k in range(1, n + 1):
        modes, idx = _sector_indices(n, k)
        block = _sector_minors(u, modes)
        out[np.ix_(idx, idx)] = block
    return out


def _sector_minors(u: np.ndarray, modes: np.ndarray, chunk: int = 256) -> np.ndarray:
    c, k = modes.shape
    block = np.empty((c, c), dtype=np.complex128)
    cols = modes[None, :, None, :]
    for start in range(0, c, chunk):
        rows = modes[start:start + chunk, None, :, None]
        block[start:start + chunk] = np.linalg.det(u[rows, cols])
    return block


def thouless_oracle(u, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``exp(sum_pq (log u)_pq a_p^dag a_q)`` built from dense JW matrices."""
    u = check_square(u, "u")
    n = u.shape[0]
    if n > MAX_THOULESS_MODES:
        raise InvalidSizeError(f"Thouless oracle limited to n <= {MAX_THOULESS_MODES}, got {n}")
    log_u = unitary_log(u, tol)
    cre = [creation_op(p, n) for p in range(1, n + 1)]
    ann = [c.conj().T for c in cre]
    gen = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    for p in range(n):
        for q in range(n):
            if log_u[p, q] != 0:
                gen += log_u[p, q] * (cre[p] @ ann[q])
    return scipy.linalg.expm(gen)


def slater_overlap(bra: OccupationState, ket: OccupationState, u) -> complex:
    """``<bra| wedge(u) |ket>``: determinant of the occupied-mode minor of ``u``."""
    u = check_square(u, "u")
    if bra.n != ket.n or bra.n != u.shape[0]:
        raise InvalidSizeError(
            f"mode counts differ: bra {bra.n}, ket {ket.n}, matrix {u.shape[0]}"
        )
    if bra.particle_count != ket.particle_count:
        return 0j
    rows = [i - 1 for i in bra.occupied]
    cols = [j - 1 for j in ket.occupied]
    return determinant(u[np.ix_(rows, cols)])


def state_overlap_oracle(psi, phi, u) -> complex:
    """``psi^dag wedge(u) phi`` for states given as ``ManyBodyState`` or arrays.

    With ``u[i, j] = <psi_i|phi_j>`` this is the overlap ``<Psi|Phi>`` of two
    many-body states whose amplitudes refer to the ``psi`` and ``phi`` orbital
    sets respectively.
    """
    u = check_square(u, "u")
    a = _amplitudes(psi, "psi")
    b = _amplitudes(phi, "phi")
    n = u.shape[0]
    if a.size != b.size or check_fock_dim(a.size, "psi") != n:
        raise InvalidSizeError(
            f"state lengths {a.size}, {b.size} do not match {n} modes"
        )
    return complex(np.vdot(a, wedge_oracle(u) @ b))


def _amplitudes(state, name: str) -> np.ndarray:
    if isinstance(state, ManyBodyState):
        return state.amplitudes
    arr = np.asarray(state, dtype=np.complex128).ravel()
    check_fock_dim(arr.size, name)
    return arr
