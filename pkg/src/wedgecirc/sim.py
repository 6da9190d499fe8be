"""Exact dense statevector simulation with ancilla post-selection.

The amplitude array is viewed as a tensor with one axis per qubit (qubit 1 on
axis 0, so it is the most significant bit). Gate kernels slice out the
subspace where the controls are satisfied and overwrite it in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate
from .exceptions import ImpossibleOutcomeError, InvalidSizeError, RegisterMismatchError
from .fock import ManyBodyState, OccupationState

PROBABILITY_FLOOR = 1e-300


@dataclass
class StateVector:
    m: int
    amplitudes: np.ndarray
    norm_tracking: float = 1.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if self.amplitudes.size != 1 << self.m:
            raise InvalidSizeError(
                f"expected {1 << self.m} amplitudes for m={self.m}, got {self.amplitudes.size}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.m, self.amplitudes.copy(), self.norm_tracking)

    def to_json(self) -> dict:
        doc = ManyBodyState(self.m, self.amplitudes).to_json()
        doc["norm_tracking"] = self.norm_tracking
        return doc


def prepare_basis(occ: OccupationState, m: int) -> StateVector:
    """Basis state with ``occ`` on the first ``occ.n`` qubits and zeros after."""
    if occ.n > m:
        raise InvalidSizeError(f"occupation has {occ.n} modes but register has {m} qubits")
    amps = np.zeros(1 << m, dtype=np.complex128)
    amps[occ.index << (m - occ.n)] = 1.0
    return StateVector(m, amps)


def prepare_product(*parts, m: int | None = None) -> StateVector:
    """Tensor product of amplitude vectors, padded with ``|0>`` up to ``m`` qubits."""
    amps = np.ones(1, dtype=np.complex128)
    for p in parts:
        vec = p.amplitudes if isinstance(p, (ManyBodyState, StateVector)) else np.asarray(p)
        amps = np.kron(amps, vec.astype(np.complex128).ravel())
    used = amps.size.bit_length() - 1
    if m is not None:
        if used > m:
            raise InvalidSizeError(f"{used} qubits of input exceed register size {m}")
        pad = np.zeros(1 << (m - used), dtype=np.complex128)
        pad[0] = 1.0
        amps = np.kron(amps, pad)
        used = m
    return StateVector(used, amps)


def apply_gate(tensor: np.ndarray, g: Gate) -> None:
    """Apply one gate in place to a ``(2,) * m`` (optionally batched) tensor."""
    closed, opened, targets, local = g.kernel()
    index: list = [slice(None)] * tensor.ndim
    for c in closed:
        index[c - 1] = 1
    for c in opened:
        index[c - 1] = 0
    sub = tensor[tuple(index)]
    # axes of the targets inside the sliced view
    fixed = {c - 1 for c in closed + opened}
    axes = [t - 1 - sum(1 for f in fixed if f < t - 1) for t in targets]
    k = len(targets)
    moved = np.moveaxis(sub, axes, list(range(k)))
    shape = moved.shape
    new = (local @ moved.reshape(1 << k, -1)).reshape(shape)
    moved[...] = new


def apply(c: Circuit, s: StateVector) -> StateVector:
    """Run every gate of ``c`` on ``s`` in place and return ``s``."""
    if c.n_qubits != s.m:
        raise RegisterMismatchError(f"circuit has {c.n_qubits} qubits, state has {s.m}")
    tensor = s.amplitudes.reshape((2,) * s.m) if s.m else s.amplitudes
    for _, g in c.gates:
        apply_gate(tensor, g)
    return s


def apply_batch(c: Circuit, states: np.ndarray) -> np.ndarray:
    """Apply ``c`` to each row of ``states`` (shape ``(batch, 2**m)``); returns a new array."""
    states = np.array(states, dtype=np.complex128, copy=True)
    m = c.n_qubits
    if states.shape[-1] != 1 << m:
        raise RegisterMismatchError(f"states have length {states.shape[-1]}, circuit needs {1 << m}")
    tensor = states.T.copy().reshape((2,) * m + (states.shape[0],))
    for _, g in c.gates:
        apply_gate(tensor, g)
    return tensor.reshape(1 << m, -1).T


def _qubit_mask(m: int, assignment: dict[int, int]) -> np.ndarray:
    idx = np.arange(1 << m)
    keep = np.ones(idx.size, dtype=bool)
    for q, v in assignment.items():
        if not 1 <= q <= m:
            raise InvalidSizeError(f"qubit {q} outside 1..{m}")
        keep &= ((idx >> (m - q)) & 1) == v
    return keep


def postselect_zero(s: StateVector, qubits, renormalize: bool = True) -> tuple[StateVector, float]:
    """Project the given qubits onto ``|0>`` in place.

    Returns the state and the pre-projection weight. When ``renormalize`` is
    set the kept amplitudes are rescaled to unit norm and ``norm_tracking``
    absorbs the weight.
    """
    keep = _qubit_mask(s.m, {q: 0 for q in qubits})
    s.amplitudes[~keep] = 0
    p = float(np.vdot(s.amplitudes, s.amplitudes).real)
    if p < PROBABILITY_FLOOR:
        raise ImpossibleOutcomeError(
            "post-selected outcome has zero probability: the encoded operator annihilates this state"
        )
    if renormalize:
        s.amplitudes /= np.sqrt(p)
        s.norm_tracking *= p
    return s, p


def outcome_probability(s: StateVector, assignment: dict[int, int]) -> float:
    """Exact probability that the listed qubits read the given bits."""
    if not assignment:
        return float(np.vdot(s.amplitudes, s.amplitudes).real)
    keep = _qubit_mask(s.m, assignment)
    return float(np.sum(np.abs(s.amplitudes[keep]) ** 2))


def marginal_distribution(s: StateVector, qubits) -> dict[str, float]:
    """Exact joint distribution of ``qubits`` as bitstring -> probability."""
    qubits = list(qubits)
    probs = np.abs(s.amplitudes) ** 2
    idx = np.arange(1 << s.m)
    key = np.zeros(idx.size, dtype=np.int64)
    for q in qubits:
        key = (key << 1) | ((idx >> (s.m - q)) & 1)
    totals = np.bincount(key, weights=probs, minlength=1 << len(qubits))
    return {format(k, f"0{len(qubits)}b") if qubits else "": float(v) for k, v in enumerate(totals)}


def sample(s: StateVector, qubits, shots: int, seed: int) -> dict[str, int]:
    """Seeded finite-shot measurement of ``qubits``; counts keyed by bitstring."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    dist = marginal_distribution(s, qubits)
    keys = list(dist)
    p = np.array([dist[k] for k in keys])
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    return {k: int(n) for k, n in zip(keys, counts) if n}
