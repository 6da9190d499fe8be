"""Circuit synthesis passes.

* ``synth_unitary``: Givens-QR circuit for the wedged map of a unitary.
* ``synth_nonunitary``: SVD + block-encoded singular values for a contraction,
  with rounding of singular values near 1 and truncation of those near 0.
* ``synth_xi``: the same construction for a basis-overlap matrix.
* Inner-product circuits: two swap-test variants and a Hadamard test, plus
  exact evaluators that turn their outcome probabilities into overlaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .circuit import Circuit, Gate, SynthesisReport, emit_adjacent_givens
from .exceptions import ContractionError, InvalidSizeError, RegisterMismatchError
from .fock import ManyBodyState
from .linalg import givens_qr, parallel_elimination_order, svd
from .sim import (
    StateVector,
    apply,
    marginal_distribution,
    outcome_probability,
    prepare_product,
    sample,
)
from .validation import DEFAULT_TOL, check_contraction, check_fock_dim, check_square

SIGMA_CLAMP = 1e-12


@dataclass(frozen=True)
class TruncationPolicy:
    """Singular values ``>= 1 - epsilon`` become 1, those ``<= epsilon`` become 0."""

    epsilon: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {self.epsilon}")


class Truncation(NamedTuple):
    sigma_tilde: np.ndarray
    s: int
    r: int
    bound: float


@dataclass
class BlockEncodedCircuit:
    """Block encoding of the wedged map of ``L diag(sigma_tilde) R``.

    Working qubits are ``1..n``; ancillas follow. ``ancilla_map`` sends a
    1-based singular-value index to its ancilla qubit; the single ancilla
    shared by all zeroed singular values is listed under index ``r + 1``.
    """

    circuit: Circuit
    s: int
    r: int
    ancilla_map: dict[int, int]
    truncation_bound: float
    sigma: np.ndarray
    sigma_tilde: np.ndarray
    L: np.ndarray
    R: np.ndarray
    report: SynthesisReport = field(default_factory=SynthesisReport)

    @property
    def n(self) -> int:
        return self.circuit.n_working

    @property
    def n_ancilla(self) -> int:
        return self.circuit.n_ancilla

    @property
    def u_tilde(self) -> np.ndarray:
        return (self.L * self.sigma_tilde) @ self.R


# ---------------------------------------------------------------------------
# Unitary synthesis
# ---------------------------------------------------------------------------

def _unitary_layer_count(n: int) -> int:
    return 1 + (2 * n - 3 if n >= 2 else 0)


def _unitary_gates(u: np.ndarray, tol: float, prune: bool) -> tuple[list[tuple[int, Gate]], int]:
    """Layer-tagged gates for the wedged map of unitary ``u``.

    Layer 0 holds the trailing phase gate on qubit ``n``; time layer ``t``
    holds the Givens steps of elimination step ``2n - 2 - t``, since the
    adjoint steps are applied in reverse elimination order.
    """
    qr = givens_qr(u, tol)
    n = qr.n
    gates: list[tuple[int, Gate]] = []
    if not (prune and qr.final_phase == 0.0):
        gates.append((0, Gate.phase(n, -qr.final_phase)))
    if n >= 2:
        n_steps = 2 * n - 3
        by_step: dict[int, list] = {}
        for step in qr.steps:
            by_step.setdefault(step.layer, []).append(step)
        for t in range(1, n_steps + 1):
            for step in by_step.get(n_steps + 1 - t, []):
                block = emit_adjacent_givens(step.q, step.theta, step.phi_p, step.phi_q)
                for g in block:
                    if prune and g.angle == 0.0 and (g.op == "PHASE" or step.theta == 0.0):
                        continue
                    if prune and g.op == "CNOT" and step.theta == 0.0:
                        continue
                    gates.append((t, g))
    return gates, len(qr.steps)


def synth_unitary(u, tol: float = DEFAULT_TOL, prune: bool = True) -> tuple[Circuit, SynthesisReport]:
    """Circuit on ``n`` working qubits realizing the wedged map of unitary ``u``.

    With ``prune`` set, gates whose angle is exactly zero are dropped after
    layer assignment (a Givens block with zero rotation loses its CNOTs too);
    the report still describes the unpruned schedule.
    """
    u = check_square(u, "u")
    n = u.shape[0]
    gates, n_givens = _unitary_gates(u, tol, prune)
    circ = Circuit(n, 0, gates)
    report = SynthesisReport(
        givens_count=n_givens,
        phase_count=circ.count("PHASE"),
        cry_count=0,
        mcx_width=0,
        givens_layer_depth=len(parallel_elimination_order(n).layers) if n >= 2 else 0,
        s=n,
        r=n,
        ancilla_count=0,
        truncation_bound=0.0,
    )
    return circ, report


# ---------------------------------------------------------------------------
# Singular-value rounding
# ---------------------------------------------------------------------------

def truncate_singular_values(sigma, policy: TruncationPolicy | None = None) -> Truncation:
    """Round singular values near 1 up and those near 0 down.

    ``bound`` is the total modification, which bounds the 2-norm error of the
    wedged map.
    """
    policy = policy or TruncationPolicy()
    eps = policy.epsilon
    sig = np.asarray(sigma, dtype=float).ravel()
    if sig.size and (np.any(sig < 0) or np.any(np.diff(sig) > SIGMA_CLAMP)):
        raise ValueError("singular values must be nonnegative and non-increasing")
    if sig.size and sig[0] > 1.0 + SIGMA_CLAMP:
        raise ContractionError(f"largest singular value {sig[0]:.15g} exceeds 1")
    sig = np.minimum(sig, 1.0)
    tilde = sig.copy()
    tilde[sig >= 1.0 - eps] = 1.0
    tilde[sig <= eps] = 0.0
    bound = float(np.sum(np.abs(tilde - sig)))
    return Truncation(tilde, int(np.sum(tilde == 1.0)), int(np.sum(tilde > 0.0)), bound)


# ---------------------------------------------------------------------------
# Non-unitary synthesis
# ---------------------------------------------------------------------------

def synth_nonunitary(
    u,
    policy: TruncationPolicy | None = None,
    tol: float = DEFAULT_TOL,
    contraction_tol: float = SIGMA_CLAMP,
) -> tuple[BlockEncodedCircuit, SynthesisReport]:
    """Block-encoded circuit for the wedged map of a contraction ``u``.

    Gate order: circuit for ``R``; one CRY(2 arccos sigma) per singular value
    strictly inside (0, 1), controlled by its working qubit and targeting its
    own ancilla; if any singular value was zeroed, X on a shared ancilla
    followed by an open-controlled Toffoli from the zeroed working qubits;
    circuit for ``L``. All ancillas are post-selected on 0.
    """
    policy = policy or TruncationPolicy()
    u = check_contraction(u, contraction_tol, "u")
    n = u.shape[0]
    dec = svd(u)
    trunc = truncate_singular_values(np.minimum(dec.sigma, 1.0), policy)
    s, r = trunc.s, trunc.r
    n_cry = r - s
    n_anc = n_cry + (1 if r < n else 0)

    right, n_gr = _unitary_gates(dec.R, tol, prune=True)
    left, n_gl = _unitary_gates(dec.L, tol, prune=True)
    block = _unitary_layer_count(n)

    gates = list(right)
    ancilla_map: dict[int, int] = {}
    for k, i in enumerate(range(s + 1, r + 1)):
        a = n + 1 + k
        ancilla_map[i] = a
        gates.append((block, Gate.cry(i, a, 2.0 * math.acos(trunc.sigma_tilde[i - 1]))))
    if r < n:
        a = n + 1 + n_cry
        ancilla_map[r + 1] = a
        gates.append((block + 1, Gate.x(a)))
        gates.append((block + 1, Gate.mcx_open(range(r + 1, n + 1), a)))
    gates.extend((layer + block + 2, g) for layer, g in left)

    circ = Circuit(n, n_anc, gates, postselect=list(range(n + 1, n + n_anc + 1)))
    report = SynthesisReport(
        givens_count=n_gr + n_gl,
        phase_count=circ.count("PHASE"),
        cry_count=n_cry,
        mcx_width=n - r if r < n else 0,
        givens_layer_depth=2 * (len(parallel_elimination_order(n).layers) if n >= 2 else 0),
        s=s,
        r=r,
        ancilla_count=n_anc,
        truncation_bound=trunc.bound,
    )
    enc = BlockEncodedCircuit(
        circ, s, r, ancilla_map, trunc.bound, dec.sigma, trunc.sigma_tilde, dec.L, dec.R, report
    )
    return enc, report


def overlap_matrix(psi_basis, phi_basis) -> np.ndarray:
    """``u[i, j] = <psi_i|phi_j>`` from orbital coefficient columns in a common frame."""
    a = np.asarray(psi_basis, dtype=np.complex128)
    b = np.asarray(phi_basis, dtype=np.complex128)
    if a.ndim != 2 or a.shape != b.shape:
        raise InvalidSizeError(f"basis matrices must share a 2-D shape, got {a.shape} and {b.shape}")
    return a.conj().T @ b


def synth_xi(
    u_overlap=None,
    policy: TruncationPolicy | None = None,
    *,
    psi_basis=None,
    phi_basis=None,
    tol: float = DEFAULT_TOL,
) -> BlockEncodedCircuit:
    """Block encoding of the operator mapping ``phi``-encoded states onto ``psi`` ones.

    Either pass the overlap matrix ``u[i, j] = <psi_i|phi_j>`` directly, or the
    two orbital sets as columns so it can be formed here.
    """
    if u_overlap is None:
        if psi_basis is None or phi_basis is None:
            raise ValueError("need u_overlap or both psi_basis and phi_basis")
        u_overlap = overlap_matrix(psi_basis, phi_basis)
    enc, _ = synth_nonunitary(u_overlap, policy, tol)
    return enc


# ---------------------------------------------------------------------------
# State preparation (used to feed the Hadamard test)
# ---------------------------------------------------------------------------

def _controlled_on_pattern(g: Gate, pattern: dict[int, int]) -> list[Gate]:
    """``g`` controlled on qubits matching ``pattern`` (bit 0 via X conjugation)."""
    flips = [Gate.x(q) for q, v in pattern.items() if v == 0]
    return flips + [g.with_controls(*pattern)] + flips


def state_preparation(amplitudes, zero_tol: float = 1e-15) -> Circuit:
    """Circuit taking ``|0...0>`` to the normalized ``amplitudes``.

    A binary tree of multi-controlled RY rotations sets the moduli; one
    multi-controlled phase per basis state then sets the complex phases.
    """
    amps = np.asarray(amplitudes, dtype=np.complex128).ravel()
    n = check_fock_dim(amps.size, "amplitudes")
    nrm = np.linalg.norm(amps)
    if nrm == 0:
        raise ValueError("cannot prepare the zero vector")
    amps = amps / nrm
    gates: list[Gate] = []
    mod2 = np.abs(amps) ** 2
    for k in range(1, n + 1):
        weights = mod2.reshape(1 << (k - 1), 2, -1).sum(axis=2)
        for prefix in range(1 << (k - 1)):
            w0, w1 = weights[prefix]
            if w1 <= zero_tol ** 2:
                continue
            theta = 2.0 * math.atan2(math.sqrt(w1), math.sqrt(w0))
            pattern = {q: (prefix >> (k - 1 - q)) & 1 for q in range(1, k)}
            gates.extend(_controlled_on_pattern(Gate.ry(k, theta), pattern))
    for idx in np.flatnonzero(np.abs(amps) > zero_tol):
        ph = float(np.angle(amps[idx]))
        if ph == 0.0:
            continue
        bits = {q: (int(idx) >> (n - q)) & 1 for q in range(1, n + 1)}
        last = bits.pop(n)
        flip = [Gate.x(n)] if last == 0 else []
        gates.extend(flip + _controlled_on_pattern(Gate.phase(n, -ph), bits) + flip)
    return Circuit(n, 0, [(k, g) for k, g in enumerate(gates)])


# ---------------------------------------------------------------------------
# Inner-product circuits
# ---------------------------------------------------------------------------

def _xi_mapping(xi: BlockEncodedCircuit, working: list[int], block: list[int]) -> dict[int, int]:
    mapping = {i + 1: q for i, q in enumerate(working)}
    mapping.update({xi.n + 1 + k: q for k, q in enumerate(block)})
    return mapping


def _check_xi(xi: BlockEncodedCircuit, n: int) -> None:
    if xi.circuit.n_working != n:
        raise RegisterMismatchError(f"block encoding acts on {xi.circuit.n_working} modes, expected {n}")


def build_swap_test(xi: BlockEncodedCircuit, n: int) -> Circuit:
    """Swap test between ``|Psi^q>`` and the block-encoded image of ``|Phi^q>``.

    Qubit layout: Psi register ``1..n``, Phi register ``n+1..2n``, swap
    ancilla ``2n+1``, block ancillas after it. With every ancilla measured,
    ``2 P(all zero) - P(block ancillas zero) = |<Psi|Phi>|^2``.
    """
    _check_xi(xi, n)
    a = xi.n_ancilla
    psi = list(range(1, n + 1))
    phi = list(range(n + 1, 2 * n + 1))
    swap = 2 * n + 1
    block = list(range(2 * n + 2, 2 * n + 2 + a))
    c = Circuit(2 * n, 1 + a, registers={"psi": psi, "phi": phi, "swap": [swap], "block": block})
    c.append(Gate.h(swap), 0)
    c.extend(xi.circuit, _xi_mapping(xi, phi, block), layer_offset=1)
    layer = c.last_layer + 1
    for p, f in zip(psi, phi):
        c.append(Gate.swap(p, f).with_controls(swap), layer)
        layer += 1
    c.append(Gate.h(swap), layer)
    return c


def build_alt_swap_test(xi: BlockEncodedCircuit, n: int) -> Circuit:
    """Swap test needing a single terminal measurement of the swap ancilla.

    An extra qubit (last) is flipped in the swapped branch whenever the
    block ancillas are not all ``|0>``, which removes those components from
    the interference: ``P(swap = 0) = (1 + |<Psi|Phi>|^2) / 2``. The flip is
    a CNOT from the swap ancilla undone by an open-controlled Toffoli on the
    block ancillas (plus the swap ancilla, taken closed via X conjugation).
    """
    c = build_swap_test(xi, n)
    swap = c.registers["swap"][0]
    block = c.registers["block"]
    extra = c.n_qubits + 1
    c.n_ancilla += 1
    c.registers["extra"] = [extra]
    h_final = c.gates.pop()
    layer = h_final[0]
    if block:
        c.append(Gate.cnot(swap, extra), layer)
        c.append(Gate.x(swap), layer + 1)
        c.append(Gate.mcx_open([swap, *block], extra), layer + 1)
        c.append(Gate.x(swap), layer + 1)
        layer += 2
    c.append(h_final[1], layer)
    return c


def build_hadamard_test(
    u_psi_prep: Circuit,
    u_phi_prep: Circuit,
    xi: BlockEncodedCircuit,
    part: str = "real",
) -> Circuit:
    """Hadamard test whose ``P(0) - P(1)`` is Re or Im of ``<Psi^q| Xi |Phi^q>``.

    Layout: working ``1..n``, block ancillas ``n+1..n+a``, control last. The
    block ancillas need no post-selection: the control's ``|0>`` branch
    keeps them at ``|0_a>``, so the interference term already projects.
    """
    if part not in ("real", "imag"):
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    n = xi.n
    for name, prep in (("u_psi_prep", u_psi_prep), ("u_phi_prep", u_phi_prep)):
        if prep.n_working != n:
            raise RegisterMismatchError(f"{name} acts on {prep.n_working} qubits, expected {n}")
        if prep.n_ancilla or prep.postselect:
            raise ValueError(f"{name} must be a unitary circuit without ancillas")
    a = xi.n_ancilla
    ctrl = n + a + 1
    work = list(range(1, n + 1))
    block = list(range(n + 1, n + a + 1))
    c = Circuit(n, a + 1, registers={"work": work, "block": block, "control": [ctrl]})
    c.append(Gate.h(ctrl), 0)
    layer = 1
    stages = [
        (u_phi_prep, None),
        (xi.circuit, _xi_mapping(xi, work, block)),
        (u_psi_prep.inverse(), None),
    ]
    for sub, mapping in stages:
        for _, g in sub.gates:
            g = g.remap(mapping) if mapping else g
            c.append(g.with_controls(ctrl), layer)
            layer += 1
    if part == "imag":
        c.append(Gate.phase(ctrl, math.pi / 2), layer)
        layer += 1
    c.append(Gate.h(ctrl), layer)
    return c


# ---------------------------------------------------------------------------
# Exact (and sampled) evaluation of the inner-product circuits
# ---------------------------------------------------------------------------

def _normalized(state, n: int) -> tuple[np.ndarray, float]:
    amps = state.amplitudes if isinstance(state, ManyBodyState) else np.asarray(state, dtype=np.complex128)
    amps = np.asarray(amps, dtype=np.complex128).ravel()
    if amps.size != 1 << n:
        raise RegisterMismatchError(f"state has {amps.size} amplitudes, expected {1 << n}")
    nrm = float(np.linalg.norm(amps))
    if nrm == 0:
        raise ValueError("state has zero norm")
    return amps / nrm, nrm


def run_swap_test(psi, phi, xi: BlockEncodedCircuit, alternative: bool = False,
                  shots: int = 0, seed: int = 0) -> dict:
    """Simulate a swap-test circuit and derive ``|<Psi|Phi>|``.

    Returns the exact probabilities, the modulus derived from them and, when
    ``shots > 0``, the same estimate from seeded samples.
    """
    n = xi.n
    a_psi, n_psi = _normalized(psi, n)
    a_phi, n_phi = _normalized(phi, n)
    circ = build_alt_swap_test(xi, n) if alternative else build_swap_test(xi, n)
    state = prepare_product(a_psi, a_phi, m=circ.n_qubits)
    apply(circ, state)
    swap = circ.registers["swap"][0]
    block = circ.registers["block"]
    scale = n_psi * n_phi
    if alternative:
        p0 = outcome_probability(state, {swap: 0})
        out = {"p_swap0": p0, "modulus": scale * math.sqrt(max(0.0, 2 * p0 - 1))}
        if shots:
            counts = sample(state, [swap], shots, seed)
            f0 = counts.get("0", 0) / shots
            out["sampled_modulus"] = scale * math.sqrt(max(0.0, 2 * f0 - 1))
        return out
    p_joint = outcome_probability(state, {swap: 0, **{q: 0 for q in block}})
    p_block = outcome_probability(state, {q: 0 for q in block})
    out = {
        "p_all_zero": p_joint,
        "p_block_zero": p_block,
        "joint": marginal_distribution(state, [swap, *block]),
        "modulus": scale * math.sqrt(max(0.0, 2 * p_joint - p_block)),
    }
    if shots:
        counts = sample(state, [swap, *block], shots, seed)
        zeros = "0" * len(block)
        fj = counts.get("0" + zeros, 0) / shots
        fb = (counts.get("0" + zeros, 0) + counts.get("1" + zeros, 0)) / shots
        out["sampled_modulus"] = scale * math.sqrt(max(0.0, 2 * fj - fb))
    return out


def run_hadamard_test(psi, phi, xi: BlockEncodedCircuit, shots: int = 0, seed: int = 0) -> dict:
    """Real and imaginary Hadamard tests giving ``<Psi|Phi>`` (psi conjugated)."""
    n = xi.n
    a_psi, n_psi = _normalized(psi, n)
    a_phi, n_phi = _normalized(phi, n)
    prep_psi = state_preparation(a_psi)
    prep_phi = state_preparation(a_phi)
    out: dict = {}
    value = 0j
    for part in ("real", "imag"):
        circ = build_hadamard_test(prep_psi, prep_phi, xi, part)
        state = StateVector(circ.n_qubits, np.eye(1, 1 << circ.n_qubits, 0, dtype=np.complex128))
        apply(circ, state)
        ctrl = circ.registers["control"][0]
        p0 = outcome_probability(state, {ctrl: 0})
        est = n_psi * n_phi * (2 * p0 - 1)
        out[f"p0_{part}"] = p0
        out[part] = est
        value += est if part == "real" else 1j * est
        if shots:
            counts = sample(state, [ctrl], shots, seed + (part == "imag"))
            out[f"sampled_{part}"] = n_psi * n_phi * (2 * counts.get("0", 0) / shots - 1)
    out["value"] = value
    out["modulus"] = abs(value)
    return out
