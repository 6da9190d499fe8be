"""Gate-level circuit IR, dense realization, depth metrics and JSON I/O.

Qubits are 1-based over the combined register: working qubits
``1..n_working`` followed by ancillas. Qubit 1 is the most significant bit of
a basis-state index.

Gate conventions:

* ``RY(theta) = [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]``
* ``PHASE(phi) = diag(1, exp(-i phi))``, i.e. the encoded single-mode phase
  rotation ``exp(-i phi n_q)``. ``PHASE(pi/2)`` is S-dagger.
* ``CNOT`` and ``CRY`` list the control first.
* ``MCX_OPEN`` lists its (open) controls first and the target last; it flips
  the target when every control is ``|0>``.
* Any gate may carry extra closed ``controls``; this is how controlled
  sub-circuits (Hadamard test, controlled swaps) are expressed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import CircuitParseError, InvalidSizeError

MAX_MATRIX_QUBITS = 14

_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)

# op name -> (number of listed qubits or None for variadic, takes an angle)
OPS = {
    "X": (1, False),
    "H": (1, False),
    "RY": (1, True),
    "PHASE": (1, True),
    "CNOT": (2, False),
    "CRY": (2, True),
    "MCX_OPEN": (None, False),
    "SWAP": (2, False),
}


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def phase_matrix(phi: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(-1j * phi)]], dtype=np.complex128)


@dataclass(frozen=True)
class Gate:
    op: str
    qubits: tuple[int, ...]
    angle: float | None = None
    controls: tuple[int, ...] = ()

    def __post_init__(self):
        if self.op not in OPS:
            raise InvalidSizeError(f"unknown gate op {self.op!r}")
        arity, has_angle = OPS[self.op]
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        if arity is not None and len(self.qubits) != arity:
            raise InvalidSizeError(f"{self.op} takes {arity} qubits, got {self.qubits}")
        if self.op == "MCX_OPEN" and len(self.qubits) < 1:
            raise InvalidSizeError("MCX_OPEN needs a target")
        if has_angle != (self.angle is not None):
            raise InvalidSizeError(f"{self.op} {'needs' if has_angle else 'takes no'} angle")
        if has_angle:
            object.__setattr__(self, "angle", float(self.angle))
        if len(set(self.support)) != len(self.support):
            raise InvalidSizeError(f"{self.op} acts on repeated qubits {self.support}")

    # factories ---------------------------------------------------------
    @classmethod
    def x(cls, q: int) -> "Gate":
        return cls("X", (q,))

    @classmethod
    def h(cls, q: int) -> "Gate":
        return cls("H", (q,))

    @classmethod
    def ry(cls, q: int, theta: float) -> "Gate":
        return cls("RY", (q,), theta)

    @classmethod
    def phase(cls, q: int, phi: float) -> "Gate":
        return cls("PHASE", (q,), phi)

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls("CNOT", (control, target))

    @classmethod
    def cry(cls, control: int, target: int, theta: float) -> "Gate":
        return cls("CRY", (control, target), theta)

    @classmethod
    def mcx_open(cls, controls, target: int) -> "Gate":
        return cls("MCX_OPEN", (*controls, target))

    @classmethod
    def swap(cls, a: int, b: int) -> "Gate":
        return cls("SWAP", (a, b))

    # structure ---------------------------------------------------------
    @property
    def support(self) -> tuple[int, ...]:
        return self.controls + self.qubits

    def kernel(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], np.ndarray]:
        """``(closed_controls, open_controls, targets, local_matrix)``."""
        op, qs = self.op, self.qubits
        if op == "X":
            return self.controls, (), qs, _X
        if op == "H":
            return self.controls, (), qs, _H
        if op == "RY":
            return self.controls, (), qs, ry_matrix(self.angle)
        if op == "PHASE":
            return self.controls, (), qs, phase_matrix(self.angle)
        if op == "CNOT":
            return self.controls + qs[:1], (), qs[1:], _X
        if op == "CRY":
            return self.controls + qs[:1], (), qs[1:], ry_matrix(self.angle)
        if op == "MCX_OPEN":
            return self.controls, qs[:-1], qs[-1:], _X
        return self.controls, (), qs, _SWAP

    def inverse(self) -> "Gate":
        if self.angle is None:
            return self
        return Gate(self.op, self.qubits, -self.angle, self.controls)

    def with_controls(self, *extra: int) -> "Gate":
        return Gate(self.op, self.qubits, self.angle, tuple(extra) + self.controls)

    def remap(self, mapping) -> "Gate":
        return Gate(
            self.op,
            tuple(mapping[q] for q in self.qubits),
            self.angle,
            tuple(mapping[q] for q in self.controls),
        )


@dataclass
class SynthesisReport:
    givens_count: int = 0
    phase_count: int = 0
    cry_count: int = 0
    mcx_width: int = 0
    givens_layer_depth: int = 0
    s: int = 0
    r: int = 0
    ancilla_count: int = 0
    truncation_bound: float = 0.0

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "r": self.r,
            "ancillas": self.ancilla_count,
            "depth_givens_layers": self.givens_layer_depth,
            "gate_counts": {
                "givens": self.givens_count,
                "phase": self.phase_count,
                "cry": self.cry_count,
                "mcx_open_width": self.mcx_width,
            },
            "truncation_bound": self.truncation_bound,
        }


@dataclass
class Circuit:
    """Ordered ``(layer, gate)`` list over working + ancilla qubits.

    ``postselect`` lists ancilla qubits whose outcome must be 0.
    ``registers`` optionally names qubit groups for composite circuits.
    """

    n_working: int
    n_ancilla: int = 0
    gates: list[tuple[int, Gate]] = field(default_factory=list)
    postselect: list[int] = field(default_factory=list)
    registers: dict[str, list[int]] = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.n_working + self.n_ancilla

    @property
    def ancillas(self) -> list[int]:
        return list(range(self.n_working + 1, self.n_qubits + 1))

    def append(self, gate: Gate, layer: int) -> None:
        self.gates.append((layer, gate))

    def extend(self, other: "Circuit", mapping=None, layer_offset: int = 0) -> None:
        """Append another circuit's gates, relabelling qubits through ``mapping``."""
        for layer, g in other.gates:
            self.gates.append((layer + layer_offset, g.remap(mapping) if mapping else g))

    @property
    def last_layer(self) -> int:
        return max((layer for layer, _ in self.gates), default=-1)

    def inverse(self) -> "Circuit":
        """Adjoint circuit; layers are mirrored so they stay non-decreasing."""
        top = self.last_layer
        gates = [(top - layer, g.inverse()) for layer, g in reversed(self.gates)]
        return Circuit(self.n_working, self.n_ancilla, gates, [], dict(self.registers))

    def count(self, op: str) -> int:
        return sum(1 for _, g in self.gates if g.op == op)

    def validate(self) -> None:
        """Check qubit ranges, layer order, per-layer support and post-selection.

        Gates sharing a layer tag must have pairwise disjoint or nested
        supports: a Givens block (CNOT, CRY, CNOT, phases) lives on one qubit
        pair, while two different blocks of one layer may not touch.
        """
        m = self.n_qubits
        if self.n_working < 0 or self.n_ancilla < 0:
            raise InvalidSizeError("register sizes must be nonnegative")
        prev = None
        by_layer: dict[int, list[frozenset]] = {}
        for k, (layer, g) in enumerate(self.gates):
            if any(not 1 <= q <= m for q in g.support):
                raise InvalidSizeError(f"gate {k} ({g.op}) uses qubits outside 1..{m}")
            if prev is not None and layer < prev:
                raise InvalidSizeError(f"gate {k}: layer {layer} decreases after {prev}")
            prev = layer
            sup = frozenset(g.support)
            for other in by_layer.setdefault(layer, []):
                if sup & other and not (sup <= other or other <= sup):
                    raise InvalidSizeError(
                        f"gate {k} ({g.op} on {sorted(sup)}) overlaps another gate "
                        f"of layer {layer} on {sorted(other)}"
                    )
            by_layer[layer].append(sup)
        for q in self.postselect:
            if not self.n_working < q <= m:
                raise InvalidSizeError(f"post-selected qubit {q} is not an ancilla")


def emit_adjacent_givens(q: int, theta: float, phi_prev: float, phi_q: float) -> list[Gate]:
    """Gates realizing the adjoint complex Givens step on modes ``(q-1, q)``.

    The adjoint step is ``P_{q-1}(-phi_prev) P_q(-phi_q) R(-theta)``; in time
    order the rotation comes first (CNOT, CRY(2 theta), CNOT with the CNOTs
    targeting ``q-1``), then the two phase gates.
    """
    if q < 2:
        raise InvalidSizeError(f"adjacent Givens needs q >= 2, got {q}")
    return [
        Gate.cnot(q, q - 1),
        Gate.cry(q - 1, q, 2.0 * theta),
        Gate.cnot(q, q - 1),
        Gate.phase(q - 1, -phi_prev),
        Gate.phase(q, -phi_q),
    ]


# ---------------------------------------------------------------------------
# Dense realization (independent of the simulator's in-place kernels)
# ---------------------------------------------------------------------------

def _bit(idx: np.ndarray, q: int, m: int) -> np.ndarray:
    return (idx >> (m - q)) & 1


def gate_sparse(g: Gate, m: int) -> sp.csr_matrix:
    """Sparse ``2**m`` matrix of one gate, built by basis-index arithmetic."""
    closed, opened, targets, local = g.kernel()
    dim = 1 << m
    idx = np.arange(dim, dtype=np.int64)
    active = np.ones(dim, dtype=bool)
    for c in closed:
        active &= _bit(idx, c, m) == 1
    for c in opened:
        active &= _bit(idx, c, m) == 0
    k = len(targets)
    tmask = 0
    for t in targets:
        tmask |= 1 << (m - t)
    src = idx[active]
    base = src & ~tmask
    local_in = np.zeros(src.size, dtype=np.int64)
    for t in targets:
        local_in = (local_in << 1) | _bit(src, t, m)
    rows, cols, vals = [idx[~active]], [idx[~active]], [np.ones((~active).sum(), complex)]
    for out in range(1 << k):
        dst = base.copy()
        for pos, t in enumerate(targets):
            if (out >> (k - 1 - pos)) & 1:
                dst |= 1 << (m - t)
        amp = local[out, local_in]
        nz = amp != 0
        rows.append(dst[nz])
        cols.append(src[nz])
        vals.append(amp[nz])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def circuit_to_matrix(c: Circuit) -> np.ndarray:
    """Dense unitary of the whole circuit; post-selection is ignored."""
    m = c.n_qubits
    if m > MAX_MATRIX_QUBITS:
        raise InvalidSizeError(f"dense realization limited to {MAX_MATRIX_QUBITS} qubits, got {m}")
    out = np.eye(1 << m, dtype=np.complex128)
    for _, g in c.gates:
        out = gate_sparse(g, m) @ out
    return out


def projected_block(c: Circuit, ancillas=None) -> np.ndarray:
    """``<0_a| U |0_a>`` on the remaining qubits (ancillas default to all of them)."""
    m = c.n_qubits
    if m > MAX_MATRIX_QUBITS:
        raise InvalidSizeError(f"dense realization limited to {MAX_MATRIX_QUBITS} qubits, got {m}")
    anc = c.ancillas if ancillas is None else list(ancillas)
    idx = np.arange(1 << m)
    keep = np.ones(idx.size, dtype=bool)
    for a in anc:
        keep &= _bit(idx, a, m) == 0
    sel = idx[keep]
    # only the ancilla-zero input columns are propagated
    cols = np.zeros((1 << m, sel.size), dtype=np.complex128)
    cols[sel, np.arange(sel.size)] = 1.0
    for _, g in c.gates:
        cols = gate_sparse(g, m) @ cols
    return cols[sel]


def depth(c: Circuit, metric: str = "givens_layers") -> int:
    """Circuit depth.

    ``givens_layers``: distinct layer tags among CRY gates acting on two
    working qubits, i.e. encoded Givens rotations.
    ``primitive``: as-soon-as-possible packing of all gates into layers of
    disjoint support.
    """
    if metric == "givens_layers":
        return len({
            layer for layer, g in c.gates
            if g.op == "CRY" and all(q <= c.n_working for q in g.support)
        })
    if metric == "primitive":
        level: dict[int, int] = {}
        top = 0
        for _, g in c.gates:
            lv = 1 + max((level.get(q, 0) for q in g.support), default=0)
            for q in g.support:
                level[q] = lv
            top = max(top, lv)
        return top
    raise ValueError(f"unknown depth metric {metric!r}")


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

_TOP_FIELDS = {"n_working", "n_ancilla", "gates", "postselect", "registers"}
_GATE_FIELDS = {"layer", "op", "qubits", "angle", "controls"}


def circuit_to_json(c: Circuit) -> dict:
    gates = []
    for layer, g in c.gates:
        entry = {"layer": layer, "op": g.op, "qubits": list(g.qubits)}
        if g.angle is not None:
            entry["angle"] = g.angle
        if g.controls:
            entry["controls"] = list(g.controls)
        gates.append(entry)
    doc = {
        "n_working": c.n_working,
        "n_ancilla": c.n_ancilla,
        "gates": gates,
        "postselect": list(c.postselect),
    }
    if c.registers:
        doc["registers"] = {k: list(v) for k, v in c.registers.items()}
    return doc


def serialize(c: Circuit) -> bytes:
    return json.dumps(circuit_to_json(c)).encode()


def _int(v, where: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise CircuitParseError("expected an integer", where)
    return v


def _int_list(v, where: str) -> list[int]:
    if not isinstance(v, list):
        raise CircuitParseError("expected a list of integers", where)
    return [_int(x, f"{where}[{k}]") for k, x in enumerate(v)]


def circuit_from_json(doc) -> Circuit:
    if not isinstance(doc, dict):
        raise CircuitParseError("circuit document must be an object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise CircuitParseError(f"unknown fields {sorted(unknown)}")
    for key in ("n_working", "n_ancilla", "gates", "postselect"):
        if key not in doc:
            raise CircuitParseError(f"missing field {key!r}")
    c = Circuit(
        _int(doc["n_working"], "$.n_working"),
        _int(doc["n_ancilla"], "$.n_ancilla"),
        postselect=_int_list(doc["postselect"], "$.postselect"),
    )
    if not isinstance(doc["gates"], list):
        raise CircuitParseError("expected a list", "$.gates")
    for k, entry in enumerate(doc["gates"]):
        where = f"$.gates[{k}]"
        if not isinstance(entry, dict):
            raise CircuitParseError("gate must be an object", where)
        unknown = set(entry) - _GATE_FIELDS
        if unknown:
            raise CircuitParseError(f"unknown fields {sorted(unknown)}", where)
        for key in ("layer", "op", "qubits"):
            if key not in entry:
                raise CircuitParseError(f"missing field {key!r}", where)
        angle = entry.get("angle")
        if angle is not None and (not isinstance(angle, (int, float)) or isinstance(angle, bool)):
            raise CircuitParseError("angle must be a number", f"{where}.angle")
        try:
            g = Gate(
                entry["op"],
                tuple(_int_list(entry["qubits"], f"{where}.qubits")),
                angle,
                tuple(_int_list(entry.get("controls", []), f"{where}.controls")),
            )
        except InvalidSizeError as exc:
            raise CircuitParseError(str(exc), where) from exc
        c.append(g, _int(entry["layer"], f"{where}.layer"))
    if "registers" in doc:
        regs = doc["registers"]
        if not isinstance(regs, dict):
            raise CircuitParseError("expected an object", "$.registers")
        c.registers = {
            str(k): _int_list(v, f"$.registers.{k}") for k, v in regs.items()
        }
    try:
        c.validate()
    except InvalidSizeError as exc:
        raise CircuitParseError(str(exc)) from exc
    return c


def deserialize(data) -> Circuit:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, f"line {exc.lineno} col {exc.colno}") from exc
    return circuit_from_json(doc)
