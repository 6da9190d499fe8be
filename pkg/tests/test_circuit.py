import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wedgecirc.circuit import (
    Circuit,
    Gate,
    circuit_from_json,
    circuit_to_json,
    circuit_to_matrix,
    depth,
    deserialize,
    emit_adjacent_givens,
    phase_matrix,
    projected_block,
    ry_matrix,
    serialize,
)
from wedgecirc.exceptions import CircuitParseError, InvalidSizeError
from wedgecirc.synth import TruncationPolicy, synth_nonunitary, synth_unitary
from wedgecirc.linalg import random_contraction, random_unitary


def encoded_rotation(theta):
    """Reference 4x4 matrix of the encoded real rotation on an adjacent pair."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1]], dtype=complex)


def block_matrix(gates, m=2):
    return circuit_to_matrix(Circuit(m, 0, [(0, g) for g in gates]))


class TestGateMatrices:
    def test_empty(self):
        assert np.array_equal(circuit_to_matrix(Circuit(2)), np.eye(4))

    def test_cnot_control_on_first_qubit(self):
        expected = np.eye(4)[[0, 1, 3, 2]]
        assert np.array_equal(block_matrix([Gate.cnot(1, 2)]), expected)

    def test_ry_and_phase(self):
        assert np.allclose(block_matrix([Gate.ry(1, 0.4)], 1), ry_matrix(0.4))
        assert np.allclose(block_matrix([Gate.phase(1, math.pi / 2)], 1), np.diag([1, -1j]))
        assert np.allclose(phase_matrix(0.3), np.diag([1, np.exp(-0.3j)]))

    def test_mcx_open(self):
        m = block_matrix([Gate.mcx_open([1, 2], 3)], 3)
        assert np.array_equal(m, np.eye(8)[[1, 0, 2, 3, 4, 5, 6, 7]])

    def test_controlled_swap(self):
        m = block_matrix([Gate.swap(2, 3).with_controls(1)], 3)
        assert np.array_equal(m, np.eye(8)[[0, 1, 2, 3, 4, 6, 5, 7]])

    @pytest.mark.parametrize("theta", np.random.default_rng(0).uniform(-math.pi, math.pi, 20))
    def test_cnot_cry_cnot_is_encoded_rotation(self, theta):
        # CNOT(ctrl 2, tgt 1) CRY(ctrl 1, tgt 2, -2 theta) CNOT(ctrl 2, tgt 1)
        gates = [Gate.cnot(2, 1), Gate.cry(1, 2, -2 * theta), Gate.cnot(2, 1)]
        assert np.abs(block_matrix(gates) - encoded_rotation(theta)).max() < 1e-14

    def test_emit_zero_block_is_identity(self):
        assert np.allclose(block_matrix(emit_adjacent_givens(2, 0, 0, 0)), np.eye(4))

    def test_emit_quarter_turn(self):
        m = block_matrix(emit_adjacent_givens(2, math.pi / 4, 0, 0))
        assert np.abs(m - encoded_rotation(-math.pi / 4)).max() < 1e-15

    def test_emit_phase_only(self):
        m = block_matrix(emit_adjacent_givens(2, 0, math.pi / 2, 0))
        assert np.allclose(m, np.kron(phase_matrix(-math.pi / 2), np.eye(2)))

    def test_emit_rejects_q1(self):
        with pytest.raises(InvalidSizeError):
            emit_adjacent_givens(1, 0, 0, 0)

    def test_gate_validation(self):
        with pytest.raises(InvalidSizeError):
            Gate.cnot(1, 1)
        with pytest.raises(InvalidSizeError):
            Gate("RY", (1,))
        with pytest.raises(InvalidSizeError):
            Gate.mcx_open([2, 3], 3)


class TestCircuitStructure:
    def test_layer_overlap_rejected(self):
        c = Circuit(3, 0, [(0, Gate.cnot(1, 2)), (0, Gate.cnot(2, 3))])
        with pytest.raises(InvalidSizeError):
            c.validate()

    def test_nested_supports_share_layer(self):
        Circuit(2, 0, [(0, Gate.cnot(2, 1)), (0, Gate.phase(1, 0.1))]).validate()

    def test_decreasing_layer_rejected(self):
        with pytest.raises(InvalidSizeError):
            Circuit(2, 0, [(1, Gate.x(1)), (0, Gate.x(2))]).validate()

    def test_postselect_must_be_ancilla(self):
        with pytest.raises(InvalidSizeError):
            Circuit(2, 1, [], postselect=[1]).validate()

    def test_inverse(self):
        circ, _ = synth_unitary(random_unitary(3, 1))
        m = circuit_to_matrix(circ)
        assert np.allclose(circuit_to_matrix(circ.inverse()), m.conj().T)
        circ.inverse().validate()

    def test_depth_metrics(self):
        assert depth(Circuit(2)) == 0
        assert depth(Circuit(2), "primitive") == 0
        assert depth(Circuit(2, 0, [(0, Gate.x(1)), (0, Gate.x(2))]), "primitive") == 1
        with pytest.raises(ValueError):
            depth(Circuit(1), "bogus")

    def test_n5_unitary_has_seven_layers(self):
        circ, _ = synth_unitary(random_unitary(5, 0))
        assert depth(circ) == 7

    def test_random_circuits_unitary(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            circ = _random_circuit(rng, 4)
            m = circuit_to_matrix(circ)
            assert np.linalg.norm(m.conj().T @ m - np.eye(16)) < 1e-12

    def test_projected_block_matches_full_matrix(self):
        enc, _ = synth_nonunitary(random_contraction(2, 4), TruncationPolicy())
        full = circuit_to_matrix(enc.circuit)
        m = enc.circuit.n_qubits
        sel = [i for i in range(1 << m) if i % (1 << enc.n_ancilla) == 0]
        assert np.allclose(projected_block(enc.circuit), full[np.ix_(sel, sel)], atol=1e-15)


def _random_circuit(rng, m, count=25):
    gates = []
    for k in range(count):
        qs = [int(q) for q in rng.permutation(np.arange(1, m + 1))]
        kind = rng.integers(8)
        angle = float(rng.uniform(-4, 4))
        g = [
            Gate.x(qs[0]), Gate.h(qs[0]), Gate.ry(qs[0], angle), Gate.phase(qs[0], angle),
            Gate.cnot(qs[0], qs[1]), Gate.cry(qs[0], qs[1], angle),
            Gate.mcx_open(qs[:2], qs[2]), Gate.swap(qs[0], qs[1]).with_controls(qs[2]),
        ][kind]
        gates.append((k, g))
    return Circuit(m - 1, 1, gates, postselect=[m])


class TestSerialization:
    def test_roundtrip_block_encoding(self):
        sig = [1, 1, 0.8, 0.5, 0.3, 0, 0, 0]
        enc, _ = synth_nonunitary(random_contraction(8, 2, sig), TruncationPolicy())
        c = enc.circuit
        back = deserialize(serialize(c))
        assert back == c

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_angle_bit_exact(self, angle):
        c = Circuit(1, 0, [(0, Gate.ry(1, angle))])
        assert deserialize(serialize(c)).gates[0][1].angle == angle

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_roundtrip(self, seed):
        c = _random_circuit(np.random.default_rng(seed), 4)
        assert deserialize(serialize(c)) == c

    def test_missing_field(self):
        doc = circuit_to_json(Circuit(1))
        del doc["n_working"]
        with pytest.raises(CircuitParseError, match="n_working"):
            circuit_from_json(doc)

    def test_unknown_fields(self):
        doc = circuit_to_json(Circuit(1, 0, [(0, Gate.x(1))]))
        doc["gates"][0]["colour"] = "red"
        with pytest.raises(CircuitParseError) as exc:
            circuit_from_json(doc)
        assert exc.value.location == "$.gates[0]"
        with pytest.raises(CircuitParseError):
            circuit_from_json({**circuit_to_json(Circuit(1)), "extra": 0})

    def test_bad_angle_location(self):
        doc = circuit_to_json(Circuit(1, 0, [(0, Gate.ry(1, 0.1))]))
        doc["gates"][0]["angle"] = "0.1"
        with pytest.raises(CircuitParseError) as exc:
            circuit_from_json(doc)
        assert exc.value.location == "$.gates[0].angle"

    def test_malformed_json(self):
        with pytest.raises(CircuitParseError):
            deserialize(b"{not json")

    def test_out_of_range_qubit(self):
        doc = circuit_to_json(Circuit(1, 0, [(0, Gate.x(1))]))
        doc["gates"][0]["qubits"] = [5]
        with pytest.raises(CircuitParseError):
            circuit_from_json(doc)
