import math

import numpy as np
import pytest

from wedgecirc.circuit import Circuit, Gate, circuit_to_matrix, depth, projected_block
from wedgecirc.exceptions import ContractionError, RegisterMismatchError, UnitarityError
from wedgecirc.fock import ManyBodyState, OccupationState, slater_overlap, state_overlap_oracle, wedge_oracle
from wedgecirc.linalg import random_contraction, random_unitary
from wedgecirc.sim import apply, outcome_probability, prepare_product
from wedgecirc.synth import (
    TruncationPolicy,
    build_alt_swap_test,
    build_hadamard_test,
    build_swap_test,
    overlap_matrix,
    run_hadamard_test,
    run_swap_test,
    state_preparation,
    synth_nonunitary,
    synth_unitary,
    synth_xi,
    truncate_singular_values,
)


def random_basis_pair(N, n, rng):
    def frame():
        z = rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))
        return np.linalg.qr(z)[0]

    return frame(), frame()


class TestSynthUnitary:
    def test_identity_prunes_to_empty(self):
        circ, report = synth_unitary(np.eye(4))
        assert circ.gates == []
        assert np.allclose(circuit_to_matrix(circ), np.eye(16))
        assert report.givens_count == 6

    def test_identity_unpruned_has_zero_angles(self):
        circ, _ = synth_unitary(np.eye(3), prune=False)
        assert circ.gates and all(g.angle in (None, 0.0) for _, g in circ.gates)

    def test_single_trailing_phase(self):
        phi = 0.7
        circ, _ = synth_unitary(np.diag([1, 1, np.exp(1j * phi)]))
        assert [(g.op, g.qubits) for _, g in circ.gates] == [("PHASE", (3,))]
        assert circ.gates[0][1].angle == pytest.approx(-phi)

    def test_random_5x5(self):
        u = random_unitary(5, 2024)
        circ, report = synth_unitary(u)
        assert np.linalg.norm(circuit_to_matrix(circ) - wedge_oracle(u)) < 1e-10
        assert report.givens_layer_depth == 7 == depth(circ)
        circ.validate()

    def test_n1(self):
        u = np.array([[np.exp(0.3j)]])
        circ, report = synth_unitary(u)
        assert np.allclose(circuit_to_matrix(circ), wedge_oracle(u))
        assert report.givens_layer_depth == 0

    @pytest.mark.parametrize("n", range(3, 9))
    def test_depth_and_counts(self, n):
        circ, report = synth_unitary(random_unitary(n, n))
        assert report.givens_layer_depth == 2 * n - 3 == depth(circ)
        assert circ.count("CRY") <= n * (n - 1) // 2
        assert report.givens_count == n * (n - 1) // 2

    def test_rejects_non_unitary(self):
        with pytest.raises(UnitarityError):
            synth_unitary(np.diag([1, 0.5]))

    def test_layers_replay_schedule_in_reverse(self):
        n = 5
        circ, _ = synth_unitary(random_unitary(n, 0))
        rows = {}
        for layer, g in circ.gates:
            if g.op == "CRY":
                rows.setdefault(layer, set()).add(g.qubits[1])
        # the last elimination step (row 5 of column 4) runs first
        assert rows[1] == {5} and rows[7] == {5}
        assert rows[3] == {3, 5} and rows[4] == {2, 4}


class TestTruncation:
    def test_mixed(self):
        res = truncate_singular_values([1 - 1e-9, 0.8, 1e-9], TruncationPolicy(1e-6))
        assert list(res.sigma_tilde) == [1, 0.8, 0]
        assert (res.s, res.r) == (1, 2)
        assert res.bound == pytest.approx(2e-9, rel=1e-6)

    def test_zero_epsilon(self):
        res = truncate_singular_values([1, 0.4, 0], TruncationPolicy(0))
        assert list(res.sigma_tilde) == [1, 0.4, 0] and res.bound == 0

    def test_all_ones(self):
        res = truncate_singular_values([1, 1, 1])
        assert (res.s, res.r, res.bound) == (3, 3, 0)

    def test_clamp_tiny_excess(self):
        assert truncate_singular_values([1 + 5e-13]).sigma_tilde[0] == 1

    def test_contraction_violation(self):
        with pytest.raises(ContractionError):
            truncate_singular_values([1.01])

    def test_must_be_sorted(self):
        with pytest.raises(ValueError):
            truncate_singular_values([0.2, 0.5])

    @pytest.mark.parametrize("eps", [-0.1, 0.5, 0.7])
    def test_policy_range(self, eps):
        with pytest.raises(ValueError):
            TruncationPolicy(eps)

    def test_ancilla_accounting_random_spectra(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            n = int(rng.integers(1, 9))
            pool = np.array([0, 1e-8, 0.3, 0.6, 1 - 1e-8, 1])
            sig = np.sort(rng.choice(pool, n))[::-1]
            res = truncate_singular_values(sig)
            assert res.s == int(np.sum(sig >= 1 - 1e-6))
            assert res.r == int(np.sum(sig > 1e-6))
            expected_anc = (res.r - res.s) + (1 if res.r < n else 0)
            assert expected_anc == (res.r - res.s + 1 if res.r < n else res.r - res.s)


class TestSynthNonunitary:
    def test_unitary_input_has_no_ancillas(self):
        u = random_unitary(3, 5)
        enc, report = synth_nonunitary(u)
        assert enc.n_ancilla == 0 and report.ancilla_count == 0
        assert np.allclose(circuit_to_matrix(enc.circuit), wedge_oracle(u), atol=1e-10)

    def test_half(self):
        enc, report = synth_nonunitary(np.array([[0.5]]))
        crys = [g for _, g in enc.circuit.gates if g.op == "CRY"]
        assert len(crys) == 1 and crys[0].qubits == (1, 2)
        assert crys[0].angle == pytest.approx(2 * math.pi / 3)
        assert report.ancilla_count == 1 and enc.circuit.postselect == [2]

    def test_eight_mode_layout(self):
        sig = [1, 1, 0.9, 0.6, 0.2, 0, 0, 0]
        enc, report = synth_nonunitary(random_contraction(8, 0, sig))
        assert (report.s, report.r, report.ancilla_count) == (2, 5, 4)
        assert enc.ancilla_map == {3: 9, 4: 10, 5: 11, 6: 12}
        mcx = [g for _, g in enc.circuit.gates if g.op == "MCX_OPEN"]
        assert mcx == [Gate.mcx_open([6, 7, 8], 12)]
        assert enc.circuit.postselect == [9, 10, 11, 12]
        assert report.mcx_width == 3 and report.cry_count == 3
        enc.circuit.validate()

    def test_zero_band_only(self):
        enc, report = synth_nonunitary(np.diag([1.0, 0.0]))
        assert report.ancilla_count == 1 and report.r == 1 and report.s == 1
        assert np.allclose(projected_block(enc.circuit), wedge_oracle(np.diag([1.0, 0.0])), atol=1e-14)

    def test_zero_matrix(self):
        enc, report = synth_nonunitary(np.zeros((2, 2)))
        assert report.r == 0
        block = projected_block(enc.circuit)
        assert np.allclose(block, np.diag([1, 0, 0, 0]), atol=1e-14)

    @pytest.mark.parametrize("seed", range(15))
    def test_exactness(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        sig = np.sort(rng.choice([1.0, 1 - 1e-9, 0.7, 0.3, 1e-9, 0.0], n))[::-1]
        u = random_contraction(n, rng, sig)
        enc, report = synth_nonunitary(u)
        assert np.abs(projected_block(enc.circuit) - wedge_oracle(enc.u_tilde)).max() < 1e-10
        gap = np.linalg.norm(wedge_oracle(u) - wedge_oracle(enc.u_tilde), 2)
        assert gap <= report.truncation_bound + 1e-12
        assert report.givens_layer_depth == 2 * max(0, 2 * n - 3)
        enc.circuit.validate()

    def test_rejects_expansion(self):
        with pytest.raises(ContractionError):
            synth_nonunitary(2 * np.eye(2))

    def test_large_epsilon_rounds_up(self):
        enc, report = synth_nonunitary(np.diag([0.75, 0.75]), TruncationPolicy(0.3))
        assert list(enc.sigma_tilde) == [1, 1] and report.ancilla_count == 0


class TestXi:
    def test_identical_bases(self):
        psi, _ = random_basis_pair(5, 3, np.random.default_rng(0))
        xi = synth_xi(psi_basis=psi, phi_basis=psi)
        assert xi.n_ancilla == 0
        assert np.allclose(circuit_to_matrix(xi.circuit), np.eye(8), atol=1e-10)

    def test_unitary_change_of_basis(self):
        psi, _ = random_basis_pair(4, 4, np.random.default_rng(1))
        phi = psi @ random_unitary(4, 2)
        assert synth_xi(psi_basis=psi, phi_basis=phi).n_ancilla == 0

    def test_full_oracle_sweep(self):
        rng = np.random.default_rng(2)
        psi, phi = random_basis_pair(7, 4, rng)
        u = overlap_matrix(psi, phi)
        xi = synth_xi(u)
        block = projected_block(xi.circuit)
        for i in range(16):
            for j in range(16):
                expected = slater_overlap(OccupationState.from_index(i, 4), OccupationState.from_index(j, 4), u)
                assert abs(block[i, j] - expected) < 1e-10

    def test_needs_input(self):
        with pytest.raises(ValueError):
            synth_xi()


def _xi_identity(n):
    return synth_xi(np.eye(n))


class TestSwapTests:
    def test_identical_states(self):
        st = ManyBodyState.random(2, 0)
        res = run_swap_test(st, st, _xi_identity(2))
        assert res["p_all_zero"] == pytest.approx(1)
        assert run_swap_test(st, st, _xi_identity(2), alternative=True)["p_swap0"] == pytest.approx(1)

    def test_orthogonal_states(self):
        a = ManyBodyState.basis(OccupationState.from_string("10"))
        b = ManyBodyState.basis(OccupationState.from_string("01"))
        res = run_swap_test(a, b, _xi_identity(2))
        assert res["p_all_zero"] == pytest.approx(0.5)

    def test_plain_swap_relation(self):
        rng = np.random.default_rng(5)
        psi, phi = random_basis_pair(6, 3, rng)
        xi = synth_xi(psi_basis=psi, phi_basis=phi)
        a, b = ManyBodyState.random(3, 1), ManyBodyState.random(3, 2)
        ov = state_overlap_oracle(a, b, xi.u_tilde)
        res = run_swap_test(a, b, xi)
        xi_phi = np.linalg.norm(wedge_oracle(xi.u_tilde) @ b.amplitudes) ** 2
        assert res["p_block_zero"] == pytest.approx(xi_phi, abs=1e-12)
        assert res["p_all_zero"] == pytest.approx((xi_phi + abs(ov) ** 2) / 2, abs=1e-12)
        assert res["modulus"] == pytest.approx(abs(ov), abs=1e-10)

    def test_alt_agrees_with_plain(self):
        rng = np.random.default_rng(6)
        psi, phi = random_basis_pair(6, 3, rng)
        xi = synth_xi(psi_basis=psi, phi_basis=phi)
        a, b = ManyBodyState.random(3, 3), ManyBodyState.random(3, 4)
        plain = run_swap_test(a, b, xi)
        alt = run_swap_test(a, b, xi, alternative=True)
        assert alt["p_swap0"] == pytest.approx(
            0.5 + plain["p_all_zero"] - plain["p_block_zero"] / 2, abs=1e-12
        )

    def test_alt_without_block_ancillas_matches_plain(self):
        xi = _xi_identity(2)
        plain, alt = build_swap_test(xi, 2), build_alt_swap_test(xi, 2)
        assert [g for _, g in alt.gates] == [g for _, g in plain.gates]
        assert alt.n_qubits == plain.n_qubits + 1

    def test_register_mismatch(self):
        with pytest.raises(RegisterMismatchError):
            build_swap_test(_xi_identity(2), 3)

    def test_layouts_validate(self):
        rng = np.random.default_rng(7)
        psi, phi = random_basis_pair(5, 2, rng)
        xi = synth_xi(psi_basis=psi, phi_basis=phi)
        for c in (build_swap_test(xi, 2), build_alt_swap_test(xi, 2)):
            c.validate()
            assert c.registers["swap"] == [5]

    def test_sampled_estimate_is_seeded(self):
        st = ManyBodyState.random(2, 9)
        r1 = run_swap_test(st, st, _xi_identity(2), shots=2000, seed=3)
        r2 = run_swap_test(st, st, _xi_identity(2), shots=2000, seed=3)
        assert r1["sampled_modulus"] == r2["sampled_modulus"]


class TestHadamard:
    def test_state_preparation(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 3, 4):
            v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
            v[rng.integers(1 << n)] = 0
            v /= np.linalg.norm(v)
            prep = state_preparation(v)
            prep.validate()
            assert np.abs(circuit_to_matrix(prep)[:, 0] - v).max() < 1e-12

    def test_identity_everything(self):
        idle = Circuit(1)
        circ = build_hadamard_test(idle, idle, _xi_identity(1), "real")
        s = prepare_product([1, 0], m=circ.n_qubits)
        apply(circ, s)
        assert outcome_probability(s, {circ.n_qubits: 0}) == pytest.approx(1)

    def test_orthogonal_single_mode(self):
        prep_phi = Circuit(1, 0, [(0, Gate.x(1))])
        circ = build_hadamard_test(Circuit(1), prep_phi, _xi_identity(1), "real")
        s = prepare_product([1, 0], m=circ.n_qubits)
        apply(circ, s)
        assert 2 * outcome_probability(s, {circ.n_qubits: 0}) - 1 == pytest.approx(0, abs=1e-15)

    @pytest.mark.parametrize("seed", range(3))
    def test_random_overlap(self, seed):
        rng = np.random.default_rng(seed)
        psi, phi = random_basis_pair(7, 4, rng)
        xi = synth_xi(psi_basis=psi, phi_basis=phi)
        a, b = ManyBodyState.random(4, rng), ManyBodyState.random(4, rng)
        ov = state_overlap_oracle(a, b, xi.u_tilde)
        res = run_hadamard_test(a, b, xi)
        assert abs(res["value"] - ov) < 1e-8
        assert abs(res["modulus"] - abs(ov)) < 1e-8

    def test_unnormalized_inputs_rescale(self):
        xi = _xi_identity(2)
        a = ManyBodyState(2, 3 * ManyBodyState.random(2, 1).amplitudes)
        assert run_hadamard_test(a, a, xi)["value"] == pytest.approx(9, abs=1e-10)

    def test_rejects_bad_preparations(self):
        xi = _xi_identity(2)
        with pytest.raises(RegisterMismatchError):
            build_hadamard_test(Circuit(1), Circuit(2), xi)
        with pytest.raises(ValueError):
            build_hadamard_test(Circuit(2, 1), Circuit(2), xi)
        with pytest.raises(ValueError):
            build_hadamard_test(Circuit(2), Circuit(2), xi, "phase")
