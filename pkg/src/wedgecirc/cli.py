"""Command-line front end.

Every command reads JSON files, writes one JSON document (stdout or
``--output``) and exits with 0 on success, 2 on invalid input, 3 when a
post-selection has zero probability and 4 when a synthesized artifact fails
its own oracle check. Output carries no timestamps, so reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .circuit import MAX_MATRIX_QUBITS, Gate, circuit_to_json, circuit_to_matrix, deserialize, projected_block
from .exceptions import (
    ImpossibleOutcomeError,
    InvalidSizeError,
    InvariantError,
    RegisterMismatchError,
    WedgeCircError,
)
from .fock import (
    MAX_THOULESS_MODES,
    ManyBodyState,
    read_state,
    state_overlap_oracle,
    thouless_oracle,
    wedge_oracle,
)
from .linalg import givens_qr, matrix_to_json, random_contraction, random_unitary, read_matrix, svd
from .sim import PROBABILITY_FLOOR, apply, outcome_probability, postselect_zero, prepare_product, sample
from .synth import (
    TruncationPolicy,
    build_swap_test,
    run_hadamard_test,
    run_swap_test,
    synth_nonunitary,
    synth_unitary,
    synth_xi,
)
from .validation import DEFAULT_TOL, check_unitary

EXIT_OK, EXIT_INPUT, EXIT_POSTSELECT, EXIT_INVARIANT = 0, 2, 3, 4
ORACLE_TOL = 1e-10
MAX_VERIFY_MODES = 6


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _emit(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_qr(args) -> dict:
    u = check_unitary(read_matrix(args.input), args.tolerance, "input")
    qr = givens_qr(u, args.tolerance)
    err = float(np.linalg.norm(qr.reconstruct() - u))
    return {
        "n": qr.n,
        "steps": [
            {"layer": s.layer, "p": s.p, "q": s.q, "column": s.column,
             "theta": s.theta, "phi_p": s.phi_p, "phi_q": s.phi_q}
            for s in qr.steps
        ],
        "final_phase": qr.final_phase,
        "reconstruction_error": err,
    }


def cmd_svd(args) -> dict:
    u = read_matrix(args.input)
    dec = svd(u)
    return {
        "sigma": [float(x) for x in dec.sigma],
        "L": matrix_to_json(dec.L),
        "R": matrix_to_json(dec.R),
        "reconstruction_error": float(np.linalg.norm(dec.reconstruct() - u)),
    }


def cmd_synth_unitary(args) -> dict:
    u = check_unitary(read_matrix(args.input), args.tolerance, "input")
    circ, report = synth_unitary(u, args.tolerance)
    doc = {"circuit": circuit_to_json(circ), "report": report.to_json()}
    if circ.n_qubits <= 8:
        err = float(np.linalg.norm(circuit_to_matrix(circ) - wedge_oracle(u)))
        doc["oracle_error"] = err
        if err > ORACLE_TOL:
            raise InvariantError(f"unitary circuit deviates from the wedge oracle by {err:.3e}")
    return doc


def cmd_synth_nonunitary(args) -> dict:
    u = read_matrix(args.input)
    enc, report = synth_nonunitary(u, TruncationPolicy(args.epsilon), args.tolerance, args.tolerance)
    doc = {
        "circuit": circuit_to_json(enc.circuit),
        "report": report.to_json(),
        "sigma": [float(x) for x in enc.sigma],
        "sigma_tilde": [float(x) for x in enc.sigma_tilde],
        "ancilla_map": {str(k): v for k, v in sorted(enc.ancilla_map.items())},
    }
    if enc.circuit.n_qubits <= 12:
        err = float(np.linalg.norm(projected_block(enc.circuit) - wedge_oracle(enc.u_tilde), 2))
        doc["oracle_error"] = err
        if err > ORACLE_TOL:
            raise InvariantError(f"block encoding deviates from the wedge oracle by {err:.3e}")
    return doc


def _load_state(path, n: int | None, name: str) -> ManyBodyState:
    st = read_state(path)
    if n is not None and st.n != n:
        raise RegisterMismatchError(f"{name} has {st.n} modes but the overlap matrix is {n}x{n}")
    return st


def cmd_overlap(args) -> dict:
    u = read_matrix(args.input)
    n = u.shape[0]
    psi = _load_state(args.psi, n, "psi")
    phi = _load_state(args.phi, n, "phi")
    xi = synth_xi(u, TruncationPolicy(args.epsilon), tol=args.tolerance)
    oracle = state_overlap_oracle(psi, phi, xi.u_tilde)
    doc: dict = {"method": args.method, "n": n, "ancillas": xi.n_ancilla, "oracle": _cplx(oracle)}
    if args.method == "hadamard":
        res = run_hadamard_test(psi, phi, xi, args.shots, args.seed)
        doc["real"], doc["imag"] = res["real"], res["imag"]
        doc["difference"] = float(abs(res["value"] - oracle))
        if args.shots:
            doc["shots"] = args.shots
            doc["sampled"] = [res["sampled_real"], res["sampled_imag"]]
        return doc
    if xi.n_ancilla and psi.norm and phi.norm:
        probe = build_swap_test(xi, n)
        state = prepare_product(psi.amplitudes / psi.norm, phi.amplitudes / phi.norm, m=probe.n_qubits)
        apply(probe, state)
        if outcome_probability(state, {q: 0 for q in probe.registers["block"]}) < PROBABILITY_FLOOR:
            raise ImpossibleOutcomeError(
                "block ancillas can never read 0: the encoded operator annihilates phi, so the overlap is 0"
            )
    res = run_swap_test(psi, phi, xi, args.method == "alt-swap", args.shots, args.seed)
    doc["modulus"] = res["modulus"]
    doc["oracle_modulus"] = float(abs(oracle))
    doc["difference"] = float(abs(res["modulus"] - abs(oracle)))
    doc["probabilities"] = {k: v for k, v in res.items() if k.startswith("p_")}
    if args.shots:
        doc["shots"] = args.shots
        doc["sampled_modulus"] = res["sampled_modulus"]
    return doc


def cmd_simulate(args) -> dict:
    circ = deserialize(Path(args.circuit).read_bytes())
    st = read_state(args.input)
    if st.n > circ.n_qubits:
        raise RegisterMismatchError(f"state has {st.n} modes, circuit only {circ.n_qubits} qubits")
    state = prepare_product(st.amplitudes, m=circ.n_qubits)
    apply(circ, state)
    p = 1.0
    if circ.postselect:
        state, p = postselect_zero(state, circ.postselect)
    doc = {"success_probability": p, "state": state.to_json()}
    if args.shots:
        doc["counts"] = sample(state, range(1, circ.n_qubits + 1), args.shots, args.seed)
    return doc


# ---------------------------------------------------------------------------
# Verification harness
# ---------------------------------------------------------------------------

def _perturb(circ, delta: float = 1e-3):
    """Fault injection: nudge the first angled gate."""
    for k, (layer, g) in enumerate(circ.gates):
        if g.angle is not None:
            circ.gates[k] = (layer, Gate(g.op, g.qubits, g.angle + delta, g.controls))
            return circ
    circ.append(Gate.phase(1, delta), circ.last_layer + 1)
    return circ


def _random_spectrum(n: int, rng) -> np.ndarray:
    """Spectrum mixing exact ones, near-ones, interior values, near-zeros and zeros."""
    pool = np.array([1.0, 1.0 - 1e-9, 0.0, 1e-9])
    sig = np.where(rng.random(n) < 0.4, rng.choice(pool, n), rng.uniform(0.05, 0.95, n))
    return np.sort(sig)[::-1]


def _suite_qr(n, rng, fault):
    u = random_unitary(n, rng)
    qr = givens_qr(u)
    rebuilt = qr.reconstruct()
    if fault:
        rebuilt = _perturb_matrix(rebuilt)
    return float(np.linalg.norm(rebuilt - u)), 1e-11


def _perturb_matrix(a):
    a = a.copy()
    a[0, 0] += 1e-3
    return a


def _suite_multiplicativity(n, rng, fault):
    u1, u2 = random_contraction(n, rng), random_contraction(n, rng)
    lhs = wedge_oracle(u1) @ wedge_oracle(u2)
    rhs = wedge_oracle(u1 @ u2)
    if fault:
        rhs = _perturb_matrix(rhs)
    return float(np.abs(lhs - rhs).max()), 1e-10


def _suite_thouless(n, rng, fault):
    u = random_unitary(n, rng)
    a = thouless_oracle(u)
    if fault:
        a = _perturb_matrix(a)
    return float(np.abs(a - wedge_oracle(u)).max()), 1e-8


def _suite_unitary_synthesis(n, rng, fault):
    u = random_unitary(n, rng)
    circ, _ = synth_unitary(u)
    if fault:
        _perturb(circ)
    return float(np.linalg.norm(circuit_to_matrix(circ) - wedge_oracle(u))), 1e-10


def _suite_block_encoding(n, rng, fault):
    u = random_contraction(n, rng, _random_spectrum(n, rng))
    enc, _ = synth_nonunitary(u, TruncationPolicy(1e-6))
    if fault:
        _perturb(enc.circuit)
    if enc.circuit.n_qubits > MAX_MATRIX_QUBITS:
        raise InvariantError("register too large for dense verification")
    err = np.abs(projected_block(enc.circuit) - wedge_oracle(enc.u_tilde)).max()
    return float(err), 1e-10


def _suite_truncation(n, rng, fault):
    eps = float(rng.choice([1e-2, 1e-4]))
    bands = [
        lambda: 1.0,
        lambda: 1.0 - eps * rng.random(),
        lambda: rng.uniform(eps, 1.0 - eps),
        lambda: eps * rng.random(),
        lambda: 0.0,
    ]
    sig = np.sort([bands[rng.integers(len(bands))]() for _ in range(n)])[::-1]
    u = random_contraction(n, rng, sig)
    enc, report = synth_nonunitary(u, TruncationPolicy(eps))
    gap = np.linalg.norm(wedge_oracle(u) - wedge_oracle(enc.u_tilde), 2)
    bound = report.truncation_bound - (1.0 if fault else 0.0)
    # excess over the bound; passes when not (meaningfully) positive
    return float(gap - bound), 1e-12


SUITES = {
    "qr_roundtrip": _suite_qr,
    "wedge_multiplicativity": _suite_multiplicativity,
    "thouless_agreement": _suite_thouless,
    "unitary_synthesis": _suite_unitary_synthesis,
    "block_encoding_exactness": _suite_block_encoding,
    "truncation_bound": _suite_truncation,
}


def run_verify(n: int, trials: int, seed: int, inject_fault: str | None = None) -> dict:
    """Run every invariant suite; ``inject_fault`` names a suite to sabotage."""
    if not 1 <= n <= MAX_VERIFY_MODES:
        raise InvalidSizeError(f"verify needs 1 <= n <= {MAX_VERIFY_MODES}, got {n}")
    if trials < 0:
        raise InvalidSizeError("trials must be >= 0")
    if inject_fault is not None and inject_fault not in SUITES:
        raise InvalidSizeError(f"unknown suite {inject_fault!r}; choose from {sorted(SUITES)}")
    suites = {}
    for k, (name, fn) in enumerate(SUITES.items()):
        if name == "thouless_agreement" and n > MAX_THOULESS_MODES:
            continue
        worst, failures, tol = 0.0, 0, None
        for t in range(trials):
            rng = np.random.default_rng([seed, k, t])
            err, tol = fn(n, rng, inject_fault == name)
            worst = max(worst, err) if t else err
            failures += err > tol
        suites[name] = {
            "passed": failures == 0,
            "trials": trials,
            "failures": int(failures),
            "worst": worst if trials else None,
            "tolerance": tol,
        }
    return {
        "n": n,
        "trials": trials,
        "seed": seed,
        "suites": suites,
        "passed": all(s["passed"] for s in suites.values()),
    }


def cmd_verify(args) -> dict:
    summary = run_verify(args.n, args.trials, args.seed, args.inject_fault)
    if not summary["passed"]:
        failed = [k for k, v in summary["suites"].items() if not v["passed"]]
        _emit(summary, args.output)
        raise InvariantError(f"failed invariant suites: {', '.join(failed)}")
    return summary


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _epsilon(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 0.5:
        raise argparse.ArgumentTypeError("epsilon must lie in [0, 0.5)")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write JSON here instead of stdout")
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOL,
                        help="unitarity/contraction validation tolerance (default 1e-10)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--shots", type=_nonneg_int, default=0,
                        help="finite-shot estimates in addition to exact probabilities (0 = exact only)")

    parser = argparse.ArgumentParser(prog="wedgecirc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qr", parents=[common], help="Givens QR schedule of a unitary")
    p.add_argument("--input", required=True, help="matrix JSON")
    p.set_defaults(func=cmd_qr)

    p = sub.add_parser("svd", parents=[common], help="one-sided Jacobi SVD")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("synth-unitary", parents=[common], help="circuit for the wedged map of a unitary")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_synth_unitary)

    p = sub.add_parser("synth-nonunitary", parents=[common], help="block-encoded circuit for a contraction")
    p.add_argument("--input", required=True)
    p.add_argument("--epsilon", type=_epsilon, default=1e-6)
    p.set_defaults(func=cmd_synth_nonunitary)

    p = sub.add_parser("overlap", parents=[common], help="overlap of states in two orbital bases")
    p.add_argument("--input", required=True, help="overlap matrix u[i,j] = <psi_i|phi_j>")
    p.add_argument("--psi", required=True, help="state JSON in the psi basis")
    p.add_argument("--phi", required=True, help="state JSON in the phi basis")
    p.add_argument("--method", choices=["swap", "alt-swap", "hadamard"], default="hadamard")
    p.add_argument("--epsilon", type=_epsilon, default=1e-6)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("simulate", parents=[common], help="run a circuit JSON on a state and post-select")
    p.add_argument("--circuit", required=True)
    p.add_argument("--input", required=True, help="state JSON on the first qubits")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="oracle-equivalence invariant suites")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=_nonneg_int, default=5)
    p.add_argument("--inject-fault", choices=sorted(SUITES), default=None,
                   help="deliberately corrupt one suite to exercise failure reporting")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = args.func(args)
    except ImpossibleOutcomeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_POSTSELECT
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (WedgeCircError, ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(doc, args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
