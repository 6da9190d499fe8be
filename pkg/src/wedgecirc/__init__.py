"""Circuits for fermionic one-body transformations, checked against exterior-algebra oracles."""

from .circuit import Circuit, Gate, SynthesisReport, circuit_to_matrix, depth, deserialize, projected_block, serialize
from .estimator import WedgeTransform
from .exceptions import (
    CircuitParseError,
    ContractionError,
    DegenerateInputError,
    ImpossibleOutcomeError,
    InvalidSizeError,
    InvariantError,
    RegisterMismatchError,
    UnitarityError,
    WedgeCircError,
)
from .fock import (
    ManyBodyState,
    OccupationState,
    annihilation_op,
    creation_op,
    number_op,
    slater_overlap,
    state_overlap_oracle,
    thouless_oracle,
    wedge_oracle,
)
from .linalg import (
    EliminationSchedule,
    GivensQR,
    PhasedGivens,
    SvdResult,
    complex_givens_for,
    determinant,
    givens_qr,
    parallel_elimination_order,
    random_contraction,
    random_unitary,
    svd,
    unitary_log,
)
from .sim import StateVector, apply, outcome_probability, postselect_zero, prepare_basis, sample
from .synth import (
    BlockEncodedCircuit,
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

__version__ = "0.1.0"
