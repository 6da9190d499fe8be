"""scikit-learn style wrapper around the synthesis passes.

``WedgeTransform`` compiles a one-body matrix at ``fit`` time and, at
``transform`` time, runs the compiled circuit on rows of Fock-space
amplitudes and returns the post-selected (unnormalized) output. That keeps
the usual ``fit``/``transform``/``get_params`` contract, so it composes with
``Pipeline`` and ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import RegisterMismatchError
from .sim import apply_batch
from .synth import TruncationPolicy, synth_nonunitary, synth_unitary
from .validation import DEFAULT_TOL, check_fock_vectors, check_square, is_unitary


class WedgeTransform(TransformerMixin, BaseEstimator):
    """Apply the wedged map of ``u`` to many-body amplitude vectors via its circuit.

    Parameters
    ----------
    u : array-like of shape (n, n)
        One-body matrix. Unitary input yields an ancilla-free circuit; any
        other contraction is block encoded.
    epsilon : float
        Singular-value rounding threshold for the non-unitary path.
    tolerance : float
        Unitarity test tolerance.

    Attributes
    ----------
    circuit_ : Circuit
    report_ : SynthesisReport
    n_modes_ : int
    n_features_in_ : int
        ``2 ** n_modes_``.
    u_tilde_ : ndarray
        The matrix whose wedged map the circuit realizes exactly.
    """

    def __init__(self, u=None, epsilon: float = 1e-6, tolerance: float = DEFAULT_TOL):
        self.u = u
        self.epsilon = epsilon
        self.tolerance = tolerance

    def fit(self, X=None, y=None):
        u = check_square(self.u, "u")
        if is_unitary(u, self.tolerance):
            circ, report = synth_unitary(u, self.tolerance)
            self.u_tilde_ = u.copy()
        else:
            enc, report = synth_nonunitary(u, TruncationPolicy(self.epsilon), self.tolerance)
            circ = enc.circuit
            self.u_tilde_ = enc.u_tilde
        self.circuit_ = circ
        self.report_ = report
        self.n_modes_ = u.shape[0]
        self.n_features_in_ = 1 << self.n_modes_
        if X is not None:
            check_fock_vectors(X, self.n_modes_)
        return self

    def _run(self, X) -> np.ndarray:
        check_is_fitted(self, "circuit_")
        x = check_fock_vectors(X, None)
        if x.shape[1] != self.n_features_in_:
            raise RegisterMismatchError(
                f"X has {x.shape[1]} features, but the transform expects {self.n_features_in_}"
            )
        a = self.circuit_.n_ancilla
        padded = np.zeros((x.shape[0], x.shape[1] << a), dtype=np.complex128)
        padded[:, :: 1 << a] = x
        out = apply_batch(self.circuit_, padded)
        return out.reshape(x.shape[0], x.shape[1], 1 << a)[:, :, 0]

    def transform(self, X) -> np.ndarray:
        """Post-selected output amplitudes, one row per input row."""
        return self._run(X)

    def success_probability(self, X) -> np.ndarray:
        """Probability that all ancillas read 0, per input row."""
        out = self._run(X)
        return np.sum(np.abs(out) ** 2, axis=1)

    def inverse_transform(self, X) -> np.ndarray:
        """Undo the map; only defined when the fitted matrix is unitary."""
        check_is_fitted(self, "circuit_")
        if self.circuit_.n_ancilla:
            raise ValueError("inverse_transform needs a unitary fit")
        x = check_fock_vectors(X, self.n_modes_)
        return apply_batch(self.circuit_.inverse(), x)
