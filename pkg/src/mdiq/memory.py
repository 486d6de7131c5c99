"""MDI characterization of quantum memories with a single Bell measurement.

A channel ``N: A -> B`` receives ``sigma_s = tau_s^T``; Eve measures ``B' B``
with the ancilla ``omega_t = tau_t^T`` first, giving

    P(i | s, t) = tr[Xi_i (omega_t (x) N(sigma_s))]
                = d_A^2 * P_bip((0, i) | (s, t)),

where ``P_bip`` is the two-party game played on the Choi state with the
``A`` side fixed to the ``Phi+`` outcome. The scaled witness value
``(d_B/d_A) * I`` therefore equals ``tr(W J_N)`` under faithful measurement.
"""

from dataclasses import dataclass

import numpy as np

from .bases import LocalStateSet, qudit_kit
from .decomp import mdi_value, ProbabilityTable
from .game import Faithful, ProductLosr, Separable, Trivial, as_product_losr, effective_operators
from .numerics import DimensionError, partial_trace
from .quantum import ChoiState, apply_channel
from .sdp import mdi_quantify_memory
from .witness import Witness, decomposition_of


@dataclass(frozen=True, eq=False)
class MemoryProtocolRun:
    channel: ChoiState
    inputs: LocalStateSet       # tau_s on A; the channel receives tau_s^T
    ancillas: LocalStateSet     # tau_t on B; Eve's ancilla is tau_t^T
    probs: np.ndarray           # (s, t, i)
    strategy: object

    def validate(self, tol: float = 1e-9):
        p = self.probs
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValueError("memory table entries outside [0, 1]")
        if np.abs(p.sum(axis=2) - 1).max() > tol:
            raise ValueError("memory table rows do not sum to one")
        return self

    @property
    def d_a(self):
        return self.channel.d_in

    @property
    def d_b(self):
        return self.channel.d_out


def choi_projection(choi: ChoiState, tau) -> np.ndarray:
    """``d_A tr_A'[J (tau^T (x) I)]`` evaluated with an explicit partial trace."""
    m = choi.matrix @ np.kron(np.asarray(tau).T, np.eye(choi.d_out))
    return choi.d_in * partial_trace(m, (choi.d_in, choi.d_out), [1])


def _channel_effects(strategy, ancillas):
    """``[(weight, M[t, i])]`` with ``M[t, i] = tr_B'[Xi_i (omega_t (x) I)]``."""
    if isinstance(strategy, (Faithful, Trivial)):
        strategy = as_product_losr(strategy)
    if isinstance(strategy, ProductLosr):
        return [(w, effective_operators(p[0], ancillas)) for w, p in strategy.mixture]
    if isinstance(strategy, Separable):
        m = effective_operators(strategy.local[0], ancillas)        # (t, lambda, d, d)
        return [(1.0, np.einsum("tlxy,li->tixy", m, strategy.post))]
    raise TypeError(f"unsupported strategy {type(strategy).__name__}")


def run_memory_protocol(choi: ChoiState, inputs=None, ancillas=None, strategy=None) -> MemoryProtocolRun:
    """Exact table ``P(i | s, t)``; the default strategy is the faithful Bell measurement."""
    d_a, d_b = choi.d_in, choi.d_out
    inputs = qudit_kit(d_a).states if inputs is None else inputs
    ancillas = qudit_kit(d_b).states if ancillas is None else ancillas
    strategy = Faithful((d_b,)) if strategy is None else strategy
    if inputs.d != d_a or ancillas.d != d_b:
        raise DimensionError("input sets do not match the channel dimensions")
    if tuple(strategy.dims) != (d_b,):
        raise DimensionError("memory strategies act on a single doubled output space")
    outs = [apply_channel(choi, s.T) for s in inputs.states]
    probs = 0.0
    for w, m in _channel_effects(strategy, ancillas):
        probs = probs + w * np.einsum("sab,tiba->sti", np.array(outs), m).real
    return MemoryProtocolRun(choi, inputs, ancillas, probs, strategy)


def bipartite_table(run: MemoryProtocolRun) -> np.ndarray:
    """``P(i|s,t) / d_A^2``: the two-party table on the Choi state with the A outcome pinned."""
    return run.probs / run.d_a ** 2


def memory_mdi_value(w: Witness, run: MemoryProtocolRun) -> float:
    """``(1/d_B^2) sum_{i,s,t} beta^{(0,i)}_{s,t} P(i | s, t)`` for a witness on ``A (x) B``."""
    if w.dims != (run.d_a, run.d_b) or w.copies != 1:
        raise DimensionError("witness must act on A (x) B of the channel")
    d_a, d_b = run.d_a, run.d_b
    full = np.zeros((d_a * d_a, d_b * d_b, d_a * d_a, d_b * d_b))
    full[:, :, 0, :] = run.probs
    # mdi_value divides by prod d^2 over both parties; only the A-side setting 0 is populated
    table = ProbabilityTable((d_a, d_b), (d_a * d_a, d_b * d_b), full)
    return mdi_value(decomposition_of(w), table) * d_a * d_a


def memory_witness_value(w: Witness, run: MemoryProtocolRun) -> float:
    """Scaled value ``(d_B/d_A) I``; equals ``tr(W J_N)`` under faithful measurement."""
    return run.d_b / run.d_a * memory_mdi_value(w, run)


def memory_postselected_states(choi: ChoiState, strategy) -> np.ndarray:
    """``rho~_i`` on ``A B'`` with ``P(i|s,t) = tr[rho~_i (tau_s^T (x) tau_t^T)]``.

    ``rho~_i = d_A (T (x) Gamma_i)(J)`` where ``Gamma_i(X) = tr_B[Xi_i (I (x) X)]``;
    these are positive and sum to the identity.
    """
    d_a, d_b = choi.d_in, choi.d_out
    if isinstance(strategy, (Faithful, Trivial)):
        strategy = as_product_losr(strategy)
    j4 = choi.matrix.reshape(d_a, d_b, d_a, d_b)

    def one(els):
        xi = els.reshape(-1, d_b, d_b, d_b, d_b)
        # d_A tr_B[(I (x) Xi)(J (x) I_B')] on (A, B')
        out = np.einsum("ixcyb,ebac->iaxey", xi, j4)
        return d_a * out.reshape(-1, d_a * d_b, d_a * d_b)

    if isinstance(strategy, ProductLosr):
        return sum(w * one(p[0].elements) for w, p in strategy.mixture)
    if isinstance(strategy, Separable):
        q = one(strategy.local[0].elements)
        return np.einsum("lxy,li->ixy", q, strategy.post)
    raise TypeError(f"unsupported strategy {type(strategy).__name__}")


def quantify_memory(run: MemoryProtocolRun, **kw):
    """SDP lower bound on the Choi negativity; returns ``(bound, SdpSolution)``."""
    return mdi_quantify_memory(run.probs, run.d_a, run.d_b, **kw)
