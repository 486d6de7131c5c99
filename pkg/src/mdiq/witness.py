"""Linear, nonlinear and two-copy MDI witnesses, plus witness-based lower bounds."""

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decomp import ProbabilityTable, decompose, mdi_value
from .game import run_protocol
from .numerics import DimensionError, hermitian_eig, is_hermitian, partial_transpose, proj
from .quantum import DensityMatrix, max_entangled
from .sdp import legendre_hat


@dataclass(frozen=True, eq=False)
class Witness:
    """Observable on ``copies`` copies of a system with party dims ``dims``.

    Multi-copy operators use the party order ``(A, B, ..., A', B', ...)``:
    copy ``c`` occupies parties ``c*n .. c*n + n - 1``.
    """
    operator: np.ndarray
    dims: tuple
    copies: int = 1

    def __post_init__(self):
        op = np.asarray(self.operator, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        size = int(np.prod(dims)) ** self.copies
        if op.shape != (size, size):
            raise DimensionError(f"witness of shape {op.shape} does not match {dims} x {self.copies} copies")
        if not is_hermitian(op):
            raise ValueError("witness operator must be Hermitian")
        object.__setattr__(self, "operator", (op + op.conj().T) / 2)
        object.__setattr__(self, "dims", dims)

    @property
    def full_dims(self):
        return self.dims * self.copies

    @property
    def omega(self):
        return float(np.prod(self.full_dims))

    def expectation(self, rho) -> float:
        m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
        if self.copies > 1:
            m = functools.reduce(np.kron, [m] * self.copies)
        return float(np.trace(self.operator @ m).real)


def decomposition_of(w: Witness):
    """Decomposition of ``w`` over the trusted states, computed once per witness."""
    dec = w.__dict__.get("_dec")
    if dec is None:
        dec = decompose(w.operator, w.full_dims)
        object.__setattr__(w, "_dec", dec)
    return dec


def bell_overlap(d: int = 2) -> Witness:
    """``I/d - Phi+``: negative expectation certifies entanglement of a ``d x d`` state."""
    return Witness(np.eye(d * d) / d - max_entangled(d).matrix, (d, d))


def linear_mdi(w: Witness, rho, strategy, inputs=None) -> float:
    """``C_MDI = Omega * I`` for a single-copy witness."""
    if w.copies != 1:
        raise ValueError("use multicopy_mdi for multi-copy witnesses")
    if tuple(strategy.dims) != w.dims:
        raise DimensionError("strategy and witness dims differ")
    table = run_protocol(rho, inputs, strategy)
    return w.omega * mdi_value(decomposition_of(w), table)


def linear_mdi_from_table(w: Witness, table: ProbabilityTable) -> float:
    return w.omega * mdi_value(decomposition_of(w), table)


# --------------------------------------------------------------------------- #
#                                  Nonlinear                                  #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class NonlinearWitnessSpec:
    """``C(rho) = <W> - sum_k (<H_k>^2 + <J_k>^2)``."""
    witness: Witness
    h: tuple
    j: tuple

    def value(self, rho) -> float:
        m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
        out = np.trace(self.witness.operator @ m).real
        for h, j in zip(self.h, self.j):
            out -= np.trace(h @ m).real ** 2 + np.trace(j @ m).real ** 2
        return float(out)


def build_nonlinear(xs: Sequence[np.ndarray], w: Witness) -> NonlinearWitnessSpec:
    """Split each ``X_k`` into ``H_k + i J_k`` with Hermitian ``H_k, J_k``."""
    n = w.operator.shape[0]
    hs, js = [], []
    for x in xs:
        x = np.asarray(x, dtype=complex)
        if x.shape != (n, n):
            raise DimensionError("X_k must match the witness size")
        hs.append((x + x.conj().T) / 2)
        js.append((x - x.conj().T) / 2j)
    return NonlinearWitnessSpec(w, tuple(hs), tuple(js))


def transpose_nonlinear(d: int = 2) -> NonlinearWitnessSpec:
    """Transposition-map construction around the antisymmetric state.

    ``W = |phi><phi|^{T_A}`` and ``X_k = (|phi><k|)^{T_A}`` over the computational
    basis, so ``C(rho) = <phi| rho^G - (rho^G)^2 |phi>`` with ``rho^G`` the
    partial transpose.
    """
    if d != 2:
        raise ValueError("the transpose-map preset is defined for two qubits")
    phi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    dims = (d, d)
    w = Witness(partial_transpose(proj(phi), dims, 0), dims)
    xs = []
    for k in range(d * d):
        e = np.zeros(d * d, dtype=complex)
        e[k] = 1.0
        xs.append(partial_transpose(np.outer(phi, e.conj()), dims, 0))
    return build_nonlinear(xs, w)


def nonlinear_mdi_from_table(spec: NonlinearWitnessSpec, table: ProbabilityTable) -> float:
    om = spec.witness.omega
    dims = spec.witness.full_dims
    out = om * mdi_value(decomposition_of(spec.witness), table)
    for h, j in zip(spec.h, spec.j):
        vh = om * mdi_value(_op_decomp(h, dims), table)
        vj = om * mdi_value(_op_decomp(j, dims), table)
        out -= vh * vh + vj * vj
    return float(out)


@functools.lru_cache(maxsize=256)
def _op_decomp_bytes(raw, n, dims):
    return decompose(np.frombuffer(raw, dtype=complex).reshape(n, n), dims)


def _op_decomp(op, dims):
    op = np.ascontiguousarray(op, dtype=complex)
    return _op_decomp_bytes(op.tobytes(), op.shape[0], tuple(dims))


def nonlinear_mdi(spec: NonlinearWitnessSpec, rho, strategy, inputs=None) -> float:
    """MDI version of the nonlinear witness from a single probability table."""
    table = run_protocol(rho, inputs, strategy)
    return nonlinear_mdi_from_table(spec, table)


# --------------------------------------------------------------------------- #
#                                  Two copies                                 #
# --------------------------------------------------------------------------- #

def _swap_operator(dims, perm):
    """Permutation operator sending party ``j`` to slot ``perm[j]``."""
    n = int(np.prod(dims))
    idx = np.arange(n).reshape(dims)
    src = np.transpose(idx, np.argsort(perm)).reshape(-1)
    out = np.zeros((n, n))
    out[np.arange(n), src] = 1.0
    return out


def swap_witness(d_a: int, d_b: int) -> Witness:
    """``S_{AA'} (x) I_{BB'} - S_{(AB)(A'B')}`` on ``(A, B, A', B')``.

    ``tr(W rho (x) rho) = tr(rho_A^2) - tr(rho^2)``.
    """
    dims = (d_a, d_b, d_a, d_b)
    s_a = _swap_operator(dims, [2, 1, 0, 3])
    s_ab = _swap_operator(dims, [2, 3, 0, 1])
    return Witness(s_a - s_ab, (d_a, d_b), copies=2)


def product_table(tables: Sequence[ProbabilityTable]) -> ProbabilityTable:
    """Independent copies: ``P(i_1, i_2 | k_1, k_2) = P_1(i_1|k_1) P_2(i_2|k_2)``."""
    out = tables[0].probs
    dims = tuple(tables[0].dims)
    outs = tuple(tables[0].outcomes)
    for t in tables[1:]:
        n_a = len(dims)
        n_b = t.n_parties
        p = np.multiply.outer(out, t.probs)
        # (k_a, i_a, k_b, i_b) -> (k_a, k_b, i_a, i_b)
        order = (list(range(n_a)) + list(range(2 * n_a, 2 * n_a + n_b))
                 + list(range(n_a, 2 * n_a)) + list(range(2 * n_a + n_b, 2 * n_a + 2 * n_b)))
        out = np.transpose(p, order)
        dims = dims + tuple(t.dims)
        outs = outs + tuple(t.outcomes)
    return ProbabilityTable(dims, outs, out)


def multicopy_mdi(w: Witness, rho, strategies, inputs=None) -> float:
    """``Omega * I`` from independent single-copy runs combined into a product table."""
    if len(strategies) != w.copies:
        raise ValueError(f"{w.copies} copies need {w.copies} strategies, got {len(strategies)}")
    tables = [run_protocol(rho, inputs, s) for s in strategies]
    return w.omega * mdi_value(decomposition_of(w), product_table(tables))


# --------------------------------------------------------------------------- #
#                                   Bounds                                    #
# --------------------------------------------------------------------------- #

def bound_ftr(w, value: float) -> float:
    """``max(0, -value / (lambda_max - lambda_min))``."""
    op = w.operator if isinstance(w, Witness) else np.asarray(w)
    ev, _ = hermitian_eig(op)
    spread = ev[-1] - ev[0]
    if spread <= 1e-12:
        raise ValueError("witness has a degenerate spectrum")
    return max(0.0, -value / spread)


def bound_fm(w, value: float, m: float) -> float:
    """Step bound: ``m`` when the witness value is negative, else 0."""
    return float(m) if value < 0 else 0.0


DEFAULT_ALPHAS = tuple(sorted({0.0} | {s * 2.0 ** t for t in range(-6, 7) for s in (1, -1)}))


def bound_fopt(w, value: float, dims=None, alphas=DEFAULT_ALPHAS, rounds: int = 3,
               parties=None) -> float:
    """``max_alpha alpha*value - hat_mu(alpha W)`` with negativity as the monotone.

    The grid is searched first, then refined ``rounds`` times by geometric
    bisection around the best nonzero ``alpha``. Every ``alpha`` gives a valid
    bound, so refinement can only tighten it.
    """
    if isinstance(w, Witness):
        op, dims = w.operator, w.full_dims
    else:
        op = np.asarray(w)
        if dims is None:
            raise ValueError("dims are required for a bare operator")
    cache = {}

    def score(a):
        if a not in cache:
            # hat_mu(0) = 0 exactly; skip the solver noise
            cache[a] = 0.0 if a == 0 else a * value - legendre_hat(op, dims, a, parties=parties)[0]
        return cache[a]

    best = max(alphas, key=score)
    step = 2.0
    for _ in range(rounds):
        if best == 0.0:
            break
        step = np.sqrt(step)
        best = max([best / step, best, best * step], key=score)
    return max(cache.values())
