"""Local state decompositions of observables and MDI values of probability tables.

A Hermitian ``W`` on ``A_1 ... A_n`` is written as

    W = sum_k beta_k  tau_{k_1} (x) ... (x) tau_{k_n}

with the trusted qudit states of :mod:`mdiq.bases`, and for every setting
``i = (i_1, ..., i_n)`` as

    W = sum_k beta^i_k  (U_{i_1} tau_{k_1} U_{i_1}^dag) (x) ...

Tables are stored as dense arrays with axes ``(k_1..k_n, i_1..i_n)``.
"""

import csv
import io
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bases import qudit_kit
from .numerics import DimensionError, format_matrix, hermitize, is_hermitian, kron

log = logging.getLogger(__name__)

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _as_dims(dims):
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 2 for d in dims):
        raise DimensionError(f"every party dimension must be >= 2, got {dims}")
    return dims


def _apply_axes(t, mats):
    """Contract matrix ``mats[j]`` into axis ``j`` of tensor ``t``: ``t'_{..a..} = sum_b M[b, a] t_{..b..}``."""
    for j, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(t, m, axes=([j], [0])), -1, j)
    return t


def basis_coefficients(w, dims) -> np.ndarray:
    """Product Gell-Mann coefficients ``gamma_k = tr(W (x)B_k) / prod tr(B_k^2)``."""
    dims = _as_dims(dims)
    n = len(dims)
    t = np.asarray(w, dtype=complex).reshape(dims + dims)
    for j, d in enumerate(dims):
        b = qudit_kit(d).basis
        # contract row index j and column index j of W with B_k[col, row]
        t = np.tensordot(t, b.elements, axes=([0, n - j], [2, 1]))
        t = t / b.norms
        # after tensordot the two consumed axes vanish and k_j is appended last
    return t.real.copy()


@dataclass(eq=False)
class LocalDecomposition:
    dims: tuple
    kits: tuple
    gamma: np.ndarray
    beta: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def omega(self) -> float:
        return float(np.prod(self.dims))

    @property
    def n_parties(self):
        return len(self.dims)

    @property
    def n_settings(self):
        return tuple(d * d for d in self.dims)

    def operator(self, setting=None) -> np.ndarray:
        """Reassemble ``W`` from the coefficients of ``setting`` (base if ``None``)."""
        coeffs = self.beta if setting is None else setting_coefficients(self, setting)
        stacks = []
        for j, kit in enumerate(self.kits):
            st = kit.states.states
            if setting is not None:
                u = kit.hw.unitaries[setting[j]]
                st = np.einsum("ij,kjl,ml->kim", u, st, u.conj())
            stacks.append(st)
        return _assemble(coeffs, stacks)

    def to_report(self) -> dict:
        return {
            "dims": list(self.dims),
            "omega": self.omega,
            "index_order": "row-major over (k_1, ..., k_n); k_j in 0..d_j^2-1",
            "states": [
                [format_matrix(s) for s in kit.states.states] for kit in self.kits
            ],
            "gamma": [float(x) for x in self.gamma.reshape(-1)],
            "beta": [float(x) for x in self.beta.reshape(-1)],
        }


def _assemble(coeffs, stacks):
    """``sum_k c_k (x)_j stacks[j][k_j]``."""
    t = np.asarray(coeffs, dtype=complex)
    n = len(stacks)
    letters = _LETTERS
    ks = letters[:n]
    rows = letters[n:2 * n]
    cols = letters[2 * n:3 * n]
    spec = ks + "," + ",".join(ks[j] + rows[j] + cols[j] for j in range(n))
    spec += "->" + rows + cols
    out = np.einsum(spec, t, *stacks, optimize=True)
    dim = int(np.prod([s.shape[1] for s in stacks]))
    return out.reshape(dim, dim)


def decompose(w, dims: Sequence[int], check_tol: float = 1e-9) -> LocalDecomposition:
    """Decompose a Hermitian observable over the trusted local states.

    The base coefficients come from substituting ``B_k = sum_k' C_kk' tau_k'``
    into the Gell-Mann expansion. An independent Gram-matrix solve cross-checks
    the result; on disagreement the solve is used and a warning is logged.
    """
    dims = _as_dims(dims)
    w = np.asarray(w, dtype=complex)
    n = int(np.prod(dims))
    if w.shape != (n, n):
        raise DimensionError(f"operator of shape {w.shape} does not match dims {dims}")
    if not is_hermitian(w):
        raise ValueError("witness operator is not Hermitian within tolerance")
    w = hermitize(w)
    kits = tuple(qudit_kit(d) for d in dims)
    gamma = basis_coefficients(w, dims)
    beta = _apply_axes(gamma, [kit.transforms[0].inverse for kit in kits])

    solved = _gram_solve(w, kits)
    scale = max(1.0, float(np.abs(solved).max()))
    gap = float(np.abs(beta - solved).max())
    if gap > check_tol * scale:
        log.warning("shift-substitution and Gram solve disagree by %.3g; using the solve", gap)
        beta = solved
    return LocalDecomposition(dims, kits, gamma, beta)


def _gram_solve(w, kits):
    """Coefficients from ``tr(W (x)tau_k)`` and the inverse Gram matrices."""
    dims = tuple(k.d for k in kits)
    n = len(dims)
    t = w.reshape(dims + dims)
    for j, kit in enumerate(kits):
        t = np.tensordot(t, kit.states.states, axes=([0, n - j], [2, 1]))
    t = t.real
    return _apply_axes(t, [np.linalg.inv(kit.states.gram()) for kit in kits])


def _check_setting(dec, setting):
    setting = tuple(int(i) for i in setting)
    if len(setting) != dec.n_parties:
        raise IndexError(f"setting {setting} has wrong length for {dec.n_parties} parties")
    for i, m in zip(setting, dec.n_settings):
        if not 0 <= i < m:
            raise IndexError(f"setting index {i} out of range (< {m})")
    return setting


def setting_coefficients(dec: LocalDecomposition, setting) -> np.ndarray:
    """``beta^i_k = sum_k' prod_j (T_{i_j}^{-1})_{k'_j k_j} gamma_k'``; memoized per setting."""
    setting = _check_setting(dec, setting)
    hit = dec._cache.get(setting)
    if hit is not None:
        return hit
    coeffs = _apply_axes(dec.gamma, [kit.transforms[i].inverse for kit, i in zip(dec.kits, setting)])
    coeffs.setflags(write=False)
    with dec._lock:
        return dec._cache.setdefault(setting, coeffs)


def all_setting_coefficients(dec: LocalDecomposition) -> np.ndarray:
    """Every per-setting tensor at once; axes ``(i_1..i_n, k_1..k_n)``. Memory grows as prod d^4."""
    n = dec.n_parties
    t = dec.gamma
    for j, kit in enumerate(dec.kits):
        # (..., k'_j, ...) x (i, k', k) -> (..., i_j, k_j, ...) with k_j at the end for now
        t = np.tensordot(t, kit.inverse_stack(), axes=([j], [1]))
        t = np.moveaxis(t, -2, j)
    # axes are now (i_1..i_n, k_1..k_n)
    return t


# --------------------------------------------------------------------------- #
#                              Probability tables                             #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """``probs[k_1..k_n, i_1..i_n] = P(i | k)``."""
    dims: tuple
    outcomes: tuple
    probs: np.ndarray

    def __post_init__(self):
        n = len(self.dims)
        inputs = tuple(d * d for d in self.dims)
        if self.probs.shape != inputs + tuple(self.outcomes):
            raise DimensionError(
                f"table shape {self.probs.shape} != inputs {inputs} + outcomes {self.outcomes}"
            )
        if len(self.outcomes) != n:
            raise DimensionError("one outcome-set size per party is required")

    @property
    def n_parties(self):
        return len(self.dims)

    def row_sums(self):
        n = self.n_parties
        return self.probs.sum(axis=tuple(range(n, 2 * n)))

    def validate(self, tol: float = 1e-9):
        p = self.probs
        if not np.all(np.isfinite(p)):
            raise ValueError("table contains non-finite entries")
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValueError("table entries outside [0, 1]")
        if np.abs(self.row_sums() - 1).max() > tol:
            raise ValueError("table rows do not sum to one")
        return self

    def entries(self):
        """Yield ``(k, i, p)`` in row-major order."""
        n = self.n_parties
        for idx in np.ndindex(*self.probs.shape):
            yield idx[:n], idx[n:], float(self.probs[idx])

    def to_csv(self) -> str:
        n = self.n_parties
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow([f"k{j + 1}" for j in range(n)] + [f"i{j + 1}" for j in range(n)] + ["p"])
        for k, i, p in self.entries():
            wr.writerow(list(k) + list(i) + [f"{p:.17g}"])
        return buf.getvalue()

    def to_report(self) -> dict:
        return {
            "dims": list(self.dims),
            "outcomes": list(self.outcomes),
            "index_order": "row-major over (k_1..k_n, i_1..i_n)",
            "entries": [[list(k), list(i), p] for k, i, p in self.entries()],
        }


def uniform_table(dims) -> ProbabilityTable:
    dims = _as_dims(dims)
    sq = tuple(d * d for d in dims)
    p = np.full(sq + sq, 1.0 / np.prod(sq))
    return ProbabilityTable(dims, sq, p)


def _contract(dec: LocalDecomposition, probs: np.ndarray, keep_settings: bool) -> np.ndarray:
    """Sum ``beta^i_k P(i|k)`` over ``k`` without materializing every ``beta^i``."""
    n = dec.n_parties
    x = probs
    # axes of x: (k_1..k_n, i_1..i_n); replace each (k_j, i_j) pair by k'_j (and optionally keep i_j)
    letters = _LETTERS
    k = letters[:n]
    i = letters[n:2 * n]
    kp = letters[2 * n:3 * n]
    cur_k = list(k)
    cur_i = list(i)
    for j, kit in enumerate(dec.kits):
        tinv = kit.inverse_stack()
        src = "".join(cur_k) + "".join(cur_i)
        new_k = cur_k.copy()
        new_k[j] = kp[j]
        new_i = cur_i.copy()
        if not keep_settings:
            new_i[j] = ""
        out = "".join(new_k) + "".join(new_i)
        x = np.einsum(f"{src},{i[j]}{kp[j]}{k[j]}->{out}", x, tinv, optimize=True)
        cur_k = new_k
        cur_i = new_i
    gspec = "".join(cur_k)
    rest = "".join(cur_i)
    return np.einsum(f"{gspec}{rest},{gspec}->{rest}", x, dec.gamma)


def _check_table(dec, table):
    if tuple(table.dims) != tuple(dec.dims):
        raise DimensionError(f"table dims {table.dims} do not match decomposition dims {dec.dims}")
    if tuple(table.outcomes) != dec.n_settings:
        raise DimensionError("outcome-set sizes must equal d_j^2 for every party")


def mdi_value(dec: LocalDecomposition, table: ProbabilityTable) -> float:
    """``(1/prod d_j^2) sum_{i,k} beta^i_k P(i|k)``; equals ``tr(W rho)/Omega`` on faithful tables."""
    _check_table(dec, table)
    total = float(_contract(dec, table.probs, keep_settings=False))
    return total / float(np.prod(dec.n_settings))


def per_setting_values(dec: LocalDecomposition, table: ProbabilityTable) -> np.ndarray:
    """``sum_k beta^i_k P(i|k)`` for every setting ``i``, axes ``(i_1..i_n)``."""
    _check_table(dec, table)
    return _contract(dec, table.probs, keep_settings=True)


# --------------------------------------------------------------------------- #
#                                  Combiners                                  #
# --------------------------------------------------------------------------- #

def _linear(x, *rest):
    return x


def _sum_of_squares(w, *hj):
    return w - sum(v * v for v in hj)


COMBINERS: dict[str, Callable] = {
    "linear": _linear,
    "nonlinear-sum-of-squares": _sum_of_squares,
    # multicopy values arrive already scaled by Omega**N; the combiner is the identity
    "multicopy-product": _linear,
}


def mdi_composite(values, copies, omega: float, combiner="linear") -> float:
    """``f(Omega^{N_1} I_1, Omega^{N_2} I_2, ...)``. Accept the statement iff the result is negative."""
    values = list(values)
    copies = list(copies)
    if len(values) != len(copies):
        raise ValueError("one copy count per value is required")
    f = COMBINERS[combiner] if isinstance(combiner, str) else combiner
    return float(f(*[omega ** n * v for v, n in zip(values, copies)]))


def accept(c_mdi: float) -> bool:
    return c_mdi < 0


def operator_from_coefficients(coeffs, dims) -> np.ndarray:
    """Inverse of :func:`basis_coefficients`."""
    dims = _as_dims(dims)
    return _assemble(coeffs, [qudit_kit(d).basis.elements for d in dims])


def product_states(dims, index) -> np.ndarray:
    return kron(*[qudit_kit(d).states.states[k] for d, k in zip(dims, index)])
