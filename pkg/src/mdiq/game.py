"""The preparation-trusted measurement game between Alice and Eve.

Each party ``j`` holds a system ``A_j`` of the shared state and prepares an
ancilla ``A'_j`` in a trusted state. Eve measures every doubled space
``A'_j A_j`` (ancilla first) and announces outcomes. The ancilla inputs are
``omega_k = tau_k^T``; with that choice the faithful Bell measurement gives

    P(i | k) = tr[(x)_j U_{i_j} tau_{k_j} U_{i_j}^dag  rho] / Omega.

Strategies
----------
``Faithful``      generalized Bell projectors on every party.
``Trivial``       every outcome announced with probability ``1/d^2``.
``ProductLosr``   shared randomness over products of local POVMs.
``Separable``     local POVMs followed by a joint classical relabelling
                  ``p(i | lambda)``; every joint element is an explicit
                  sum of products.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bases import LocalStateSet, qudit_kit
from .decomp import ProbabilityTable
from .numerics import DimensionError, kron
from .quantum import (
    ChoiState,
    DensityMatrix,
    Povm,
    make_rng,
    normalize_effects,
    random_povm,
)


# --------------------------------------------------------------------------- #
#                                 Strategies                                  #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class Faithful:
    dims: tuple


@dataclass(frozen=True, eq=False)
class Trivial:
    dims: tuple


@dataclass(frozen=True, eq=False)
class ProductLosr:
    """``sum_mu pi(mu) (x)_j Xi^{mu,j}``; ``mixture`` holds ``(pi, (Povm per party))``."""
    dims: tuple
    mixture: tuple

    def validate(self, tol: float = 1e-9):
        w = np.array([p for p, _ in self.mixture])
        if w.min() < 0 or abs(w.sum() - 1) > 1e-10:
            raise ValueError("mixture weights must form a probability vector")
        for _, povms in self.mixture:
            if len(povms) != len(self.dims):
                raise DimensionError("one POVM per party is required")
            for d, p in zip(self.dims, povms):
                if tuple(p.dims) != (d, d) or len(p) != d * d:
                    raise DimensionError("each local POVM acts on A'A with d^2 outcomes")
                p.validate(tol)
        return self


@dataclass(frozen=True, eq=False)
class Separable:
    """``Xi_i = sum_lambda p(i | lambda) (x)_j F^j_{lambda_j}``.

    ``local`` holds one POVM per party on ``A'_j A_j``; ``post`` has axes
    ``(lambda_1..lambda_n, i_1..i_n)`` and sums to one over ``i`` for every ``lambda``.
    """
    dims: tuple
    local: tuple
    post: np.ndarray

    def validate(self, tol: float = 1e-9):
        n = len(self.dims)
        lam = tuple(len(p) for p in self.local)
        outs = tuple(d * d for d in self.dims)
        if self.post.shape != lam + outs:
            raise DimensionError("post-processing shape does not match local outcomes")
        if self.post.min() < -1e-12:
            raise ValueError("post-processing has negative entries")
        if np.abs(self.post.sum(axis=tuple(range(n, 2 * n))) - 1).max() > tol:
            raise ValueError("post-processing rows do not sum to one")
        for d, p in zip(self.dims, self.local):
            if tuple(p.dims) != (d, d):
                raise DimensionError("local POVMs act on A'A")
            p.validate(tol)
        return self

    def certificate(self, outcome):
        """Sum-of-products terms ``[(coefficient, [factor per party]), ...]`` for one outcome."""
        out = []
        n = len(self.dims)
        for lam in np.ndindex(*self.post.shape[:n]):
            c = float(self.post[lam + tuple(outcome)])
            if c != 0.0:
                out.append((c, [p.elements[l] for p, l in zip(self.local, lam)]))
        return out

    def joint_elements(self) -> np.ndarray:
        """Assembled joint POVM in party-grouped order ``(A'_1 A_1)(A'_2 A_2)...``."""
        n = len(self.dims)
        outs = self.post.shape[n:]
        els = []
        for i in np.ndindex(*outs):
            els.append(sum(c * kron(*fs) for c, fs in self.certificate(i)))
        return np.array(els)


def faithful_strategy(dims) -> Faithful:
    return Faithful(tuple(int(d) for d in dims))


def trivial_strategy(dims) -> Trivial:
    return Trivial(tuple(int(d) for d in dims))


def bell_povm(d: int) -> Povm:
    return Povm((d, d), qudit_kit(d).bell.projectors, tuple(range(d * d)))


def as_product_losr(strategy) -> ProductLosr:
    """Faithful and Trivial rewritten as single-component product strategies."""
    if isinstance(strategy, ProductLosr):
        return strategy
    dims = strategy.dims
    if isinstance(strategy, Faithful):
        return ProductLosr(dims, ((1.0, tuple(bell_povm(d) for d in dims)),))
    if isinstance(strategy, Trivial):
        povms = tuple(
            Povm((d, d), np.repeat(np.eye(d * d, dtype=complex)[None] / d**2, d * d, axis=0))
            for d in dims
        )
        return ProductLosr(dims, ((1.0, povms),))
    raise TypeError(f"{type(strategy).__name__} has no product-LOSR form")


def random_losr_strategy(dims, n_components: int, seed, rank=None) -> ProductLosr:
    rng = make_rng(seed)
    dims = tuple(int(d) for d in dims)
    weights = rng.dirichlet(np.ones(n_components))
    mix = []
    for w in weights:
        povms = tuple(random_povm(d * d, d * d, rng, rank=rank, dims=(d, d)) for d in dims)
        mix.append((float(w), povms))
    return ProductLosr(dims, tuple(mix))


def random_separable_strategy(dims, terms: int, seed, rank=None) -> Separable:
    """Local POVMs with ``terms`` outcomes each and a random joint relabelling."""
    rng = make_rng(seed)
    dims = tuple(int(d) for d in dims)
    local = tuple(random_povm(d * d, terms, rng, rank=rank, dims=(d, d)) for d in dims)
    outs = int(np.prod([d * d for d in dims]))
    post = rng.dirichlet(np.full(outs, 0.3), size=terms ** len(dims))
    post = post.reshape((terms,) * len(dims) + tuple(d * d for d in dims))
    return Separable(dims, local, post)


def random_strategy(dims, seed, kind=None):
    """One random adversarial strategy; ``kind`` is ``losr``, ``separable`` or random."""
    rng = make_rng(seed)
    if kind is None:
        kind = "losr" if rng.random() < 0.5 else "separable"
    if kind == "losr":
        return random_losr_strategy(dims, int(rng.integers(1, 4)), rng,
                                    rank=int(rng.integers(1, dims[0] ** 2 + 1)))
    if kind == "separable":
        return random_separable_strategy(dims, int(rng.integers(2, 5)), rng,
                                         rank=int(rng.integers(1, dims[0] ** 2 + 1)))
    raise ValueError(f"unknown strategy kind {kind!r}")


# --------------------------------------------------------------------------- #
#                                   Tables                                    #
# --------------------------------------------------------------------------- #

def default_inputs(dims):
    return tuple(qudit_kit(d).states for d in dims)


def _xi4(povm: Povm, d: int):
    """POVM elements as ``(outcome, a', a, b', b)`` tensors on the ancilla-first doubled space."""
    return povm.elements.reshape(len(povm), d, d, d, d)


def effective_operators(povm: Povm, inputs: LocalStateSet) -> np.ndarray:
    """``M[k, i] = tr_A'[Xi_i (omega_k (x) I)]`` with ``omega_k = tau_k^T``; shape ``(K, I, d, d)``."""
    d = inputs.d
    xi = _xi4(povm, d)
    omega = np.transpose(inputs.states, (0, 2, 1))
    # tr_A'[Xi (w (x) I)][a, b] = sum_{a', b'} Xi[a', a, b', b] w[b', a']
    return np.einsum("iaxby,kba->kixy", xi, omega)


def postselection_maps(povm: Povm, d: int) -> np.ndarray:
    """``G[i, a', b', b, a]`` with ``tr_A[Xi_i (I (x) X)][a', b'] = sum G[i, a', b', b, a] X[b, a]``."""
    return np.transpose(_xi4(povm, d), (0, 1, 3, 4, 2))


def _product_table(rho_t, ops, n):
    """``P[k.., i..] = tr[(x)_j ops[j][k_j, i_j] rho]``."""
    letters = "abcdefghijklmnopqrstuvwxyz"
    ks = letters[:n]
    is_ = letters[n:2 * n]
    rs = letters[2 * n:3 * n]
    cs = letters[3 * n:4 * n]
    spec = rs + cs + "," + ",".join(ks[j] + is_[j] + cs[j] + rs[j] for j in range(n))
    spec += "->" + ks + is_
    return np.einsum(spec, rho_t, *ops, optimize=True).real


def _check_rho(rho, dims):
    if isinstance(rho, DensityMatrix):
        if tuple(rho.dims) != tuple(dims):
            raise DimensionError(f"state dims {rho.dims} do not match strategy dims {dims}")
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def run_protocol(rho, inputs: Sequence[LocalStateSet] | None, strategy) -> ProbabilityTable:
    """Exact Born-rule table ``P(i | k)`` for the given strategy."""
    dims = tuple(strategy.dims)
    n = len(dims)
    m = _check_rho(rho, dims)
    if m.shape != (int(np.prod(dims)),) * 2:
        raise DimensionError("state size does not match strategy dims")
    inputs = default_inputs(dims) if inputs is None else tuple(inputs)
    if len(inputs) != n or any(s.d != d for s, d in zip(inputs, dims)):
        raise DimensionError("one input set of matching dimension per party is required")
    sq = tuple(d * d for d in dims)
    kin = tuple(len(s) for s in inputs)

    if isinstance(strategy, Trivial):
        return ProbabilityTable(dims, sq, np.full(kin + sq, 1.0 / np.prod(sq)))

    rho_t = m.reshape(dims + dims)
    if isinstance(strategy, Faithful):
        strategy = as_product_losr(strategy)
    if isinstance(strategy, ProductLosr):
        p = np.zeros(kin + sq)
        for w, povms in strategy.mixture:
            ops = [effective_operators(pv, s) for pv, s in zip(povms, inputs)]
            p += w * _product_table(rho_t, ops, n)
        return ProbabilityTable(dims, sq, p)
    if isinstance(strategy, Separable):
        ops = [effective_operators(pv, s) for pv, s in zip(strategy.local, inputs)]
        q = _product_table(rho_t, ops, n)                    # (k.., lambda..)
        p = np.tensordot(q, strategy.post, axes=(list(range(n, 2 * n)), list(range(n))))
        return ProbabilityTable(dims, sq, p)
    raise TypeError(f"unsupported strategy {type(strategy).__name__}")


def joint_born_table(rho, inputs, elements, dims) -> np.ndarray:
    """Reference table from full joint operators, ``tr[Xi_i ((x)_j omega_k (x) rho)]``.

    ``elements`` are in party-grouped order ``(A'_1 A_1)(A'_2 A_2)...``. Slow; used as an
    independent check of :func:`run_protocol`.
    """
    m = _check_rho(rho, dims)
    n = len(dims)
    inputs = default_inputs(dims) if inputs is None else inputs
    # reorder (A'_1..A'_n, A_1..A_n) -> (A'_1 A_1 ... A'_n A_n)
    from .numerics import permute_parties
    order = []
    for j in range(n):
        order += [j, n + j]
    full_dims = list(dims) + list(dims)
    kin = tuple(len(s) for s in inputs)
    out = np.zeros(kin + (len(elements),))
    for k in np.ndindex(*kin):
        omega = kron(*[inputs[j].states[k[j]].T for j in range(n)])
        joint = permute_parties(np.kron(omega, m), full_dims, order)
        out[k] = np.einsum("xab,ba->x", elements, joint).real
    return out


def sample_table(table: ProbabilityTable, shots: int, seed) -> ProbabilityTable:
    """Multinomial frequencies with ``shots`` draws per input setting."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = make_rng(seed)
    n = table.n_parties
    kshape = table.probs.shape[:n]
    flat = table.probs.reshape(int(np.prod(kshape)), -1)
    out = np.empty_like(flat)
    for r, row in enumerate(flat):
        pr = np.clip(row, 0.0, None)
        pr = pr / pr.sum()
        out[r] = rng.multinomial(shots, pr) / shots
    return ProbabilityTable(table.dims, table.outcomes, out.reshape(table.probs.shape))


# --------------------------------------------------------------------------- #
#                     Post-selected and equivalent states                     #
# --------------------------------------------------------------------------- #

def _apply_maps(x, maps, dims):
    """Apply per-party outcome-indexed maps; returns ``(I_1..I_n, D', D')``."""
    n = len(dims)
    t = x.reshape(tuple(dims) + tuple(dims))
    # axes: rows r_0..r_{n-1}, cols c_0..c_{n-1}; processed parties append (i, p, q)
    for j, g in enumerate(maps):
        # current leading axes: r_j..r_{n-1}, c_j..c_{n-1}, then 3*j processed axes
        t = np.tensordot(g, t, axes=([3, 4], [0, n - j]))    # -> (i, p, q, remaining...)
        t = np.moveaxis(t, [0, 1, 2], [-3, -2, -1])
    # axes: (i_0, p_0, q_0, i_1, p_1, q_1, ...)
    idx_i = [3 * j for j in range(n)]
    idx_p = [3 * j + 1 for j in range(n)]
    idx_q = [3 * j + 2 for j in range(n)]
    t = np.transpose(t, idx_i + idx_p + idx_q)
    outs = t.shape[:n]
    dout = int(np.prod(t.shape[n:2 * n]))
    return t.reshape(outs + (dout, dout))


def postselected_states(rho, strategy) -> np.ndarray:
    """Unnormalized ancilla states ``rho~_i`` with ``P(i | k) = tr[rho~_i (x)_j omega_{k_j}]``.

    Shape ``(I_1..I_n, D, D)`` on ``A'_1..A'_n``; they sum to the identity.
    """
    dims = tuple(strategy.dims)
    m = _check_rho(rho, dims)
    if isinstance(strategy, (Faithful, Trivial)):
        strategy = as_product_losr(strategy)
    if isinstance(strategy, ProductLosr):
        out = None
        for w, povms in strategy.mixture:
            maps = [postselection_maps(p, d) for p, d in zip(povms, dims)]
            term = w * _apply_maps(m, maps, dims)
            out = term if out is None else out + term
        return out
    if isinstance(strategy, Separable):
        n = len(dims)
        maps = [postselection_maps(p, d) for p, d in zip(strategy.local, dims)]
        q = _apply_maps(m, maps, dims)                        # (lambda.., D, D)
        return np.tensordot(strategy.post, q, axes=(list(range(n)), list(range(n))))
    raise TypeError(f"unsupported strategy {type(strategy).__name__}")


def eve_equivalent_state(rho, strategy) -> DensityMatrix:
    """``sigma_Eve = (1/Omega) sum_i (x)U_i^* rho~_i (x)U_i^T``.

    For every decomposition of every ``W``, ``Omega * mdi_value = tr(W sigma_Eve^T)``.
    For product strategies the map ``rho -> sigma_Eve`` is an LOSR channel; for
    ``Separable`` ones it is a separable channel and the identity still holds.
    """
    dims = tuple(strategy.dims)
    n = len(dims)
    rt = postselected_states(rho, strategy)
    kits = [qudit_kit(d) for d in dims]
    out = np.zeros(rt.shape[-2:], dtype=complex)
    for i in np.ndindex(*rt.shape[:n]):
        u = kron(*[kits[j].hw.unitaries[i[j]].conj() for j in range(n)])
        out += u @ rt[i] @ u.conj().T
    return DensityMatrix(out / np.prod(dims), dims)


def eve_channels(strategy) -> list:
    """Per-component, per-party Choi states of the LOSR map ``rho -> sigma_Eve``.

    Returns ``[(pi, [ChoiState per party]), ...]`` suitable for :func:`quantum.apply_losr`.
    """
    strategy = as_product_losr(strategy)
    out = []
    for w, povms in strategy.mixture:
        chans = []
        for d, p in zip(strategy.dims, povms):
            g = postselection_maps(p, d)
            us = qudit_kit(d).hw.unitaries
            j = np.zeros((d * d, d * d), dtype=complex)
            for a in range(d):
                for b in range(d):
                    e = np.zeros((d, d), dtype=complex)
                    e[a, b] = 1.0
                    img = np.einsum("ipqrc,rc->ipq", g, e)
                    img = np.einsum("ixp,ipq,iyq->xy", us.conj(), img, us) / d
                    j += np.kron(e, img) / d
            chans.append(ChoiState(d, d, j))
        out.append((w, chans))
    return out


def strategy_summary(strategy) -> dict:
    kind = type(strategy).__name__
    out = {"kind": kind, "dims": list(strategy.dims)}
    if isinstance(strategy, ProductLosr):
        out["components"] = len(strategy.mixture)
    if isinstance(strategy, Separable):
        out["local_outcomes"] = [len(p) for p in strategy.local]
    return out


def renormalized(povm_effects, d):
    """Convenience: build a valid doubled-space POVM from arbitrary PSD effects."""
    return Povm((d, d), normalize_effects(povm_effects))
