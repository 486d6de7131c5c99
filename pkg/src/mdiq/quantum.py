"""States, POVMs, channels and certified separable constructions.

Conventions
-----------
* Choi states are normalized, ``J = (id (x) N)(Phi+)``, with the input copy
  ``A'`` as the first tensor factor.
* A channel is applied through ``N(X) = d_A tr_A'[J (X^T (x) I)]``.
* Every random constructor takes an explicit ``seed`` (int, SeedSequence or
  Generator). Generators are numpy PCG64; independent streams come from
  ``SeedSequence.spawn``.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .numerics import (
    DimensionError,
    hermitize,
    is_hermitian,
    kron,
    min_eig,
    parse_matrices,
    partial_trace,
    partial_transpose,
    permute_parties,
    proj,
)

STATE_TOL = 1e-10


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed, n: int):
    """``n`` independent child seed sequences."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, np.random.Generator):
        ss = np.random.SeedSequence(int(seed.integers(2**63)))
    else:
        ss = np.random.SeedSequence(seed)
    return ss.spawn(n)


# --------------------------------------------------------------------------- #
#                                   States                                    #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    dims: tuple

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        n = int(np.prod(dims))
        if m.shape != (n, n):
            raise DimensionError(f"state of shape {m.shape} does not match dims {dims}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def validate(self, tol: float = STATE_TOL):
        m = self.matrix
        if not np.all(np.isfinite(m)):
            raise ValueError("state has non-finite entries")
        if not is_hermitian(m):
            raise ValueError("state is not Hermitian")
        if abs(np.trace(m).real - 1) > tol:
            raise ValueError(f"state trace {np.trace(m).real:.3g} != 1")
        if min_eig(m) < -tol:
            raise ValueError("state is not positive semidefinite")
        return self

    def purity(self):
        return float(np.trace(self.matrix @ self.matrix).real)

    def ptrace(self, keep):
        keep = [keep] if isinstance(keep, int) else sorted(keep)
        return DensityMatrix(partial_trace(self.matrix, self.dims, keep),
                             tuple(self.dims[k] for k in keep))

    def ptranspose(self, parties):
        return partial_transpose(self.matrix, self.dims, parties)

    def transpose(self):
        return DensityMatrix(self.matrix.T.copy(), self.dims)


def max_entangled(d: int) -> DensityMatrix:
    v = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return DensityMatrix(proj(v), (d, d))


def werner_state(p: float, d: int = 2) -> DensityMatrix:
    """Isotropic mixture ``p Phi+ + (1-p) I/d^2``."""
    return DensityMatrix(p * max_entangled(d).matrix + (1 - p) * np.eye(d * d) / d**2, (d, d))


def maximally_mixed(dims) -> DensityMatrix:
    n = int(np.prod(dims))
    return DensityMatrix(np.eye(n, dtype=complex) / n, tuple(dims))


def _ginibre(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_pure(d: int, seed) -> np.ndarray:
    rng = make_rng(seed)
    v = _ginibre(rng, d, 1)[:, 0]
    return v / np.linalg.norm(v)


def random_density(d, rank=None, seed=None) -> DensityMatrix:
    """``G G^dag / tr`` with a ``d x rank`` Ginibre matrix; ``d`` may be a dim list."""
    dims = (int(d),) if np.isscalar(d) else tuple(int(x) for x in d)
    n = int(np.prod(dims))
    rank = n if rank is None else int(rank)
    if not 1 <= rank <= n:
        raise ValueError(f"rank must lie in [1, {n}]")
    g = _ginibre(make_rng(seed), n, rank)
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, dims)


def random_unitary(d: int, seed) -> np.ndarray:
    return unitary_group.rvs(d, random_state=make_rng(seed))


def random_hermitian(n: int, seed, scale: float = 1.0) -> np.ndarray:
    g = _ginibre(make_rng(seed), n, n)
    return scale * (g + g.conj().T) / 2


# --------------------------------------------------------------------------- #
#                          Separability certificates                          #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class CertTerm:
    weight: float
    partition: tuple        # tuple of tuples of party indices
    factors: tuple          # one density matrix per block


@dataclass(frozen=True, eq=False)
class SeparableCertificate:
    """Explicit convex decomposition ``sum_mu pi(mu) (x)_blocks rho_mu``."""
    dims: tuple
    terms: tuple

    def term_operator(self, term: CertTerm) -> np.ndarray:
        flat = [p for block in term.partition for p in block]
        op = kron(*term.factors)
        kdims = [self.dims[p] for p in flat]
        order = [flat.index(j) for j in range(len(self.dims))]
        return permute_parties(op, kdims, order)

    def assemble(self) -> np.ndarray:
        return sum(t.weight * self.term_operator(t) for t in self.terms)

    def weights(self):
        return np.array([t.weight for t in self.terms])

    def check(self, state=None, tol: float = 1e-9):
        w = self.weights()
        if w.min() < -1e-12 or abs(w.sum() - 1) > 1e-10:
            raise ValueError("certificate weights are not a probability vector")
        n = len(self.dims)
        for t in self.terms:
            if sorted(p for b in t.partition for p in b) != list(range(n)):
                raise ValueError("term partition does not cover every party once")
            for b, f in zip(t.partition, t.factors):
                bd = int(np.prod([self.dims[p] for p in b]))
                if f.shape != (bd, bd):
                    raise DimensionError("certificate factor has wrong size")
                if min_eig(f) < -STATE_TOL or abs(np.trace(f).real - 1) > STATE_TOL:
                    raise ValueError("certificate factor is not a density matrix")
        if state is not None:
            m = state.matrix if isinstance(state, DensityMatrix) else state
            if np.abs(self.assemble() - m).max() > tol * max(1.0, np.linalg.norm(m)):
                raise ValueError("certificate does not reassemble the state")
        return self

    @property
    def fully_separable(self):
        return all(all(len(b) == 1 for b in t.partition) for t in self.terms)


def random_separable(dims: Sequence[int], terms: int, seed, mixed: bool = False):
    """Dirichlet-weighted mixture of random product states with its certificate."""
    dims = tuple(int(d) for d in dims)
    if terms < 1:
        raise ValueError("need at least one term")
    rng = make_rng(seed)
    weights = rng.dirichlet(np.ones(terms))
    part = tuple((j,) for j in range(len(dims)))
    out = []
    for w in weights:
        if mixed:
            facs = tuple(random_density(d, seed=rng).matrix for d in dims)
        else:
            facs = tuple(proj(random_pure(d, rng)) for d in dims)
        out.append(CertTerm(float(w), part, facs))
    cert = SeparableCertificate(dims, tuple(out))
    return DensityMatrix(cert.assemble(), dims), cert


def _random_partition(n, k, rng):
    """Uniformly labelled surjection of ``n`` parties onto ``k`` blocks."""
    while True:
        labels = rng.integers(0, k, size=n)
        if len(set(labels.tolist())) == k:
            break
    return tuple(tuple(int(j) for j in np.flatnonzero(labels == b)) for b in range(k))


def random_k_separable(dims: Sequence[int], k: int, terms: int, seed):
    """Mixture of states that are product across a random ``k``-block partition per term."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    rng = make_rng(seed)
    weights = rng.dirichlet(np.ones(terms))
    out = []
    for w in weights:
        part = _random_partition(n, k, rng)
        facs = tuple(proj(random_pure(int(np.prod([dims[p] for p in b])), rng)) for b in part)
        out.append(CertTerm(float(w), part, facs))
    cert = SeparableCertificate(dims, tuple(out))
    return DensityMatrix(cert.assemble(), dims), cert


# --------------------------------------------------------------------------- #
#                                    POVMs                                    #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class Povm:
    dims: tuple
    elements: np.ndarray   # (outcomes, n, n)
    labels: tuple = ()

    def __len__(self):
        return self.elements.shape[0]

    def validate(self, tol: float = 1e-9):
        n = int(np.prod(self.dims))
        if self.elements.shape[1:] != (n, n):
            raise DimensionError("POVM element size does not match dims")
        for e in self.elements:
            if min_eig(e) < -STATE_TOL:
                raise ValueError("POVM element is not PSD")
        if np.abs(self.elements.sum(axis=0) - np.eye(n)).max() > tol:
            raise ValueError("POVM elements do not sum to the identity")
        return self


def normalize_effects(effects) -> np.ndarray:
    """Map PSD effects ``E_i`` to ``S^{-1/2} E_i S^{-1/2}`` with ``S = sum E_i``."""
    effects = np.asarray(effects, dtype=complex)
    s = hermitize(effects.sum(axis=0))
    w, v = np.linalg.eigh(s)
    if w.min() <= 1e-12 * max(w.max(), 1e-300):
        raise ValueError("effects do not span the space")
    r = (v / np.sqrt(w)) @ v.conj().T
    out = np.einsum("ij,kjl,lm->kim", r, effects, r)
    return (out + np.conj(np.transpose(out, (0, 2, 1)))) / 2


def random_povm(n: int, outcomes: int, seed, rank=None, dims=None) -> Povm:
    """Random ``outcomes``-element POVM on ``C^n``; ``rank`` is raised so the effects span."""
    rng = make_rng(seed)
    rank = n if rank is None else max(int(rank), -(-n // outcomes))
    effects = []
    for _ in range(outcomes):
        g = _ginibre(rng, n, rank)
        effects.append(g @ g.conj().T)
    return Povm(tuple(dims) if dims else (n,), normalize_effects(effects), tuple(range(outcomes)))


def basis_measurement(d: int, u=None) -> Povm:
    u = np.eye(d) if u is None else np.asarray(u)
    return Povm((d,), np.array([proj(u[:, j]) for j in range(d)]), tuple(range(d)))


# --------------------------------------------------------------------------- #
#                                  Channels                                   #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class ChoiState:
    """Normalized Choi state on ``A' (x) B``."""
    d_in: int
    d_out: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.d_in * self.d_out,) * 2:
            raise DimensionError("Choi matrix size does not match (d_in, d_out)")
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self):
        return (self.d_in, self.d_out)

    def state(self) -> DensityMatrix:
        return DensityMatrix(self.matrix, self.dims)

    def validate(self, tol: float = 1e-9):
        if min_eig(self.matrix) < -STATE_TOL:
            raise ValueError("Choi matrix is not PSD")
        marg = partial_trace(self.matrix, self.dims, [0])
        if np.abs(marg - np.eye(self.d_in) / self.d_in).max() > tol:
            raise ValueError("Choi marginal is not maximally mixed; channel is not trace preserving")
        return self

    def __call__(self, rho):
        return apply_channel(self, rho)


def _check_kraus(kraus, tol=1e-9):
    kraus = np.asarray(kraus, dtype=complex)
    if kraus.ndim == 2:
        kraus = kraus[None]
    d_in = kraus.shape[2]
    s = np.einsum("kji,kjl->il", kraus.conj(), kraus)
    if np.abs(s - np.eye(d_in)).max() > tol:
        raise ValueError("Kraus operators are not trace preserving")
    return kraus


def choi_from_kraus(kraus) -> ChoiState:
    kraus = _check_kraus(kraus)
    d_out, d_in = kraus.shape[1:]
    # (1/d) sum_ab |a><b| (x) K|a><b|K^dag = (1/d) sum_k vec(K^T) vec(K^T)^dag
    vecs = np.transpose(kraus, (0, 2, 1)).reshape(len(kraus), -1)
    j = np.einsum("ka,kb->ab", vecs, vecs.conj()) / d_in
    return ChoiState(d_in, d_out, j)


def apply_kraus(kraus, rho) -> np.ndarray:
    kraus = np.asarray(kraus, dtype=complex)
    rho = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return np.einsum("kij,jl,kml->im", kraus, rho, kraus.conj())


def apply_channel(choi: ChoiState, rho):
    """``N(X) = d_A tr_A'[J (X^T (x) I)]``; returns a DensityMatrix for DensityMatrix input."""
    x = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if x.shape != (choi.d_in, choi.d_in):
        raise DimensionError("input size does not match channel input dimension")
    j4 = choi.matrix.reshape(choi.d_in, choi.d_out, choi.d_in, choi.d_out)
    out = choi.d_in * np.einsum("ac,apcq->pq", x, j4)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, (choi.d_out,))
    return out


def apply_local_channel(choi: ChoiState, m, dims, party: int):
    """Apply a channel to one tensor factor of a multipartite operator."""
    m = np.asarray(m, dtype=complex)
    dims = list(dims)
    if dims[party] != choi.d_in:
        raise DimensionError(f"party {party} has dim {dims[party]}, channel expects {choi.d_in}")
    n = len(dims)
    t = m.reshape(dims + dims)
    t = np.moveaxis(t, [party, n + party], [0, 1])
    j4 = choi.matrix.reshape(choi.d_in, choi.d_out, choi.d_in, choi.d_out)
    t = choi.d_in * np.tensordot(j4, t, axes=([0, 2], [0, 1]))   # -> (p, q, rest...)
    t = np.moveaxis(t, [0, 1], [party, n + party])
    dims[party] = choi.d_out
    size = int(np.prod(dims))
    return t.reshape(size, size), tuple(dims)


def choi_to_kraus(choi: ChoiState, tol: float = 1e-12):
    w, v = np.linalg.eigh(hermitize(choi.matrix))
    ks = []
    for lam, vec in zip(w, v.T):
        if lam > tol:
            k = np.sqrt(choi.d_in * lam) * vec.reshape(choi.d_in, choi.d_out).T
            ks.append(k)
    return np.array(ks)


def identity_channel(d: int) -> ChoiState:
    return ChoiState(d, d, max_entangled(d).matrix)


def unitary_channel(u) -> ChoiState:
    return choi_from_kraus(np.asarray(u)[None])


def depolarizing_channel(d: int, p: float) -> ChoiState:
    """``N(X) = (1-p) X + p tr(X) I/d``."""
    if not 0 <= p <= 1 + 1 / (d * d - 1):
        raise ValueError("depolarizing parameter out of the CPTP range")
    j = (1 - p) * max_entangled(d).matrix + p * np.eye(d * d) / d**2
    return ChoiState(d, d, j)


def eb_channel(measure: Povm, prepare) -> ChoiState:
    """Measure-and-prepare channel ``X -> sum_i tr(M_i X) sigma_i``; Choi ``(1/d) sum M_i^T (x) sigma_i``."""
    prepare = [p.matrix if isinstance(p, DensityMatrix) else np.asarray(p, dtype=complex) for p in prepare]
    if len(prepare) != len(measure):
        raise ValueError("need one prepared state per POVM outcome")
    d = measure.elements.shape[1]
    j = sum(np.kron(m.T, s) for m, s in zip(measure.elements, prepare)) / d
    return ChoiState(d, prepare[0].shape[0], j)


def eb_certificate(measure: Povm, prepare) -> SeparableCertificate:
    """Certificate for the Choi state of :func:`eb_channel`."""
    prepare = [p.matrix if isinstance(p, DensityMatrix) else np.asarray(p, dtype=complex) for p in prepare]
    d = measure.elements.shape[1]
    terms = []
    for m, s in zip(measure.elements, prepare):
        w = np.trace(m).real / d
        if w > 0:
            terms.append(CertTerm(w, ((0,), (1,)), (m.T / np.trace(m).real, s)))
    return SeparableCertificate((d, prepare[0].shape[0]), tuple(terms))


def z_measure_prepare(d: int = 2) -> ChoiState:
    meas = basis_measurement(d)
    return eb_channel(meas, list(meas.elements))


def constant_channel(sigma, d_in: int) -> ChoiState:
    sigma = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=complex)
    return ChoiState(d_in, sigma.shape[0], np.kron(np.eye(d_in) / d_in, sigma))


def bit_flip_channel() -> ChoiState:
    return unitary_channel(np.array([[0, 1], [1, 0]], dtype=complex))


def random_channel(d_in: int, d_out: int, n_kraus: int, seed) -> ChoiState:
    """Random Stinespring isometry cut into ``n_kraus`` Kraus operators."""
    if d_out * n_kraus < d_in:
        raise ValueError(f"{n_kraus} Kraus operators of shape {d_out}x{d_in} cannot be trace preserving")
    rng = make_rng(seed)
    g = _ginibre(rng, d_out * n_kraus, d_in)
    q, _ = np.linalg.qr(g)
    return choi_from_kraus(q.reshape(n_kraus, d_out, d_in))


def random_eb_channel(d_in: int, d_out: int, outcomes: int, seed):
    """Random measure-and-prepare channel; returns ``(choi, certificate)``."""
    rng = make_rng(seed)
    meas = random_povm(d_in, outcomes, rng)
    prep = [random_density(d_out, seed=rng).matrix for _ in range(outcomes)]
    return eb_channel(meas, prep), eb_certificate(meas, prep)


def channel_preset(name: str, d: int = 2) -> ChoiState:
    """Named channels: identity, depolarizing(p), z-measure-prepare, constant, bit-flip."""
    name = name.strip().lower()
    if name == "identity":
        return identity_channel(d)
    if name.startswith("depolarizing"):
        arg = name[len("depolarizing"):].strip("() ")
        return depolarizing_channel(d, float(arg) if arg else 0.5)
    if name == "z-measure-prepare":
        return z_measure_prepare(d)
    if name.startswith("constant"):
        return constant_channel(np.eye(d) / d, d)
    if name == "bit-flip":
        if d != 2:
            raise DimensionError("bit-flip preset is a qubit channel")
        return bit_flip_channel()
    raise KeyError(f"unknown channel preset {name!r}")


def parse_channel(text: str) -> ChoiState:
    """Channel file: ``kind: kraus|choi`` then matrix blocks in the shared text format.

    A Choi block declares ``dims: d_in d_out``.
    """
    lines = text.splitlines()
    kind = None
    body = []
    for ln in lines:
        s = ln.split("#", 1)[0].strip()
        if kind is None and s.startswith("kind:"):
            kind = s[5:].strip().lower()
            continue
        body.append(ln)
    if kind not in ("kraus", "choi"):
        raise ValueError("channel file must start with 'kind: kraus' or 'kind: choi'")
    blocks = parse_matrices("\n".join(body))
    if not blocks:
        raise ValueError("channel file has no matrices")
    if kind == "choi":
        if len(blocks) != 1:
            raise ValueError("a Choi channel file holds exactly one matrix")
        m, dims = blocks[0]
        if len(dims) != 2:
            raise DimensionError("Choi block must declare 'dims: d_in d_out'")
        return ChoiState(dims[0], dims[1], m).validate()
    return choi_from_kraus(np.array([m for m, _ in blocks])).validate()


# --------------------------------------------------------------------------- #
#                                    LOSR                                     #
# --------------------------------------------------------------------------- #

def apply_product_channels(chois, m, dims):
    """``(x)_j N_j`` applied to a multipartite operator."""
    dims = tuple(dims)
    for p, c in enumerate(chois):
        m, dims = apply_local_channel(c, m, dims, p)
    return m, dims


def apply_losr(state: DensityMatrix, certificate: SeparableCertificate, losr):
    """Apply ``sum_nu q(nu) (x)_j N_{nu,j}`` and carry the certificate along.

    ``losr`` is a list of ``(weight, [ChoiState per party])``. Each certificate
    term is mapped block by block, so separability of the output is explicit.
    """
    dims = state.dims
    if certificate.dims != dims:
        raise DimensionError("certificate and state dims differ")
    qs = np.array([w for w, _ in losr], dtype=float)
    if qs.min() < 0 or abs(qs.sum() - 1) > 1e-10:
        raise ValueError("LOSR weights must form a probability vector")
    for _, chans in losr:
        if len(chans) != len(dims) or any(c.d_in != d for c, d in zip(chans, dims)):
            raise DimensionError("LOSR channels do not match the party dims")
    out_dims = tuple(c.d_out for c in losr[0][1])
    if any(tuple(c.d_out for c in chans) != out_dims for _, chans in losr):
        raise DimensionError("LOSR components must share output dims")

    out = np.zeros((int(np.prod(out_dims)),) * 2, dtype=complex)
    for q, chans in losr:
        out += q * apply_product_channels(chans, state.matrix, dims)[0]

    terms = []
    for t in certificate.terms:
        for q, chans in losr:
            facs = []
            for block, f in zip(t.partition, t.factors):
                bd = [dims[p] for p in block]
                facs.append(apply_product_channels([chans[p] for p in block], f, bd)[0])
            terms.append(CertTerm(t.weight * q, t.partition, tuple(facs)))
    cert = SeparableCertificate(out_dims, tuple(terms))
    return DensityMatrix(out, out_dims), cert


def is_ppt(m, dims, parties=None, tol: float = 1e-10) -> bool:
    """PPT across every single-party cut (or the given ``parties``)."""
    parties = range(len(dims)) if parties is None else [parties]
    return all(min_eig(partial_transpose(m, dims, p)) >= -tol for p in parties)
