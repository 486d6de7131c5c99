"""Dense conic solver and the entanglement quantifiers built on it.

Problems have the standard form

    minimize  c . x   subject to  A x = b,  x in K

where ``K`` is a product of complex Hermitian PSD blocks (stored as real
isometric ``svec`` vectors), nonnegative orthants and free blocks. The solver
is ADMM with a fixed penalty: an exact projection onto the affine set
followed by a projection onto the cone.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bases import qudit_kit
from .decomp import ProbabilityTable
from .numerics import kron, partial_trace, partial_transpose, trace_norm

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 50_000


class SolverError(RuntimeError):
    pass


# --------------------------------------------------------------------------- #
#                              svec coordinates                               #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class _SvecIndex:
    n: int
    iu: tuple
    ju: tuple


def _svec_index(n):
    iu, ju = np.triu_indices(n, 1)
    return _SvecIndex(n, iu, ju)


def svec(h) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix (batched over leading axes)."""
    h = np.asarray(h)
    n = h.shape[-1]
    iu, ju = np.triu_indices(n, 1)
    diag = np.real(np.diagonal(h, axis1=-2, axis2=-1))
    off = h[..., iu, ju]
    return np.concatenate([diag, np.sqrt(2) * off.real, np.sqrt(2) * off.imag], axis=-1)


def smat(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    iu, ju = np.triu_indices(n, 1)
    m = len(iu)
    out = np.zeros(v.shape[:-1] + (n, n), dtype=complex)
    idx = np.arange(n)
    out[..., idx, idx] = v[..., :n]
    z = (v[..., n:n + m] + 1j * v[..., n + m:]) / np.sqrt(2)
    out[..., iu, ju] = z
    out[..., ju, iu] = np.conj(z)
    return out


def hermitian_basis(n: int) -> np.ndarray:
    """Matrices ``E_k`` with ``H = sum_k svec(H)_k E_k``."""
    return smat(np.eye(n * n), n)


def map_matrix(f, n_in: int) -> np.ndarray:
    """Real matrix of a Hermitian-preserving linear map in svec coordinates."""
    basis = hermitian_basis(n_in)
    return np.stack([svec(f(e)) for e in basis], axis=1)


# --------------------------------------------------------------------------- #
#                                Problem form                                 #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Block:
    kind: str   # "psd", "nonneg" or "free"
    size: int   # matrix dimension for psd, vector length otherwise

    @property
    def length(self):
        return self.size * self.size if self.kind == "psd" else self.size


@dataclass(eq=False)
class SdpProblem:
    """Linear objective and equality constraints over a block-structured cone.

    Build it with :meth:`add_block`, :meth:`add_rows` and :meth:`set_objective`.
    Functionals on PSD blocks act on svec coordinates, so ``tr(C X)`` is the row
    ``svec(C)``.
    """
    blocks: list = field(default_factory=list)
    sense: str = "min"
    _obj: dict = field(default_factory=dict)
    _rows: list = field(default_factory=list)
    _rhs: list = field(default_factory=list)
    offset: float = 0.0

    def add_block(self, kind: str, size: int) -> int:
        if kind not in ("psd", "nonneg", "free"):
            raise ValueError(f"unknown block kind {kind!r}")
        self.blocks.append(Block(kind, int(size)))
        return len(self.blocks) - 1

    def add_psd(self, n):
        return self.add_block("psd", n)

    def _offsets(self):
        off = np.cumsum([0] + [b.length for b in self.blocks])
        return off

    @property
    def n_vars(self):
        return int(sum(b.length for b in self.blocks))

    def add_rows(self, terms: dict, rhs) -> None:
        """Add ``sum_b terms[b] @ x_b = rhs``; each ``terms[b]`` is ``(r, len_b)``."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        for b, mat in terms.items():
            mat = np.atleast_2d(np.asarray(mat, dtype=float))
            if mat.shape != (len(rhs), self.blocks[b].length):
                raise ValueError(f"row block for variable {b} has shape {mat.shape}")
        self._rows.append({b: np.atleast_2d(np.asarray(m, dtype=float)) for b, m in terms.items()})
        self._rhs.append(rhs)

    def add_trace_eq(self, coeffs: dict, rhs: float) -> None:
        """``sum_b tr(C_b X_b) = rhs`` with Hermitian ``C_b`` (or vectors for non-PSD blocks)."""
        terms = {}
        for b, c in coeffs.items():
            terms[b] = svec(c)[None] if self.blocks[b].kind == "psd" else np.asarray(c, float)[None]
        self.add_rows(terms, [rhs])

    def set_objective(self, coeffs: dict, sense: str = "min", offset: float = 0.0) -> None:
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.sense = sense
        self.offset = float(offset)
        self._obj = {}
        for b, c in coeffs.items():
            self._obj[b] = svec(c) if self.blocks[b].kind == "psd" else np.asarray(c, dtype=float)

    def compile(self):
        """Dense ``(c, A, b)`` in minimization form."""
        off = self._offsets()
        n = int(off[-1])
        c = np.zeros(n)
        for b, v in self._obj.items():
            c[off[b]:off[b + 1]] += v
        if self.sense == "max":
            c = -c
        m = int(sum(len(r) for r in self._rhs))
        a = np.zeros((m, n))
        row = 0
        for terms, rhs in zip(self._rows, self._rhs):
            for b, mat in terms.items():
                a[row:row + len(rhs), off[b]:off[b + 1]] += mat
            row += len(rhs)
        rhs = np.concatenate(self._rhs) if self._rhs else np.zeros(0)
        return c, a, rhs

    def summary(self) -> dict:
        return {
            "blocks": [[b.kind, b.size] for b in self.blocks],
            "n_vars": self.n_vars,
            "n_constraints": int(sum(len(r) for r in self._rhs)),
            "sense": self.sense,
        }


@dataclass(frozen=True, eq=False)
class SdpSolution:
    value: float
    status: str               # "converged", "unconverged" or "infeasible"
    x: np.ndarray
    blocks: list
    primal_residual: float
    dual_residual: float
    iterations: int
    dual_value: float = float("nan")

    @property
    def converged(self):
        return self.status == "converged"

    def to_report(self) -> dict:
        return {
            "value": self.value,
            "status": self.status,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "dual_value": self.dual_value,
        }


# --------------------------------------------------------------------------- #
#                                   Solver                                    #
# --------------------------------------------------------------------------- #

class _Cone:
    """Vectorized projection onto the block cone; PSD blocks are grouped by size."""

    def __init__(self, blocks, offsets):
        self.psd = {}
        self.nonneg = []
        for b, (blk, o) in enumerate(zip(blocks, offsets[:-1])):
            if blk.kind == "psd":
                self.psd.setdefault(blk.size, []).append(np.arange(o, o + blk.length))
            elif blk.kind == "nonneg":
                self.nonneg.append(np.arange(o, o + blk.length))
        self.psd = {n: np.array(ix) for n, ix in self.psd.items()}
        self.nonneg = np.concatenate(self.nonneg) if self.nonneg else np.zeros(0, dtype=int)

    def project(self, v):
        out = v.copy()
        for n, ix in self.psd.items():
            m = smat(v[ix], n)
            w, u = np.linalg.eigh(m)
            w = np.clip(w, 0.0, None)
            out[ix] = svec(np.einsum("bij,bj,bkj->bik", u, w, u.conj()))
        if len(self.nonneg):
            out[self.nonneg] = np.clip(v[self.nonneg], 0.0, None)
        return out

    def min_eigs(self, v):
        worst = np.inf
        for n, ix in self.psd.items():
            worst = min(worst, float(np.linalg.eigvalsh(smat(v[ix], n)).min()))
        if len(self.nonneg):
            worst = min(worst, float(v[self.nonneg].min()))
        return worst


def _affine_projector(a, b, rank_tol=1e-10):
    """Return ``(q, x0)``: orthonormal row-space basis of ``A`` and the min-norm solution."""
    if a.shape[0] == 0:
        return np.zeros((a.shape[1], 0)), np.zeros(a.shape[1]), 0.0
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    keep = s > rank_tol * max(1.0, s[0])
    q = vt[keep].T
    x0 = q @ ((u[:, keep].T @ b) / s[keep])
    infeas = float(np.abs(a @ x0 - b).max())
    return q, x0, infeas


def solve(problem: SdpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          rho: float = 1.0, relax: float = 1.6, check_every: int = 10) -> SdpSolution:
    """ADMM with fixed penalty ``rho`` and over-relaxation ``relax``.

    Stops when ``max|x - z|`` (primal) and ``rho * max|z - z_prev|`` (dual) both
    fall below ``tol``. Identical inputs give identical iterates.
    """
    c, a, b = problem.compile()
    off = problem._offsets()
    cone = _Cone(problem.blocks, off)
    q, x0, infeas = _affine_projector(a, b)
    sign = -1.0 if problem.sense == "max" else 1.0
    n = len(c)
    if infeas > 1e-8 * max(1.0, np.abs(b).max() if len(b) else 1.0):
        return SdpSolution(float("nan"), "infeasible", x0, _split(problem, x0), infeas,
                           float("nan"), 0)

    def p_aff(v):
        return v - q @ (q.T @ v) + x0

    z = np.zeros(n)
    u = np.zeros(n)
    x = p_aff(z)
    cr = c / rho
    rp = rd = np.inf
    it = 0
    status = "unconverged"
    for it in range(1, max_iter + 1):
        x = p_aff(z - u - cr)
        xh = relax * x + (1 - relax) * z
        z_old = z
        z = cone.project(xh + u)
        u = u + xh - z
        if it % check_every == 0 or it == max_iter:
            rp = float(np.abs(x - z).max())
            rd = float(rho * np.abs(z - z_old).max())
            if rp <= tol and rd <= tol:
                status = "converged"
                break

    # the reported point is cone-feasible; its affine residual is the primal residual
    aff_res = float(np.abs(a @ z - b).max()) if len(b) else 0.0
    rp = max(rp, aff_res)
    value = sign * float(c @ z) + problem.offset
    dual = _dual_value(c, a, b, -rho * u, cone, q) * sign + problem.offset
    return SdpSolution(value, status, z, _split(problem, z), rp, rd, it, dual)


def _dual_value(c, a, b, s, cone, q):
    """``b . y`` with ``A^T y = c - s`` solved in least squares; ``nan`` if inconsistent."""
    if a.shape[0] == 0:
        return float("nan")
    y, *_ = np.linalg.lstsq(a.T, c - s, rcond=None)
    return float(b @ y)


def _split(problem, x):
    off = problem._offsets()
    out = []
    for blk, lo, hi in zip(problem.blocks, off[:-1], off[1:]):
        v = x[lo:hi]
        out.append(smat(v, blk.size) if blk.kind == "psd" else v.copy())
    return out


def _require(sol: SdpSolution, what: str, strict: bool):
    if sol.status == "infeasible":
        raise SolverError(f"{what}: constraints are infeasible")
    if not sol.converged:
        msg = (f"{what}: solver stopped after {sol.iterations} iterations "
               f"(primal {sol.primal_residual:.2e}, dual {sol.dual_residual:.2e})")
        if strict:
            raise SolverError(msg)
        log.warning(msg)


# --------------------------------------------------------------------------- #
#                                 Negativity                                  #
# --------------------------------------------------------------------------- #

def negativity(rho, dims: Sequence[int], parties=None) -> float:
    """``(||rho^Gamma||_1 - tr rho)/2`` with the partial transpose on ``parties``.

    Defaults to transposing every party except the first (the ``A_1 | rest``
    cut for two parties). Valid for unnormalized positive operators.
    """
    m = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)
    if parties is None:
        parties = list(range(1, len(dims)))
    pt = partial_transpose(m, dims, parties)
    return float((trace_norm(pt) - np.trace(m).real) / 2)


def _pt_matrix(dims, parties):
    n = int(np.prod(dims))
    return map_matrix(lambda e: partial_transpose(e, dims, parties), n)


def negativity_sdp(rho, dims, parties=None, **kw) -> SdpSolution:
    """Negativity through its trace-norm SDP: min (tr P + tr Q - tr rho)/2, rho^Gamma = P - Q."""
    m = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)
    parties = list(range(1, len(dims))) if parties is None else parties
    n = m.shape[0]
    pr = SdpProblem()
    p = pr.add_psd(n)
    qb = pr.add_psd(n)
    eye = np.eye(n * n)
    pr.add_rows({p: eye, qb: -eye}, svec(partial_transpose(m, dims, parties)))
    pr.set_objective({p: np.eye(n) / 2, qb: np.eye(n) / 2}, "min", -np.trace(m).real / 2)
    return solve(pr, **kw)


# --------------------------------------------------------------------------- #
#                          MDI state quantification                           #
# --------------------------------------------------------------------------- #

def _ancilla_ops(dims, inputs):
    """``omega_k = (x)_j tau_{k_j}^T`` for every input multi-index."""
    sets = [s.states if s is not None else qudit_kit(d).states.states for d, s in zip(dims, inputs)]
    kin = tuple(len(s) for s in sets)
    ops = {}
    for k in np.ndindex(*kin):
        ops[k] = kron(*[sets[j][k[j]].T for j in range(len(dims))])
    return ops


def mdi_quantify_state(table: ProbabilityTable, inputs=None, parties=None, input_subset=None,
                       ancilla_constraints: bool = True, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER, strict: bool = False, rho: float = 1.0):
    """Lower bound on the negativity of any state consistent with ``table``.

    Variables are the post-selected ancilla operators ``rho~_i`` with
    ``sum_i rho~_i = I`` and ``tr[rho~_i omega_k] = P(i | k)``; the objective is
    ``(1/Omega) sum_i N(rho~_i)`` with ``N`` the negativity across ``parties``.

    ``input_subset`` keeps only the listed input multi-indices (coarse
    graining). ``ancilla_constraints=False`` keeps only the maximally mixed
    input, which reproduces the single-joint-measurement degeneracy.
    Returns ``(bound, SdpSolution)``.
    """
    dims = tuple(table.dims)
    n = len(dims)
    parties = list(range(1, n)) if parties is None else list(parties)
    inputs = (None,) * n if inputs is None else tuple(inputs)
    omega = float(np.prod(dims))
    big = int(omega)
    outcomes = list(np.ndindex(*table.outcomes))
    ops = _ancilla_ops(dims, inputs)
    if not ancilla_constraints:
        keys = [tuple([0] * n)]
    elif input_subset is not None:
        keys = [tuple(k) for k in input_subset]
    else:
        keys = list(ops)

    pr = SdpProblem()
    rt = [pr.add_psd(big) for _ in outcomes]
    pp = [pr.add_psd(big) for _ in outcomes]
    qq = [pr.add_psd(big) for _ in outcomes]
    eye_s = np.eye(big * big)
    pr.add_rows({b: eye_s for b in rt}, svec(np.eye(big)))
    gam = _pt_matrix(dims, parties)
    zero = np.zeros(big * big)
    for r, p, q in zip(rt, pp, qq):
        pr.add_rows({r: gam, p: -eye_s, q: eye_s}, zero)
    rows = np.array([svec(ops[k]) for k in keys])
    for idx, r in zip(outcomes, rt):
        rhs = np.array([table.probs[k + idx] for k in keys])
        pr.add_rows({r: rows}, rhs)
    obj = {}
    for r, p, q in zip(rt, pp, qq):
        obj[p] = np.eye(big) / (2 * omega)
        obj[q] = np.eye(big) / (2 * omega)
        obj[r] = -np.eye(big) / (2 * omega)
    pr.set_objective(obj, "min")
    sol = solve(pr, tol=tol, max_iter=max_iter, rho=rho)
    _require(sol, "state quantifier", strict)
    return max(0.0, sol.value), sol


# --------------------------------------------------------------------------- #
#                           Memory quantification                             #
# --------------------------------------------------------------------------- #

def mdi_quantify_memory(probs, d_a: int, d_b: int, tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER, strict: bool = False, rho: float = 1.0):
    """Lower bound on the Choi negativity from ``probs[s, t, i] = P(i | s, t)``.

    ``rho~_i`` live on ``A B'`` with ``tr[rho~_i (tau_s^T (x) tau_t^T)] = P`` and
    ``sum_i rho~_i <= I``. Objective ``(1/(d_A d_B)) sum_i N(rho~_i)``.
    Returns ``(bound, SdpSolution)``.
    """
    probs = np.asarray(probs, dtype=float)
    n_out = probs.shape[2]
    big = d_a * d_b
    ta = qudit_kit(d_a).states.states
    tb = qudit_kit(d_b).states.states
    if probs.shape[:2] != (len(ta), len(tb)):
        raise ValueError("memory table must be indexed by (s, t, i) over the local state sets")
    pr = SdpProblem()
    rt = [pr.add_psd(big) for _ in range(n_out)]
    pp = [pr.add_psd(big) for _ in range(n_out)]
    qq = [pr.add_psd(big) for _ in range(n_out)]
    slack = pr.add_psd(big)
    eye_s = np.eye(big * big)
    terms = {b: eye_s for b in rt}
    terms[slack] = eye_s
    pr.add_rows(terms, svec(np.eye(big)))
    gam = _pt_matrix((d_a, d_b), [1])
    zero = np.zeros(big * big)
    for r, p, q in zip(rt, pp, qq):
        pr.add_rows({r: gam, p: -eye_s, q: eye_s}, zero)
    keys = [(s, t) for s in range(len(ta)) for t in range(len(tb))]
    rows = np.array([svec(np.kron(ta[s].T, tb[t].T)) for s, t in keys])
    for i, r in enumerate(rt):
        pr.add_rows({r: rows}, np.array([probs[s, t, i] for s, t in keys]))
    obj = {}
    w = 1.0 / (2 * big)
    for r, p, q in zip(rt, pp, qq):
        obj[p] = w * np.eye(big)
        obj[q] = w * np.eye(big)
        obj[r] = -w * np.eye(big)
    pr.set_objective(obj, "min")
    sol = solve(pr, tol=tol, max_iter=max_iter, rho=rho)
    _require(sol, "memory quantifier", strict)
    return max(0.0, sol.value), sol


# --------------------------------------------------------------------------- #
#                         PPT robustness and Legendre                         #
# --------------------------------------------------------------------------- #

def robustness_ppt(choi, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                   strict: bool = False, rho: float = 1.0):
    """``min tr N`` over ``N >= 0, N^Gamma >= 0, (J + N)^Gamma >= 0``.

    ``N = s J_M`` is a scaled Choi state, so ``tr_B N = (tr N) I / d_A``. PPT
    relaxation of the memory robustness (exact for 2x2 and 2x3). Returns
    ``(value, SdpSolution)``.
    """
    j = choi.matrix
    dims = (choi.d_in, choi.d_out)
    big = j.shape[0]
    pr = SdpProblem()
    nb = pr.add_psd(big)
    sb = pr.add_psd(big)
    rb = pr.add_psd(big)
    gam = _pt_matrix(dims, [1])
    eye_s = np.eye(big * big)
    pr.add_rows({nb: gam, sb: -eye_s}, np.zeros(big * big))
    pr.add_rows({nb: gam, rb: -eye_s}, -svec(partial_transpose(j, dims, [1])))
    d_a = choi.d_in
    marg = map_matrix(lambda e: partial_trace(e, dims, [0]) - np.trace(e) * np.eye(d_a) / d_a, big)
    pr.add_rows({nb: marg}, np.zeros(d_a * d_a))
    pr.set_objective({nb: np.eye(big)}, "min")
    sol = solve(pr, tol=tol, max_iter=max_iter, rho=rho)
    _require(sol, "robustness", strict)
    return max(0.0, sol.value), sol


def legendre_hat(w, dims, alpha: float, parties=None, tol: float = 1e-9,
                 max_iter: int = 200_000, strict: bool = False, rho: float = 1.0):
    """``sup_rho { alpha tr(W rho) - N(rho) }`` over density matrices.

    Returns ``(value, SdpSolution)``.
    """
    w = np.asarray(w, dtype=complex)
    parties = list(range(1, len(dims))) if parties is None else parties
    n = w.shape[0]
    pr = SdpProblem()
    r = pr.add_psd(n)
    p = pr.add_psd(n)
    q = pr.add_psd(n)
    pr.add_trace_eq({r: np.eye(n)}, 1.0)
    eye_s = np.eye(n * n)
    pr.add_rows({r: _pt_matrix(dims, parties), p: -eye_s, q: eye_s}, np.zeros(n * n))
    pr.set_objective({r: alpha * w, p: -np.eye(n) / 2, q: -np.eye(n) / 2}, "max", 0.5)
    sol = solve(pr, tol=tol, max_iter=max_iter, rho=rho)
    _require(sol, "Legendre transform", strict)
    return sol.value, sol
