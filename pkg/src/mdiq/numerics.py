"""Dense complex-matrix kernel.

Multipartite operators are flattened row-major with party 0 as the most
significant digit, so ``kron(a, b)`` acts on parties ``(0, 1)`` in that order.
Party indices are zero-based everywhere in the package.
"""

import functools
import io
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    """Operator shape and declared party dimensions disagree."""


def _check_dims(m, dims):
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise DimensionError(f"party dimensions must be positive, got {dims}")
    n = int(np.prod(dims))
    if m.ndim != 2 or m.shape != (n, n):
        raise DimensionError(f"matrix of shape {m.shape} does not match dims {dims}")
    return dims


def _parties(parties, n):
    if isinstance(parties, (int, np.integer)):
        parties = [parties]
    parties = sorted({int(p) for p in parties})
    for p in parties:
        if not 0 <= p < n:
            raise DimensionError(f"party index {p} out of range for {n} parties")
    return parties


def kron(*ops):
    """Kronecker product of any number of matrices, left to right."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return functools.reduce(np.kron, [np.asarray(o) for o in ops])


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every party not listed in ``keep``.

    The kept parties stay in their original relative order.
    """
    m = np.asarray(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    keep = _parties(keep, n)
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise DimensionError("too many parties")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for p in range(n):
        if p not in keep:
            col[p] = row[p]
    out = "".join(row[p] for p in keep) + "".join(col[p] for p in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[p] for p in keep])) if keep else 1
    return res.reshape(dk, dk)


def partial_transpose(m, dims: Sequence[int], party) -> np.ndarray:
    """Transpose the named parties' indices; works for non-Hermitian input too."""
    m = np.asarray(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    parties = _parties(party, n)
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    for p in parties:
        axes[p], axes[n + p] = axes[n + p], axes[p]
    return t.transpose(axes).reshape(m.shape)


def permute_parties(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors; new party ``j`` is old party ``order[j]``."""
    m = np.asarray(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    order = [int(o) for o in order]
    if sorted(order) != list(range(n)):
        raise DimensionError(f"{order} is not a permutation of {n} parties")
    t = m.reshape(dims + dims)
    t = t.transpose(order + [n + o for o in order])
    return t.reshape(m.shape)


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = max(1.0, np.linalg.norm(h))
    return np.linalg.norm(h - h.conj().T) <= tol * scale


def hermitize(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(h + h^dag)/2`` after checking ``h`` is Hermitian to ``tol``."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    return (h + h.conj().T) / 2


def hermitian_eig(h, tol: float = HERMITIAN_TOL):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    w, v = np.linalg.eigh(hermitize(h, tol))
    return w, v


def trace_norm(m) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(np.asarray(m), compute_uv=False).sum())


def psd_project(h) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    w, v = hermitian_eig(h)
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def min_eig(h) -> float:
    return float(np.linalg.eigvalsh((np.asarray(h) + np.asarray(h).conj().T) / 2)[0])


def ket(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


# --------------------------------------------------------------------------- #
#                             Matrix text format                              #
# --------------------------------------------------------------------------- #

def format_matrix(m, dims: Sequence[int] | None = None) -> str:
    """Serialize a matrix to the shared text format.

    First line ``dims: d1 ... dn``; then one line per row holding
    whitespace-separated ``re im`` pairs with 17 significant digits.
    """
    m = np.asarray(m, dtype=complex)
    if dims is None:
        dims = [m.shape[0]]
    lines = ["dims: " + " ".join(str(int(d)) for d in dims)]
    for row in m:
        lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrices(text: str):
    """Parse one or more matrix blocks; returns a list of ``(matrix, dims)``."""
    blocks = []
    dims = None
    rows: list = []

    def flush():
        if dims is None:
            return
        if not rows:
            raise ValueError("matrix block has a dims line but no rows")
        width = {len(r) for r in rows}
        if len(width) != 1:
            raise ValueError("ragged matrix rows")
        blocks.append((np.array(rows, dtype=complex), dims))

    for lineno, raw in enumerate(io.StringIO(text), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("dims:"):
            flush()
            try:
                dims = [int(x) for x in line[5:].split()]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad dims line") from exc
            rows = []
            continue
        if dims is None:
            raise ValueError(f"line {lineno}: data before a dims line")
        vals = line.split()
        if len(vals) % 2:
            raise ValueError(f"line {lineno}: odd number of values in a re/im row")
        nums = [float(x) for x in vals]
        rows.append([complex(nums[2 * j], nums[2 * j + 1]) for j in range(len(nums) // 2)])
    flush()
    return blocks


def parse_matrix(text: str):
    blocks = parse_matrices(text)
    if len(blocks) != 1:
        raise ValueError(f"expected exactly one matrix block, found {len(blocks)}")
    m, dims = blocks[0]
    if m.shape[0] == m.shape[1]:
        _check_dims(m, dims)
    return m, dims


def read_matrix(path):
    with open(path) as fh:
        return parse_matrix(fh.read())


def write_matrix(path, m, dims: Iterable[int] | None = None):
    with open(path, "w") as fh:
        fh.write(format_matrix(m, None if dims is None else list(dims)))
