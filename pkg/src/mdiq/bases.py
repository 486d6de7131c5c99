"""Operator bases, trusted local states and Bell measurements for qudits.

Element ordering for ``gell_mann_basis(d)``:

* ``k = 0``: identity
* ``k = 1 .. d-1``: diagonal elements, ``lambda = k - 1``
* next ``d(d-1)/2``: symmetric ``|mu><nu| + |nu><mu|``, lexicographic ``mu < nu``
* last ``d(d-1)/2``: antisymmetric ``-i|mu><nu| + i|nu><mu|``, same order

For ``d = 2`` this yields ``(I, Z, X, Y)``.
"""

import functools
from dataclasses import dataclass

import numpy as np

from .numerics import min_eig, proj


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    d: int
    elements: np.ndarray   # (d*d, d, d)
    shifts: np.ndarray     # (d*d,)

    @property
    def norms(self):
        """Hilbert-Schmidt norms ``tr(B_k^2)``: ``d`` for the identity, 2 otherwise."""
        return np.einsum("kij,kji->k", self.elements, self.elements).real


@dataclass(frozen=True, eq=False)
class LocalStateSet:
    d: int
    states: np.ndarray     # (d*d, d, d)

    def __len__(self):
        return self.states.shape[0]

    def gram(self):
        s = self.states
        return np.einsum("aij,bji->ab", s, s).real

    def transposed(self):
        return LocalStateSet(self.d, _frozen(np.transpose(self.states, (0, 2, 1)).copy()))


@dataclass(frozen=True, eq=False)
class HeisenbergWeylSet:
    d: int
    unitaries: np.ndarray  # (d*d, d, d), index i = n*d + m


@dataclass(frozen=True, eq=False)
class BellProjectorSet:
    d: int
    projectors: np.ndarray  # (d*d, d*d, d*d)


@dataclass(frozen=True, eq=False)
class SettingTransform:
    d: int
    index: int
    matrix: np.ndarray
    inverse: np.ndarray


def _check_d(d):
    if int(d) != d or d < 2:
        raise ValueError(f"local dimension must be an integer >= 2, got {d}")
    return int(d)


@functools.lru_cache(maxsize=None)
def gell_mann_basis(d: int) -> OperatorBasis:
    d = _check_d(d)
    els = [np.eye(d, dtype=complex)]
    for lam in range(d - 1):
        diag = np.zeros(d)
        diag[:lam + 1] = 1.0
        diag[lam + 1] = -(lam + 1)
        els.append(np.sqrt(2.0 / ((lam + 1) * (lam + 2))) * np.diag(diag).astype(complex))
    pairs = [(mu, nu) for mu in range(d) for nu in range(mu + 1, d)]
    for mu, nu in pairs:
        b = np.zeros((d, d), dtype=complex)
        b[mu, nu] = b[nu, mu] = 1.0
        els.append(b)
    for mu, nu in pairs:
        b = np.zeros((d, d), dtype=complex)
        b[mu, nu] = -1j
        b[nu, mu] = 1j
        els.append(b)

    shifts = np.ones(d * d)
    shifts[0] = 0.0
    for k in range(1, d):
        shifts[k] = np.sqrt(2.0 * k / (k + 1))
    return OperatorBasis(d, _frozen(np.array(els)), _frozen(shifts))


def local_states(basis: OperatorBasis) -> LocalStateSet:
    """``tau_0 = I/d`` and ``tau_k = (I + B_k/a_k)/d``; each sits on the PSD boundary."""
    d = basis.d
    a = basis.shifts
    if np.any(a[1:] <= 0):
        raise ValueError("basis has a non-positive shift on a traceless element")
    eye = basis.elements[0]
    states = [eye / d]
    for k in range(1, d * d):
        states.append((eye + basis.elements[k] / a[k]) / d)
    return LocalStateSet(d, _frozen(np.array(states)))


@functools.lru_cache(maxsize=None)
def heisenberg_weyl(d: int) -> HeisenbergWeylSet:
    """``U_nm = sum_k exp(2 pi i k n/d) |k><k+m mod d|`` stored at ``n*d + m``."""
    d = _check_d(d)
    us = np.zeros((d * d, d, d), dtype=complex)
    k = np.arange(d)
    for n in range(d):
        phase = np.exp(2j * np.pi * k * n / d)
        for m in range(d):
            us[n * d + m, k, (k + m) % d] = phase
    return HeisenbergWeylSet(d, _frozen(us))


@functools.lru_cache(maxsize=None)
def _bell_cached(d):
    hw = heisenberg_weyl(d)
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    eye = np.eye(d)
    projs = [proj(np.kron(eye, u) @ phi) for u in hw.unitaries]
    return BellProjectorSet(d, _frozen(np.array(projs)))


def bell_projectors(hw: HeisenbergWeylSet) -> BellProjectorSet:
    """Rank-one projectors onto ``(I (x) U_i)|Phi+>``; the unitary acts on the second factor."""
    if hw is heisenberg_weyl(hw.d):
        return _bell_cached(hw.d)
    phi = np.eye(hw.d, dtype=complex).reshape(-1) / np.sqrt(hw.d)
    eye = np.eye(hw.d)
    return BellProjectorSet(hw.d, _frozen(np.array([proj(np.kron(eye, u) @ phi) for u in hw.unitaries])))


def transform_matrix(basis: OperatorBasis, states: LocalStateSet, u) -> np.ndarray:
    """Rows: B-basis coefficients of ``u tau_k u^dag``."""
    rot = np.einsum("ij,kjl,ml->kim", u, states.states, u.conj())
    # tr(B_k' X) / tr(B_k'^2)
    t = np.einsum("kij,bji->kb", rot, basis.elements).real
    return t / basis.norms[None, :]


def setting_transform(basis: OperatorBasis, states: LocalStateSet,
                      hw: HeisenbergWeylSet, i: int) -> SettingTransform:
    d = basis.d
    if states.d != d or hw.d != d:
        raise ValueError("basis, states and unitaries must share the local dimension")
    if not 0 <= i < d * d:
        raise IndexError(f"setting {i} out of range for d={d}")
    t = transform_matrix(basis, states, hw.unitaries[i])
    cond = np.linalg.cond(t)
    if not np.isfinite(cond) or cond > 1e12:
        raise np.linalg.LinAlgError("setting transform is singular; state set does not span")
    tinv = np.linalg.inv(t)
    if np.abs(t @ tinv - np.eye(d * d)).max() > 1e-10:
        raise np.linalg.LinAlgError("setting transform inverse failed verification")
    return SettingTransform(d, i, _frozen(t), _frozen(tinv))


@dataclass(frozen=True, eq=False)
class QuditKit:
    """Everything a single party needs: basis, states, unitaries, Bell POVM, transforms."""
    basis: OperatorBasis
    states: LocalStateSet
    hw: HeisenbergWeylSet
    bell: BellProjectorSet
    transforms: tuple

    @property
    def d(self):
        return self.basis.d

    def inverse_stack(self):
        """``(d^2, d^2, d^2)`` array of ``T_i^{-1}`` indexed by setting."""
        return np.array([t.inverse for t in self.transforms])


@functools.lru_cache(maxsize=None)
def qudit_kit(d: int) -> QuditKit:
    basis = gell_mann_basis(d)
    states = local_states(basis)
    hw = heisenberg_weyl(d)
    ts = tuple(setting_transform(basis, states, hw, i) for i in range(d * d))
    return QuditKit(basis, states, hw, bell_projectors(hw), ts)


def check_basis(basis: OperatorBasis, tol: float = 1e-12) -> None:
    """Raise if the basis violates orthogonality, tracelessness or shift minimality."""
    d = basis.d
    els = basis.elements
    if np.abs(els[0] - np.eye(d)).max() > tol:
        raise ValueError("B_0 is not the identity")
    g = np.einsum("aij,bji->ab", els, els)
    off = g - np.diag(np.diag(g))
    if np.abs(off).max() > tol:
        raise ValueError("elements are not Hilbert-Schmidt orthogonal")
    for k in range(1, d * d):
        if abs(np.trace(els[k])) > tol:
            raise ValueError(f"B_{k} is not traceless")
        if abs(min_eig(els[k]) + basis.shifts[k]) > 1e-10:
            raise ValueError(f"shift a_{k} is not the minimal PSD shift")
