"""Qubit MDI-QKD read as a quantumness test for a channel.

Alice sends one of four pure states through ``N``; the relay receives a
reference copy of one of the same four states as an ancilla and performs an
untrusted joint measurement on the ancilla-first space ``B' B``:

    p(a | psi, phi) = tr[Xi_a (phi (x) N(psi))].

Bit errors come from the Z pairs, phase errors from the X pairs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import entropy

from .game import Faithful, ProductLosr, Separable, Trivial, as_product_losr
from .numerics import DimensionError, proj
from .quantum import ChoiState, apply_channel

STATES = ("z0", "z1", "x+", "x-")
_S = 1 / np.sqrt(2)
_KETS = {
    "z0": np.array([1, 0], dtype=complex),
    "z1": np.array([0, 1], dtype=complex),
    "x+": np.array([_S, _S], dtype=complex),
    "x-": np.array([_S, -_S], dtype=complex),
}
Z_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))
X_PAIRS = ((2, 2), (2, 3), (3, 2), (3, 3))


class UndefinedRate(ValueError):
    """The outcome never fires on one of the bases, so its error rate is undefined."""


@dataclass(frozen=True, eq=False)
class QkdTable:
    probs: np.ndarray       # (psi, phi, a), indices into STATES

    def validate(self, tol: float = 1e-9):
        p = self.probs
        if p.shape != (4, 4, 4):
            raise DimensionError("QKD tables are 4 x 4 x 4")
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValueError("QKD table entries outside [0, 1]")
        if np.abs(p.sum(axis=2) - 1).max() > tol:
            raise ValueError("QKD table rows do not sum to one")
        return self

    def p(self, a, psi, phi) -> float:
        return float(self.probs[_idx(psi), _idx(phi), a])

    def basis_weight(self, a: int, pairs) -> float:
        return float(sum(self.probs[s, t, a] for s, t in pairs))

    def to_csv(self) -> str:
        rows = ["psi,phi,a,p"]
        for s in range(4):
            for t in range(4):
                for a in range(4):
                    rows.append(f"{STATES[s]},{STATES[t]},{a},{self.probs[s, t, a]:.17g}")
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class KeyReport:
    outcome: int
    e_b: float
    e_p: float
    key_rate: float
    bound: float

    def to_report(self) -> dict:
        return {"outcome": self.outcome, "e_b": self.e_b, "e_p": self.e_p,
                "key_rate": self.key_rate, "bound": self.bound}


def _idx(s):
    return STATES.index(s) if isinstance(s, str) else int(s)


def qkd_states() -> np.ndarray:
    return np.array([proj(_KETS[s]) for s in STATES])


def _joint_elements(strategy) -> np.ndarray:
    if tuple(strategy.dims) != (2,):
        raise DimensionError("QKD strategies act on one qubit pair B'B")
    if isinstance(strategy, (Faithful, Trivial)):
        strategy = as_product_losr(strategy)
    if isinstance(strategy, ProductLosr):
        return sum(w * p[0].elements for w, p in strategy.mixture)
    if isinstance(strategy, Separable):
        return strategy.joint_elements()
    raise TypeError(f"unsupported strategy {type(strategy).__name__}")


def run_qkd(choi: ChoiState, strategy=None) -> QkdTable:
    """Exact Born-rule table; the default relay is the faithful Bell measurement."""
    if (choi.d_in, choi.d_out) != (2, 2):
        raise DimensionError("the QKD protocol needs a qubit-to-qubit channel")
    strategy = Faithful((2,)) if strategy is None else strategy
    xi = _joint_elements(strategy)
    if xi.shape[0] != 4:
        raise ValueError("the relay must announce four outcomes")
    states = qkd_states()
    outs = np.array([apply_channel(choi, s) for s in states])
    joint = np.einsum("tab,sxy->staxby", states, outs).reshape(4, 4, 4, 4)
    probs = np.einsum("iuv,stvu->sti", xi, joint).real
    return QkdTable(probs).validate()


def error_rates(table: QkdTable, a: int):
    """``(e_b, e_p)`` for outcome ``a``; raises :class:`UndefinedRate` on a zero denominator."""
    p = table.probs[..., a]
    zden = table.basis_weight(a, Z_PAIRS)
    xden = table.basis_weight(a, X_PAIRS)
    if zden <= 1e-15 or xden <= 1e-15:
        raise UndefinedRate(f"outcome {a} never fires on one basis")
    e_b = (p[0, 1] + p[1, 0]) / zden
    e_p = (p[2, 3] + p[3, 2]) / xden
    return float(np.clip(e_b, 0, 1)), float(np.clip(e_p, 0, 1))


def binary_entropy(e: float) -> float:
    return float(entropy([e, 1 - e], base=2))


def key_rate(e_b: float, e_p: float) -> float:
    """Shor-Preskill rate ``1 - h(e_b) - h(e_p)``, clamped at zero."""
    return max(0.0, 1.0 - binary_entropy(e_b) - binary_entropy(e_p))


def quantumness_bound(table: QkdTable, a: int, k_a: float) -> float:
    return 0.25 * k_a * table.basis_weight(a, Z_PAIRS)


def key_reports(table: QkdTable) -> dict:
    """Per-outcome reports plus their sum; outcomes with an undefined rate are listed as aborted."""
    reports, aborted = [], []
    for a in range(4):
        try:
            e_b, e_p = error_rates(table, a)
        except UndefinedRate:
            aborted.append(a)
            continue
        k = key_rate(e_b, e_p)
        reports.append(KeyReport(a, e_b, e_p, k, quantumness_bound(table, a, k)))
    return {
        "outcomes": [r.to_report() for r in reports],
        "aborted": aborted,
        "best_bound": max((r.bound for r in reports), default=0.0),
        "aggregate_bound": sum(r.bound for r in reports),
    }
