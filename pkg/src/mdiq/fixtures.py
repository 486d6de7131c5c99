"""Printed qutrit transform matrices, used as golden values by ``selftest``.

``printed_transform(n, m)`` is ``T_{nm}`` and ``printed_inverse(n, m)`` its
inverse, both written out entry by entry with ``c(x) = cos(2 pi x / 3)`` and
``s(x) = sin(2 pi x / 3)``.
"""

import numpy as np

from .bases import qudit_kit

R3 = np.sqrt(3)


def _c(x):
    return np.cos(2 * np.pi * x / 3)


def _s(x):
    return np.sin(2 * np.pi * x / 3)


def _t0(n):
    c, s = _c, _s
    return np.array([
        [1, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 1, 0, 0, 0, 0, 0, 0, 0],
        [1, 0, R3 / 2, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, c(n), 0, 0, s(n), 0, 0],
        [1, 0, 0, 0, c(2 * n), 0, 0, s(2 * n), 0],
        [1, 0, 0, 0, 0, c(n), 0, 0, s(n)],
        [1, 0, 0, -s(n), 0, 0, c(n), 0, 0],
        [1, 0, 0, 0, -s(2 * n), 0, 0, c(2 * n), 0],
        [1, 0, 0, 0, 0, -s(n), 0, 0, c(n)],
    ]) / 3


def _t1(n):
    c, s = _c, _s
    return np.array([
        [1, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, -.5, -R3 / 2, 0, 0, 0, 0, 0, 0],
        [1, .75, -R3 / 4, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, c(n), 0, 0, -s(n), 0],
        [1, 0, 0, 0, 0, c(2 * n), 0, 0, -s(2 * n)],
        [1, 0, 0, c(n), 0, 0, s(n), 0, 0],
        [1, 0, 0, 0, -s(n), 0, 0, -c(n), 0],
        [1, 0, 0, 0, 0, -s(2 * n), 0, 0, -c(2 * n)],
        [1, 0, 0, -s(n), 0, 0, c(n), 0, 0],
    ]) / 3


def _t2(n):
    c, s = _c, _s
    return np.array([
        [1, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, -.5, R3 / 2, 0, 0, 0, 0, 0, 0],
        [1, -.75, -R3 / 4, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, c(n), 0, 0, s(n)],
        [1, 0, 0, c(2 * n), 0, 0, -s(2 * n), 0, 0],
        [1, 0, 0, 0, c(n), 0, 0, -s(n), 0],
        [1, 0, 0, 0, 0, -s(n), 0, 0, c(n)],
        [1, 0, 0, -s(2 * n), 0, 0, -c(2 * n), 0, 0],
        [1, 0, 0, 0, -s(n), 0, 0, -c(n), 0],
    ]) / 3


def _i0(n):
    c, s = _c, _s
    return 3 * np.array([
        [1, 0, 0, 0, 0, 0, 0, 0, 0],
        [-1, 1, 0, 0, 0, 0, 0, 0, 0],
        [-2 / R3, 0, 2 / R3, 0, 0, 0, 0, 0, 0],
        [-c(n) + s(n), 0, 0, c(n), 0, 0, -s(n), 0, 0],
        [-c(2 * n) + s(2 * n), 0, 0, 0, c(2 * n), 0, 0, -s(2 * n), 0],
        [-c(n) + s(n), 0, 0, 0, 0, c(n), 0, 0, -s(n)],
        [-c(n) - s(n), 0, 0, s(n), 0, 0, c(n), 0, 0],
        [-c(2 * n) - s(2 * n), 0, 0, 0, s(2 * n), 0, 0, c(2 * n), 0],
        [-c(n) - s(n), 0, 0, 0, 0, s(n), 0, 0, c(n)],
    ])


def _i1(n):
    c, s = _c, _s
    return 3 * np.array([
        [1, 0, 0, 0, 0, 0, 0, 0, 0],
        [-.5, -.5, 1, 0, 0, 0, 0, 0, 0],
        [5 / (2 * R3), -R3 / 2, -1 / R3, 0, 0, 0, 0, 0, 0],
        [-c(n) + s(n), 0, 0, 0, 0, c(n), 0, 0, -s(n)],
        [-c(n) + s(n), 0, 0, c(n), 0, 0, -s(n), 0, 0],
        [-c(2 * n) + s(2 * n), 0, 0, 0, c(2 * n), 0, 0, -s(2 * n), 0],
        [-c(n) - s(n), 0, 0, 0, 0, s(n), 0, 0, c(n)],
        [c(n) + s(n), 0, 0, -s(n), 0, 0, -c(n), 0, 0],
        [c(2 * n) + s(2 * n), 0, 0, 0, -s(2 * n), 0, 0, -c(2 * n), 0],
    ])


def _i2(n):
    c, s = _c, _s
    return 3 * np.array([
        [1, 0, 0, 0, 0, 0, 0, 0, 0],
        [1.5, -.5, -1, 0, 0, 0, 0, 0, 0],
        [-1 / (2 * R3), R3 / 2, -1 / R3, 0, 0, 0, 0, 0, 0],
        [-c(2 * n) + s(2 * n), 0, 0, 0, c(2 * n), 0, 0, -s(2 * n), 0],
        [-c(n) + s(n), 0, 0, 0, 0, c(n), 0, 0, -s(n)],
        [-c(n) + s(n), 0, 0, c(n), 0, 0, -s(n), 0, 0],
        [c(2 * n) + s(2 * n), 0, 0, 0, -s(2 * n), 0, 0, -c(2 * n), 0],
        [c(n) + s(n), 0, 0, 0, 0, -s(n), 0, 0, -c(n)],
        [-c(n) - s(n), 0, 0, s(n), 0, 0, c(n), 0, 0],
    ])


_FORWARD = (_t0, _t1, _t2)
_INVERSE = (_i0, _i1, _i2)


def printed_transform(n: int, m: int) -> np.ndarray:
    return _FORWARD[m](n)


def printed_inverse(n: int, m: int) -> np.ndarray:
    return _INVERSE[m](n)


def qutrit_fixture_errors() -> dict:
    """Max entrywise deviation of computed transforms from the printed ones, keyed ``"T{n}{m}"``."""
    kit = qudit_kit(3)
    out = {}
    for n in range(3):
        for m in range(3):
            t = kit.transforms[n * 3 + m]
            out[f"T{n}{m}"] = float(np.abs(t.matrix - printed_transform(n, m)).max())
            out[f"T{n}{m}^-1"] = float(np.abs(t.inverse - printed_inverse(n, m)).max())
    return out
