import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdiq.decomp import uniform_table
from mdiq.game import Faithful, postselected_states, random_strategy, run_protocol
from mdiq.numerics import partial_transpose, trace_norm
from mdiq.quantum import (
    channel_preset,
    depolarizing_channel,
    max_entangled,
    random_density,
    random_eb_channel,
    random_separable,
    werner_state,
)
from mdiq.sdp import (
    SdpProblem,
    legendre_hat,
    mdi_quantify_state,
    negativity,
    negativity_sdp,
    robustness_ppt,
    smat,
    solve,
    svec,
)

SEEDS = st.integers(0, 2**32 - 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), SEEDS)
def test_svec_is_an_isometry(n, seed):
    r = np.random.default_rng(seed)
    a, b = (r.normal(size=(2, n, n)) + 1j * r.normal(size=(2, n, n)))
    a, b = a + a.conj().T, b + b.conj().T
    assert svec(a) @ svec(b) == pytest.approx(np.trace(a @ b).real)
    np.testing.assert_allclose(smat(svec(a), n), a, atol=1e-12)


def test_small_sdp_min_eigenvalue():
    """min tr(C X) with tr X = 1 is the smallest eigenvalue of C."""
    c = np.array([[2, 1j, 0], [-1j, 1, 0.5], [0, 0.5, 3]])
    pr = SdpProblem()
    x = pr.add_psd(3)
    pr.add_trace_eq({x: np.eye(3)}, 1.0)
    pr.set_objective({x: c})
    sol = solve(pr, tol=1e-9)
    assert sol.converged
    assert sol.value == pytest.approx(np.linalg.eigvalsh(c)[0], abs=1e-6)
    assert sol.dual_value == pytest.approx(sol.value, abs=1e-5)


def test_nonneg_and_free_blocks():
    pr = SdpProblem()
    x = pr.add_block("nonneg", 2)
    f = pr.add_block("free", 1)
    pr.add_rows({x: np.array([[1.0, 1.0]]), f: np.array([[1.0]])}, [1.0])
    pr.add_rows({f: np.array([[1.0]])}, [-0.5])
    pr.set_objective({x: np.array([1.0, 2.0])})
    sol = solve(pr, tol=1e-9)
    assert sol.value == pytest.approx(1.5, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3)]), SEEDS)
def test_negativity_sdp_matches_trace_norm(dims, seed):
    rho = random_density(dims, seed=seed)
    sol = negativity_sdp(rho, dims, tol=1e-9)
    assert sol.value == pytest.approx(negativity(rho, dims), abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3), (3, 3)]), SEEDS)
def test_negativity_is_transposition_invariant(dims, seed):
    rho = random_density(dims, seed=seed)
    a = negativity(rho, dims)
    b = negativity(rho.matrix.T, dims)
    c = (trace_norm(partial_transpose(rho.matrix, dims, 0)) - 1) / 2
    assert abs(a - b) <= 1e-10 and abs(a - c) <= 1e-10


def test_negativity_known_values():
    assert negativity(max_entangled(2), (2, 2)) == pytest.approx(0.5)
    assert negativity(werner_state(0.3), (2, 2)) == pytest.approx(0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(SEEDS, st.sampled_from(["losr", "separable"]))
def test_postselection_does_not_increase_negativity(seed, kind):
    dims = (2, 2)
    rho = random_density(dims, seed=seed)
    rt = postselected_states(rho, random_strategy(dims, seed, kind))
    avg = sum(negativity(x, dims) for x in rt.reshape(-1, 4, 4)) / 4
    assert negativity(rho, dims) >= avg - 1e-8


def test_quantifier_phi_plus_and_uniform():
    b, sol = mdi_quantify_state(run_protocol(max_entangled(2), None, Faithful((2, 2))))
    assert 0.4 < b <= 0.5 + 1e-6 and sol.converged
    assert max(sol.primal_residual, sol.dual_residual) <= 1e-7
    b, sol = mdi_quantify_state(uniform_table((2, 2)))
    assert abs(b) <= 1e-6


def test_single_measurement_degeneracy():
    table = run_protocol(max_entangled(2), None, Faithful((2, 2)))
    b, _ = mdi_quantify_state(table, ancilla_constraints=False)
    assert b <= 1e-6


def _cvx_state_bound(table):
    from mdiq.bases import qudit_kit
    tau = qudit_kit(2).states.states
    rts = [cp.Variable((4, 4), hermitian=True) for _ in range(16)]
    ps = [cp.Variable((4, 4), hermitian=True) for _ in range(16)]
    qs = [cp.Variable((4, 4), hermitian=True) for _ in range(16)]
    cons = [sum(rts) == np.eye(4)]
    for r, p, q, (i1, i2) in zip(rts, ps, qs, np.ndindex(4, 4)):
        cons += [r >> 0, p >> 0, q >> 0, cp.partial_transpose(r, (2, 2), 1) == p - q]
        for k1, k2 in np.ndindex(4, 4):
            om = np.kron(tau[k1].T, tau[k2].T)
            cons.append(cp.real(cp.trace(r @ om)) == table.probs[k1, k2, i1, i2])
    obj = sum(cp.real(cp.trace(p) + cp.trace(q) - cp.trace(r)) for r, p, q in zip(rts, ps, qs)) / 8
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


@pytest.mark.parametrize("seed", [1, 2])
def test_quantifier_matches_cvxpy(seed):
    rho = random_density((2, 2), seed=seed)
    table = run_protocol(rho, None, random_strategy((2, 2), seed, "losr"))
    ours, sol = mdi_quantify_state(table)
    assert sol.converged
    assert ours == pytest.approx(max(0.0, _cvx_state_bound(table)), abs=1e-5)


def test_quantifier_on_separable_tables():
    for s in range(3):
        rho, _ = random_separable((2, 2), 3, s)
        b, sol = mdi_quantify_state(run_protocol(rho, None, Faithful((2, 2))))
        assert b <= 1e-6 and sol.converged


def _cvx_robustness(j, d):
    n = cp.Variable((d * d, d * d), hermitian=True)
    cons = [n >> 0, cp.partial_transpose(n, (d, d), 1) >> 0,
            cp.partial_transpose(n + j, (d, d), 1) >> 0,
            cp.partial_trace(n, (d, d), 1) == cp.trace(n) * np.eye(d) / d]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(n))), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


@pytest.mark.parametrize("name", ["identity", "depolarizing(0.3)", "depolarizing(0.6)", "z-measure-prepare"])
def test_robustness_matches_cvxpy(name):
    choi = channel_preset(name)
    ours, sol = robustness_ppt(choi)
    assert sol.converged
    assert ours == pytest.approx(max(0.0, _cvx_robustness(choi.matrix, 2)), abs=1e-5)


def test_robustness_isotropic_brute_force():
    """Mixing Phi+ with (I - Phi+)/3 becomes PPT exactly at s = 1."""
    j = max_entangled(2).matrix
    m = (np.eye(4) - j) / 3
    grid = np.linspace(0, 2, 20001)
    ppt = [np.linalg.eigvalsh(partial_transpose((j + s * m) / (1 + s), (2, 2), 1))[0] >= -1e-12 for s in grid]
    s_star = grid[int(np.argmax(ppt))]
    assert robustness_ppt(channel_preset("identity"))[0] == pytest.approx(s_star, abs=1e-4)
    assert robustness_ppt(depolarizing_channel(2, 0.5))[0] == pytest.approx(0.25, abs=1e-5)


def test_robustness_vanishes_on_eb_channels():
    for s in range(3):
        choi, _ = random_eb_channel(2, 2, 3, s)
        assert robustness_ppt(choi)[0] <= 1e-6


def test_legendre_transform_values():
    w = np.eye(4) / 2 - max_entangled(2).matrix
    assert legendre_hat(w, (2, 2), 1.0)[0] == pytest.approx(0.5, abs=1e-6)
    assert legendre_hat(w, (2, 2), -1.0)[0] == pytest.approx(0.0, abs=1e-6)
