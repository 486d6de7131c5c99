import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdiq.decomp import decompose, mdi_value
from mdiq.game import (
    Faithful,
    ProductLosr,
    Separable,
    Trivial,
    as_product_losr,
    eve_channels,
    eve_equivalent_state,
    postselected_states,
    random_losr_strategy,
    random_separable_strategy,
    random_strategy,
    run_protocol,
    sample_table,
)
from mdiq.numerics import DimensionError, kron, min_eig
from mdiq.quantum import (
    DensityMatrix,
    apply_losr,
    max_entangled,
    random_density,
    random_hermitian,
    random_separable,
)
from oracles import born_table

SEEDS = st.integers(0, 2**32 - 1)
CONFIGS = [(2, 2), (3, 3), (2, 3), (2, 2, 2)]


def _joint(strategy):
    if isinstance(strategy, Separable):
        return strategy.joint_elements()
    s = as_product_losr(strategy)
    outs = tuple(len(p) for p in s.mixture[0][1])
    els = np.zeros((int(np.prod(outs)),) + (int(np.prod([d * d for d in s.dims])),) * 2, dtype=complex)
    for w, povms in s.mixture:
        for r, i in enumerate(np.ndindex(*outs)):
            els[r] += w * kron(*[p.elements[ij] for p, ij in zip(povms, i)])
    return els


def _flat(table):
    n = table.n_parties
    k = table.probs.shape[:n]
    return table.probs.reshape(k + (-1,))


@settings(max_examples=12, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3)]), SEEDS, st.sampled_from(["losr", "separable", "faithful", "trivial"]))
def test_tables_match_brute_force_born_rule(dims, seed, kind):
    rho = random_density(dims, seed=seed)
    if kind == "faithful":
        s = Faithful(dims)
    elif kind == "trivial":
        s = Trivial(dims)
    else:
        s = random_strategy(dims, seed, kind)
    table = run_protocol(rho, None, s).validate()
    states = [np.asarray(k.states.states) for k in rho_kits(dims)]
    want = born_table(rho.matrix, dims, states, _joint(s))
    np.testing.assert_allclose(_flat(table), want, atol=1e-12)


def rho_kits(dims):
    from mdiq.bases import qudit_kit
    return [qudit_kit(d) for d in dims]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(CONFIGS), SEEDS)
def test_completeness_faithful_value_is_expectation(dims, seed):
    n = int(np.prod(dims))
    rho = random_density(dims, seed=seed)
    w = random_hermitian(n, seed + 1)
    value = np.prod(dims) * mdi_value(decompose(w, dims), run_protocol(rho, None, Faithful(dims)))
    assert value == pytest.approx(np.trace(w @ rho.matrix).real, abs=1e-9)


def test_faithful_phi_plus_table_entries():
    t = run_protocol(max_entangled(2), None, Faithful((2, 2)))
    assert t.probs[0, 0, 0, 0] == pytest.approx(1 / 16)
    # tau_1 = |0><0| on both sides: <00|Phi+|00> / Omega
    assert t.probs[1, 1, 0, 0] == pytest.approx(1 / 8)
    assert t.probs[1, 1, 0, 1] == pytest.approx(0, abs=1e-15)
    np.testing.assert_allclose(run_protocol(max_entangled(2), None, Trivial((2, 2))).probs, 1 / 16)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3), (2, 2, 2)]), SEEDS, st.sampled_from(["losr", "separable"]))
def test_sigma_eve_reproduces_every_witness_value(dims, seed, kind):
    rho = random_density(dims, seed=seed)
    s = random_strategy(dims, seed, kind)
    sigma = eve_equivalent_state(rho, s).validate()
    table = run_protocol(rho, None, s)
    w = random_hermitian(int(np.prod(dims)), seed ^ 99)
    lhs = np.prod(dims) * mdi_value(decompose(w, dims), table)
    assert lhs == pytest.approx(np.trace(w @ sigma.matrix.T).real, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3)]), SEEDS, st.sampled_from(["losr", "separable"]))
def test_postselected_states_are_positive_and_complete(dims, seed, kind):
    rho = random_density(dims, seed=seed)
    rt = postselected_states(rho, random_strategy(dims, seed, kind))
    n = int(np.prod(dims))
    flat = rt.reshape(-1, n, n)
    np.testing.assert_allclose(flat.sum(0), np.eye(n), atol=1e-12)
    assert min(min_eig(x) for x in flat) >= -1e-12


@settings(max_examples=10, deadline=None)
@given(SEEDS)
def test_sigma_eve_is_reached_by_the_losr_channel(seed):
    dims = (2, 2)
    rho, cert = random_separable(dims, 3, seed)
    s = random_losr_strategy(dims, 2, seed)
    out, ocert = apply_losr(rho, cert, eve_channels(s))
    np.testing.assert_allclose(out.matrix, eve_equivalent_state(rho, s).matrix, atol=1e-12)
    ocert.check(out)


def test_strategy_validation():
    s = random_separable_strategy((2, 2), 3, 1)
    s.validate()
    bad = Separable(s.dims, s.local, s.post * 2)
    with pytest.raises(ValueError):
        bad.validate()
    p = random_losr_strategy((2, 2), 2, 0)
    p.validate()
    with pytest.raises(ValueError):
        ProductLosr(p.dims, ((0.7, p.mixture[0][1]), (0.7, p.mixture[1][1]))).validate()


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        run_protocol(random_density((2, 3), seed=0), None, Faithful((2, 2)))


def test_sampled_tables_are_seeded_and_converge():
    exact = run_protocol(max_entangled(2), None, Faithful((2, 2)))
    a = sample_table(exact, 500, 3)
    b = sample_table(exact, 500, 3)
    assert a.probs.tobytes() == b.probs.tobytes()
    a.validate()
    big = sample_table(exact, 200_000, 4)
    assert np.abs(big.probs - exact.probs).max() < 5e-3


def test_separable_certificate_reassembles_joint_elements():
    s = random_separable_strategy((2, 2), 2, 7)
    els = s.joint_elements()
    np.testing.assert_allclose(els.sum(0), np.eye(16), atol=1e-12)
    term = s.certificate((1, 2))
    np.testing.assert_allclose(sum(c * kron(*f) for c, f in term), els[6], atol=1e-12)
