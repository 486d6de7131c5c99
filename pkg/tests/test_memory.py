import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdiq.bases import qudit_kit
from mdiq.game import Faithful, Trivial, random_strategy, run_protocol
from mdiq.memory import (
    bipartite_table,
    choi_projection,
    memory_postselected_states,
    memory_witness_value,
    quantify_memory,
    run_memory_protocol,
)
from mdiq.numerics import DimensionError, min_eig
from mdiq.quantum import (
    apply_channel,
    channel_preset,
    identity_channel,
    random_channel,
    random_density,
    random_eb_channel,
)
from mdiq.witness import Witness, bell_overlap
from oracles import ptrace_loops

SEEDS = st.integers(0, 2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), SEEDS)
def test_choi_projection_reproduces_channel(d_in, d_out, seed):
    choi = random_channel(d_in, d_out, 2, seed)
    tau = random_density(d_in, seed=seed ^ 3).matrix
    assert np.abs(choi_projection(choi, tau) - apply_channel(choi, tau)).max() <= 1e-10
    m = choi.matrix @ np.kron(tau.T, np.eye(d_out))
    assert np.abs(choi_projection(choi, tau) - d_in * ptrace_loops(m, (d_in, d_out), [1])).max() <= 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 3), SEEDS)
def test_faithful_memory_value_is_choi_expectation(d, seed):
    choi = random_channel(d, d, 2, seed)
    r = np.random.default_rng(seed)
    h = r.normal(size=(d * d, d * d)) + 1j * r.normal(size=(d * d, d * d))
    w = Witness(h + h.conj().T, (d, d))
    run = run_memory_protocol(choi).validate()
    assert memory_witness_value(w, run) == pytest.approx(w.expectation(choi.matrix), abs=1e-9)


def test_memory_table_is_pinned_bipartite_table():
    choi = random_channel(2, 2, 2, 4)
    run = run_memory_protocol(choi)
    full = run_protocol(choi.state(), None, Faithful((2, 2))).probs
    np.testing.assert_allclose(bipartite_table(run), full[:, :, 0, :], atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(SEEDS, st.sampled_from(["losr", "separable", "faithful"]))
def test_postselected_memory_states(seed, kind):
    choi = random_channel(2, 2, 2, seed)
    s = Faithful((2,)) if kind == "faithful" else random_strategy((2,), seed, kind)
    rt = memory_postselected_states(choi, s)
    np.testing.assert_allclose(rt.sum(0), np.eye(4), atol=1e-12)
    assert min(min_eig(x) for x in rt) >= -1e-12
    run = run_memory_protocol(choi, strategy=s)
    ta = qudit_kit(2).states.states
    for s_ in range(4):
        for t in range(4):
            om = np.kron(ta[s_].T, ta[t].T)
            got = np.einsum("ixy,yx->i", rt, om).real
            np.testing.assert_allclose(got, run.probs[s_, t], atol=1e-12)


def test_identity_channel_certified():
    run = run_memory_protocol(identity_channel(2))
    b, sol = quantify_memory(run)
    assert b > 0.4 and sol.converged
    assert memory_witness_value(bell_overlap(2), run) == pytest.approx(-0.5)


@pytest.mark.parametrize("name", ["z-measure-prepare", "constant", "depolarizing(0.7)"])
def test_eb_presets_not_certified(name):
    run = run_memory_protocol(channel_preset(name))
    b, _ = quantify_memory(run)
    assert b <= 1e-6
    assert memory_witness_value(bell_overlap(2), run) >= -1e-8


@settings(max_examples=25, deadline=None)
@given(SEEDS, st.sampled_from(["losr", "separable"]))
def test_eb_channels_resist_adversaries(seed, kind):
    choi, _ = random_eb_channel(2, 2, 3, seed)
    run = run_memory_protocol(choi, strategy=random_strategy((2,), seed, kind))
    assert memory_witness_value(bell_overlap(2), run) >= -1e-8


def test_trivial_strategy_gives_flat_table():
    run = run_memory_protocol(identity_channel(2), strategy=Trivial((2,)))
    np.testing.assert_allclose(run.probs, 0.25)


def test_dimension_checks():
    with pytest.raises(DimensionError):
        run_memory_protocol(identity_channel(2), strategy=Faithful((2, 2)))
    with pytest.raises(DimensionError):
        memory_witness_value(bell_overlap(3), run_memory_protocol(identity_channel(2)))
