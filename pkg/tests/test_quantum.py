import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdiq.numerics import DimensionError, format_matrix, min_eig, partial_trace
from mdiq.quantum import (
    ChoiState,
    DensityMatrix,
    Povm,
    apply_channel,
    apply_kraus,
    apply_local_channel,
    apply_losr,
    basis_measurement,
    channel_preset,
    choi_from_kraus,
    choi_to_kraus,
    depolarizing_channel,
    eb_certificate,
    eb_channel,
    identity_channel,
    is_ppt,
    max_entangled,
    parse_channel,
    random_channel,
    random_density,
    random_eb_channel,
    random_k_separable,
    random_povm,
    random_separable,
    werner_state,
    z_measure_prepare,
)
from oracles import ptrace_loops

SEEDS = st.integers(0, 2**32 - 1)


def test_max_entangled_qubit_entries():
    m = max_entangled(2).matrix
    want = np.zeros((4, 4))
    want[np.ix_([0, 3], [0, 3])] = 0.5
    np.testing.assert_allclose(m, want, atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_max_entangled_pure_with_mixed_marginal(d):
    phi = max_entangled(d)
    assert phi.purity() == pytest.approx(1)
    np.testing.assert_allclose(phi.ptrace([0]).matrix, np.eye(d) / d, atol=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), SEEDS)
def test_random_density_rank_and_validity(d, seed):
    rho = random_density(d, 1, seed).validate()
    assert rho.purity() == pytest.approx(1, abs=1e-10)
    full = random_density(d, None, seed).validate()
    assert np.linalg.matrix_rank(full.matrix, tol=1e-10) == d


def test_random_generators_are_deterministic():
    a = random_density((2, 3), 2, 17).matrix
    b = random_density((2, 3), 2, 17).matrix
    assert a.tobytes() == b.tobytes()
    s1, c1 = random_separable((2, 2), 3, 5)
    s2, c2 = random_separable((2, 2), 3, 5)
    assert s1.matrix.tobytes() == s2.matrix.tobytes()


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3), (3, 3), (2, 2, 2)]), st.integers(1, 6), SEEDS, st.booleans())
def test_random_separable_certified_and_ppt(dims, terms, seed, mixed):
    rho, cert = random_separable(dims, terms, seed, mixed=mixed)
    rho.validate()
    cert.check(rho)
    assert cert.fully_separable
    assert is_ppt(rho.matrix, dims)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), SEEDS)
def test_k_separable_certificate_reassembles(k, seed):
    rho, cert = random_k_separable((2, 2, 2), k, 3, seed)
    cert.check(rho)
    assert all(len(t.partition) == k for t in cert.terms)


def test_werner_state_entangled_above_one_third():
    assert is_ppt(werner_state(0.33).matrix, (2, 2))
    assert not is_ppt(werner_state(0.34).matrix, (2, 2))


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 6), st.integers(2, 5), SEEDS)
def test_random_povm_is_valid(n, outcomes, seed):
    Povm((n,), random_povm(n, outcomes, seed, rank=1).elements).validate()


def test_povm_validation_rejects_incomplete():
    with pytest.raises(ValueError):
        Povm((2,), np.array([np.diag([1, 0])])).validate()


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), st.integers(1, 4), SEEDS)
def test_choi_application_matches_kraus(d_in, d_out, nk, seed):
    nk = max(nk, -(-d_in // d_out))
    choi = random_channel(d_in, d_out, nk, seed).validate()
    ks = choi_to_kraus(choi)
    x = random_density(d_in, seed=seed + 1).matrix
    np.testing.assert_allclose(apply_channel(choi, x), apply_kraus(ks, x), atol=1e-12)
    np.testing.assert_allclose(choi_from_kraus(ks).matrix, choi.matrix, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 3), SEEDS)
def test_choi_projection_identity(d, seed):
    """N(tau) = d tr_A'[J (tau^T (x) I)] checked against a loop partial trace."""
    choi = random_channel(d, d, 2, seed)
    tau = random_density(d, seed=seed ^ 7).matrix
    m = choi.matrix @ np.kron(tau.T, np.eye(d))
    np.testing.assert_allclose(apply_channel(choi, tau), d * ptrace_loops(m, (d, d), [1]), atol=1e-12)


def test_identity_and_depolarizing_act_as_defined():
    x = random_density(3, seed=1).matrix
    np.testing.assert_allclose(apply_channel(identity_channel(3), x), x, atol=1e-15)
    np.testing.assert_allclose(apply_channel(depolarizing_channel(3, 0.3), x),
                               0.7 * x + 0.3 * np.eye(3) / 3, atol=1e-15)


def test_local_channel_on_one_factor():
    rho = random_density((2, 3), seed=3).matrix
    choi = random_channel(3, 2, 2, 4)
    out, dims = apply_local_channel(choi, rho, (2, 3), 1)
    ks = choi_to_kraus(choi)
    want = sum(np.kron(np.eye(2), k) @ rho @ np.kron(np.eye(2), k).conj().T for k in ks)
    assert dims == (2, 2)
    np.testing.assert_allclose(out, want, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 3), st.integers(2, 4), SEEDS)
def test_eb_channels_have_separable_choi(d, outcomes, seed):
    choi, cert = random_eb_channel(d, d, outcomes, seed)
    choi.validate()
    cert.check(choi.matrix)
    assert is_ppt(choi.matrix, choi.dims)


def test_z_measure_prepare_kills_coherence():
    plus = np.full((2, 2), 0.5)
    np.testing.assert_allclose(apply_channel(z_measure_prepare(), plus), np.eye(2) / 2, atol=1e-15)


@settings(max_examples=10, deadline=None)
@given(SEEDS)
def test_losr_preserves_certificate(seed):
    rng = np.random.default_rng(seed)
    rho, cert = random_separable((2, 3), 3, rng)
    losr = [(0.4, [random_channel(2, 2, 2, rng), random_channel(3, 2, 3, rng)]),
            (0.6, [random_channel(2, 2, 1, rng), random_channel(3, 2, 2, rng)])]
    out, ocert = apply_losr(rho, cert, losr)
    out.validate()
    ocert.check(out)
    assert is_ppt(out.matrix, (2, 2))


def test_losr_rejects_mismatched_outputs():
    rho, cert = random_separable((2, 2), 2, 0)
    losr = [(0.5, [identity_channel(2), identity_channel(2)]),
            (0.5, [identity_channel(2), random_channel(2, 3, 2, 1)])]
    with pytest.raises(DimensionError):
        apply_losr(rho, cert, losr)


def test_random_channel_rejects_impossible_shape():
    with pytest.raises(ValueError):
        random_channel(3, 2, 1, 0)


def test_choi_validation():
    with pytest.raises(ValueError):
        ChoiState(2, 2, np.kron(np.diag([1, 0]), np.eye(2) / 2)).validate()


def test_channel_presets():
    assert np.allclose(channel_preset("depolarizing(1)").matrix, np.eye(4) / 4)
    assert np.allclose(channel_preset("identity", 3).matrix, max_entangled(3).matrix)
    with pytest.raises(KeyError):
        channel_preset("teleporter")


def test_parse_channel_files():
    text = "kind: kraus\n" + format_matrix(np.eye(2), (2,))
    np.testing.assert_allclose(parse_channel(text).matrix, max_entangled(2).matrix)
    text = "kind: choi\n" + format_matrix(np.eye(4) / 4, (2, 2))
    assert parse_channel(text).d_out == 2
    with pytest.raises(ValueError):
        parse_channel(format_matrix(np.eye(2), (2,)))
    with pytest.raises(ValueError):
        parse_channel("kind: kraus\n" + format_matrix(2 * np.eye(2), (2,)))


def test_density_matrix_rejects_invalid():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]), (2,)).validate()
