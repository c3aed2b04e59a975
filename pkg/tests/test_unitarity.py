from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpukit.errors import PreconditionError, ResourceCapError
from mpukit.gallery import haar_unitary, multi_control_z, staircase
from mpukit.mpo import (
    MpoChain,
    Open,
    dense_unitarity_oracle,
    gauge_transform,
    identity_chain,
    materialize,
)
from mpukit.oracle import _random_mpo, corrupt
from mpukit.unitarity import (
    channel_from_completion,
    check_canonical_form,
    check_lemma1_exhaustive,
    check_prop1_conditions,
    check_unitarity_recursive,
    hermitian_basis,
    isometry_sequence,
    local_es_decomposition,
    op_to_vec,
    split_chain,
    string_span,
    to_canonical_form,
    vec_to_op,
    verify_extension,
)


def _staircase(rng, n_gates):
    return staircase([haar_unitary(4, rng) for _ in range(n_gates)])


def _gauged(chain, rng):
    gauges = []
    for s in chain.sites[:-1]:
        d = s.D_left
        gauges.append(np.eye(d) + 0.3 * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))))
    return gauge_transform(chain, gauges)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_hermitian_basis_normalization(d):
    mats = hermitian_basis(d).matrices
    assert len(mats) == d * d
    gram = np.array([[np.trace(a @ b) for b in mats] for a in mats])
    np.testing.assert_allclose(gram, d * np.eye(d * d), atol=1e-12)
    for m in mats:
        np.testing.assert_allclose(m, m.conj().T)
    for m in mats[1:]:
        assert abs(np.trace(m)) < 1e-12


def test_vec_op_round_trip(rng):
    x = rng.normal(size=(3, 3))
    np.testing.assert_array_equal(vec_to_op(op_to_vec(x), 3), x)


def test_es_blocks_recombine(rng):
    """sum_a sigma_a (x) S_a over d reproduces the physical blocks."""
    chain = _random_mpo(2, rng)
    site = chain.sites[1]
    fam = local_es_decomposition(site)
    assert fam.E.shape == (site.D_left**2, site.D_right**2)
    assert len(fam.S) == site.d_in**2 - 1


@pytest.mark.parametrize("n", range(2, 8))
def test_mcz_recursive_passes(n):
    rep = check_unitarity_recursive(multi_control_z(n))
    assert rep.passed
    assert rep.failed_at is None
    assert rep.span_dims[-1] == 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_corruption_is_caught_by_all_checks(n):
    bad = corrupt(multi_control_z(n))
    assert not check_unitarity_recursive(bad).passed
    lem = check_lemma1_exhaustive(bad)
    assert not lem.passed and lem.violating is not None
    assert not dense_unitarity_oracle(bad).passed


def test_lemma1_cap():
    with pytest.raises(ResourceCapError):
        check_lemma1_exhaustive(identity_chain(8), max_strings=100)


def test_non_square_chain_fails():
    chain = MpoChain((np.ones((2, 1, 1, 1)) / np.sqrt(2),))
    rep = check_unitarity_recursive(chain)
    assert not rep.passed and "dimensions differ" in rep.reason


@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_recursive_agrees_with_dense_on_staircases(n_gates, seed):
    chain = _staircase(np.random.default_rng(seed), n_gates)
    assert check_unitarity_recursive(chain).passed
    assert dense_unitarity_oracle(chain).passed


@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_recursive_agrees_with_dense_on_random_mpos(n, seed):
    chain = _random_mpo(n, np.random.default_rng(seed))
    assert check_unitarity_recursive(chain).passed == dense_unitarity_oracle(chain).passed


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_lemma1_matches_recursive(n_gates, seed):
    rng = np.random.default_rng(seed)
    chain = _staircase(rng, n_gates)
    if rng.random() < 0.5:
        chain = corrupt(chain, 1e-2, -1)
    assert check_lemma1_exhaustive(chain).passed == check_unitarity_recursive(chain).passed


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_canonical_form_preserves_operator(n_gates, seed):
    rng = np.random.default_rng(seed)
    chain = _gauged(_staircase(rng, n_gates), rng)
    can = to_canonical_form(chain)
    u, v = materialize(chain), materialize(can)
    assert np.linalg.norm(u - v) <= 1e-10 * np.linalg.norm(u)
    assert check_canonical_form(can).passed
    assert check_prop1_conditions(can).passed


def test_canonical_form_of_non_unitary_keeps_modulus(rng):
    chain = _random_mpo(3, rng)
    can = to_canonical_form(chain)
    np.testing.assert_allclose(materialize(can), materialize(chain), atol=1e-9)
    # the modulus of the leftover scalar lands on the last absorbed site only
    res = check_canonical_form(can).residuals
    assert max(res[:-1]) < 1e-10
    assert res[-1] > 1e-3


def test_prop1_needs_canonical_input():
    with pytest.raises(PreconditionError):
        check_prop1_conditions(multi_control_z(3))


@pytest.mark.parametrize("n_gates", [2, 3, 4])
def test_staircase_rho_is_maximally_mixed(rng, n_gates):
    can = to_canonical_form(_staircase(rng, n_gates))
    rep = check_unitarity_recursive(can)
    for rho, dim in zip(rep.rhos[:-1], rep.span_dims[:-1]):
        dk = rho.shape[0]
        np.testing.assert_allclose(rho, np.eye(dk) / dk, atol=1e-12)
        assert dim == dk * dk - 1


def test_isometry_sequence_of_canonical_mpu(rng):
    can = to_canonical_form(_staircase(rng, 3))
    assert max(isometry_sequence(can)) < 1e-10


def _two_floor(rng, n_gates):
    us = [haar_unitary(4, rng) for _ in range(n_gates)]
    vs = [haar_unitary(4, rng) for _ in range(n_gates - 1)]
    return staircase(us, vs)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_extension_channel_of_two_floor_staircase(rng, k):
    can = to_canonical_form(_two_floor(rng, 4))
    pre, comp = split_chain(can, k)
    rep = verify_extension(pre, comp)
    assert rep.passed and rep.concatenated_passed and rep.agree
    assert rep.kraus_rank == rep.d_prime
    ch = channel_from_completion(comp)
    bond = ch.kraus[0].shape[1]
    assert np.linalg.norm(sum(kk.conj().T @ kk for kk in ch.kraus) - np.eye(bond)) < 1e-10


@pytest.mark.parametrize("k", [1, 2])
def test_extension_of_mcz(k):
    can = to_canonical_form(multi_control_z(4))
    rep = verify_extension(*split_chain(can, k))
    assert rep.passed and rep.agree


def test_low_kraus_rank_completion_fails(rng):
    """Both Kraus operators equal: trace preserving, but rank 1 < d' = 2."""
    can = to_canonical_form(multi_control_z(3))
    pre, _ = split_chain(can, 2)
    dk = pre.sites[-1].D_left
    k = haar_unitary(2, rng)[:, :dk] if dk <= 2 else None
    assert k is not None and dk == 2
    data = np.stack([k, k])[:, :, None, :]
    comp = MpoChain((data,), Open(np.ones(1), np.ones(dk)))
    rep = verify_extension(pre, comp)
    assert rep.kraus_rank == 1 and rep.d_prime == 2
    assert not rep.passed and not rep.concatenated_passed


def test_rectangular_parts_are_rejected(rng):
    can = to_canonical_form(_staircase(rng, 3))
    with pytest.raises(PreconditionError):
        verify_extension(*split_chain(can, 2))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_recursive_span_equals_string_span(rng, k):
    chain = to_canonical_form(_staircase(rng, 3))
    rec = check_unitarity_recursive(chain)
    direct = string_span(chain, k)
    assert rec.span_dims[k - 1] == direct.dim
