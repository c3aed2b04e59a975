from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpukit.automaton import automaton_mpo, mcz_automaton, random_automaton
from mpukit.errors import ArgumentError, DimensionError
from mpukit.gallery import haar_unitary, multi_control_z, multi_control_z_dense
from mpukit.lme import (
    LmeCompression,
    PhaseTable,
    cj_unvectorize,
    cj_vectorize,
    compress_chain,
    delta_isometry,
    detect_phase_form,
    lme_compress,
    phase_state,
    phase_unitary,
    random_phase_unitary,
    verify_lme,
    verify_lu_witness,
)
from mpukit.mpo import MpoChain, materialize, vectorize_to_mps
from mpukit.unitarity import check_canonical_form, to_canonical_form

CZ = np.diag([1.0, 1.0, 1.0, -1.0])


def test_cj_of_identity():
    np.testing.assert_array_equal(cj_vectorize(np.eye(2), [2]), [1, 0, 0, 1])


def test_cj_matches_vectorized_chain():
    chain = multi_control_z(3)
    np.testing.assert_allclose(
        cj_vectorize(materialize(chain), [2, 2, 2]), materialize(vectorize_to_mps(chain)).reshape(-1), atol=1e-12
    )


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**31 - 1))
def test_cj_round_trip(dims, seed):
    rng = np.random.default_rng(seed)
    total = int(np.prod(dims))
    u = rng.normal(size=(total, total))
    np.testing.assert_array_equal(cj_unvectorize(cj_vectorize(u, dims), dims), u)


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_compression_is_exact_and_passes(n, seed):
    rng = np.random.default_rng(seed)
    u = haar_unitary(2**n, rng)
    comp = lme_compress(u, [2] * n)
    assert comp.isometry_residual() < 1e-10
    np.testing.assert_allclose(comp.operator(), u, atol=1e-10)
    assert verify_lme(comp).passed


def test_haar_three_qubit_needs_full_dimension(rng):
    comp = lme_compress(haar_unitary(8, rng), [2, 2, 2])
    assert comp.dims == [4, 4, 4]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_mcz_compresses_to_qubits(n):
    comp = lme_compress(multi_control_z_dense(n), [2] * n)
    assert comp.dims == [2] * n
    assert verify_lme(comp).passed


def test_non_unitary_warns_and_fails():
    iso = np.zeros((4, 4))
    iso[:2, :2] = np.eye(2)
    with pytest.warns(UserWarning):
        comp = lme_compress(iso, [2, 2])
    rep = verify_lme(comp)
    assert not rep.passed
    assert rep.residual == pytest.approx(0.5)


def test_compression_validation():
    with pytest.raises(DimensionError):
        lme_compress(np.eye(3), [2])
    with pytest.raises(ArgumentError):
        lme_compress(np.eye(2), [0])
    with pytest.raises(DimensionError):
        LmeCompression([np.eye(3)], np.ones(3), [2])


def test_delta_isometry_reproduces_phase_state():
    table = PhaseTable(np.array([0.1, 0.2, 0.3, 0.4]), 2)
    v = delta_isometry(2)
    comp = LmeCompression([v, v], phase_state(table), [2, 2])
    np.testing.assert_allclose(comp.operator(), phase_unitary(table), atol=1e-12)
    assert verify_lme(comp).passed


def test_phase_table_normalization_and_labels():
    t = PhaseTable(np.array([2 * np.pi, -np.pi / 2, 0.0, 7.0]), 2)
    assert t.theta[0] == 0.0
    assert t.theta[1] == pytest.approx(3 * np.pi / 2)
    assert t.labels() == ["00", "01", "10", "11"]
    back = PhaseTable.from_pairs(t.pairs())
    np.testing.assert_allclose(back.theta, t.theta)


@pytest.mark.parametrize("pairs", [[("0", 0.0)], [("00", 0.0), ("0x", 1.0)], []])
def test_phase_table_rejects_bad_pairs(pairs):
    with pytest.raises(ArgumentError):
        PhaseTable.from_pairs(pairs)


def test_witness_verification():
    table = PhaseTable(np.array([0.0, 0.0, 0.0, np.pi]), 2)
    eye = [np.eye(2), np.eye(2)]
    assert verify_lu_witness(CZ, eye, eye, table)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert not verify_lu_witness(CZ, [h, np.eye(2)], eye, table)
    with pytest.raises(DimensionError):
        verify_lu_witness(CZ, [np.eye(2)], eye, table)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_detect_mcz(n):
    det = detect_phase_form(multi_control_z_dense(n))
    assert det.found
    nonzero = [(lab, th) for lab, th in det.table.pairs() if th != 0.0]
    assert nonzero == [("1" * n, pytest.approx(np.pi))]


@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_detect_scrambled_phase_unitaries(n, seed):
    u, _ = random_phase_unitary(n, np.random.default_rng(seed))
    det = detect_phase_form(u)
    # a shortfall must be reported as such, never as a wrong negative
    assert det.verdict in ("phase_form", "extraction_failed")
    if det.found:
        assert verify_lu_witness(u, det.local_pre, det.local_post, det.table)


def test_detect_rejects_generic_unitary(rng):
    det = detect_phase_form(haar_unitary(8, rng))
    assert det.verdict == "not_lme2"
    assert not det.found


def test_detect_needs_qubits():
    with pytest.raises(ArgumentError):
        detect_phase_form(np.eye(3))


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_automaton_unitaries_are_phase_form(n, seed):
    spec = random_automaton(n, np.random.default_rng(seed))
    det = detect_phase_form(materialize(automaton_mpo(spec)))
    assert det.found


@pytest.mark.parametrize("n", [2, 3, 4])
def test_compress_chain_core(n):
    chain = to_canonical_form(automaton_mpo(mcz_automaton(n)))
    comp = compress_chain(chain)
    assert [v.shape[1] for v in comp.isometries] == [2] * n
    rebuilt = [np.einsum("fr,rxmn->fxmn", v, c.data) for v, c in zip(comp.isometries, comp.core.sites)]
    rebuilt = MpoChain(tuple(rebuilt), comp.core.boundary)
    np.testing.assert_allclose(materialize(rebuilt), materialize(vectorize_to_mps(chain)), atol=1e-12)
    scaled = MpoChain(
        tuple(c.data / np.sqrt(d) for c, d in zip(comp.core.sites, chain.in_dims)), comp.core.boundary
    )
    assert check_canonical_form(scaled).passed
