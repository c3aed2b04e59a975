from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpukit.automaton import (
    AutomatonSpec,
    automaton_circuit_simulate,
    automaton_mpo,
    automaton_mps,
    automaton_mpu,
    mcz_automaton,
    phase_table,
    random_automaton,
    run_automaton,
)
from mpukit.errors import ArgumentError, DimensionError
from mpukit.gallery import multi_control_z_dense
from mpukit.mpo import materialize
from mpukit.unitarity import check_unitarity_recursive


@pytest.mark.parametrize("n", range(2, 7))
def test_mcz_automaton(n):
    np.testing.assert_allclose(automaton_mpu(mcz_automaton(n)), multi_control_z_dense(n), atol=1e-12)


def test_run_automaton_reads_most_significant_first():
    spec = mcz_automaton(3)
    assert run_automaton(spec, (1, 1, 1)) == pytest.approx(np.pi)
    for lab in itertools.product(range(2), repeat=3):
        if lab != (1, 1, 1):
            assert run_automaton(spec, lab) == 0.0


@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_mps_mpo_and_table_agree(n, d, seed):
    spec = random_automaton(n, np.random.default_rng(seed), d=d)
    phases = np.exp(1j * phase_table(spec))
    np.testing.assert_allclose(materialize(automaton_mps(spec)).reshape(-1), phases, atol=1e-12)
    np.testing.assert_allclose(materialize(automaton_mpo(spec)), np.diag(phases), atol=1e-12)
    assert check_unitarity_recursive(automaton_mpo(spec)).passed


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_circuit_simulation_restores_ancillas(n, seed):
    rng = np.random.default_rng(seed)
    spec = random_automaton(n, rng)
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    psi /= np.linalg.norm(psi)
    out, leak = automaton_circuit_simulate(spec, psi)
    assert leak <= 1e-10
    np.testing.assert_allclose(out, automaton_mpu(spec) @ psi, atol=1e-10)


def test_simulation_on_basis_states():
    spec = mcz_automaton(3)
    for k in range(8):
        e = np.zeros(8)
        e[k] = 1.0
        out, leak = automaton_circuit_simulate(spec, e)
        assert leak == 0.0
        np.testing.assert_allclose(out, multi_control_z_dense(3)[:, k], atol=1e-12)


def test_spec_validation():
    with pytest.raises(ArgumentError):
        AutomatonSpec((np.zeros((2, 2), dtype=int),), (np.zeros((2, 2)),))
    with pytest.raises(ArgumentError):
        AutomatonSpec((np.array([[0, 3]]),), (np.zeros((1, 2)),))
    with pytest.raises(DimensionError):
        AutomatonSpec((np.zeros((1, 2), dtype=int),), (np.zeros((1, 3)),))


def test_state_length_checked():
    with pytest.raises(DimensionError):
        automaton_circuit_simulate(mcz_automaton(2), np.ones(3))
