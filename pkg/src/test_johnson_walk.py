from math import comb

import numpy as np
import pytest

from johnson_walk import (
    ExactCollisionInstance,
    WalkBasis,
    element_distinctness_instance,
    generic_exact,
    marked_sets,
    sweep_exact,
    walk_operator_matrix,
    walk_step,
)
from statevector import StateVector
from utils.run_utils import CapabilityError, DomainError, make_rng

UNIQUE_PAIR = [0, 1, 2, 3, 4, 5, 6, 7, 0]


@pytest.mark.parametrize("n, r", [(4, 2), (6, 3), (9, 3), (5, 1)])
def test_basis_size(n, r):
    basis = WalkBasis(n, r)
    assert basis.size == comb(n, r) * (n - r) + comb(n, r + 1) * (r + 1)


def test_basis_example():
    assert WalkBasis(4, 2).size == 24


def test_encode_decode_round_trip():
    basis = WalkBasis(6, 2)
    for index in range(basis.size):
        A, x = basis.decode(index)
        assert basis.encode(A, x) == index


def test_basis_guards():
    with pytest.raises(DomainError):
        WalkBasis(3, 3)
    with pytest.raises(DomainError):
        WalkBasis(5, 0)
    with pytest.raises(CapabilityError):
        WalkBasis(15, 2)
    basis = WalkBasis(5, 2)
    with pytest.raises(DomainError):
        basis.encode((0, 1), 1)
    with pytest.raises(DomainError):
        basis.encode((0, 1, 2), 4)


def test_walk_step_preserves_norm():
    basis = WalkBasis(6, 2)
    rng = make_rng(11, 0)
    for _ in range(100):
        state = StateVector.random(basis.size, rng)
        assert abs(walk_step(state, basis).norm() - 1) < 1e-10


def test_walk_operator_is_unitary():
    basis = WalkBasis(5, 2)
    m = walk_operator_matrix(basis)
    assert np.allclose(m.conj().T @ m, np.eye(basis.size), atol=1e-10)


def test_walk_step_keeps_the_r_sector():
    basis = WalkBasis(7, 3)
    state = StateVector.random(basis.size, make_rng(4, 0))
    state.amp[basis.high_slice()] = 0
    state = StateVector(state.amp / np.linalg.norm(state.amp))
    out = walk_step(state, basis)
    assert np.allclose(out.amp[basis.high_slice()], 0, atol=1e-12)


def test_tiny_walk_returns_uniform_state():
    basis = WalkBasis(2, 1)
    start = StateVector.uniform(basis.size, support=np.arange(basis.low_size))
    twice = walk_step(walk_step(start, basis), basis)
    m = walk_operator_matrix(basis)
    assert np.allclose(twice.amp, start.amp)
    assert np.allclose(m @ m @ start.amp, start.amp)


def test_walk_step_size_mismatch():
    with pytest.raises(DomainError):
        walk_step(StateVector.uniform(5), WalkBasis(4, 2))


@pytest.mark.parametrize("n, r", [(6, 2), (8, 3), (10, 4)])
def test_no_collision_always_rejects(n, r):
    instance = element_distinctness_instance(list(range(n)))
    for t1 in range(4):
        for t2 in range(3):
            assert generic_exact(instance, r, t1, t2).success_probability == 0.0


def test_baseline_matches_counting():
    instance = element_distinctness_instance(UNIQUE_PAIR)
    result = generic_exact(instance, 3, 0, 0)
    assert result.success_probability == pytest.approx(1 / 12, abs=1e-12)
    assert result.witnesses == pytest.approx({(1, 9): 1.0})
    basis = WalkBasis(9, 3)
    assert marked_sets(instance, basis).sum() == comb(7, 1)


def test_walk_lifts_success_probability():
    instance = element_distinctness_instance(UNIQUE_PAIR)
    table = sweep_exact(instance, 3, range(1, 13), range(1, 9))
    assert len(table) == 1 + 12 * 8
    baseline = table.iloc[0]
    assert (baseline["t1"], baseline["t2"]) == (0, 0)
    assert table["success_probability"].max() >= 0.25


def test_sweep_matches_generic_exact():
    instance = element_distinctness_instance(UNIQUE_PAIR)
    table = sweep_exact(instance, 3, [2, 3], [1, 2])
    row = table[(table["t1"] == 3) & (table["t2"] == 2)].iloc[0]
    assert row["success_probability"] == pytest.approx(
        generic_exact(instance, 3, 3, 2).success_probability, abs=1e-12
    )


def test_generic_exact_guards():
    instance = element_distinctness_instance(UNIQUE_PAIR)
    with pytest.raises(DomainError):
        generic_exact(instance, 1, 1, 1)
    with pytest.raises(DomainError):
        generic_exact(instance, 9, 1, 1)
    with pytest.raises(DomainError):
        generic_exact(instance, 3, -1, 1)


def test_custom_relation_witness_is_smallest():
    instance = ExactCollisionInstance(
        6, 2, tuple(range(6)), frozenset({(0, 5), (1, 2)}), "custom"
    )
    assert instance.witness((0, 1, 2, 5)) == (0, 5)
    assert instance.marked((1, 2, 3))
    assert not instance.marked((0, 1, 3))
