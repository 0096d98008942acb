import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_state
from ionphonon.fock import (DensityMatrix, Operator, SpaceMismatchError, StateVector, commutator, embed,
                            expectation, fidelity, fock_state, identity, ladder, local_annihilation, make_space,
                            mode_space, number_op, occupation_distribution, partial_trace, reduced_overlap,
                            spin_projector)


def test_space_dimensions():
    assert make_space([("a", 21), ("b", 21), ("c", 21)]).dim == 9261
    assert make_space([("spin", 2), ("a", 5), ("b", 5), ("c", 5)]).dim == 250


def test_space_sorted_canonically():
    sp_ = make_space([("c", 3), ("spin", 2), ("a", 4)])
    assert sp_.labels == ("spin", "a", "c")


@pytest.mark.parametrize("subs", [[("a", 21), ("a", 21)], [("a", 0)], [("spin", 3)], [("d", 3)], []])
def test_space_rejects_bad_layouts(subs):
    with pytest.raises(ValueError):
        make_space(subs)


def test_ladder_matrix_elements():
    sp_ = make_space([("a", 3)])
    a = ladder(sp_, "a").toarray()
    expected = np.zeros((3, 3))
    expected[0, 1] = 1.0
    expected[1, 2] = math.sqrt(2)
    np.testing.assert_array_equal(a, expected)


def test_ladder_rejects_spin():
    with pytest.raises(ValueError):
        ladder(mode_space(2, spin=True), "spin")


def test_canonical_commutator_truncation():
    sp_ = make_space([("a", 21)])
    a = ladder(sp_, "a")
    c = commutator(a, a.adjoint()).toarray()
    np.testing.assert_allclose(c[:20, :20], np.eye(20), atol=1e-14)
    assert c[20, 20] == pytest.approx(-20.0)


@pytest.mark.parametrize("label", ["a", "b", "c"])
def test_number_operator_is_integer_diagonal(label):
    sp_ = mode_space({"a": 4, "b": 5, "c": 6})
    n = number_op(sp_, label)
    m = n.toarray()
    assert np.count_nonzero(m - np.diag(np.diag(m))) == 0
    assert sorted(set(np.diag(m).real.astype(int))) == list(range(sp_.n_max(label) + 1))
    np.testing.assert_array_equal(np.diag(m).real, np.round(np.diag(m).real))


def test_disjoint_embeddings_commute_exactly():
    sp_ = mode_space(3, spin=True)
    ops = [ladder(sp_, "a"), ladder(sp_, "b").adjoint(), number_op(sp_, "c"), spin_projector(sp_, "up")]
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            assert commutator(ops[i], ops[j]).matrix.count_nonzero() == 0


def test_embed_matches_kron():
    sp_ = mode_space(2, modes=("a", "c"))
    a = local_annihilation(3)
    op = embed(sp_, {"c": a})
    np.testing.assert_array_equal(op.toarray(), np.kron(np.eye(3), a.toarray()))


def test_operator_algebra_checks_spaces():
    x = number_op(mode_space(2), "a")
    y = number_op(mode_space(3), "a")
    with pytest.raises(SpaceMismatchError):
        x + y
    with pytest.raises(SpaceMismatchError):
        x @ fock_state(mode_space(3), {})


def test_operator_does_not_alias_input():
    m = np.eye(2, dtype=complex)
    op = Operator(make_space([("a", 2)]), m)
    m[0, 0] = 5.0
    assert op.element([0], [0]) == 1.0


def test_fock_state_layout():
    sp_ = mode_space(3)
    st = fock_state(sp_, {"a": 2, "c": 2})
    assert st.amplitudes[sp_.flat_index((2, 0, 2))] == 1.0
    assert np.count_nonzero(st.amplitudes) == 1


def test_fock_state_with_spin():
    sp_ = make_space([("spin", 2), ("a", 3), ("c", 3)])
    st = fock_state(sp_, {"a": 1}, "up")
    assert st.tensor()[1, 1, 0] == 1.0


def test_fock_state_errors():
    with pytest.raises(ValueError):
        fock_state(mode_space(20), {"a": 25})
    with pytest.raises(ValueError):
        fock_state(mode_space(2, spin=True), {"a": 1})
    with pytest.raises(KeyError):
        fock_state(mode_space(2, modes=("a", "c")), {"b": 1})


def test_state_vector_requires_unit_norm():
    with pytest.raises(ValueError):
        StateVector(make_space([("a", 2)]), np.array([1.0, 1.0]))


def test_partial_trace_of_product_state():
    sp_ = mode_space(2, modes=("a", "b"))
    rho = partial_trace(fock_state(sp_, {"a": 1}), ["a"])
    expected = np.zeros((3, 3))
    expected[1, 1] = 1.0
    np.testing.assert_allclose(rho.matrix, expected)


def test_partial_trace_keep_all_is_projector(rng):
    sp_ = mode_space(2, modes=("a", "c"))
    psi = random_state(sp_, rng)
    rho = partial_trace(psi, ["a", "c"])
    np.testing.assert_allclose(rho.matrix, np.outer(psi.amplitudes, psi.amplitudes.conj()), atol=1e-15)


def test_partial_trace_of_tmss_is_thermal():
    # oracle: explicit outer product of the TMSS amplitudes, traced by summing the diagonal blocks
    r, n_max = 0.5, 20
    d = n_max + 1
    amps = np.zeros((d, d), complex)
    for n in range(d):
        amps[n, n] = math.tanh(r) ** n / math.cosh(r)
    amps /= np.linalg.norm(amps)
    full = np.outer(amps.reshape(-1), amps.reshape(-1).conj()).reshape(d, d, d, d)
    oracle = sum(full[:, j, :, j] for j in range(d))
    sp_ = make_space([("b", d), ("c", d)])
    rho = partial_trace(StateVector(sp_, amps.reshape(-1)), ["b"])
    np.testing.assert_allclose(rho.matrix, oracle, atol=1e-14)
    p = np.array([math.tanh(r) ** (2 * n) / math.cosh(r) ** 2 for n in range(d)])
    np.testing.assert_allclose(np.diag(rho.matrix).real, p, atol=1e-12)


def test_partial_trace_of_density_matrix_matches_state(rng):
    sp_ = mode_space(2, spin=True)
    psi = random_state(sp_, rng)
    a = partial_trace(psi, ["spin", "c"])
    b = partial_trace(DensityMatrix.from_state(psi), ["spin", "c"])
    np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-14)


@given(st.integers(0, 2**32 - 1), st.sampled_from([["a"], ["b"], ["spin", "c"], ["a", "b"]]))
def test_partial_trace_is_a_state(seed, keep):
    sp_ = mode_space(2, spin=True)
    psi = random_state(sp_, np.random.default_rng(seed))
    rho = partial_trace(psi, keep)
    assert abs(rho.trace - 1.0) <= 1e-10
    assert rho.eigenvalues().min() >= -1e-10
    assert rho.hermiticity_error() <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_fidelity_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    sp_ = mode_space(2)
    psi = random_state(sp_, rng)
    target = random_state(sp_.restrict(["a", "c"]), rng)
    f = fidelity(partial_trace(psi, ["a", "c"]), target)
    assert -1e-10 <= f <= 1 + 1e-10
    assert f == pytest.approx(reduced_overlap(psi, target), abs=1e-12)


def test_fidelity_examples():
    sp_ = make_space([("a", 2)])
    zero, one = fock_state(sp_, {"a": 0}), fock_state(sp_, {"a": 1})
    assert fidelity(DensityMatrix.from_state(zero), zero) == pytest.approx(1.0)
    assert fidelity(DensityMatrix.from_state(zero), one) == 0.0
    mixed = DensityMatrix(sp_, np.eye(2) / 2)
    plus = StateVector.from_amplitudes(sp_, [1, 1j])
    assert fidelity(mixed, plus) == pytest.approx(0.5)


def test_expectation_of_number():
    sp_ = mode_space(4)
    n = number_op(sp_, "b")
    assert expectation(fock_state(sp_, {}), n) == 0
    assert expectation(fock_state(sp_, {"b": 3}), n) == pytest.approx(3)


def test_occupation_distribution_matches_partial_trace(rng):
    sp_ = mode_space(3, spin=True)
    psi = random_state(sp_, rng)
    for label in ("spin", "a", "b", "c"):
        rho = partial_trace(psi, [label])
        np.testing.assert_allclose(occupation_distribution(psi, label), np.diag(rho.matrix).real, atol=1e-14)


def test_spin_projector_and_identity():
    sp_ = mode_space(1, spin=True)
    up, down = spin_projector(sp_, "up"), spin_projector(sp_, "down")
    np.testing.assert_array_equal((up + down).toarray(), identity(sp_).toarray())
    with pytest.raises(ValueError):
        spin_projector(mode_space(1), "up")
