import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_state
from ionphonon.fock import Operator, StateVector, expectation, fock_state, make_space, mode_space, number_op
from ionphonon.hamiltonians import HamiltonianSpec, build, unit_convert
from ionphonon.propagate import (NonHermitianError, PropagationError, evolve, evolve_dense, format_float,
                                 propagator_dense, record_probabilities, write_csv)


def random_hermitian(n, rng, scale=1.0):
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    M[rng.random((n, n)) < 0.5] = 0.0
    return (M + M.conj().T) / 2 * scale


def test_zero_hamiltonian_is_identity(rng):
    sp_ = mode_space(2)
    psi = random_state(sp_, rng)
    traj = evolve(Operator(sp_, np.zeros((sp_.dim, sp_.dim))), psi, [0.0, 1.0, 5.0])
    for s in traj.states:
        np.testing.assert_array_equal(s.amplitudes, psi.amplitudes)


def test_number_eigenstate_phase():
    sp_ = make_space([("a", 4)])
    w = 3.7
    traj = evolve(w * number_op(sp_, "a"), fock_state(sp_, {"a": 1}), [0.5, 1.3])
    for t, s in zip(traj.times, traj.states):
        amp = s.amplitudes[1]
        assert abs(amp) == pytest.approx(1.0, abs=1e-12)
        assert amp == pytest.approx(np.exp(-1j * w * t), abs=1e-9)


def test_two_level_hopping_rabi():
    eps = unit_convert(0.045)
    spec = HamiltonianSpec("effective_bs", xi=1.0, omega=1.0, omega_drive_amp=eps, n_max=1)
    H = build(spec)
    times = np.linspace(0.0, 10.0, 21)
    traj = evolve(H, fock_state(H.space, {"a": 1}), times)
    target = fock_state(H.space.restrict(["a", "c"]), {"c": 1})
    p = record_probabilities(traj, [target])[:, 0]
    np.testing.assert_allclose(p, np.sin(eps * times) ** 2, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_krylov_matches_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 201))
    sp_ = make_space([("a", n)])
    H = Operator(sp_, random_hermitian(n, rng, rng.uniform(0.1, 10)))
    psi = random_state(sp_, rng)
    times = np.sort(rng.uniform(0, 3, 4))
    traj = evolve(H, psi, times, tol=1e-9)
    for s, ref in zip(traj.states, evolve_dense(H, psi, times)):
        assert np.linalg.norm(s.amplitudes - ref) <= 1e-9


@given(st.integers(0, 2**32 - 1))
def test_norm_and_energy_conservation(seed):
    rng = np.random.default_rng(seed)
    sp_ = make_space([("a", 60)])
    H = Operator(sp_, random_hermitian(60, rng, 5.0))
    psi = random_state(sp_, rng)
    tol = 1e-9
    traj = evolve(H, psi, np.linspace(0.1, 4, 6), tol=tol)
    e0 = expectation(psi, H).real
    bound = 100 * tol * H.norm_bound()
    for s in traj.states:
        assert abs(np.linalg.norm(s.amplitudes) - 1) <= 10 * tol
        assert abs(expectation(s, H).real - e0) <= bound
    assert traj.stats["max_norm_drift"] <= 10 * tol


def test_full_reorthogonalisation_agrees(rng):
    sp_ = make_space([("a", 150)])
    H = Operator(sp_, random_hermitian(150, rng, 3.0))
    psi = random_state(sp_, rng)
    a = evolve(H, psi, [2.0]).states[-1].amplitudes
    b = evolve(H, psi, [2.0], full_reorth=True).states[-1].amplitudes
    assert np.linalg.norm(a - b) <= 2e-9


def test_input_validation(rng):
    sp_ = make_space([("a", 5)])
    H = number_op(sp_, "a")
    psi = fock_state(sp_, {"a": 1})
    with pytest.raises(ValueError):
        evolve(H, psi, [1.0, 0.5])
    with pytest.raises(ValueError):
        evolve(H, psi, [-1.0])
    with pytest.raises(ValueError):
        evolve(H, psi, [1.0], tol=0.0)
    M = np.zeros((5, 5), complex)
    M[0, 1] = 1.0
    with pytest.raises(NonHermitianError):
        evolve(Operator(sp_, M), psi, [1.0])


def test_step_floor_raises():
    sp_ = make_space([("a", 50)])
    H = Operator(sp_, np.diag(np.linspace(-1e13, 1e13, 50)) + np.diag(np.full(49, 1e12), 1) + np.diag(np.full(49, 1e12), -1))
    psi = StateVector.from_amplitudes(sp_, np.ones(50))
    with pytest.raises(PropagationError):
        evolve(H, psi, [1.0], krylov_dim=2)


def test_dense_propagator_properties(rng):
    sp_ = make_space([("a", 30)])
    H = Operator(sp_, random_hermitian(30, rng))
    np.testing.assert_allclose(propagator_dense(H, 0.0).toarray(), np.eye(30), atol=1e-12)
    u = propagator_dense(H, 0.4).toarray() @ propagator_dense(H, 0.9).toarray()
    np.testing.assert_allclose(u, propagator_dense(H, 1.3).toarray(), atol=1e-9)
    d = np.linspace(-2, 2, 30)
    np.testing.assert_allclose(np.diag(propagator_dense(Operator(sp_, np.diag(d)), 0.7).toarray()),
                               np.exp(-0.7j * d), atol=1e-12)
    with pytest.raises(ValueError):
        propagator_dense(Operator(make_space([("a", 201)]), np.eye(201)), 1.0)


def test_record_probabilities_completeness():
    spec = HamiltonianSpec("effective_bs", xi=1.0, omega=1.0, omega_drive_amp=0.8, n_max=4)
    H = build(spec)
    traj = evolve(H, fock_state(H.space, {"a": 2, "c": 2}), [0.0, 0.5, 1.0])
    ac = H.space.restrict(["a", "c"])
    basis = [fock_state(ac, {"a": k, "c": 4 - k}) for k in range(5)]
    p = record_probabilities(traj, basis)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(p[0], [0, 0, 1, 0, 0], atol=1e-15)


def test_fig3_symmetry_of_effective_beam_splitter():
    spec = HamiltonianSpec("effective_bs", xi=unit_convert(0.2), omega=unit_convert(17),
                           omega_drive_amp=unit_convert(6.5), n_max=5)
    H = build(spec)
    traj = evolve(H, fock_state(H.space, {"a": 2, "c": 2}), np.linspace(0, 6, 13))
    ac = H.space.restrict(["a", "c"])
    p = record_probabilities(traj, [fock_state(ac, {"a": 4}), fock_state(ac, {"c": 4})])
    assert np.max(np.abs(p[:, 0] - p[:, 1])) <= 2e-3


def test_csv_format(tmp_path):
    path = tmp_path / "x.csv"
    write_csv(path, {"t": [0.0, 0.1], "p": [1.0, 1 / 3], "z": [1j, 2.0]})
    assert path.read_text(encoding="utf-8").splitlines() == [
        "t,p,z_re,z_im", "0,1,0,1", "0.1,0.333333333333,2,0"]
    assert format_float(math.pi) == "3.14159265359"


def test_trajectory_record_and_csv(tmp_path):
    sp_ = make_space([("a", 3)])
    traj = evolve(number_op(sp_, "a"), fock_state(sp_, {"a": 2}), [0.0, 1.0])
    traj.record("n", lambda s: expectation(s, number_op(sp_, "a")))
    traj.to_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,n"
