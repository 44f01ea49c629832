import math

import numpy as np
import pytest

from pagecurve.davies import BathSpec, GKLSGenerator, build_generator
from pagecurve.gaussian import CovarianceState, fock_projector_oracle
from pagecurve.integrator import (IntegrationControls, IntegrationError, LeakageError,
                                  NonUniqueSteadyStateError, evolve, steady_state)
from pagecurve.opcore import gibbs_state, ket_projector, pauli
from pagecurve.thermo import von_neumann_entropy

from conftest import oscillator_generator, qubit_generator, random_hermitian


def controls(t_end=2000.0, dt=0.1, stride=10, **kw):
    return IntegrationControls(t_end=t_end, dt_init=dt, record_stride=stride, **kw)


def test_excited_population_decays_exponentially():
    tr = evolve(qubit_generator(0.0), ket_projector(2, 0), controls())
    pop = tr.states[:, 0, 0].real
    assert np.max(np.abs(pop - np.exp(-0.01 * tr.times))) <= 1e-8
    # coherences stay zero in the energy basis
    assert np.max(np.abs(tr.states[:, 0, 1])) <= 1e-14


def test_error_bound_against_closed_form():
    # hot qubit with coherence: populations relax at G = g_down + g_up, coherences at G/2
    T, g = 1.0, 0.01
    L = qubit_generator(T, gamma=g)
    psi = np.array([np.cos(0.4), np.sin(0.4)])
    rho0 = np.outer(psi, psi)
    c = controls(t_end=500.0, dt=0.5, stride=2)
    tr = evolve(L, rho0, c)
    rates = {ch.bohr_frequency: ch.rate for ch in L.channels}
    G = rates[1.0] + rates[-1.0]
    p_inf = rates[-1.0] / G
    for t, rho in zip(tr.times, tr.states):
        p = p_inf + (rho0[0, 0] - p_inf) * math.exp(-G * t)
        coh = rho0[0, 1] * np.exp(-G * t / 2 - 1j * t)
        exact = np.array([[p, coh], [np.conj(coh), 1 - p]])
        assert np.max(np.abs(rho - exact)) <= 10 * c.rel_tol * max(t, 1.0)


def test_unitary_evolution_is_isospectral(rng):
    H = random_hermitian(rng, 5)
    L = GKLSGenerator(hamiltonian=H)
    X = random_hermitian(rng, 5)
    rho0 = X @ X
    rho0 /= np.trace(rho0).real
    tr = evolve(L, rho0, controls(t_end=50.0, dt=0.5, stride=4))
    w0 = np.linalg.eigvalsh(rho0)
    S0 = von_neumann_entropy(rho0)
    for rho in tr.states:
        assert np.max(np.abs(np.linalg.eigvalsh(rho) - w0)) <= 1e-9
        assert abs(von_neumann_entropy(rho) - S0) <= 1e-9


def test_gibbs_state_is_stationary():
    L = qubit_generator(1.0)
    tau = gibbs_state(L.hamiltonian, 1.0)
    tr = evolve(L, tau, controls(t_end=500.0, dt=0.5, stride=10))
    assert np.max(np.abs(tr.states - tau)) <= 1e-9


def test_trace_and_positivity_monitors():
    L = oscillator_generator(30, temperature=0.0)
    rho0 = fock_projector_oracle(CovarianceState.squeezed_vacuum(0.3), 30)
    tr = evolve(L, rho0, controls(t_end=1000.0, dt=1.0, stride=10), leak_level=29)
    assert np.max(tr.trace_error) <= 1e-9
    assert np.min(tr.min_eigenvalue) >= -1e-9
    assert np.nanmax(tr.top_level_population) <= 1e-6


def test_leakage_aborts_with_hint():
    L = oscillator_generator(6, temperature=2.0)
    with pytest.raises(LeakageError, match="increase n_max"):
        evolve(L, ket_projector(6, 0), controls(t_end=400.0, dt=1.0, stride=10), leak_level=5)


def test_step_halving_consistency():
    L = qubit_generator(1.0)
    rho0 = ket_projector(2, 0)
    a = evolve(L, rho0, controls(t_end=500.0, dt=0.5, stride=4, rel_tol=1e-8))
    b = evolve(L, rho0, controls(t_end=500.0, dt=0.5, stride=4, rel_tol=1e-9))
    Sa = [von_neumann_entropy(r) for r in a.states]
    Sb = [von_neumann_entropy(r) for r in b.states]
    assert np.max(np.abs(np.subtract(Sa, Sb))) <= 1e-7


def test_record_grid():
    c = IntegrationControls(t_end=10.0, dt_init=0.3, record_stride=2)
    t = c.record_times()
    assert t[0] == 0 and t[-1] == 10.0 and np.all(np.diff(t) > 0)
    np.testing.assert_allclose(np.diff(t)[:-1], 0.6)


def test_bad_inputs():
    with pytest.raises(ValueError):
        IntegrationControls(t_end=1.0, dt_init=0.1, rel_tol=1e-2)
    with pytest.raises(ValueError):
        IntegrationControls(t_end=-1.0, dt_init=0.1)
    with pytest.raises(IntegrationError):
        evolve(qubit_generator(), np.eye(3) / 3, controls(t_end=1.0))


def test_steady_state_examples():
    cold = steady_state(qubit_generator(0.0))
    np.testing.assert_allclose(cold, ket_projector(2, 1), atol=1e-12)
    hot = steady_state(qubit_generator(1.0))
    # |1><1| is index 0, |0><0| index 1
    expected = np.diag([math.exp(-1), 1.0]) / (1 + math.exp(-1))
    np.testing.assert_allclose(hot, expected, atol=1e-9)
    vac = steady_state(oscillator_generator(20))
    np.testing.assert_allclose(vac, ket_projector(20, 0), atol=1e-9)


def test_steady_state_random_thermal(rng):
    H, S = random_hermitian(rng, 7), random_hermitian(rng, 7)
    L = build_generator(H, S, BathSpec(0.9, 0.05))
    np.testing.assert_allclose(steady_state(L), gibbs_state(H, 0.9), atol=1e-9)


def test_steady_state_non_unique():
    # identical decoupled qubits under collective coupling have a dark subspace
    with pytest.raises(NonUniqueSteadyStateError):
        steady_state(GKLSGenerator(hamiltonian=pauli("z")))
    Z, X = pauli("z"), pauli("x")
    H = 0.5 * (np.kron(Z, np.eye(2)) + np.kron(np.eye(2), Z))
    S = np.kron(X, np.eye(2)) + np.kron(np.eye(2), X)
    with pytest.raises(NonUniqueSteadyStateError):
        steady_state(build_generator(H, S, BathSpec(0.0, 0.1)))


@pytest.mark.parametrize("name", ["qubit", "oscillator"])
def test_convergence_to_steady_state(name):
    if name == "qubit":
        L, rho0 = qubit_generator(0.0), ket_projector(2, 0)
    else:
        L = oscillator_generator(30)
        rho0 = fock_projector_oracle(CovarianceState.squeezed_vacuum(0.3), 30)
    tr = evolve(L, rho0, controls(t_end=2000.0, dt=1.0, stride=100))
    assert np.max(np.abs(tr.states[-1] - steady_state(L))) <= 1e-6
