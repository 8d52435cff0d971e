import numpy as np
import pytest

from spinctrl.dynamics import (
    ControlProblem,
    PropagationSettings,
    batch_fidelity,
    propagate,
    state_fidelity,
    step_propagator,
    subspace_fidelity,
)
from spinctrl.pulses import GaussianPulse, PiecewiseConstantPulse
from spinctrl.spin_model import SpinChainSpec, static_hamiltonian


def chain_problem(seed=1, n_spins=4, t_f=1.0):
    rng = np.random.default_rng(seed)
    spec = SpinChainSpec(n_spins, tuple(rng.uniform(-1, 1, n_spins)))
    return ControlProblem.for_chain(spec, t_f=t_f)


class TestStepPropagator:
    def test_zero_time_is_identity(self):
        h = np.diag([1.0, 2.0, -3.0])
        assert np.max(np.abs(step_propagator(h, 0.0) - np.eye(3))) <= 1e-15

    def test_diagonal_hamiltonian_gives_diagonal_phases(self):
        lam = np.array([0.3, -1.7, 4.1])
        u = step_propagator(np.diag(lam), 0.42)
        assert np.max(np.abs(np.diag(u) - np.exp(-1j * 0.42 * lam))) <= 1e-14
        assert np.max(np.abs(u - np.diag(np.diag(u)))) <= 1e-14

    def test_group_inverse(self):
        rng = np.random.default_rng(2)
        h = rng.standard_normal((8, 8))
        h = h + h.T
        prod = step_propagator(h, 0.31) @ step_propagator(h, -0.31)
        assert np.max(np.abs(prod - np.eye(8))) <= 1e-12

    def test_unitary(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal((16, 16))
        h = h + h.T
        u = step_propagator(h, 1.7)
        assert np.max(np.abs(u.conj().T @ u - np.eye(16))) <= 1e-10

    def test_composed_bin_propagators_stay_unitary(self):
        prob = chain_problem()
        rng = np.random.default_rng(4)
        u_total = np.eye(prob.dim, dtype=complex)
        for value in rng.uniform(-5, 5, 10):
            u_total = step_propagator(prob.drift + value * prob.control, 0.1) @ u_total
        assert np.max(np.abs(u_total.conj().T @ u_total - np.eye(prob.dim))) <= 1e-10

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            step_propagator(np.arange(4.0).reshape(2, 2), 0.1)
        with pytest.raises(ValueError):
            step_propagator(np.eye(2), np.inf)


class TestPropagate:
    def test_stationary_eigenstate_acquires_pure_phase(self):
        prob = chain_problem()
        k = 5
        phi = prob.spectrum.eigenvectors[:, k].astype(complex)
        energy = prob.spectrum.eigenvalues[k]
        zero = PiecewiseConstantPulse((0.0,), prob.t_f)
        result = propagate(phi, zero, prob.t_f, prob.drift, prob.control, target=phi)
        assert result.fidelity == pytest.approx(1.0, abs=1e-12)
        expected = np.exp(-1j * energy * prob.t_f) * phi
        assert np.max(np.abs(result.state - expected)) <= 1e-12

    def test_null_pulse_keeps_boundary_states_orthogonal(self):
        for t_f in (0.1, 1.0, 5.0):
            prob = chain_problem(seed=6, t_f=t_f)
            zero = PiecewiseConstantPulse((0.0,), t_f)
            assert prob.fidelity(zero) <= 1e-10

    def test_self_convergence_second_order(self):
        # Frozen from the self-convergence oracle: successive doublings
        # shrink |Delta F| by ~4x; at 4096 -> 8192 the delta is ~7e-9 for
        # this draw (the refinement is clean second order, not 1e-10 yet).
        prob = chain_problem(seed=1)
        pulse = GaussianPulse(10.0, 1.0, 1.0)
        fids = {
            m: prob.fidelity(pulse, PropagationSettings(substeps=m, adaptive=False))
            for m in (2048, 4096, 8192)
        }
        d1 = abs(fids[4096] - fids[2048])
        d2 = abs(fids[8192] - fids[4096])
        assert d2 <= 1.5e-8
        assert 3.0 <= d1 / d2 <= 5.0

    def test_adaptive_flags_nonconvergence_at_cap(self):
        prob = chain_problem()
        pulse = GaussianPulse(10.0, 1.0, 1.0)
        tight = PropagationSettings(substeps=128, convergence_tol=1e-14, max_substeps=512)
        result = prob.evolve(pulse, settings=tight)
        assert not result.converged
        assert result.substeps == 512
        loose = PropagationSettings(substeps=128, convergence_tol=1e-6, max_substeps=65536)
        assert prob.evolve(pulse, settings=loose).converged

    def test_piecewise_pulse_is_exact_single_pass(self):
        prob = chain_problem()
        pulse = PiecewiseConstantPulse(tuple(np.linspace(-2, 2, 10)), prob.t_f)
        result = prob.evolve(pulse)
        assert result.converged
        assert result.substeps == 10

    def test_norm_preserved(self):
        prob = chain_problem()
        pulse = GaussianPulse(30.0, 2.5, 1.0)
        result = prob.evolve(pulse, settings=PropagationSettings(substeps=512, adaptive=False))
        assert abs(np.linalg.norm(result.state) - 1.0) <= 1e-10

    def test_time_reversal_of_piecewise_pulse(self):
        prob = chain_problem()
        rng = np.random.default_rng(8)
        values = tuple(rng.uniform(-5, 5, 16))
        forward = PiecewiseConstantPulse(values, prob.t_f)
        backward = PiecewiseConstantPulse(values[::-1], prob.t_f)
        psi1 = propagate(prob.psi_i, forward, prob.t_f, prob.drift, prob.control).state
        # backward evolution = forward evolution under negated Hamiltonian
        psi2 = propagate(psi1, backward, prob.t_f, -prob.drift, -prob.control).state
        assert state_fidelity(prob.psi_i, psi2) >= 1.0 - 1e-9

    def test_deterministic_repeat(self):
        prob = chain_problem()
        pulse = GaussianPulse(12.0, 1.3, 1.0)
        settings = PropagationSettings(substeps=256, adaptive=False)
        a = prob.evolve(pulse, settings=settings).state
        b = prob.evolve(pulse, settings=settings).state
        assert np.array_equal(a, b)

    def test_trajectory_recording(self):
        prob = chain_problem()
        pulse = PiecewiseConstantPulse(tuple(np.linspace(-1, 1, 8)), prob.t_f)
        result = prob.evolve(pulse, record_trajectory=True)
        assert result.states is not None and len(result.states) == 8
        norms = np.linalg.norm(result.states, axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-10
        assert result.times[-1] == pytest.approx(prob.t_f)

    def test_input_validation(self):
        prob = chain_problem()
        pulse = GaussianPulse(1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            propagate(prob.psi_i * 2.0, pulse, 1.0, prob.drift, prob.control)
        with pytest.raises(ValueError):
            propagate(prob.psi_i, pulse, -1.0, prob.drift, prob.control)
        with pytest.raises(ValueError):
            PropagationSettings(substeps=0)
        with pytest.raises(ValueError):
            PropagationSettings(method="magnus")


class TestFidelities:
    def test_state_fidelity_trivials(self):
        a = np.array([1.0, 0.0], dtype=complex)
        b = np.array([0.0, 1.0], dtype=complex)
        assert state_fidelity(a, a) == 1.0
        assert state_fidelity(a, b) == 0.0
        assert state_fidelity(a, np.exp(1j * 0.7) * a) == pytest.approx(1.0, abs=1e-15)

    def test_subspace_fidelity_equals_state_fidelity(self):
        prob = chain_problem(seed=11)
        rng = np.random.default_rng(12)
        settings = PropagationSettings(substeps=512, adaptive=False)
        for _ in range(5):
            pulse = GaussianPulse(rng.uniform(-50, 50), rng.uniform(0.02, 4), prob.t_f)
            f = prob.fidelity(pulse, settings)
            f_s = prob.subspace_fidelity(pulse, settings)
            assert abs(f - f_s) <= 1e-12

    def test_subspace_fidelity_zero_when_projected_out(self):
        prob = chain_problem()
        b = prob.boundary
        outside = prob.spectrum.eigenvectors[:, 0].astype(complex)  # ground state not in S_i
        value = subspace_fidelity(b.p_i, b.p_f, outside, b.psi_f, lambda psi: psi)
        assert value <= 1e-20

    def test_subspace_fidelity_identity_action_is_zero(self):
        prob = chain_problem()
        b = prob.boundary
        value = subspace_fidelity(b.p_i, b.p_f, b.psi_i, b.psi_f, lambda psi: psi)
        assert value <= 1e-20

    def test_subspace_fidelity_rejects_overlapping_projectors(self):
        prob = chain_problem()
        b = prob.boundary
        with pytest.raises(ValueError):
            subspace_fidelity(b.p_i, b.p_i, b.psi_i, b.psi_f, lambda psi: psi)

    def test_fidelity_bounded(self):
        prob = chain_problem()
        rng = np.random.default_rng(13)
        settings = PropagationSettings(substeps=128, adaptive=False)
        for _ in range(10):
            pulse = GaussianPulse(rng.uniform(-50, 50), rng.uniform(0.02, 4), prob.t_f)
            f = prob.fidelity(pulse, settings)
            assert 0.0 <= f <= 1.0 + 1e-12


class TestSplitStep:
    def test_matches_midpoint(self):
        prob = chain_problem()
        pulse = GaussianPulse(10.0, 1.0, 1.0)
        reference = prob.fidelity(
            pulse, PropagationSettings(substeps=8192, adaptive=False, method="midpoint")
        )
        split = prob.fidelity(
            pulse, PropagationSettings(substeps=1024, adaptive=False, method="splitstep")
        )
        assert abs(reference - split) <= 1e-5

    def test_matches_midpoint_n8(self):
        prob = chain_problem(seed=21, n_spins=8)
        pulse = GaussianPulse(25.0, 2.0, 1.0)
        reference = prob.fidelity(
            pulse, PropagationSettings(substeps=512, adaptive=False, method="midpoint")
        )
        split = prob.fidelity(
            pulse, PropagationSettings(substeps=2048, adaptive=False, method="splitstep")
        )
        assert abs(reference - split) <= 1e-4

    def test_requires_model_structure(self):
        prob = chain_problem()
        pulse = GaussianPulse(1.0, 1.0, 1.0)
        dense = prob.drift + 0.1 * prob.control  # not diagonal
        settings = PropagationSettings(substeps=8, adaptive=False, method="splitstep")
        with pytest.raises(ValueError):
            propagate(prob.psi_i, pulse, 1.0, dense, prob.control, settings=settings)
        with pytest.raises(ValueError):
            propagate(prob.psi_i, pulse, 1.0, prob.drift, prob.drift, settings=settings)


class TestBatchFidelity:
    def test_matches_single_propagation(self):
        prob = chain_problem()
        rng = np.random.default_rng(14)
        pulses = [
            GaussianPulse(rng.uniform(-50, 50), rng.uniform(0.02, 4), prob.t_f) for _ in range(7)
        ]
        settings = PropagationSettings(substeps=256, adaptive=False)
        batch = prob.fidelity_many(pulses, settings)
        singles = np.array([prob.fidelity(p, settings) for p in pulses])
        assert np.max(np.abs(batch.fidelities - singles)) <= 1e-13

    def test_adaptive_batch_converges(self):
        prob = chain_problem(t_f=0.1)
        pulses = [GaussianPulse(a, 1.0, 0.1) for a in (-40.0, 5.0, 33.0)]
        settings = PropagationSettings(substeps=32, convergence_tol=1e-8, max_substeps=4096)
        result = prob.fidelity_many(pulses, settings)
        assert result.converged
        assert np.all(result.fidelities >= 0) and np.all(result.fidelities <= 1 + 1e-12)

    def test_empty_batch(self):
        prob = chain_problem()
        result = prob.fidelity_many([])
        assert result.fidelities.size == 0
