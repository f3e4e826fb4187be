"""Stepper, sampler, and long-run diagnostics."""

import numpy as np
import pytest

from tkdv_assim.integrator import (BlowUpError, IntegratorConfig,
                                   convergence_study, energy_drift_series,
                                   hamiltonian_drift, integrate, rk4_step)
from tkdv_assim.spectral_tkdv import (TkdvParams, energy, normalize,
                                      random_initial_state)

UNIT = TkdvParams(1.0, 1.0)


def test_rk4_single_mode_dispersion_error():
    # pure dispersion turns mode 1 by exp(i * c2 * dt); one RK4 step must
    # match to the classical local truncation size
    dt = 1e-2
    state = np.zeros(4, dtype=np.complex128)
    state[0] = 1.0
    stepped = rk4_step(state, TkdvParams(1.0, 0.0), dt)
    exact = np.exp(1j * dt)
    assert abs(stepped[0] - exact) < 10.0 * dt ** 5


def test_rk4_batch_matches_single():
    rng = np.random.default_rng(31)
    batch = (rng.standard_normal((16, 6))
             + 1j * rng.standard_normal((16, 6)))
    got = rk4_step(batch, UNIT, 1e-3)
    for b in range(6):
        assert np.array_equal(got[:, b], rk4_step(batch[:, b], UNIT, 1e-3))


def test_one_step_energy_budget():
    state = random_initial_state(3, lam=4)
    stepped = rk4_step(state, UNIT, 1e-4)
    assert abs(energy(stepped) - 1.0) < 1e-10


def test_integrate_zero_params_is_identity():
    state = random_initial_state(4, lam=8)
    traj = integrate(state, TkdvParams(0.0, 0.0), IntegratorConfig(0.01, 0.1))
    for row in traj.states:
        assert np.array_equal(row, state)


def test_integrate_t_final_zero():
    state = random_initial_state(5, lam=4)
    traj = integrate(state, UNIT, IntegratorConfig(0.01, 0.0))
    assert traj.times.shape == (1,)
    assert traj.times[0] == 0.0
    assert np.array_equal(traj.states[0], state)


def test_integrate_sampling_grid():
    state = random_initial_state(6, lam=4)
    still = TkdvParams(0.0, 0.0)
    traj = integrate(state, still, IntegratorConfig(0.1, 1.0), sample_every=3)
    assert np.allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    with pytest.raises(ValueError):
        integrate(state, still, IntegratorConfig(0.1, 1.0), sample_every=0)


def test_integrate_semigroup_bit_identity():
    state = random_initial_state(7, lam=4)
    once = integrate(state, UNIT, IntegratorConfig(1e-3, 0.5),
                     sample_every=500)
    first = integrate(state, UNIT, IntegratorConfig(1e-3, 0.3),
                      sample_every=300)
    second = integrate(first.states[-1], UNIT, IntegratorConfig(1e-3, 0.2),
                       sample_every=200)
    assert np.array_equal(once.states[-1], second.states[-1])


def test_integrate_is_deterministic():
    state = random_initial_state(8, lam=8)
    a = integrate(state, UNIT, IntegratorConfig(1e-3, 0.2))
    b = integrate(state, UNIT, IntegratorConfig(1e-3, 0.2))
    assert np.array_equal(a.states, b.states)


def test_params_at_step_single_segment():
    state = random_initial_state(9, lam=4)
    traj = integrate(state, TkdvParams(0.5, 2.0), IntegratorConfig(0.01, 0.1))
    assert traj.segment_starts == (0,)
    assert tuple(traj.params_at_step(0)) == (0.5, 2.0)
    assert tuple(traj.params_at_step(5)) == (0.5, 2.0)


def test_blow_up_identifies_step():
    state = 10.0 * np.ones(16, dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(BlowUpError) as err:
            integrate(state, TkdvParams(0.0, 50.0),
                      IntegratorConfig(1.0, 10.0))
    assert err.value.step >= 1
    assert str(err.value.step) in str(err.value)


def test_convergence_slope_and_halving_factor():
    state = random_initial_state(41, lam=4)
    rows, slope = convergence_study(state, UNIT, 0.5,
                                    [4e-3, 2e-3, 1e-3], 5e-5)
    assert 3.5 < slope < 4.5
    errs = {dt: err for dt, err in rows}
    assert 12.0 <= errs[4e-3] / errs[2e-3] <= 20.0
    assert 12.0 <= errs[2e-3] / errs[1e-3] <= 20.0


def test_convergence_reference_must_be_fine():
    state = random_initial_state(42, lam=4)
    with pytest.raises(ValueError):
        convergence_study(state, UNIT, 0.5, [4e-3, 2e-3], 4e-4)


def test_convergence_blown_step_reported_as_inf():
    # c2=40 puts the mode-4 frequency outside the stability interval at the
    # coarsest rung only; its row must carry inf and stay out of the fit
    state = normalize(np.ones(4, dtype=np.complex128))
    with np.errstate(over="ignore", invalid="ignore"):
        rows, slope = convergence_study(state, TkdvParams(40.0, 0.0), 0.5,
                                        [4e-3, 1e-3, 5e-4], 4e-5)
    errs = dict(rows)
    assert np.isinf(errs[4e-3])
    assert np.isfinite(errs[1e-3]) and np.isfinite(errs[5e-4])
    assert np.isfinite(slope)


def test_convergence_needs_two_finite_rows():
    state = normalize(np.ones(4, dtype=np.complex128))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(RuntimeError):
            convergence_study(state, TkdvParams(40.0, 0.0), 0.5,
                              [4e-3, 2e-3], 1.6e-4)


def test_energy_conservation_over_seeds():
    for seed in range(1, 6):
        state = random_initial_state(seed, lam=4)
        traj = integrate(state, UNIT, IntegratorConfig(1e-4, 1.0),
                         sample_every=1000)
        drift = np.abs(np.asarray([energy(s) for s in traj.states]) - 1.0)
        assert drift.max() <= 1e-8


def test_hamiltonian_drift_series():
    state = random_initial_state(43, lam=4)
    traj = integrate(state, UNIT, IntegratorConfig(1e-4, 1.0),
                     sample_every=100)
    rows = hamiltonian_drift(traj, UNIT, report_every=0.1)
    assert np.allclose(rows[:, 0], np.arange(11) * 0.1)
    assert rows[0, 1] == 0.0
    assert rows[:, 1].max() <= 1e-6
    e_rows = energy_drift_series(traj, report_every=0.1)
    assert np.array_equal(e_rows[:, 0], rows[:, 0])
    assert e_rows[:, 1].max() <= 1e-8


def test_hamiltonian_drift_rejects_coarse_sampling():
    state = random_initial_state(44, lam=4)
    traj = integrate(state, UNIT, IntegratorConfig(1e-2, 1.0), sample_every=20)
    with pytest.raises(ValueError):
        hamiltonian_drift(traj, UNIT, report_every=0.1)
