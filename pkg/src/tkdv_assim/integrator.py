"""Time stepping and long-run diagnostics for the spectral system."""

from typing import NamedTuple

import numpy as np

from .spectral_tkdv import embed, energy, hamiltonian, tkdv_rhs


class IntegratorConfig(NamedTuple):
    dt: float
    t_final: float


class Trajectory(NamedTuple):
    """Sampled states of one integration.

    times has shape (n_samples,), states (n_samples, lam). params_used
    holds one coefficient pair per constant-parameter segment and
    segment_starts the sample index where each segment begins; the step
    leaving sample j belongs to the last segment opening at or before j.
    """

    times: np.ndarray
    states: np.ndarray
    params_used: np.ndarray
    segment_starts: tuple

    def params_at_step(self, step):
        """Coefficient pair governing the step out of sample index step."""
        s = np.searchsorted(np.asarray(self.segment_starts), step,
                            side="right") - 1
        return self.params_used[s]


class BlowUpError(RuntimeError):
    """Raised when the state stops being finite during integration."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state after step {step}")


def rk4_step(state, params, dt):
    """One classic Runge-Kutta step; works on single states and batches.

    A non-finite result is returned as-is: integrate turns it into a
    BlowUpError with the offending step, while the filter treats it as
    a vanishing likelihood for that particle.
    """
    k1 = tkdv_rhs(state, params)
    k2 = tkdv_rhs(state + 0.5 * dt * k1, params)
    k3 = tkdv_rhs(state + 0.5 * dt * k2, params)
    k4 = tkdv_rhs(state + dt * k3, params)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(state0, params, config, sample_every=1):
    """Integrate from t = 0 over round(t_final / dt) steps.

    Sample 0 is the initial state; every sample_every-th step is kept and
    the final state is always included even off the stride.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    dt = config.dt
    n_steps = int(round(config.t_final / dt))
    state = np.asarray(state0, dtype=np.complex128).copy()
    times = [0.0]
    states = [state.copy()]
    for step in range(1, n_steps + 1):
        state = rk4_step(state, params, dt)
        if not np.all(np.isfinite(state.view(np.float64))):
            raise BlowUpError(step)
        if step % sample_every == 0 or step == n_steps:
            times.append(step * dt)
            states.append(state.copy())
    params_arr = np.asarray(params, dtype=np.float64)[None, :]
    return Trajectory(np.asarray(times), np.asarray(states), params_arr, (0,))


def convergence_study(state0, params, t_final, dt_list, dt_reference):
    """Endpoint error against a fine reference run, per step size.

    The error is the sup-norm distance between real embeddings at
    t_final. Returns (rows, slope): rows of (dt, error) and the
    least-squares slope of log error against log dt. A step size that
    blows up gets error = inf and is excluded from the fit.
    """
    dt_list = sorted(float(dt) for dt in dt_list)
    if not dt_reference < min(dt_list) / 10.0:
        raise ValueError(
            "reference step must be below a tenth of the finest step")
    ref = embed(_final_state(state0, params, t_final, dt_reference))
    rows = []
    for dt in dt_list:
        try:
            final = embed(_final_state(state0, params, t_final, dt))
            err = float(np.max(np.abs(final - ref)))
        except BlowUpError:
            err = np.inf
        rows.append((dt, err))
    good = [(dt, err) for dt, err in rows if np.isfinite(err) and err > 0]
    if len(good) < 2:
        raise RuntimeError("too few finite errors to fit a slope")
    log_dt = np.log([dt for dt, _ in good])
    log_err = np.log([err for _, err in good])
    slope = float(np.polyfit(log_dt, log_err, 1)[0])
    return rows, slope


def _final_state(state0, params, t_final, dt):
    traj = integrate(state0, params, IntegratorConfig(dt, t_final),
                     sample_every=max(1, int(round(t_final / dt))))
    return traj.states[-1]


def _report_indices(times, report_every):
    """Sample indices spaced report_every time units apart, plus the end."""
    n = times.size
    if report_every is None or n < 3:
        idx = list(range(n))
    else:
        spacing = times[1] - times[0]
        if spacing > report_every * (1.0 + 1e-9):
            raise ValueError(
                "trajectory is sampled more coarsely than the report "
                "interval")
        stride = max(1, int(round(report_every / spacing)))
        idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def hamiltonian_drift(trajectory, params, report_every=None):
    """Series of (time, |H(t) - H(0)|) every report_every time units.

    The final sample is always reported. As a guard against a lucky
    cancellation at the endpoint, the final drift must be at least a
    tenth of the maximum over the series; otherwise the endpoint would
    not represent the accumulated loss and this raises instead.
    """
    idx = _report_indices(trajectory.times, report_every)
    h0 = hamiltonian(trajectory.states[0], params)
    rows = np.empty((len(idx), 2))
    for r, i in enumerate(idx):
        h = hamiltonian(trajectory.states[i], params)
        rows[r] = (trajectory.times[i], abs(h - h0))
    max_drift = rows[:, 1].max()
    if max_drift > 0 and rows[-1, 1] < max_drift / 10.0:
        raise RuntimeError(
            "hamiltonian drift at the endpoint is far below its maximum; "
            "lengthen the run or report more often")
    return rows


def energy_drift_series(trajectory, report_every=None):
    """Series of (time, |E(t) - E(0)|) on the same grid as the drift rows."""
    idx = _report_indices(trajectory.times, report_every)
    e = np.asarray([energy(trajectory.states[i]) for i in idx])
    return np.column_stack([trajectory.times[idx], np.abs(e - e[0])])
