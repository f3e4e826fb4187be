"""Experiment assemblies around the spectral solver and the parameter filter.

Covers synthetic truth generation over depth schedules, noisy observation
of the embedded modes, the adapters that expose the one-step solver map
and a two-dimensional toy system to the filter, running-estimate wiring,
depth-change detection, and multi-region physical fields.
"""

from typing import NamedTuple

import numpy as np

from .direct_filter import (JitterSpec, init_ensemble, run_filter,
                            running_estimate)
from .integrator import BlowUpError, Trajectory, rk4_step
from .rng import as_key, stream
from .spectral_tkdv import (DEFAULT_CONSTANTS, DEFAULT_LAM, DepthConstants,
                            TkdvParams, coefficients_from_depth, embed,
                            random_initial_state, to_physical, unembed)


class DepthSchedule(NamedTuple):
    """Piecewise-constant depth ratio: ordered (duration, depth) segments."""

    segments: tuple
    constants: DepthConstants = DEFAULT_CONSTANTS

    def segment_params(self):
        return tuple((float(t), coefficients_from_depth(d, self.constants))
                     for t, d in self.segments)


class CoefficientSchedule(NamedTuple):
    """Segments carrying explicit (c2, c3) pairs instead of depths."""

    segments: tuple

    def segment_params(self):
        return tuple((float(t), TkdvParams(float(p[0]), float(p[1])))
                     for t, p in self.segments)


class ObservationSeries(NamedTuple):
    times: np.ndarray
    observations: np.ndarray
    obs_matrix: np.ndarray
    obs_noise_std: object


class FieldBlock(NamedTuple):
    """Physical-space samples of one schedule segment: times and (t, x) values."""

    times: np.ndarray
    values: np.ndarray


def generate_tkdv_truth(schedule, dt, seed, state_noise_std=1e-3,
                        sample_every=1, initial_state=None, lam=DEFAULT_LAM):
    """Integrate a schedule of constant-coefficient segments, chaining states.

    The initial state is drawn from the unit-energy Gaussian ensemble
    unless one is supplied. After every step an independent Gaussian
    perturbation of the given std is added to each real-embedded
    component. Samples are taken every sample_every steps plus at every
    segment boundary and at the end. params_used holds one coefficient
    pair per segment and segment_starts the sample index opening each
    segment, so the step leaving a boundary sample already belongs to
    the new segment.
    """
    seg_list = list(schedule.segment_params())
    if not seg_list:
        raise ValueError("schedule needs at least one segment")
    if any(t <= 0 for t, _ in seg_list):
        raise ValueError("segment durations must be positive")
    if state_noise_std < 0:
        raise ValueError("state noise std must be nonnegative")
    key = as_key(seed)
    if initial_state is None:
        state = random_initial_state((*key, 0), lam)
    else:
        state = np.asarray(initial_state, dtype=np.complex128).copy()
    lam = state.shape[0]
    noise_rng = stream(*key, 1)
    times = [0.0]
    states = [state.copy()]
    segment_starts = [0]
    global_step = 0
    for s, (duration, params) in enumerate(seg_list):
        n_steps = int(round(duration / dt))
        if n_steps < 1:
            raise ValueError(f"segment {s} is shorter than one step")
        if s > 0:
            segment_starts.append(len(times) - 1)
        for j in range(1, n_steps + 1):
            state = rk4_step(state, params, dt)
            if state_noise_std > 0:
                state = unembed(embed(state) + state_noise_std
                                * noise_rng.standard_normal(2 * lam))
            global_step += 1
            if not np.all(np.isfinite(state.view(np.float64))):
                raise BlowUpError(global_step)
            if global_step % sample_every == 0 or j == n_steps:
                times.append(global_step * dt)
                states.append(state.copy())
    params_arr = np.asarray([p for _, p in seg_list], dtype=np.float64)
    return Trajectory(np.asarray(times), np.asarray(states), params_arr,
                      tuple(segment_starts))


def _check_invertible(h_matrix, dim):
    h = np.asarray(h_matrix, dtype=np.float64)
    if h.shape != (dim, dim):
        raise ValueError(f"observation matrix must be {dim}x{dim}")
    if np.linalg.cond(h) > 1e12:
        raise ValueError("observation matrix is singular or near-singular")
    return h


def observe(trajectory, h_matrix, obs_noise_std, seed):
    """Apply the observation matrix to embedded states and add Gaussian noise."""
    lam = trajectory.states.shape[1]
    h = _check_invertible(h_matrix, 2 * lam)
    if obs_noise_std < 0:
        raise ValueError("observation noise std must be nonnegative")
    clean = (h @ embed(trajectory.states.T)).T
    if obs_noise_std > 0:
        rng = stream(*as_key(seed))
        obs = clean + obs_noise_std * rng.standard_normal(clean.shape)
    else:
        obs = clean
    return ObservationSeries(trajectory.times.copy(), obs, h,
                             float(obs_noise_std))


def _covariance_from_spec(r_spec, dim):
    r = np.asarray(r_spec, dtype=np.float64)
    if r.ndim == 0:
        r = float(r) * np.eye(dim)
    elif r.ndim == 1:
        if r.size != dim:
            raise ValueError("diagonal covariance has the wrong length")
        r = np.diag(r)
    elif r.shape != (dim, dim):
        raise ValueError(f"covariance must be {dim}x{dim}")
    if not np.allclose(r, r.T, rtol=1e-12, atol=0.0):
        raise ValueError("covariance must be symmetric")
    try:
        np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        raise ValueError("covariance must be positive definite") from None
    return r


class TkdvParameterModel:
    """One-step solver flow in observation space, parameterized by (c2, c3).

    predict_observation maps the previous observation back to mode space,
    advances it one step with the candidate coefficients, and re-applies
    the observation matrix. The batch variant advances all particles at
    once; each column is bit-identical to the corresponding single call.
    """

    def __init__(self, h_matrix, r_cov, dt, lam, clamp_positive=False):
        self.lam = int(lam)
        self.dim_state = 2 * self.lam
        self.dim_obs = 2 * self.lam
        self.dim_param = 2
        self.h_matrix = _check_invertible(h_matrix, self.dim_obs)
        self.h_inv = np.linalg.inv(self.h_matrix)
        self.obs_noise_covariance = _covariance_from_spec(r_cov, self.dim_obs)
        self.dt = float(dt)
        self.clamp_positive = bool(clamp_positive)

    def predict_observation(self, prev_obs, theta):
        state = unembed(self.h_inv @ np.asarray(prev_obs, dtype=np.float64))
        params = TkdvParams(float(theta[0]), float(theta[1]))
        return self.h_matrix @ embed(rk4_step(state, params, self.dt))

    def predict_observation_batch(self, prev_obs, thetas):
        state = unembed(self.h_inv @ np.asarray(prev_obs, dtype=np.float64))
        th = np.asarray(thetas, dtype=np.float64)
        params = TkdvParams(th[:, 0], th[:, 1])
        advanced = rk4_step(state[:, None], params, self.dt)
        return (self.h_matrix @ embed(advanced)).T


def tkdv_parameter_model(h_matrix, r_spec, dt, lam, clamp_positive=False):
    """Build the solver-backed parameter model; r_spec may be a scalar
    variance, a diagonal, or a full covariance matrix."""
    return TkdvParameterModel(h_matrix, r_spec, dt, lam, clamp_positive)


class FilterConfig(NamedTuple):
    """Filter knobs of an estimation run: ensemble size, jitter stds,
    Gaussian prior, and the seed every stream of the run derives from."""

    m_particles: int = 2000
    jitter_sd: tuple = (0.3, 0.017)
    prior_center: tuple = (DEFAULT_CONSTANTS.c2, DEFAULT_CONSTANTS.c3)
    prior_spread: tuple = (0.1, 0.5)
    seed: object = 1


class EstimationResult(NamedTuple):
    """times covers the observation instants; the per-step arrays start at
    the first assimilated pair, so row n belongs to times[n + 1]. running
    and depth_running are NaN before the burn-in ends."""

    times: np.ndarray
    posterior_means: np.ndarray
    running: np.ndarray
    depth_running: np.ndarray
    final_theta: np.ndarray
    final_depth: float


def depth_series_from_c2(c2_series, constants=DEFAULT_CONSTANTS):
    """Depth ratios implied by a series of c2 estimates; NaN where c2 <= 0."""
    c2 = np.asarray(c2_series, dtype=np.float64)
    out = np.full(c2.shape, np.nan)
    pos = c2 > 0
    out[pos] = (c2[pos] / constants.c2) ** 2
    return out


def run_estimation_experiment(schedule, filter_config, estimator, dt,
                              obs_noise_std, state_noise_std=1e-3,
                              h_matrix=None, clamp_positive=False,
                              lam=DEFAULT_LAM):
    """Full pipeline: truth, observations, filter loop, running estimates.

    The depth series is derived from the c2 component alone. The truth,
    the observation noise, and the filter draw from disjoint streams under
    filter_config.seed, so one integer reproduces the whole run.
    """
    key = as_key(filter_config.seed)
    traj = generate_tkdv_truth(schedule, dt, (*key, 0), state_noise_std,
                               lam=lam)
    lam = traj.states.shape[1]
    h = np.eye(2 * lam) if h_matrix is None else h_matrix
    series = observe(traj, h, obs_noise_std, (*key, 2))
    r_var = obs_noise_std ** 2 + state_noise_std ** 2
    model = TkdvParameterModel(h, r_var, dt, lam, clamp_positive)
    ensemble = init_ensemble(filter_config.prior_center,
                             filter_config.prior_spread,
                             filter_config.m_particles, (*key, 3))
    jitter = JitterSpec(tuple(s ** 2 for s in filter_config.jitter_sd))
    means, _ = run_filter(model, ensemble, series.observations, jitter)
    n = means.shape[0]
    if estimator.burn_in >= n:
        raise ValueError("burn-in swallows the whole run")
    running = np.full((n, means.shape[1]), np.nan)
    running[estimator.burn_in:] = running_estimate(means, estimator)
    constants = getattr(schedule, "constants", DEFAULT_CONSTANTS)
    depth_running = depth_series_from_c2(running[:, 0], constants)
    return EstimationResult(series.times, means, running, depth_running,
                            running[-1].copy(), float(depth_running[-1]))


def detect_depth_changes(running_d, levels, hysteresis, times=None, warmup=0):
    """Assign the running depth to the nearest candidate level and report
    level switches.

    A switch to a new level is reported once the series has sat nearest
    that level, past the midpoint to the current one, for hysteresis
    consecutive samples; the reported time is the confirming sample's.
    Non-finite samples (burn-in, negative c2 estimates) reset the pending
    count. The first warmup samples are skipped entirely, so estimates
    from a partially filled window do not trigger spurious changes.
    Returns a list of (time, new_level) pairs; without times the sample
    index stands in for the time.
    """
    d = np.asarray(running_d, dtype=np.float64)
    if d.size == 0:
        raise ValueError("need a nonempty depth series")
    levels = sorted(float(l) for l in levels)
    if len(levels) < 2:
        raise ValueError("need at least two candidate levels")
    if hysteresis < 1:
        raise ValueError("hysteresis must be a positive integer")
    level_arr = np.asarray(levels)
    current = None
    pending = None
    count = 0
    changes = []
    for i in range(int(warmup), d.size):
        v = d[i]
        if not np.isfinite(v):
            pending = None
            count = 0
            continue
        nearest = levels[int(np.argmin(np.abs(level_arr - v)))]
        if current is None:
            current = nearest
            continue
        if nearest == current:
            pending = None
            count = 0
            continue
        if pending == nearest:
            count += 1
        else:
            pending = nearest
            count = 1
        if count >= hysteresis:
            when = i if times is None else float(np.asarray(times)[i])
            changes.append((when, nearest))
            current = nearest
            pending = None
            count = 0
    return changes


class ToyModelSpec(NamedTuple):
    """Two-dimensional drift recursion with four unknown coefficients.

    Component one moves by a1 * sin(x2) + a2 * x1 / (1 + |x1|), component
    two by a3 * cos(x1) + a4 * x2 / (1 + |x2|), each times dt, plus
    sqrt(dt)-scaled Gaussian noise. Observed through a diagonal matrix
    with additive noise sigma_y; sigma3 is the filter's random-walk std
    for all four coefficients.
    """

    a: tuple = (4.0, 2.0, 3.0, 5.0)
    sigma: tuple = (0.1, 0.1)
    dt: float = 0.05
    h_diag: tuple = (5.0, 3.0)
    sigma_y: tuple = (0.1, 0.1)
    sigma3: float = 0.1

    def h_matrix(self):
        return np.diag(np.asarray(self.h_diag, dtype=np.float64))


def _validate_toy_spec(spec):
    if spec.dt <= 0:
        raise ValueError("toy dt must be positive")
    if any(s < 0 for s in spec.sigma) or any(s < 0 for s in spec.sigma_y):
        raise ValueError("toy noise stds must be nonnegative")
    if spec.sigma3 < 0:
        raise ValueError("toy random-walk std must be nonnegative")


def _toy_drift_step(x1, x2, a, dt):
    # shared by truth generation and the model adapter on purpose
    n1 = x1 + (a[0] * np.sin(x2) + a[1] * (x1 / (1.0 + np.abs(x1)))) * dt
    n2 = x2 + (a[2] * np.cos(x1) + a[3] * (x2 / (1.0 + np.abs(x2)))) * dt
    return n1, n2


def toy_truth_and_observations(spec, n_steps, seed, x0=(0.0, 0.0)):
    """Simulate the toy recursion and observe every state, including x0."""
    _validate_toy_spec(spec)
    key = as_key(seed)
    state_rng = stream(*key, 0)
    obs_rng = stream(*key, 1)
    sig = np.asarray(spec.sigma, dtype=np.float64)
    x = np.asarray(x0, dtype=np.float64).copy()
    states = [x.copy()]
    root_dt = np.sqrt(spec.dt)
    for _ in range(int(n_steps)):
        n1, n2 = _toy_drift_step(x[0], x[1], spec.a, spec.dt)
        x = np.asarray([n1, n2]) + root_dt * sig * state_rng.standard_normal(2)
        states.append(x.copy())
    states = np.asarray(states)
    h = spec.h_matrix()
    clean = states @ h.T
    obs = clean + np.asarray(spec.sigma_y) * obs_rng.standard_normal(clean.shape)
    times = spec.dt * np.arange(n_steps + 1)
    return ObservationSeries(times, obs, h, tuple(spec.sigma_y))


class ToyParameterModel:
    """Toy drift map in observation space, parameterized by the four
    coefficients. Signs are unknown a priori, so no positivity clamp."""

    def __init__(self, spec):
        _validate_toy_spec(spec)
        self.spec = spec
        self.dim_state = 2
        self.dim_obs = 2
        self.dim_param = 4
        self.h_matrix = spec.h_matrix()
        self.h_inv = np.linalg.inv(self.h_matrix)
        var = ((np.asarray(spec.h_diag) * np.asarray(spec.sigma)) ** 2
               * spec.dt + np.asarray(spec.sigma_y) ** 2)
        self.obs_noise_covariance = _covariance_from_spec(var, 2)
        self.clamp_positive = False

    def predict_observation(self, prev_obs, theta):
        x = self.h_inv @ np.asarray(prev_obs, dtype=np.float64)
        n1, n2 = _toy_drift_step(x[0], x[1], np.asarray(theta, np.float64),
                                 self.spec.dt)
        return self.h_matrix @ np.asarray([n1, n2])

    def predict_observation_batch(self, prev_obs, thetas):
        x = self.h_inv @ np.asarray(prev_obs, dtype=np.float64)
        th = np.asarray(thetas, dtype=np.float64)
        n1, n2 = _toy_drift_step(x[0], x[1],
                                 (th[:, 0], th[:, 1], th[:, 2], th[:, 3]),
                                 self.spec.dt)
        return np.stack([n1, n2], axis=1) @ self.h_matrix.T


def toy_parameter_model(spec):
    return ToyParameterModel(spec)


class ToyExperimentResult(NamedTuple):
    times: np.ndarray
    posterior_means: np.ndarray
    running: np.ndarray
    final_theta: np.ndarray


def run_toy_experiment(spec, n_steps, m_particles, prior_center, prior_spread,
                       estimator, seed):
    """Toy pipeline through the same filter loop as the solver experiments."""
    key = as_key(seed)
    series = toy_truth_and_observations(spec, n_steps, key)
    model = ToyParameterModel(spec)
    ensemble = init_ensemble(prior_center, prior_spread, m_particles,
                             (*key, 2))
    jitter = JitterSpec((spec.sigma3 ** 2,) * 4)
    means, _ = run_filter(model, ensemble, series.observations, jitter)
    n = means.shape[0]
    if estimator.burn_in >= n:
        raise ValueError("burn-in swallows the whole run")
    running = np.full((n, 4), np.nan)
    running[estimator.burn_in:] = running_estimate(means, estimator)
    return ToyExperimentResult(series.times, means, running,
                               running[-1].copy())


def multi_region_field(schedule, dt, n_grid, sample_every, seed,
                       initial_state=None, lam=DEFAULT_LAM):
    """Physical-space fields of a noiseless schedule run, one block per
    segment. A segment's opening boundary sample belongs to its block."""
    traj = generate_tkdv_truth(schedule, dt, seed, state_noise_std=0.0,
                               sample_every=sample_every,
                               initial_state=initial_state, lam=lam)
    bounds = traj.segment_starts + (traj.times.size,)
    blocks = []
    for s in range(len(bounds) - 1):
        rows = traj.states[bounds[s]:bounds[s + 1]]
        field = np.stack([to_physical(st, n_grid) for st in rows])
        blocks.append(FieldBlock(traj.times[bounds[s]:bounds[s + 1]].copy(),
                                 field))
    return blocks
