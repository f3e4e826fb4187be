"""Particle filter acting directly on model parameters.

The parameter vector theta gets pseudo random-walk dynamics (a jitter with
diagonal covariance) and is weighted by how well the one-step model map
carries the previous observation onto the next one. No hidden state is
estimated; the previous observation stands in for it.

All randomness is drawn from counter-based streams keyed by the ensemble's
seed tuple, its cycle counter, and a fixed channel per operation (0 init,
1 jitter, 2 resampling), so results are reproducible regardless of batch
size or evaluation order.
"""

from typing import NamedTuple, Optional

import numpy as np

from .rng import as_key, stream


class JitterSpec(NamedTuple):
    """Diagonal covariance of the parameter random walk, stored as variances."""

    variances: tuple


class EstimatorConfig(NamedTuple):
    """burn_in: leading steps discarded; window: trailing-average length.

    window None selects the cumulative mean of everything after burn_in.
    """

    burn_in: int = 0
    window: Optional[int] = None


class ParticleEnsemble(NamedTuple):
    """particles: (M, p) parameter samples with weights summing to one.

    seed is the integer key tuple of the ensemble's random streams and
    step counts completed predict-update-resample cycles; together they
    fix every draw the filter will make.
    """

    particles: np.ndarray
    weights: np.ndarray
    seed: tuple
    step: int


class DegenerateUpdateError(RuntimeError):
    """Every particle likelihood vanished; model and data are inconsistent."""


def init_ensemble(prior_center, prior_spread, m_particles, seed):
    """Gaussian prior ensemble with uniform weights."""
    center = np.atleast_1d(np.asarray(prior_center, dtype=np.float64))
    spread = np.atleast_1d(np.asarray(prior_spread, dtype=np.float64))
    if center.shape != spread.shape:
        raise ValueError("prior center and spread must have the same length")
    if np.any(spread < 0):
        raise ValueError("prior spreads must be nonnegative")
    if m_particles < 2:
        raise ValueError("need at least two particles")
    key = as_key(seed)
    rng = stream(*key, 0, 0)
    particles = center + spread * rng.standard_normal((m_particles, center.size))
    weights = np.full(m_particles, 1.0 / m_particles)
    return ParticleEnsemble(particles, weights, key, 0)


def predict(ensemble, jitter, seed=None, clamp_positive=False):
    """Move every particle by an independent draw from the jitter law.

    Weights are untouched. With clamp_positive the moved particles are
    reflected at zero, for models whose parameters cannot change sign.
    """
    variances = np.asarray(jitter.variances, dtype=np.float64)
    if np.any(variances < 0):
        raise ValueError("jitter variances must be nonnegative")
    if seed is None:
        rng = stream(*ensemble.seed, ensemble.step, 1)
    else:
        rng = stream(*as_key(seed), 1)
    moved = ensemble.particles + (
        np.sqrt(variances) * rng.standard_normal(ensemble.particles.shape))
    if clamp_positive:
        moved = np.abs(moved)
    return ensemble._replace(particles=moved)


def _log_likelihoods(r_cov, residuals):
    """-1/2 r^T R^-1 r per row; rows with non-finite entries map to -inf."""
    out = np.full(residuals.shape[0], -np.inf)
    finite = np.all(np.isfinite(residuals), axis=1)
    if np.any(finite):
        r = residuals[finite]
        sol = np.linalg.solve(r_cov, r.T)
        out[finite] = -0.5 * np.sum(r.T * sol, axis=0)
    return out


def log_likelihood(model, theta, prev_obs, next_obs):
    """Log observation likelihood of one parameter vector."""
    pred = np.asarray(model.predict_observation(prev_obs, theta),
                      dtype=np.float64)
    resid = pred - np.asarray(next_obs, dtype=np.float64)
    return float(_log_likelihoods(model.obs_noise_covariance,
                                  resid[None, :])[0])


def update(ensemble, model, prev_obs, next_obs):
    """Reweight the ensemble by the observation likelihood of each particle.

    Weights are combined in the log domain with the maximum subtracted
    before exponentiating, then normalized. If even the best particle has
    no likelihood left the update is degenerate and raises instead of
    silently resetting.
    """
    batch = getattr(model, "predict_observation_batch", None)
    if batch is not None:
        preds = np.asarray(batch(prev_obs, ensemble.particles),
                           dtype=np.float64)
    else:
        preds = np.empty((ensemble.particles.shape[0], model.dim_obs))
        for m in range(preds.shape[0]):
            preds[m] = model.predict_observation(prev_obs,
                                                 ensemble.particles[m])
    resid = preds - np.asarray(next_obs, dtype=np.float64)
    loglik = _log_likelihoods(model.obs_noise_covariance, resid)
    with np.errstate(divide="ignore"):
        logw = loglik + np.log(ensemble.weights)
    peak = np.max(logw)
    if not np.isfinite(peak):
        raise DegenerateUpdateError(
            "all particle likelihoods vanished; check the model against "
            "the observations")
    w = np.exp(logw - peak)
    return ensemble._replace(weights=w / np.sum(w))


def resample(ensemble, seed=None):
    """Systematic resampling to uniform weights.

    One uniform draw places M equally spaced positions on the weight
    cumulative; particle m is copied once per position falling in its
    interval, so copy counts stay within one of M * weight. Uniform
    input weights reproduce the ensemble unchanged. Advances the cycle
    counter.
    """
    if seed is None:
        rng = stream(*ensemble.seed, ensemble.step, 2)
    else:
        rng = stream(*as_key(seed), 2)
    m = ensemble.weights.size
    positions = (rng.random() + np.arange(m)) / m
    cdf = np.cumsum(ensemble.weights)
    idx = np.minimum(np.searchsorted(cdf, positions, side="right"), m - 1)
    return ParticleEnsemble(ensemble.particles[idx], np.full(m, 1.0 / m),
                            ensemble.seed, ensemble.step + 1)


def assimilation_step(ensemble, model, jitter, prev_obs, next_obs, seed=None):
    """One predict-update-resample cycle.

    Returns the resampled ensemble and the weighted posterior mean, which
    is recorded before resampling so it carries no resampling noise.
    """
    predicted = predict(ensemble, jitter, seed=seed,
                        clamp_positive=getattr(model, "clamp_positive", False))
    weighted = update(predicted, model, prev_obs, next_obs)
    posterior_mean = weighted.weights @ weighted.particles
    return resample(weighted, seed=seed), posterior_mean


def run_filter(model, ensemble, observations, jitter):
    """Assimilate consecutive observation pairs; returns (means, ensemble).

    means[n] is the posterior mean produced by the cycle that consumed
    observations n and n + 1. Every configured experiment, whatever the
    model, goes through this loop.
    """
    obs = np.asarray(observations, dtype=np.float64)
    n_steps = obs.shape[0] - 1
    means = np.empty((n_steps, ensemble.particles.shape[1]))
    for n in range(n_steps):
        ensemble, means[n] = assimilation_step(ensemble, model, jitter,
                                               obs[n], obs[n + 1])
    return means, ensemble


def running_estimate(posterior_means, config):
    """Time-average the posterior means after a burn-in.

    Without a window: cumulative means of the post-burn-in entries. With
    window W: trailing average of the last W entries, the shorter prefix
    averaged over what is available. Output aligns with the post-burn-in
    part of the input and is empty when burn_in swallows everything.
    """
    arr = np.asarray(posterior_means, dtype=np.float64)
    if arr.shape[0] == 0:
        raise ValueError("posterior_means must be nonempty")
    if config.burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    if config.window is not None and config.window < 1:
        raise ValueError("window must be a positive integer")
    x = arr[config.burn_in:]
    n = x.shape[0]
    if n == 0:
        return x.copy()
    cs = np.cumsum(x, axis=0)
    counts = np.arange(1.0, n + 1.0)
    if x.ndim == 2:
        counts = counts[:, None]
    out = cs / counts
    w = config.window
    if w is not None and n > w:
        out[w:] = (cs[w:] - cs[:-w]) / w
    return out
