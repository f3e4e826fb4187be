"""Named experiment configurations.

Each preset is a plain JSON-serializable dict accepted by the runner.
`fast_overrides` holds per-preset key replacements that shrink the heavy
runs to smoke-test size without touching their structure.
"""

import copy

PRESETS = {
    # solver diagnostics run at lam = 4: with unit coefficients the
    # mode-16 dispersive frequency puts the coarse end of the step ladder
    # outside the RK4 stability interval, and even the stable steps
    # dissipate mode-16 energy orders of magnitude above the drift budget
    "convergence": {
        "kind": "convergence",
        "lam": 4,
        "c2": 1.0,
        "c3": 1.0,
        "t_final": 1.0,
        "dt_list": [0.01, 0.005, 0.0025, 0.00125],
        "dt_reference": 1e-05,
        "seed": 1,
    },
    "hamiltonian-drift": {
        "kind": "hamiltonian",
        "lam": 4,
        "c2": 1.0,
        "c3": 1.0,
        "t_final": 5.0,
        "dt": 0.0001,
        "sample_every": 10,
        "report_every": 0.1,
        "seed": 1,
    },
    "c2-baseline": {
        "kind": "estimate",
        "lam": 16,
        "depths": [0.24],
        "segment_duration": 0.25,
        "dt": 0.0001,
        "m_particles": 2000,
        "jitter_sd": [0.3, 0.017],
        "obs_noise_std": 0.01,
        "state_noise_std": 0.001,
        "prior_center": [0.0236, 0.1965],
        "prior_spread": [0.1, 0.5],
        "burn_in": 400,
        "window": None,
        "seed": 1,
    },
    # the nonlinear coefficient moves the one-step map only through
    # c3 * dt, so its long run uses a larger step and jitter to make the
    # likelihood sensitive to c3 within 4000 assimilation steps
    "c3-longrun": {
        "kind": "estimate",
        "lam": 16,
        "depths": [0.24],
        "segment_duration": 20.0,
        "dt": 0.005,
        "m_particles": 2000,
        "jitter_sd": [0.3, 0.8],
        "obs_noise_std": 0.01,
        "state_noise_std": 0.001,
        "prior_center": [0.0236, 0.1965],
        "prior_spread": [0.1, 0.5],
        "burn_in": 1000,
        "window": None,
        "seed": 1,
    },
    # the depth sweep runs twice as long as the single-depth baseline:
    # at the shallowest depth the posterior leaves the prior neighborhood
    # slowly and the cumulative mean needs the extra tail to settle
    "table1": {
        "kind": "estimate",
        "lam": 16,
        "depths": [1.0, 0.42, 0.24, 0.14],
        "segment_duration": 0.5,
        "dt": 0.0001,
        "m_particles": 2000,
        "jitter_sd": [0.3, 0.017],
        "obs_noise_std": 0.01,
        "state_noise_std": 0.001,
        "prior_center": [0.0236, 0.1965],
        "prior_spread": [0.1, 0.5],
        "burn_in": 1000,
        "window": None,
        "seed": 1,
    },
    "one-step": {
        "kind": "detect",
        "lam": 16,
        "schedule": [[1.2, 0.42], [1.2, 0.24]],
        "dt": 0.0001,
        "m_particles": 2000,
        "jitter_sd": [0.3, 0.017],
        "obs_noise_std": 0.01,
        "state_noise_std": 0.001,
        "prior_center": [0.0236, 0.1965],
        "prior_spread": [0.1, 0.5],
        "burn_in": 0,
        "window": 3500,
        "warmup": 3500,
        "hysteresis": 10,
        "levels": [0.42, 0.24],
        "seed": 1,
    },
    "multi-step": {
        "kind": "detect",
        "lam": 16,
        "schedule": [[1.2, 1.0], [1.2, 0.24], [1.2, 0.15], [1.2, 0.42]],
        "dt": 0.0001,
        "m_particles": 2000,
        "jitter_sd": [0.25, 0.01],
        "obs_noise_std": 0.01,
        "state_noise_std": 0.001,
        "prior_center": [0.0236, 0.1965],
        "prior_spread": [0.1, 0.5],
        "burn_in": 0,
        "window": 3500,
        "warmup": 3500,
        "hysteresis": 10,
        "levels": [1.0, 0.24, 0.15, 0.42],
        "seed": 1,
    },
    "toy-appendix": {
        "kind": "toy",
        "a": [4.0, 2.0, 3.0, 5.0],
        "sigma": [0.1, 0.1],
        "dt": 0.05,
        "h_diag": [5.0, 3.0],
        "sigma_y": [0.1, 0.1],
        "sigma3": 0.1,
        "n_steps": 400,
        "m_particles": 2000,
        "prior_center": [0.0, 0.0, 0.0, 0.0],
        "prior_spread": [5.0, 5.0, 5.0, 5.0],
        "burn_in": 100,
        "window": None,
        "seed": 1,
    },
    "heatmap-sweep": {
        "kind": "heatmap",
        "lam": 16,
        "coefficient_segments": [[0.5, [4.0, 0.0]], [0.5, [3.0, 1.0]],
                                 [0.5, [2.0, 8.0]], [0.5, [3.0, 18.0]]],
        "dt": 5e-05,
        "n_grid": 129,
        "sample_every": 100,
        "seed": 1,
    },
    # depth-step variant of the heatmap; the third region's 0.14 follows
    # the step-ratio narrative while multi-step's schedule uses 0.15, and
    # both stay available rather than picking one
    "heatmap-steps": {
        "kind": "heatmap",
        "lam": 16,
        "depth_segments": [[5.0, 1.0], [5.0, 0.24], [5.0, 0.14],
                           [5.0, 0.42]],
        "dt": 0.0001,
        "n_grid": 129,
        "sample_every": 500,
        "seed": 1,
    },
}

FAST_OVERRIDES = {
    "convergence": {"dt_reference": 0.0001},
    "hamiltonian-drift": {"t_final": 0.5},
    "c2-baseline": {"segment_duration": 0.05, "burn_in": 100},
    "c3-longrun": {"segment_duration": 2.5, "burn_in": 100},
    "table1": {"depths": [0.24], "segment_duration": 0.05, "burn_in": 100},
    "one-step": {"dt": 0.001, "window": 350, "warmup": 350, "hysteresis": 5},
    "multi-step": {"dt": 0.0005, "window": 700, "warmup": 700},
    "toy-appendix": {},
    "heatmap-sweep": {"coefficient_segments": [[0.1, [4.0, 0.0]],
                                               [0.1, [3.0, 1.0]],
                                               [0.1, [2.0, 8.0]],
                                               [0.1, [3.0, 18.0]]]},
    "heatmap-steps": {"depth_segments": [[1.0, 1.0], [1.0, 0.24],
                                         [1.0, 0.14], [1.0, 0.42]],
                      "sample_every": 100},
}


def preset_names():
    return list(PRESETS)


def preset(name, fast=False):
    """Deep copy of a named configuration, optionally shrunk for smoke runs."""
    if name not in PRESETS:
        known = ", ".join(preset_names())
        raise KeyError(f"unknown preset {name!r}; available: {known}")
    config = copy.deepcopy(PRESETS[name])
    if fast:
        config.update(copy.deepcopy(FAST_OVERRIDES[name]))
    return config
