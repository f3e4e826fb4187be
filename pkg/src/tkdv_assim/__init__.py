"""Truncated KdV spectral solver with online coefficient estimation.

A Galerkin-truncated KdV system whose dispersive and nonlinear
coefficients follow a depth ratio, a particle filter that estimates those
coefficients directly from noisy observations of the modes, and the
experiment assemblies built on both.
"""

from .direct_filter import (DegenerateUpdateError, EstimatorConfig,
                            JitterSpec, ParticleEnsemble, assimilation_step,
                            init_ensemble, log_likelihood, predict, resample,
                            run_filter, running_estimate, update)
from .integrator import (BlowUpError, IntegratorConfig, Trajectory,
                         convergence_study, energy_drift_series,
                         hamiltonian_drift, integrate,
                         rk4_step)
from .scenarios import (CoefficientSchedule, DepthSchedule, EstimationResult,
                        FieldBlock, FilterConfig, ObservationSeries,
                        ToyExperimentResult, ToyModelSpec,
                        TkdvParameterModel, ToyParameterModel,
                        depth_series_from_c2, detect_depth_changes,
                        generate_tkdv_truth, multi_region_field, observe,
                        run_estimation_experiment, run_toy_experiment,
                        tkdv_parameter_model, toy_parameter_model,
                        toy_truth_and_observations)
from .spectral_tkdv import (DEFAULT_CONSTANTS, DEFAULT_LAM, DepthConstants,
                            TkdvParams, coefficients_from_depth,
                            convolution_sum, depth_from_c2, embed, energy,
                            hamiltonian, momentum, normalize, physical_grid,
                            random_initial_state, tkdv_rhs, to_physical,
                            unembed)

__version__ = "0.1.0"
