"""Solver sanity checks: step-size convergence and invariant drift.

Integrates a random unit-energy state at a ladder of step sizes against a
much finer reference, fits the observed order, and tracks how far the
Hamiltonian and the energy wander over a longer run. Writes two PNG
panels into demos/output/.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tkdv_assim import (IntegratorConfig, TkdvParams, convergence_study,
                        energy_drift_series, hamiltonian_drift, integrate,
                        random_initial_state)

OUT = Path(__file__).resolve().parent / "output"

LAM = 4
PARAMS = TkdvParams(1.0, 1.0)
DT_LIST = [0.01, 0.005, 0.0025, 0.00125]
DT_REFERENCE = 1e-5
T_FINAL = 1.0


def convergence_panel(ax):
    state0 = random_initial_state(1, lam=LAM)
    rows, slope = convergence_study(state0, PARAMS, T_FINAL, DT_LIST,
                                    DT_REFERENCE)
    rows = np.asarray(rows)
    dts = rows[:, 0]
    errs = rows[:, 1]
    ax.loglog(dts, errs, "o-", label="measured")
    guide = errs[-1] * (dts / dts[-1]) ** 4
    ax.loglog(dts, guide, "--", color="gray", label="slope 4 guide")
    ax.set_xlabel("dt")
    ax.set_ylabel("sup-norm error at t = %.1f" % T_FINAL)
    ax.set_title(f"fitted order {slope:.3f}")
    ax.legend()
    return slope


def drift_panel(ax):
    # sample every 10 steps, report on a 0.1 time grid
    state0 = random_initial_state(1, lam=LAM)
    traj = integrate(state0, PARAMS, IntegratorConfig(1e-4, 5.0),
                     sample_every=10)
    h_rows = hamiltonian_drift(traj, PARAMS, report_every=0.1)
    e_rows = energy_drift_series(traj, report_every=0.1)
    ax.semilogy(h_rows[:, 0], np.maximum(h_rows[:, 1], 1e-18),
                label="|H - H0|")
    ax.semilogy(e_rows[:, 0], np.maximum(e_rows[:, 1], 1e-18),
                label="|E - E0|")
    ax.set_xlabel("t")
    ax.set_ylabel("absolute drift")
    ax.set_title("invariant drift, dt = 1e-4")
    ax.legend()
    return h_rows[:, 1].max(), e_rows[:, 1].max()


def main():
    OUT.mkdir(exist_ok=True)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    slope = convergence_panel(ax1)
    h_max, e_max = drift_panel(ax2)
    fig.tight_layout()
    target = OUT / "solver_diagnostics.png"
    fig.savefig(target, dpi=150)
    print(f"order {slope:.4f}, max |H - H0| {h_max:.2e}, "
          f"max |E - E0| {e_max:.2e}")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
