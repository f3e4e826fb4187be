"""Space-time heatmaps of the surface field across parameter regimes.

Two scenarios: a sweep through hand-picked coefficient pairs from nearly
linear to strongly nonlinear, and a staircase of depth ratios where the
coefficients follow the depth map. Each segment chains its initial state
from the previous one, so the regime switches show up as texture changes
in one continuous field.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tkdv_assim import CoefficientSchedule, DepthSchedule, multi_region_field

OUT = Path(__file__).resolve().parent / "output"

N_GRID = 129

COEFF_SEGMENTS = ((0.5, (4.0, 0.0)), (0.5, (3.0, 1.0)),
                  (0.5, (2.0, 8.0)), (0.5, (3.0, 18.0)))
DEPTH_SEGMENTS = ((1.0, 1.0), (1.0, 0.24), (1.0, 0.14), (1.0, 0.42))


def render(blocks, title, path, boundary_times):
    times = np.concatenate([b.times for b in blocks])
    field = np.concatenate([b.values for b in blocks], axis=0)
    fig, ax = plt.subplots(figsize=(9, 4))
    img = ax.imshow(field.T, origin="lower", aspect="auto",
                    extent=(times[0], times[-1], -np.pi, np.pi),
                    cmap="RdBu_r")
    for t in boundary_times:
        ax.axvline(t, color="black", linewidth=0.6, linestyle=":")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title(title)
    fig.colorbar(img, ax=ax, label="u(x, t)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    print(f"wrote {path}")


def main():
    OUT.mkdir(exist_ok=True)

    sweep = multi_region_field(CoefficientSchedule(COEFF_SEGMENTS),
                               dt=5e-5, n_grid=N_GRID, sample_every=100,
                               seed=1)
    edges = np.cumsum([d for d, _ in COEFF_SEGMENTS])[:-1]
    render(sweep, "coefficient sweep, dispersive to strongly nonlinear",
           OUT / "heatmap_coefficient_sweep.png", edges)

    steps = multi_region_field(DepthSchedule(DEPTH_SEGMENTS),
                               dt=1e-4, n_grid=N_GRID, sample_every=100,
                               seed=1)
    edges = np.cumsum([d for d, _ in DEPTH_SEGMENTS])[:-1]
    render(steps, "depth staircase 1.0 / 0.24 / 0.14 / 0.42",
           OUT / "heatmap_depth_steps.png", edges)


if __name__ == "__main__":
    main()
