"""Experiment runner: validates JSON configs, dispatches experiments, and
writes deterministic CSV outputs plus a JSON summary per run.

Exit codes: 0 success, 2 unreadable or unparseable config, 3 validation
failure, 4 numeric blow-up, 5 degenerate filter update.
"""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .direct_filter import DegenerateUpdateError, EstimatorConfig
from .integrator import (BlowUpError, IntegratorConfig, convergence_study,
                         energy_drift_series, hamiltonian_drift, integrate)
from .presets import preset, preset_names
from .scenarios import (CoefficientSchedule, DepthSchedule, FilterConfig,
                        ToyModelSpec, detect_depth_changes,
                        multi_region_field, run_estimation_experiment,
                        run_toy_experiment)
from .spectral_tkdv import (TkdvParams, coefficients_from_depth,
                            depth_from_c2, random_initial_state)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_BLOWUP = 4
EXIT_DEGENERATE = 5

_FILTER_KEYS = {"m_particles", "jitter_sd", "obs_noise_std",
                "state_noise_std", "prior_center", "prior_spread", "burn_in"}

_KINDS = {
    "convergence": {
        "required": {"c2", "c3", "t_final", "dt_list", "dt_reference",
                     "seed"},
        "optional": {"lam"},
    },
    "hamiltonian": {
        "required": {"c2", "c3", "t_final", "dt", "seed"},
        "optional": {"lam", "sample_every", "report_every"},
    },
    "estimate": {
        "required": {"depths", "segment_duration", "dt", "seed"}
                    | _FILTER_KEYS,
        "optional": {"lam", "window"},
    },
    "detect": {
        "required": {"schedule", "dt", "window", "warmup", "hysteresis",
                     "levels", "seed"} | _FILTER_KEYS,
        "optional": {"lam"},
    },
    "toy": {
        "required": {"a", "sigma", "dt", "h_diag", "sigma_y", "sigma3",
                     "n_steps", "m_particles", "prior_center",
                     "prior_spread", "burn_in", "seed"},
        "optional": {"window"},
    },
    "heatmap": {
        "required": {"dt", "n_grid", "sample_every", "seed"},
        "optional": {"lam", "depth_segments", "coefficient_segments"},
    },
}


class ConfigError(Exception):
    """Config file unreadable or not parseable as a JSON object."""


def _load_config(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(p) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def validate_config(config):
    """Reject unknown kinds, unknown keys, and missing keys up front."""
    kind = config.get("kind")
    if kind not in _KINDS:
        known = ", ".join(sorted(_KINDS))
        raise ValueError(f"unknown experiment kind {kind!r}; one of: {known}")
    spec = _KINDS[kind]
    allowed = spec["required"] | spec["optional"] | {"kind", "out_dir"}
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise ValueError(f"unknown keys for kind {kind}: {', '.join(unknown)}")
    missing = sorted(spec["required"] - set(config))
    if missing:
        raise ValueError(f"missing keys for kind {kind}: {', '.join(missing)}")
    if kind == "heatmap":
        given = [k for k in ("depth_segments", "coefficient_segments")
                 if k in config]
        if len(given) != 1:
            raise ValueError("heatmap needs exactly one of depth_segments "
                             "and coefficient_segments")


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("no boolean columns in any schema")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows, trailer=None):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        if trailer is not None:
            writer.writerow(trailer)


def _write_json(path, data):
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _run_convergence(config, out_dir):
    params = TkdvParams(float(config["c2"]), float(config["c3"]))
    state0 = random_initial_state(config["seed"], int(config.get("lam", 16)))
    rows, slope = convergence_study(state0, params, float(config["t_final"]),
                                    config["dt_list"],
                                    float(config["dt_reference"]))
    _write_csv(out_dir / "convergence.csv", ["dt", "error"], rows,
               trailer=["# slope", _fmt(slope)])
    return {"slope": slope}


def _run_hamiltonian(config, out_dir):
    params = TkdvParams(float(config["c2"]), float(config["c3"]))
    state0 = random_initial_state(config["seed"], int(config.get("lam", 16)))
    traj = integrate(state0, params,
                     IntegratorConfig(float(config["dt"]),
                                      float(config["t_final"])),
                     sample_every=int(config.get("sample_every", 1)))
    report_every = config.get("report_every")
    report_every = None if report_every is None else float(report_every)
    h_rows = hamiltonian_drift(traj, params, report_every=report_every)
    e_rows = energy_drift_series(traj, report_every=report_every)
    rows = np.column_stack([h_rows, e_rows[:, 1]])
    _write_csv(out_dir / "drift.csv",
               ["time", "abs_hamiltonian_drift", "energy_drift"], rows)
    return {"max_abs_hamiltonian_drift": float(rows[:, 1].max()),
            "max_energy_drift": float(rows[:, 2].max())}


def _filter_pieces(config):
    fc = FilterConfig(m_particles=int(config["m_particles"]),
                      jitter_sd=tuple(config["jitter_sd"]),
                      prior_center=tuple(config["prior_center"]),
                      prior_spread=tuple(config["prior_spread"]),
                      seed=config["seed"])
    est = EstimatorConfig(burn_in=int(config["burn_in"]),
                          window=(None if config.get("window") is None
                                  else int(config["window"])))
    return fc, est


def _estimates_rows(result):
    n = result.posterior_means.shape[0]
    for i in range(n):
        yield (i + 1, result.times[i + 1],
               result.posterior_means[i, 0], result.posterior_means[i, 1],
               result.running[i, 0], result.running[i, 1],
               result.depth_running[i])


_ESTIMATES_HEADER = ["step", "time", "c2_post_mean", "c3_post_mean",
                     "c2_running", "c3_running", "depth_running"]


def _run_estimate(config, out_dir):
    fc, est = _filter_pieces(config)
    duration = float(config["segment_duration"])
    dt = float(config["dt"])
    lam = int(config.get("lam", 16))
    runs = []
    depths = list(config["depths"])
    for depth in depths:
        schedule = DepthSchedule(((duration, float(depth)),))
        result = run_estimation_experiment(
            schedule, fc, est, dt, float(config["obs_noise_std"]),
            state_noise_std=float(config["state_noise_std"]), lam=lam)
        target = out_dir if len(depths) == 1 else out_dir / f"depth_{depth:g}"
        target.mkdir(parents=True, exist_ok=True)
        _write_csv(target / "estimates.csv", _ESTIMATES_HEADER,
                   _estimates_rows(result))
        true = coefficients_from_depth(float(depth))
        runs.append({
            "depth": float(depth),
            "c2_estimate": float(result.final_theta[0]),
            "c3_estimate": float(result.final_theta[1]),
            "depth_estimate": result.final_depth,
            "c2_true": float(true.c2),
            "c3_true": float(true.c3),
            "c2_rel_error": abs(result.final_theta[0] - true.c2) / true.c2,
            "c3_rel_error": abs(result.final_theta[1] - true.c3) / true.c3,
        })
    return {"runs": runs}


def _run_detect(config, out_dir):
    fc, est = _filter_pieces(config)
    segments = tuple((float(t), float(d)) for t, d in config["schedule"])
    schedule = DepthSchedule(segments)
    dt = float(config["dt"])
    result = run_estimation_experiment(
        schedule, fc, est, dt, float(config["obs_noise_std"]),
        state_noise_std=float(config["state_noise_std"]),
        lam=int(config.get("lam", 16)))
    _write_csv(out_dir / "estimates.csv", _ESTIMATES_HEADER,
               _estimates_rows(result))
    detections = detect_depth_changes(result.depth_running,
                                      config["levels"],
                                      int(config["hysteresis"]),
                                      times=result.times[1:],
                                      warmup=int(config["warmup"]))
    _write_csv(out_dir / "detections.csv", ["time", "new_depth_level"],
               detections)
    seg_summary = []
    window = int(config["window"])
    edge = 0.0
    srow = 0
    for duration, depth in segments:
        edge += duration
        erow = int(round(edge / dt))
        # read the estimate off the stable plateau: average the windowed
        # series over the rows whose window lies entirely inside the segment
        lo = min(srow + window - 1, erow - 1)
        plateau = result.running[lo:erow, 0]
        finite = plateau[np.isfinite(plateau)]
        c2_est = (float(finite.mean()) if finite.size
                  else float(result.running[erow - 1, 0]))
        d_est = float(depth_from_c2(c2_est)) if c2_est > 0 else float("nan")
        c2_true = float(coefficients_from_depth(depth).c2)
        seg_summary.append({
            "depth": depth,
            "end_time": float(result.times[erow]),
            "depth_estimate": d_est,
            "depth_rel_error": abs(d_est - depth) / depth,
            "c2_estimate": c2_est,
            "c2_rel_error": abs(c2_est - c2_true) / c2_true,
        })
        srow = erow
    return {"segments": seg_summary,
            "detections": [[t, lvl] for t, lvl in detections],
            "n_detections": len(detections)}


def _run_toy(config, out_dir):
    spec = ToyModelSpec(a=tuple(config["a"]), sigma=tuple(config["sigma"]),
                        dt=float(config["dt"]),
                        h_diag=tuple(config["h_diag"]),
                        sigma_y=tuple(config["sigma_y"]),
                        sigma3=float(config["sigma3"]))
    est = EstimatorConfig(burn_in=int(config["burn_in"]),
                          window=(None if config.get("window") is None
                                  else int(config["window"])))
    result = run_toy_experiment(spec, int(config["n_steps"]),
                                int(config["m_particles"]),
                                tuple(config["prior_center"]),
                                tuple(config["prior_spread"]),
                                est, config["seed"])
    header = (["step", "time"]
              + [f"a{i}_post_mean" for i in range(1, 5)]
              + [f"a{i}_running" for i in range(1, 5)])
    rows = ((i + 1, result.times[i + 1], *result.posterior_means[i],
             *result.running[i])
            for i in range(result.posterior_means.shape[0]))
    _write_csv(out_dir / "estimates.csv", header, rows)
    final = [float(v) for v in result.final_theta]
    true = [float(v) for v in spec.a]
    return {"a_estimate": final, "a_true": true,
            "a_rel_errors": [abs(e - t) / abs(t) if t != 0 else abs(e)
                             for e, t in zip(final, true)]}


def _run_heatmap(config, out_dir):
    if "depth_segments" in config:
        schedule = DepthSchedule(tuple((float(t), float(d))
                                       for t, d in config["depth_segments"]))
    else:
        schedule = CoefficientSchedule(
            tuple((float(t), (float(p[0]), float(p[1])))
                  for t, p in config["coefficient_segments"]))
    n_grid = int(config["n_grid"])
    blocks = multi_region_field(schedule, float(config["dt"]), n_grid,
                                int(config["sample_every"]), config["seed"],
                                lam=int(config.get("lam", 16)))
    header = ["time"] + [f"u{j}" for j in range(n_grid)]
    for i, block in enumerate(blocks):
        rows = ((block.times[r], *block.values[r])
                for r in range(block.times.size))
        _write_csv(out_dir / f"field_{i + 1}.csv", header, rows)
    return {"segments": len(blocks),
            "rows_per_segment": [int(b.times.size) for b in blocks]}


_RUNNERS = {
    "convergence": _run_convergence,
    "hamiltonian": _run_hamiltonian,
    "estimate": _run_estimate,
    "detect": _run_detect,
    "toy": _run_toy,
    "heatmap": _run_heatmap,
}


def execute_config(config, out_dir):
    """Validate and run one experiment; returns a process exit code.

    Writes config.json (the echo of the validated config) and summary.json
    next to the experiment's CSV outputs in out_dir.
    """
    try:
        validate_config(config)
    except ValueError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", config)
    started = time.perf_counter()
    try:
        summary = _RUNNERS[config["kind"]](config, out)
    except ValueError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BlowUpError as exc:
        print(f"integration blew up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except DegenerateUpdateError as exc:
        print(f"filter degenerated: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    summary["kind"] = config["kind"]
    summary["seed"] = config["seed"]
    summary["runtime_seconds"] = round(time.perf_counter() - started, 3)
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def _effective_jobs(requested):
    env = os.environ.get("TKDV_ASSIM_THREADS")
    if env is None:
        return 1  # parallelism is opt-in through the environment
    return max(1, min(int(requested), int(env)))


def _cmd_run(args):
    tasks = []
    codes = []
    multi = len(args.configs) > 1
    for path in args.configs:
        try:
            config = _load_config(path)
        except ConfigError as exc:
            print(exc, file=sys.stderr)
            codes.append(EXIT_CONFIG)
            continue
        stem = Path(path).stem
        if "out_dir" in config:
            out = Path(config["out_dir"])
        elif args.out is not None:
            out = Path(args.out) / stem if multi else Path(args.out)
        else:
            out = Path(f"{stem}_out")
        tasks.append((config, out))
    jobs = _effective_jobs(args.jobs)
    if jobs <= 1 or len(tasks) <= 1:
        for config, out in tasks:
            codes.append(execute_config(config, out))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(execute_config, config, out)
                       for config, out in tasks]
            codes.extend(f.result() for f in futures)
    for (_, out), code in zip(tasks, codes[len(codes) - len(tasks):]):
        if code == EXIT_OK:
            print(f"wrote {out}")
    return max(codes, default=EXIT_OK)


def _cmd_preset(args):
    try:
        config = preset(args.name, fast=args.fast)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    for item in args.set or []:
        if "=" not in item:
            print(f"--set expects key=value, got {item!r}", file=sys.stderr)
            return EXIT_CONFIG
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        config[key] = value
    out = Path(args.out) if args.out is not None else Path(args.name)
    if args.config_only:
        try:
            validate_config(config)
        except ValueError as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "config.json", config)
        print(f"wrote {out / 'config.json'}")
        return EXIT_OK
    code = execute_config(config, out)
    if code == EXIT_OK:
        print(f"wrote {out}")
    return code


def _cmd_list_presets(_args):
    for name in preset_names():
        print(name)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tkdv-assim",
        description="Deterministic spectral-solver and parameter-filter "
                    "experiments with CSV outputs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one or more JSON config files")
    p_run.add_argument("configs", nargs="+", help="config file paths")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="max parallel runs; capped by TKDV_ASSIM_THREADS"
                            " (absent means serial)")
    p_run.add_argument("--out", default=None,
                       help="output directory (per-config subdirs when "
                            "several configs are given)")
    p_run.set_defaults(func=_cmd_run)

    p_preset = sub.add_parser("preset", help="run a named experiment")
    p_preset.add_argument("name")
    p_preset.add_argument("--set", action="append", metavar="KEY=VALUE",
                          help="override a config key; value parsed as JSON "
                               "when possible")
    p_preset.add_argument("--out", default=None, help="output directory")
    p_preset.add_argument("--fast", action="store_true",
                          help="shrunken smoke-test variant")
    p_preset.add_argument("--config-only", action="store_true",
                          help="write config.json and exit without running")
    p_preset.set_defaults(func=_cmd_preset)

    p_list = sub.add_parser("list-presets", help="list preset names")
    p_list.set_defaults(func=_cmd_list_presets)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
