"""Config validation, exit codes, output schemas, and determinism."""

import io
import json
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from tkdv_assim import cli
from tkdv_assim.presets import FAST_OVERRIDES, PRESETS, preset, preset_names

GOLDEN = Path(__file__).parent / "golden"


def run_cli(argv):
    out = io.StringIO()
    err = io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        with np.errstate(over="ignore", invalid="ignore"):
            code = cli.main(argv)
    return code, out.getvalue(), err.getvalue()


def toy_config(**overrides):
    config = preset("toy-appendix")
    config.update(n_steps=30, m_particles=60, burn_in=5)
    config.update(overrides)
    return config


def write_config(tmp_path, config, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def test_missing_config_file_names_path(tmp_path):
    missing = tmp_path / "nope.json"
    code, _, err = run_cli(["run", str(missing)])
    assert code == 2
    assert str(missing) in err


def test_unparseable_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run_cli(["run", str(path)])
    assert code == 2
    assert "broken.json" in err


def test_non_object_config(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    code, _, _ = run_cli(["run", str(path)])
    assert code == 2


def test_unknown_kind_rejected(tmp_path):
    path = write_config(tmp_path, {"kind": "wavelet", "seed": 1})
    code, _, err = run_cli(["run", str(path), "--out", str(tmp_path / "o")])
    assert code == 3
    assert "wavelet" in err


def test_unknown_key_rejected(tmp_path):
    config = toy_config()
    config["particles"] = 5
    path = write_config(tmp_path, config)
    code, _, err = run_cli(["run", str(path), "--out", str(tmp_path / "o")])
    assert code == 3
    assert "particles" in err


def test_missing_key_rejected(tmp_path):
    config = toy_config()
    del config["sigma3"]
    path = write_config(tmp_path, config)
    code, _, err = run_cli(["run", str(path), "--out", str(tmp_path / "o")])
    assert code == 3
    assert "sigma3" in err


def test_heatmap_needs_exactly_one_schedule(tmp_path):
    config = preset("heatmap-sweep")
    config["depth_segments"] = [[0.1, 1.0]]
    path = write_config(tmp_path, config)
    code, _, err = run_cli(["run", str(path), "--out", str(tmp_path / "o")])
    assert code == 3
    assert "exactly one" in err


def test_blow_up_exit_code(tmp_path):
    config = {"kind": "hamiltonian", "c2": 1.0, "c3": 1.0, "t_final": 1.0,
              "dt": 1e-3, "seed": 1}
    path = write_config(tmp_path, config)
    code, _, err = run_cli(["run", str(path), "--out", str(tmp_path / "o")])
    assert code == 4
    assert "blew up" in err


def test_degenerate_filter_exit_code(tmp_path):
    # a prior so far out that every squared residual overflows leaves no
    # particle with any likelihood
    config = toy_config(prior_center=[1e160] * 4, prior_spread=[0.0] * 4,
                        n_steps=5, m_particles=10)
    path = write_config(tmp_path, config)
    code, _, err = run_cli(["run", str(path), "--out", str(tmp_path / "o")])
    assert code == 5
    assert "degenerated" in err


def test_validation_failure_writes_nothing(tmp_path):
    out = tmp_path / "o"
    path = write_config(tmp_path, {"kind": "toy"})
    code, _, _ = run_cli(["run", str(path), "--out", str(out)])
    assert code == 3
    assert not out.exists()


def test_toy_run_outputs(tmp_path):
    out = tmp_path / "toy"
    path = write_config(tmp_path, toy_config())
    code, stdout, _ = run_cli(["run", str(path), "--out", str(out)])
    assert code == 0
    assert f"wrote {out}" in stdout
    lines = (out / "estimates.csv").read_text().splitlines()
    assert lines[0] == ("step,time,a1_post_mean,a2_post_mean,a3_post_mean,"
                       "a4_post_mean,a1_running,a2_running,a3_running,"
                       "a4_running")
    assert len(lines) == 31
    first = lines[1].split(",")
    assert first[0] == "1"
    assert float(first[1]) == pytest.approx(0.05)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["kind"] == "toy"
    assert summary["a_true"] == [4.0, 2.0, 3.0, 5.0]
    assert len(summary["a_rel_errors"]) == 4
    echoed = json.loads((out / "config.json").read_text())
    assert echoed == json.loads(path.read_text())


def test_csv_floats_round_trip(tmp_path):
    out = tmp_path / "toy"
    path = write_config(tmp_path, toy_config())
    run_cli(["run", str(path), "--out", str(out)])
    rows = (out / "estimates.csv").read_text().splitlines()[1:]
    for row in rows[:5]:
        for cell in row.split(",")[1:]:
            value = float(cell)
            if np.isfinite(value):
                assert repr(value) == cell


def test_run_twice_byte_identical(tmp_path):
    path = write_config(tmp_path, toy_config())
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["run", str(path), "--out", str(a)])[0] == 0
    assert run_cli(["run", str(path), "--out", str(b)])[0] == 0
    assert (a / "estimates.csv").read_bytes() == \
        (b / "estimates.csv").read_bytes()


def test_estimate_multi_depth_layout(tmp_path):
    config = {"kind": "estimate", "depths": [1.0, 0.42],
              "segment_duration": 0.01, "dt": 1e-3, "lam": 4,
              "m_particles": 40, "jitter_sd": [0.05, 0.05],
              "obs_noise_std": 0.01, "state_noise_std": 0.001,
              "prior_center": [0.0236, 0.1965], "prior_spread": [0.01, 0.1],
              "burn_in": 2, "seed": 1}
    out = tmp_path / "sweep"
    path = write_config(tmp_path, config)
    code, _, _ = run_cli(["run", str(path), "--out", str(out)])
    assert code == 0
    assert (out / "depth_1" / "estimates.csv").is_file()
    assert (out / "depth_0.42" / "estimates.csv").is_file()
    summary = json.loads((out / "summary.json").read_text())
    assert [r["depth"] for r in summary["runs"]] == [1.0, 0.42]
    header = (out / "depth_1" / "estimates.csv").read_text().splitlines()[0]
    assert header == ("step,time,c2_post_mean,c3_post_mean,c2_running,"
                      "c3_running,depth_running")


def test_out_dir_fallbacks(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    write_config(tmp_path, toy_config(), name="mini.json")
    code, stdout, _ = run_cli(["run", "mini.json"])
    assert code == 0
    assert (tmp_path / "mini_out" / "summary.json").is_file()
    inline = toy_config()
    inline["out_dir"] = str(tmp_path / "pinned")
    write_config(tmp_path, inline, name="pinned.json")
    code, _, _ = run_cli(["run", "pinned.json", "--out", "ignored"])
    assert code == 0
    assert (tmp_path / "pinned" / "summary.json").is_file()
    assert not (tmp_path / "ignored").exists()


def test_batch_serial_and_parallel_agree(tmp_path, monkeypatch):
    cfg_a = write_config(tmp_path, toy_config(seed=1), name="a.json")
    cfg_b = write_config(tmp_path, toy_config(seed=2), name="b.json")
    serial = tmp_path / "serial"
    code, _, _ = run_cli(["run", str(cfg_a), str(cfg_b), "--out",
                          str(serial)])
    assert code == 0
    assert (serial / "a" / "estimates.csv").is_file()
    assert (serial / "b" / "estimates.csv").is_file()
    monkeypatch.setenv("TKDV_ASSIM_THREADS", "2")
    parallel = tmp_path / "parallel"
    code, _, _ = run_cli(["run", str(cfg_a), str(cfg_b), "--jobs", "2",
                          "--out", str(parallel)])
    assert code == 0
    for name in ("a", "b"):
        assert (serial / name / "estimates.csv").read_bytes() == \
            (parallel / name / "estimates.csv").read_bytes()


def test_jobs_without_env_cap_stays_serial(monkeypatch):
    monkeypatch.delenv("TKDV_ASSIM_THREADS", raising=False)
    assert cli._effective_jobs(8) == 1
    monkeypatch.setenv("TKDV_ASSIM_THREADS", "3")
    assert cli._effective_jobs(8) == 3
    assert cli._effective_jobs(2) == 2


def test_batch_reports_worst_exit_code(tmp_path):
    good = write_config(tmp_path, toy_config(), name="good.json")
    bad = tmp_path / "absent.json"
    code, stdout, err = run_cli(["run", str(good), str(bad), "--out",
                                 str(tmp_path / "mixed")])
    assert code == 2
    assert "absent.json" in err
    assert "wrote" in stdout  # the good one still ran


def test_preset_values_pin_published_settings():
    assert preset("c2-baseline")["m_particles"] == 2000
    assert preset("c2-baseline")["jitter_sd"] == [0.3, 0.017]
    assert preset("c2-baseline")["burn_in"] == 400
    assert preset("multi-step")["jitter_sd"] == [0.25, 0.01]
    assert preset("toy-appendix")["h_diag"] == [5, 3]
    assert preset("one-step")["window"] == 3500
    assert preset("table1")["depths"] == [1.0, 0.42, 0.24, 0.14]
    assert preset("c3-longrun")["jitter_sd"] == [0.3, 0.8]


def test_presets_round_trip_through_json():
    for name in preset_names():
        config = preset(name)
        assert json.loads(json.dumps(config)) == config
        fast = preset(name, fast=True)
        assert json.loads(json.dumps(fast)) == fast


def test_every_preset_validates():
    for name in preset_names():
        cli.validate_config(preset(name))
        cli.validate_config(preset(name, fast=True))


def test_fast_overrides_touch_known_keys_only():
    for name, overrides in FAST_OVERRIDES.items():
        assert name in PRESETS
        for key in overrides:
            assert key in PRESETS[name], (name, key)


def test_unknown_preset_exit_code():
    code, _, err = run_cli(["preset", "warp-drive", "--config-only"])
    assert code == 2
    assert "warp-drive" in err
    assert "c2-baseline" in err


def test_preset_config_only_and_overrides(tmp_path):
    out = tmp_path / "cfg"
    code, _, _ = run_cli(["preset", "convergence", "--config-only",
                          "--set", "seed=9",
                          "--set", "dt_list=[0.01,0.005]",
                          "--out", str(out)])
    assert code == 0
    config = json.loads((out / "config.json").read_text())
    assert config["seed"] == 9
    assert config["dt_list"] == [0.01, 0.005]
    assert not (out / "summary.json").exists()


def test_preset_bad_set_syntax():
    code, _, err = run_cli(["preset", "convergence", "--set", "seed"])
    assert code == 2
    assert "seed" in err


def test_preset_set_unknown_key_fails_validation(tmp_path):
    code, _, _ = run_cli(["preset", "convergence", "--config-only",
                          "--set", "bogus=1", "--out", str(tmp_path / "x")])
    assert code == 3


def test_list_presets():
    code, stdout, _ = run_cli(["list-presets"])
    assert code == 0
    names = stdout.split()
    assert names == list(preset_names())
    assert "c2-baseline" in names and "heatmap-sweep" in names


def test_golden_toy_appendix(tmp_path):
    out = tmp_path / "toy"
    code, _, _ = run_cli(["preset", "toy-appendix", "--out", str(out)])
    assert code == 0
    want = (GOLDEN / "toy-appendix" / "estimates.csv").read_bytes()
    assert (out / "estimates.csv").read_bytes() == want


def test_golden_convergence_fast(tmp_path):
    out = tmp_path / "conv"
    code, _, _ = run_cli(["preset", "convergence", "--fast", "--out",
                          str(out)])
    assert code == 0
    want = (GOLDEN / "convergence-fast" / "convergence.csv").read_bytes()
    assert (out / "convergence.csv").read_bytes() == want


def test_golden_hamiltonian_fast(tmp_path):
    out = tmp_path / "ham"
    code, _, _ = run_cli(["preset", "hamiltonian-drift", "--fast", "--out",
                          str(out)])
    assert code == 0
    want = (GOLDEN / "hamiltonian-drift-fast" / "drift.csv").read_bytes()
    assert (out / "drift.csv").read_bytes() == want
