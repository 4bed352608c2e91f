import copy
import json

import pytest

from thinlab.cli import main, resolve_out_dir, run, write_artifacts
from thinlab.errors import ConfigError
from thinlab.experiments import (
    AGGREGATE_COLUMNS,
    EXPERIMENT_KINDS,
    load_config,
    run_experiment,
)

# small but meaningful: two thicknesses, coarse grid
BASE = {
    "kind": "shrink_study",
    "problem": {
        "coefficients": {"preset": "laplace"},
        "phi": {"kind": "trig", "cos": [1.0]},
        "profile": {"kind": "sine"},
        "sigmas": [0.08, 0.04],
    },
    "grid": {"nx": 24, "ny": 12},
}


def make_cfg(**over):
    frag = copy.deepcopy(BASE)
    frag.update(over)
    return frag


def write_cfg(tmp_path, frag, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(frag))
    return str(path)


# ---------------------------------------------------------------------------
# config validation


def test_load_config_defaults():
    cfg = load_config({"kind": "shrink_study",
                       "problem": {"sigmas": [0.1, 0.05]}})
    assert cfg.kind == "shrink_study"
    assert cfg.sigmas == (0.1, 0.05)
    assert (cfg.nx, cfg.ny) == (64, 32)
    assert cfg.x0 == 0.3
    assert cfg.coefficients.name == "laplace"
    assert cfg.profile_template == {"kind": "sine"}
    # amplitude in the template is ignored; sigma supplies it
    cfg2 = load_config({"kind": "shrink_study",
                        "problem": {"sigmas": [0.1],
                                    "profile": {"kind": "sine",
                                                "amplitude": 0.7}}})
    assert cfg2.profile(0.03).eval(0.5) == pytest.approx(0.03)


def test_load_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="mystery"):
        load_config(make_cfg(mystery=1))
    frag = make_cfg()
    frag["problem"]["typo_field"] = 2
    with pytest.raises(ConfigError, match="typo_field"):
        load_config(frag)


@pytest.mark.parametrize("sigmas,msg", [
    ([], "non-empty"),
    ([0.1, -0.2], "positive"),
    ([0.1, 0.1], "decreasing"),
    ([0.05, 0.08], "decreasing"),
    ("0.1", "non-empty"),
])
def test_load_config_rejects_bad_sigmas(sigmas, msg):
    frag = make_cfg()
    frag["problem"]["sigmas"] = sigmas
    with pytest.raises(ConfigError, match=msg):
        load_config(frag)


def test_load_config_rejects_bad_kind_grid_x0_seed():
    with pytest.raises(ConfigError, match="kind"):
        load_config(make_cfg(kind="telepathy_study"))
    with pytest.raises(ConfigError, match="nx, ny"):
        load_config(make_cfg(grid={"nx": 4, "ny": 64}))
    frag = make_cfg()
    frag["problem"]["x0"] = 1.5
    with pytest.raises(ConfigError, match="x0"):
        load_config(frag)
    with pytest.raises(ConfigError, match="seed"):
        load_config(make_cfg(seed=-3))
    with pytest.raises(ConfigError, match="problem"):
        load_config({"kind": "shrink_study"})


def test_every_kind_has_aggregate_columns():
    assert set(AGGREGATE_COLUMNS) == set(EXPERIMENT_KINDS)
    for cols in AGGREGATE_COLUMNS.values():
        assert cols[0] == "sigma"


# ---------------------------------------------------------------------------
# run_experiment


def test_shrink_study_rows_and_checks():
    result = run_experiment(load_config(make_cfg()))
    assert result.kind == "shrink_study"
    assert [r["sigma"] for r in result.rows] == [0.08, 0.04]
    assert result.passed
    assert result.checks["norm_ratio_spread"]
    for row in result.rows:
        assert set(row) == set(AGGREGATE_COLUMNS["shrink_study"])
        assert row["norm_ratio"] >= 1.0


def test_thread_pool_matches_serial():
    cfg = load_config(make_cfg())
    serial = run_experiment(cfg, jobs=1)
    pooled = run_experiment(cfg, jobs=4)
    assert serial.rows == pooled.rows
    assert serial.checks == pooled.checks


def test_mms_convergence_second_order():
    frag = make_cfg(kind="mms_convergence", grid={"nx": 16, "ny": 16})
    frag["problem"]["sigmas"] = [0.05]
    result = run_experiment(load_config(frag))
    row = result.rows[0]
    assert result.passed, result.checks
    assert 1.8 <= row["order"] <= 2.2
    assert row["err_fine"] < row["err_coarse"]


def test_barrier_report_margins_positive():
    frag = make_cfg(kind="barrier_report")
    # sine amplitudes chosen so the corner slope stays below 0.05
    frag["problem"]["sigmas"] = [0.05 / 3.141592653589793,
                                 0.02 / 3.141592653589793]
    result = run_experiment(load_config(frag))
    assert result.passed, result.checks
    for row in result.rows:
        assert row["y_margin"] > 0
        assert row["h_near"] > 0 and row["h_left"] > 0


def test_transform_audit_checks():
    frag = make_cfg(kind="transform_audit")
    frag["problem"]["sigmas"] = [0.08, 0.04]
    result = run_experiment(load_config(frag))
    assert result.passed, result.checks
    for row in result.rows:
        assert row["roundtrip"] <= 1e-9
        assert row["chain_max"] <= 1e-8


def test_weighted_study_anchor():
    frag = make_cfg(kind="weighted_study")
    result = run_experiment(load_config(frag))
    assert result.passed, result.checks
    assert result.summary["anchor_dev"] <= 1e-6
    assert result.summary["c_bar"] <= 10.0


def test_asymptotic_study_monotone():
    frag = make_cfg(kind="asymptotic_study", grid={"nx": 48, "ny": 24})
    frag["problem"]["sigmas"] = [0.08, 0.04, 0.02]
    result = run_experiment(load_config(frag))
    assert result.checks["dev0_monotone"]
    assert result.checks["dev1_monotone"]
    rows = result.rows
    assert rows[0]["slope"] == rows[1]["slope"]  # filled in post-hoc


# ---------------------------------------------------------------------------
# CLI surface


def test_cli_run_writes_all_artifacts(tmp_path):
    path = write_cfg(tmp_path, make_cfg())
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == 0
    agg = (out / "aggregate.csv").read_text().splitlines()
    assert agg[0] == "sigma,residual,norm_ratio"
    assert len(agg) == 3
    assert (out / "shrink_study.png").stat().st_size > 0
    assert (out / "shrink_study_sigma_0.08.json").exists()
    assert (out / "shrink_study_sigma_0.04.json").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["config"]["kind"] == "shrink_study"


def test_cli_is_deterministic(tmp_path):
    path = write_cfg(tmp_path, make_cfg())
    outs = []
    for tag in ("first", "second"):
        out = tmp_path / tag
        assert run(path, out=str(out)) == 0
        outs.append((out / "aggregate.csv").read_bytes())
    assert outs[0] == outs[1]
    # concurrency must not change the bytes either
    out = tmp_path / "pooled"
    assert run(path, out=str(out), jobs=3) == 0
    assert (out / "aggregate.csv").read_bytes() == outs[0]


def test_cli_exit_codes_for_bad_configs(tmp_path):
    frag = make_cfg()
    frag["problem"]["sigmas"] = [0.01, 0.02]
    assert main(["run", write_cfg(tmp_path, frag)]) == 2

    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_cli_exit_one_on_failed_threshold(tmp_path):
    # an impossible spread tolerance forces the check to fail
    frag = make_cfg(tolerances={"ratio_spread": 0.5})
    path = write_cfg(tmp_path, frag)
    assert main(["run", path, "--out", str(tmp_path / "o")]) == 1


def test_cli_exit_three_on_numerical_failure(tmp_path):
    # C vanishes on the bottom edge, so the collapse state is undefined
    frag = {
        "kind": "asymptotic_study",
        "problem": {
            "coefficients": {"A": 1.0, "B": 0.0,
                             "C": {"poly": [[1.0, 1, 0]]},
                             "D": 0.0, "E": 0.0, "G": 0.0,
                             "lambda": 0.5, "Lambda": 2.0},
            "sigmas": [0.05]},
        "grid": {"nx": 16, "ny": 8},
    }
    path = write_cfg(tmp_path, frag)
    assert main(["run", path, "--out", str(tmp_path / "o")]) == 3


def test_cli_thick_profile_empties_left_case(tmp_path):
    # f(x0) > x0 leaves no samples left of the window: the case margin
    # degenerates to +inf, the family spread check fails, and a warning
    # names the region
    frag = make_cfg(kind="barrier_report")
    frag["problem"]["sigmas"] = [0.4]
    path = write_cfg(tmp_path, frag)
    out = tmp_path / "o"
    assert main(["run", path, "--out", str(out)]) == 1
    summary = json.loads((out / "summary.json").read_text())
    assert any("h_left" in w for w in summary["warnings"])
    assert summary["checks"]["h_left_spread"] is False


def test_out_dir_precedence(tmp_path, monkeypatch):
    frag = make_cfg(out=str(tmp_path / "from_config"))
    cfg = load_config(frag)
    assert resolve_out_dir(cfg, None) == tmp_path / "from_config"
    monkeypatch.setenv("THINLAB_OUT", str(tmp_path / "from_env"))
    assert resolve_out_dir(cfg, None) == tmp_path / "from_env"
    assert resolve_out_dir(cfg, str(tmp_path / "cli")) == tmp_path / "cli"
    monkeypatch.delenv("THINLAB_OUT")
    plain = load_config(make_cfg())
    assert resolve_out_dir(plain, None).parts[-2:] == ("thinlab_runs",
                                                       "shrink_study")


def test_env_out_dir_is_used(tmp_path, monkeypatch):
    path = write_cfg(tmp_path, make_cfg())
    monkeypatch.setenv("THINLAB_OUT", str(tmp_path / "env_out"))
    monkeypatch.chdir(tmp_path)
    assert main(["run", path]) == 0
    assert (tmp_path / "env_out" / "aggregate.csv").exists()


def test_write_artifacts_round_trip(tmp_path):
    cfg = load_config(make_cfg())
    result = run_experiment(cfg)
    agg = write_artifacts(cfg, result, tmp_path / "w")
    with open(agg) as fh:
        header = fh.readline().strip().split(",")
    assert tuple(header) == AGGREGATE_COLUMNS["shrink_study"]
    detail = json.loads(
        (tmp_path / "w" / "shrink_study_sigma_0.08.json").read_text())
    assert detail["sigma"] == 0.08
    assert "schauder" in detail
