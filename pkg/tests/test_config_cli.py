import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsim.cli import main, run_oracle_check
from hetsim.config import (
    KNOWN_KEYS,
    SimConfig,
    fig3_defaults,
    parse_config,
    parse_config_text,
    render_config,
)
from hetsim.errors import ConfigError

FIG2_CFG = "configs/fig2_default.cfg"


def test_shipped_fig2_config_resolves(cfg):
    parsed = parse_config(FIG2_CFG)
    assert parsed.snapshots == 100
    assert parsed == cfg  # the shipped file spells out the defaults


def test_shipped_fig3_config_resolves():
    parsed = parse_config("configs/fig3_default.cfg")
    assert parsed == fig3_defaults()
    assert parsed.snapshots == 200
    assert parsed.sweep == (0, 5, 10, 20, 40)


def test_shipped_multiconnect_config_resolves():
    parsed = parse_config("configs/grid_multiconnect.cfg")
    assert parsed.assoc_uplink == "mei_multi"
    assert parsed.pc_algorithm == "ptpc"
    assert parsed.epsilon == 0.5


def test_override_semantics():
    parsed = parse_config(FIG2_CFG, overrides=("mc.snapshots=5",))
    assert parsed.snapshots == 5
    assert dataclasses.replace(parsed, snapshots=100) == parse_config(FIG2_CFG)


def test_negative_power_names_key():
    with pytest.raises(ConfigError) as err:
        parse_config_text("power.pmax_w = -1\n")
    assert "power.pmax_w" in str(err.value)


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text("noise_w = 1e-13\nbogus_key = 3\n")
    assert "bogus_key" in str(err.value)
    assert "line=2" in str(err.value)


def test_unparseable_value_reports_key_and_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text("mc.snapshots = many\n")
    assert "mc.snapshots" in str(err.value)
    assert "line=1" in str(err.value)


def test_sectioned_and_dotted_forms_agree():
    sectioned = parse_config_text(
        """
        noise_w = 2e-13   # watts
        [mc]
        snapshots = 7
        base_seed = 9
        [power]
        pmax_w = 2.0
        """.replace("        ", "")
    )
    dotted = parse_config_text(
        "noise_w = 2e-13\nmc.snapshots = 7\nmc.base_seed = 9\npower.pmax_w = 2.0\n"
    )
    assert sectioned == dotted


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.cfg")


def test_bad_override_shape():
    with pytest.raises(ConfigError):
        parse_config_text("", overrides=("mc.snapshots",))


def test_sweep_validation():
    assert parse_config_text("mc.sweep = 3, 4 ,5\n").sweep == (3, 4, 5)
    with pytest.raises(ConfigError):
        parse_config_text("mc.sweep = \n")
    with pytest.raises(ConfigError):
        parse_config_text("mc.sweep = 3,-4\n")


def test_enum_validation():
    with pytest.raises(ConfigError):
        parse_config_text("pc.algorithm = waterfilling\n")
    with pytest.raises(ConfigError):
        parse_config_text("assoc.downlink = nearest\n")
    with pytest.raises(ConfigError):
        parse_config_text("scheduler = fifo\n")


def test_lambda_range_cross_validation():
    with pytest.raises(ConfigError):
        parse_config_text("disc.lambda_lo = 5\ndisc.lambda_hi = 2\n")


def test_render_round_trip_defaults(cfg):
    assert parse_config_text(render_config(cfg)) == cfg


@given(
    snapshots=st.integers(1, 500),
    seed=st.integers(0, 2**64 - 1),
    noise=st.floats(1e-18, 1e-3),
    sir_db=st.floats(-30.0, 30.0),
    alg=st.sampled_from(("tpc", "tpc_gr", "opc", "dtpc", "ptpc", "popc")),
    sweep=st.lists(st.integers(0, 64), min_size=1, max_size=6),
)
@settings(max_examples=40, deadline=None)
def test_render_round_trip_random_configs(
    snapshots, seed, noise, sir_db, alg, sweep
):
    cfg = SimConfig(
        snapshots=snapshots,
        base_seed=seed,
        noise_w=noise,
        target_sir_db=sir_db,
        pc_algorithm=alg,
        sweep=tuple(sweep),
    )
    assert parse_config_text(render_config(cfg)) == cfg


def test_every_documented_key_is_settable():
    cfg = SimConfig()
    text = render_config(cfg)
    for key in KNOWN_KEYS:
        assert f"{key} = " in text


# ------------------------------------------------------------------- CLI


def _tiny_overrides():
    return [
        "--set", "mc.snapshots=2",
        "--set", "mc.sweep=3",
    ]


def test_cli_fig2_writes_outputs(tmp_path, capsys):
    out = tmp_path / "fig2"
    code = main(["fig2", "--out", str(out), *_tiny_overrides()])
    assert code == 0
    csv_text = (out / "results.csv").read_text()
    assert csv_text.startswith(
        "experiment,sweep_param,sweep_value,algorithm,scheme,direction,"
    )
    assert len(csv_text.strip().splitlines()) == 1 + 4  # header + 4 algorithms
    summary = json.loads((out / "summary.json").read_text())
    assert summary["tool"]["name"] == "hetsim"
    assert summary["config"]["mc.snapshots"] == 2
    assert len(summary["rows"]) == 4


def test_cli_seed_override_changes_results(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    out_c = tmp_path / "c"
    assert main(["fig2", "--out", str(out_a), *_tiny_overrides()]) == 0
    assert main(["fig2", "--out", str(out_b), *_tiny_overrides(), "--seed", "99"]) == 0
    assert main(["fig2", "--out", str(out_c), *_tiny_overrides(), "--seed", "99"]) == 0
    a = (out_a / "results.csv").read_bytes()
    b = (out_b / "results.csv").read_bytes()
    c = (out_c / "results.csv").read_bytes()
    assert a != b
    assert b == c


def test_cli_fig3_runs(tmp_path):
    out = tmp_path / "fig3"
    code = main(
        ["fig3", "--out", str(out), "--set", "mc.snapshots=2", "--set",
         "mc.sweep=0,5"]
    )
    assert code == 0
    lines = (out / "results.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 3  # two sweep points x three schemes


def test_cli_sweep_uses_configured_variant(tmp_path):
    out = tmp_path / "sweep"
    code = main(
        ["sweep", "--out", str(out), "--set", "pc.algorithm=dtpc",
         *_tiny_overrides()]
    )
    assert code == 0
    assert ",dtpc," in (out / "results.csv").read_text()


def test_cli_config_error_exit_code(tmp_path, capsys):
    code = main(["fig2", "--out", str(tmp_path), "--set", "power.pmax_w=-1"])
    assert code == 2
    assert "power.pmax_w" in capsys.readouterr().err


def test_cli_missing_config_file_exit_code(tmp_path):
    code = main(["fig2", "--config", str(tmp_path / "none.cfg")])
    assert code == 2


def test_cli_io_error_exit_code(tmp_path):
    blocker = tmp_path / "occupied"
    blocker.write_text("a file, not a directory")
    code = main(["fig2", "--out", str(blocker), *_tiny_overrides()])
    assert code == 4


def test_cli_numeric_error_exit_code(tmp_path, capsys):
    # 30 small cells per macro cannot be packed: generation fails
    code = main(
        ["fig2", "--out", str(tmp_path / "x"), "--set", "mc.snapshots=1",
         "--set", "mc.sweep=30"]
    )
    assert code == 3
    assert "numeric error" in capsys.readouterr().err


def test_cli_oracle_check_passes(capsys):
    code = main(["oracle-check", "--count", "25", "--seed", "3"])
    assert code == 0
    assert "25/25 passed" in capsys.readouterr().out


def test_cli_oracle_check_failure_exit_code(monkeypatch, capsys):
    from hetsim import cli as cli_mod

    def fake(count, seed):
        return cli_mod.OracleCheckSummary(
            total=count, failures=[(0, seed, "synthetic mismatch")]
        )

    monkeypatch.setattr(cli_mod, "run_oracle_check", fake)
    assert cli_mod.main(["oracle-check", "--count", "5"]) == 1
    assert "FAIL instance 0" in capsys.readouterr().out


def test_oracle_check_reports_replay_seed():
    summary = run_oracle_check(10, 11)
    assert summary.total == 10
    assert summary.passed == 10
    assert summary.failures == []


def test_oracle_check_rejects_corrupt_gains():
    import numpy as np

    from hetsim.power_control import fixed_point_oracle

    bad = np.array([[1.0, -0.2], [0.1, 1.0]])
    with pytest.raises(ValueError):
        fixed_point_oracle(bad, np.array([0.1, 0.1]), np.array([1.0, 1.0]))
