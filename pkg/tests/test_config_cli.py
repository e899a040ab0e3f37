import subprocess
import sys

import pytest

from overtake_rl import ConfigError, EpsilonSchedule, load_config, to_ini_text
from overtake_rl.cli import main

TINY = """\
[env]
n_per_lane = 2
road_length_m = 200.0

[params]
episodes = 3
steps_per_episode = 40

[experiment]
replications = 2
base_seed = 1
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY)
    return path


# --- config loading ---------------------------------------------------------

def test_defaults_without_file():
    resolved = load_config()
    assert resolved.env.n_per_lane == 5
    assert resolved.params.alpha == 0.9
    assert resolved.params.beta == 0.2
    assert resolved.params.episodes == 200
    assert resolved.params.steps_per_episode == 1000
    assert resolved.params.epsilon_schedule == EpsilonSchedule.decaying(0.1, 0.99)
    assert resolved.experiment.replications == 20


def test_file_and_overrides_precedence(tiny_config):
    resolved = load_config(tiny_config)
    assert resolved.env.n_per_lane == 2  # file beats default
    resolved = load_config(tiny_config, overrides=["env.n_per_lane=7", "params.alpha=0.5"])
    assert resolved.env.n_per_lane == 7  # override beats file
    assert resolved.params.alpha == 0.5
    assert resolved.params.episodes == 3  # untouched file value survives


def test_unknown_keys_rejected(tmp_path, tiny_config):
    bad = tmp_path / "bad.ini"
    bad.write_text("[env]\nn_lanes = 3\n")
    with pytest.raises(ConfigError) as exc:
        load_config(bad)
    assert "n_lanes" in str(exc.value)

    bad.write_text("[road]\nlength = 3\n")
    with pytest.raises(ConfigError):
        load_config(bad)

    with pytest.raises(ConfigError):
        load_config(tiny_config, overrides=["env.nope=1"])
    with pytest.raises(ConfigError):
        load_config(tiny_config, overrides=["alpha=0.5"])  # missing section
    with pytest.raises(ConfigError):
        load_config(tiny_config, overrides=["params.alpha:0.5"])  # missing '='


def test_type_errors_name_the_key(tiny_config):
    with pytest.raises(ConfigError) as exc:
        load_config(tiny_config, overrides=["params.episodes=many"])
    assert "params.episodes" in str(exc.value)
    with pytest.raises(ConfigError) as exc:
        load_config(tiny_config, overrides=["env.include_ego_lane=maybe"])
    assert "env.include_ego_lane" in str(exc.value)


def test_schedule_keys_parse(tiny_config):
    resolved = load_config(
        tiny_config,
        overrides=[
            "params.epsilon_schedule=fixed(0.2)",
            "experiment.schedules=decay(0.1, 0.9), fixed(0.3)",
        ],
    )
    assert resolved.params.epsilon_schedule == EpsilonSchedule.fixed(0.2)
    assert resolved.experiment.schedules == (
        EpsilonSchedule.decaying(0.1, 0.9),
        EpsilonSchedule.fixed(0.3),
    )


def test_resolved_config_roundtrip(tmp_path, tiny_config):
    resolved = load_config(tiny_config, overrides=["params.alpha=0.7"])
    text = to_ini_text(resolved)
    echoed = tmp_path / "echo.ini"
    echoed.write_text(text)
    again = load_config(echoed)
    assert again == resolved
    assert to_ini_text(again) == text


# --- cli: train -------------------------------------------------------------

def test_cmd_train_happy_path(tiny_config, tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["train", "--config", str(tiny_config), "--out", str(out), "--no-figures"])
    assert rc == 0
    for name in ("resolved_config.ini", "qtable.csv", "records.csv"):
        assert (out / name).is_file() and (out / name).stat().st_size > 0
    stdout = capsys.readouterr().out
    assert "[env]" in stdout  # resolved config echoed before computation
    header = (out / "records.csv").read_text().splitlines()[0]
    assert header == "replication,episode,collision,distance_m,consumed_time_s,cumulative_reward,epsilon_used"


def test_cmd_train_renders_figures(tiny_config, tmp_path):
    out = tmp_path / "run"
    rc = main(["train", "--config", str(tiny_config), "--out", str(out)])
    assert rc == 0
    for name in ("collision_conditions.png", "learning_curves.png"):
        png = out / name
        assert png.is_file()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_cmd_train_invalid_alpha_exits_1(tiny_config, tmp_path, capsys):
    rc = main(["train", "--config", str(tiny_config), "--out", str(tmp_path / "x"),
               "--set", "params.alpha=1.5", "--no-figures"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "params.alpha" in err and "[0, 1]" in err


def test_cmd_train_missing_config_exits_2(tmp_path, capsys):
    rc = main(["train", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "nope.ini" in capsys.readouterr().err


def test_cmd_train_byte_identical_reruns(tiny_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--config", str(tiny_config), "--out", str(out1), "--no-figures"]) == 0
    assert main(["train", "--config", str(tiny_config), "--out", str(out2), "--no-figures"]) == 0
    for name in ("records.csv", "qtable.csv", "resolved_config.ini"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_provenance_written_before_crash(tiny_config, tmp_path, monkeypatch):
    import overtake_rl.cli as cli

    def boom(*a, **kw):
        raise RuntimeError("training exploded")

    monkeypatch.setattr(cli, "train", boom)
    out = tmp_path / "crashed"
    with pytest.raises(RuntimeError):
        main(["train", "--config", str(tiny_config), "--out", str(out), "--no-figures"])
    assert (out / "resolved_config.ini").is_file()


# --- cli: eval --------------------------------------------------------------

def zero_qtable(tmp_path, n_d=3, n_v=1):
    path = tmp_path / "zero_qtable.csv"
    path.write_text(f"n_d={n_d},n_v={n_v},algo=q-learning,params_hash=0\n")
    return path


def test_cmd_eval_zero_table_empty_road(tmp_path, capsys):
    qpath = zero_qtable(tmp_path)
    out = tmp_path / "eval"
    rc = main(["eval", "--qtable", str(qpath), "--out", str(out), "--episodes", "2",
               "--set", "env.n_per_lane=0", "--trajectory", "traj.csv", "--no-figures"])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "collision_rate: 0.0000" in stdout
    traj_lines = (out / "traj.csv").read_text().splitlines()
    assert traj_lines[0] == "step,x_e,v_e,lane,action_id,reward,terminal"
    body = [line.split(",") for line in traj_lines[1:]]
    assert all(row[4] == "1" for row in body)  # constant lane-1 accelerate
    assert body[-1][6] == "goal-reached"
    records = (out / "records.csv").read_text().splitlines()[1:]
    assert len(records) == 2
    assert all(row.split(",")[2] == "0" for row in records)


def test_cmd_eval_header_mismatch_names_both(tmp_path, capsys):
    qpath = zero_qtable(tmp_path, n_d=10, n_v=5)
    rc = main(["eval", "--qtable", str(qpath), "--out", str(tmp_path / "e"), "--no-figures"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "n_d=10" in err and "n_d=3" in err


def test_cmd_eval_algo_shorthand_checks_header(tmp_path, capsys):
    qpath = zero_qtable(tmp_path)  # header says q-learning
    rc = main(["eval", "--qtable", str(qpath), "--out", str(tmp_path / "e"),
               "--algo", "sarsa", "--no-figures"])
    assert rc == 1
    assert "q-learning" in capsys.readouterr().err


def test_cmd_eval_state_width_mismatch(tmp_path, capsys):
    qpath = tmp_path / "wide.csv"
    qpath.write_text(
        "n_d=3,n_v=1,algo=q-learning,params_hash=0\n"
        "0,0,0,0,0,0,0,0,2,1,-5.0\n"  # 9 state indexes (ego-lane variant)
    )
    rc = main(["eval", "--qtable", str(qpath), "--out", str(tmp_path / "e"), "--no-figures"])
    assert rc == 1
    assert "9" in capsys.readouterr().err


def test_cmd_eval_deterministic(tiny_config, tmp_path, capsys):
    train_out = tmp_path / "t"
    assert main(["train", "--config", str(tiny_config), "--out", str(train_out),
                 "--no-figures"]) == 0
    outs = []
    stats = []
    for name in ("e1", "e2"):
        out = tmp_path / name
        rc = main(["eval", "--qtable", str(train_out / "qtable.csv"), "--config",
                   str(tiny_config), "--out", str(out), "--episodes", "3", "--seed", "5",
                   "--no-figures"])
        assert rc == 0
        outs.append((out / "records.csv").read_bytes())
        stats.append(capsys.readouterr().out.splitlines()[-4:])
    assert outs[0] == outs[1]
    assert stats[0] == stats[1]


# --- cli: compare / sweep ---------------------------------------------------

def test_cmd_compare_outputs(tiny_config, tmp_path):
    out = tmp_path / "cmp"
    rc = main(["compare", "--config", str(tiny_config), "--out", str(out)])
    assert rc == 0
    for algo in ("q-learning", "sarsa"):
        assert (out / algo / "records.csv").is_file()
        assert (out / algo / "summary.json").is_file()
    assert (out / "trend_report.json").is_file()
    assert (out / "collision_conditions.png").is_file()
    assert (out / "distance_time.png").is_file()


def test_cmd_sweep_outputs(tiny_config, tmp_path, capsys):
    out = tmp_path / "swp"
    rc = main(["sweep", "--config", str(tiny_config), "--out", str(out), "--no-figures",
               "--set", "experiment.schedules=decay(0.1, 0.9), fixed(0.2)"])
    assert rc == 0
    assert (out / "arm0_decay_0.1_0.9" / "records.csv").is_file()
    assert (out / "arm1_fixed_0.2" / "summary.json").is_file()
    assert (out / "trend_report.json").is_file()
    assert "trailing collision rate" in capsys.readouterr().out


def test_cmd_sweep_empty_schedules_exits_1(tiny_config, tmp_path, capsys):
    rc = main(["sweep", "--config", str(tiny_config), "--out", str(tmp_path / "x"),
               "--set", "experiment.schedules=", "--no-figures"])
    assert rc == 1
    assert "empty sweep" in capsys.readouterr().err


def test_seed_flag_overrides_config(tiny_config, tmp_path):
    out1 = tmp_path / "s1"
    out2 = tmp_path / "s2"
    assert main(["train", "--config", str(tiny_config), "--out", str(out1), "--seed", "42",
                 "--no-figures"]) == 0
    assert main(["train", "--config", str(tiny_config), "--out", str(out2), "--seed", "43",
                 "--no-figures"]) == 0
    assert (out1 / "records.csv").read_bytes() != (out2 / "records.csv").read_bytes()
    assert "seed = 42" in (out1 / "resolved_config.ini").read_text()


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "overtake_rl.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("train", "eval", "compare", "sweep"):
        assert cmd in proc.stdout
