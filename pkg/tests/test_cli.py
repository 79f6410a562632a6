import numpy as np
import pytest

from horizon_irl.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, main
from horizon_irl.envs import Environment, load_environment, save_environment

from conftest import chain_mdp


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_env(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-env", "--task", "gridworld-hard", "--seed", "4", "--out-dir", str(tmp_path))
    assert code == EXIT_OK
    env = load_environment(out.strip())
    assert env.task == "gridworld-hard" and env.n_states == 225


def test_run_lp(tmp_path, capsys):
    code, out, _ = run(capsys, "run-lp", "--gamma-hat", "0.5", "--percent", "10", "--out-dir", str(tmp_path))
    assert code == EXIT_OK and out.startswith("state_errors=")
    assert (tmp_path / "reward.csv").exists() and (tmp_path / "demonstrations.csv").exists()


def test_run_maxent(tmp_path, capsys):
    code, out, _ = run(capsys, "run-maxent", "--task", "objectworld-linear", "--horizon", "5", "--n-pairs", "50",
                       "--epochs", "5", "--restarts", "1", "--out-dir", str(tmp_path))
    assert code == EXIT_OK and "grad_l1=" in out
    assert (tmp_path / "theta.csv").exists()


def test_cross_validate(tmp_path, capsys):
    code, out, _ = run(capsys, "cross-validate", "--grid-size", "3", "--percent", "10", "--oracle",
                       "--include-reference", "--out-dir", str(tmp_path))
    assert code == EXIT_OK and "chosen=" in out and "oracle=" in out
    assert (tmp_path / "cross_validation.csv").exists()


def test_sweep_and_plot(tmp_path, capsys):
    cfg = tmp_path / "sweep.txt"
    cfg.write_text("n_environments = 2\ndata_percentages = 10\ngrid_size = 3\n")
    out_dir = tmp_path / "s"
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--out-dir", str(out_dir), "--plot")
    assert code == EXIT_OK
    assert (out_dir / "results.csv").exists() and (out_dir / "plots").is_dir()
    code, out, _ = run(capsys, "plot", "--summary", str(out_dir / "summary.csv"), "--results",
                       str(out_dir / "results.csv"), "--out-dir", str(tmp_path / "p"))
    assert code == EXIT_OK and len(out.split()) == 4


def test_plot_empty_warns(tmp_path, capsys):
    s = tmp_path / "summary.csv"
    s.write_text("task,learner,data_percent,candidate,mean_full_errors,std_full_errors,mean_val_errors,"
                 "std_val_errors,n\n")
    code, out, err = run(capsys, "plot", "--summary", str(s), "--out-dir", str(tmp_path / "p"))
    assert code == EXIT_OK and out == "" and "nothing to plot" in err


def test_theory(tmp_path, capsys):
    code, out, _ = run(capsys, "theory", "--n", "100", "--grid-size", "4", "--instances", "20",
                       "--out-dir", str(tmp_path))
    assert code == EXIT_OK
    assert "theorem4 holds in 20/20" in out
    assert len((tmp_path / "theorem1_bound.csv").read_text().splitlines()) == 1 + 5


@pytest.mark.parametrize("argv", [
    ["run-lp"],  # missing --gamma-hat
    ["gen-env", "--task", "chess"],
    ["run-lp", "--gamma-hat", "1.5"],
    ["run-lp", "--gamma-hat", "0.5", "--env", "/nonexistent/env.json"],
    ["sweep", "--config", "/nonexistent/sweep.txt"],
    ["sweep", "--percentages", "ten"],
    ["frobnicate"],
])
def test_invalid(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "--out-dir", str(tmp_path)) if argv[0] != "frobnicate" else run(capsys, *argv)
    assert code == EXIT_INVALID
    assert err


def test_infeasible(tmp_path, capsys):
    # staying is the expert choice in both states, so each would need the larger value
    env = Environment("gridworld-simple", chain_mdp(), np.array([0, 0]), width=2, height=1, seed=0, gamma0=0.9)
    path = save_environment(env, tmp_path / "env.json")
    code, _, err = run(capsys, "run-lp", "--env", str(path), "--n-pairs", "20", "--gamma-hat", "0.9",
                       "--out-dir", str(tmp_path))
    assert code == EXIT_INFEASIBLE and "infeasible" in err
