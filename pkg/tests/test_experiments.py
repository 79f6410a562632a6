import numpy as np
import pytest

from horizon_irl import experiments as ex
from horizon_irl.mdp import ValidationError


def tiny(tmp_path, **kw):
    base = dict(task="gridworld-simple", learner="lp", data_percentages=(10.0,), grid_size=3,
                n_environments=2, out_dir=str(tmp_path / "sweep"))
    base.update(kw)
    return ex.ExperimentConfig(**base).validate()


def record(e, cand, full, val=0, task="t", learner="lp", pct=10.0):
    return ex.ExperimentRecord(task, learner, e, 0, pct, 10, cand, val, full, full)


class TestSummary:
    def test_single_record(self):
        (row,) = ex.summarize([record(0, 0.5, 7)])
        assert row["mean_full_errors"] == 7 and row["std_full_errors"] == 0 and row["n"] == 1

    def test_mean_std(self):
        (row,) = ex.summarize([record(0, 0.5, 2), record(1, 0.5, 4)])
        assert row["mean_full_errors"] == 3.0 and row["std_full_errors"] == 1.0

    def test_empty(self):
        with pytest.raises(ValidationError):
            ex.summarize([])

    def test_round_trip(self, tmp_path):
        recs = [record(0, 0.5, 2), record(1, 0.5, 5), record(0, 0.25, 1)]
        rows = ex.read_summary(ex.emit_summary_csv(recs, tmp_path / "s.csv"))
        assert [r["candidate"] for r in rows] == [0.25, 0.5]
        assert rows[1]["mean_full_errors"] == 3.5

    def test_cell_selection_ties(self):
        recs = [record(0, 0.5, 3, val=1), record(0, 0.25, 3, val=1), record(0, 0.75, 4, val=0)]
        (c,) = ex.cell_selections(recs, reference=0.75)
        assert c.cv_choice == 0.75 and c.oracle_choice == 0.25 and c.reference_error == 4


class TestConfig:
    def test_parse(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("# sweep\ntask = gridworld-hard\nlearner=maxent\ndata_percentages = 10, 50\n"
                     "grid_size = 4  # small\ninclude_reference = yes\nmargin = none\n")
        cfg = ex.load_config(p)
        assert cfg.task == "gridworld-hard" and cfg.learner == "maxent"
        assert cfg.data_percentages == (10.0, 50.0) and cfg.grid_size == 4
        assert cfg.include_reference and cfg.margin is None

    def test_overrides_win(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("grid_size = 4\n")
        assert ex.load_config(p, grid_size=7, task=None).grid_size == 7

    def test_dump_round_trip(self, tmp_path):
        cfg = ex.ExperimentConfig(data_percentages=(10.0, 30.0), margin=0.5)
        p = tmp_path / "c.txt"
        p.write_text(ex.dump_config(cfg))
        assert ex.load_config(p) == cfg

    @pytest.mark.parametrize("text", ["colour = red\n", "grid_size = many\n", "task = chess\n",
                                      "gamma0 = 1.5\n", "include_reference = maybe\n", "no equals sign\n",
                                      "data_percentages = 10, -5\n"])
    def test_errors(self, tmp_path, text):
        p = tmp_path / "c.txt"
        p.write_text(text)
        with pytest.raises(ValidationError):
            ex.load_config(p)

    def test_grid_with_reference(self):
        cfg = ex.ExperimentConfig(grid_size=4, include_reference=True)
        assert cfg.grid().values[-1] == cfg.gamma0 and len(cfg.grid()) == 5
        h = ex.ExperimentConfig(learner="maxent", grid_size=4, horizon0=8, include_reference=True).grid()
        assert 8 in h.values


class TestSweep:
    def test_records_and_files(self, tmp_path):
        cfg = tiny(tmp_path)
        recs = ex.run_sweep(cfg)
        assert len(recs) == 2 * 3
        out = tmp_path / "sweep"
        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == ",".join(ex.RESULT_COLUMNS)
        assert ex.read_results(out / "results.csv") == recs
        assert all(r.n_pairs == 10 for r in recs)
        assert len((out / "timings.csv").read_text().splitlines()) == 1 + 2

    def test_byte_identical_rerun(self, tmp_path):
        a = ex.run_sweep(tiny(tmp_path / "a"))
        b = ex.run_sweep(tiny(tmp_path / "b"))
        assert a == b
        for name in ("results.csv", "summary.csv"):
            assert (tmp_path / "a/sweep" / name).read_bytes() == (tmp_path / "b/sweep" / name).read_bytes()

    def test_resume_matches_uninterrupted(self, tmp_path):
        full = ex.run_sweep(tiny(tmp_path / "full"))
        part_cfg = tiny(tmp_path / "part")
        calls = []
        # interrupt after the first cell
        with pytest.raises(KeyboardInterrupt):
            ex.run_sweep(part_cfg, lambda batch: calls.append(batch) or (_ for _ in ()).throw(KeyboardInterrupt))
        seen = []
        resumed = ex.run_sweep(part_cfg, seen.append)
        assert len(seen) == 1
        assert resumed == full
        assert ((tmp_path / "part/sweep/results.csv").read_bytes()
                == (tmp_path / "full/sweep/results.csv").read_bytes())

    def test_refuses_other_config(self, tmp_path):
        ex.run_sweep(tiny(tmp_path, n_environments=1))
        with pytest.raises(ValidationError):
            ex.run_sweep(tiny(tmp_path, n_environments=1, grid_size=2))

    def test_seeds_are_distinct(self, tmp_path):
        cfg = tiny(tmp_path, n_environments=5)
        seeds = {cfg.env_seed(e) for e in range(5)}
        assert len(seeds) == 5
        assert cfg.env_seed(0) != tiny(tmp_path, task="gridworld-hard").env_seed(0)

    def test_n_pairs(self):
        assert ex.n_pairs_for(30, 100) == 30 and ex.n_pairs_for(200, 225) == 450
