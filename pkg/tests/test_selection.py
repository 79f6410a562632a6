import numpy as np
import pytest

from horizon_irl.demos import DemonstrationSet, sample_pairs
from horizon_irl.envs import GridSpec, make_gridworld, make_task
from horizon_irl.mdp import ValidationError
from horizon_irl.selection import (CandidateGrid, LearnerConfig, SelectionResult, cross_validate, oracle_select,
                                   state_error_count)


@pytest.fixture(scope="module")
def small():
    mdp, expert, _ = make_gridworld(GridSpec(5, 5, 2, seed=1), 0.99)
    return mdp, expert, sample_pairs(mdp, expert, 40, 3)


def test_error_counts():
    assert state_error_count([0, 1, 2, 3], [0, 1, 2, 3]) == 0
    assert state_error_count([0, 1, 2, 3], [1, 2, 3, 0]) == 4
    assert state_error_count([0, 1, 2, 3], [0, 0, 2, 3], states=[0, 1]) == 1
    with pytest.raises(ValidationError):
        state_error_count([0, 1], [0])


def test_discount_grid():
    grid = CandidateGrid.discounts(20, 0.99)
    assert len(grid) == 20
    assert grid.values[0] == pytest.approx(0.99 / 40)
    assert grid.values[-1] < 0.99
    np.testing.assert_allclose(np.diff(grid.values), 0.99 / 20)
    with_ref = grid.with_value(0.99)
    assert len(with_ref) == 21 and with_ref.values[-1] == 0.99


def test_horizon_grid():
    assert CandidateGrid.horizons(20, 20).values == tuple(range(1, 21))
    g = CandidateGrid.horizons(5, 20)
    assert g.values[0] == 1 and g.values[-1] == 20 and len(g) == 5
    assert CandidateGrid.horizons(10, 3).values == (1, 2, 3)


def test_grid_validation():
    with pytest.raises(ValidationError):
        CandidateGrid((0.5, 0.3))
    with pytest.raises(ValidationError):
        CandidateGrid((0.0, 0.5))
    with pytest.raises(ValidationError):
        CandidateGrid((1.5,), "horizon", 5)


def test_synthetic_argmin(monkeypatch):
    import horizon_irl.selection as sel

    monkeypatch.setattr(sel, "learn_policy", lambda mdp, data, value, *a, **k: np.full(mdp.n_states, -1))
    monkeypatch.setattr(sel, "_labels", lambda val, mdp: (np.arange(0), np.arange(0)))
    errors = iter([5, 2, 7])
    monkeypatch.setattr(sel, "state_error_count", lambda *a, **k: next(errors))
    mdp, expert, _ = make_gridworld(GridSpec(3, 3, 1))
    demos = sample_pairs(mdp, expert, 10, 0)
    res = sel.cross_validate(mdp, demos, CandidateGrid((0.3, 0.6, 0.9)), "lp")
    assert res.chosen == 0.6


def test_ties_go_to_smallest(monkeypatch):
    import horizon_irl.selection as sel

    monkeypatch.setattr(sel, "learn_policy", lambda mdp, *a, **k: np.zeros(mdp.n_states, dtype=int))
    mdp, expert, _ = make_gridworld(GridSpec(3, 3, 1))
    res = sel.oracle_select(mdp, sample_pairs(mdp, expert, 10, 0), expert, CandidateGrid((0.2, 0.4, 0.8)))
    assert res.chosen == 0.2


def test_single_candidate(small):
    mdp, expert, demos = small
    grid = CandidateGrid((0.5,))
    assert cross_validate(mdp, demos, grid, "lp", seed=1, expert=expert).chosen == 0.5
    assert oracle_select(mdp, demos, expert, grid, "lp").chosen == 0.5


def test_selection_dominance_and_determinism(small):
    mdp, expert, demos = small
    grid = CandidateGrid.discounts(5, 0.99)
    a = cross_validate(mdp, demos, grid, "lp", seed=2, expert=expert)
    b = cross_validate(mdp, demos, grid, "lp", seed=2, expert=expert)
    assert a == b
    assert a.per_candidate_validation_errors[a.chosen_index] == min(a.per_candidate_validation_errors)


def test_oracle_with_reference_and_superset(small):
    mdp, expert, _ = small
    full = DemonstrationSet(np.stack([np.arange(25), expert], axis=1), 25, 9)
    grid = CandidateGrid.discounts(4, 0.99)
    wide = grid.with_value(0.99)
    narrow_res = oracle_select(mdp, full, expert, grid, "lp")
    wide_res = oracle_select(mdp, full, expert, wide, "lp")
    ref_err = wide_res.per_candidate_full_errors[wide.values.index(0.99)]
    assert min(wide_res.per_candidate_full_errors) <= ref_err
    assert min(wide_res.per_candidate_full_errors) <= min(narrow_res.per_candidate_full_errors)


def test_maxent_cross_validation(small):
    mdp, expert, _ = small
    demos = sample_pairs(mdp, expert, 50, 5)
    cfg = LearnerConfig(epochs=10, restarts=1)
    res = cross_validate(mdp, demos, CandidateGrid((2, 5), "horizon", 5), "maxent", cfg, 0, expert, np.eye(25))
    assert res.chosen in (2, 5)
    assert all(0 <= e <= 25 for e in res.per_candidate_full_errors)
    with pytest.raises(ValidationError):
        cross_validate(mdp, demos, CandidateGrid((2,), "horizon", 5), "maxent", cfg, 0, None, np.eye(25))


def test_wrong_grid_kind(small):
    mdp, expert, demos = small
    with pytest.raises(ValidationError):
        cross_validate(mdp, demos, CandidateGrid((2,), "horizon", 5), "lp")


def test_too_few_pairs_for_split(small):
    mdp, expert, _ = small
    with pytest.raises(ValidationError):
        cross_validate(mdp, sample_pairs(mdp, expert, 1, 0), CandidateGrid((0.5,)), "lp")


def test_csv(tmp_path):
    res = SelectionResult(0.5, (0.25, 0.5), [3, 1], [4, 2])
    text = res.to_csv(tmp_path / "cv.csv").read_text().splitlines()
    assert text == ["candidate,validation_errors,full_state_errors", "0.25,3,4", "0.5,1,2"]
