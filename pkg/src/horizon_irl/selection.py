"""Choosing the effective discount (or horizon): error counts, cross-validation, oracle."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .demos import (DemonstrationSet, TrajectorySet, demonstrated_actions, estimate_policy,
                    sample_trajectories, split_train_validation, split_trajectories)
from .lp_irl import InfeasibleError, lp_irl
from .maxent import train_maxent
from .mdp import TabularMdp, ValidationError, finite_horizon_policy, optimal_policy

LEARNERS = ("lp", "maxent")


def state_error_count(induced, expert, states=None) -> int:
    induced = np.asarray(induced)
    expert = np.asarray(expert)
    if induced.shape != expert.shape:
        raise ValidationError("policies must cover the same states")
    if states is None:
        return int(np.sum(induced != expert))
    states = np.asarray(states, dtype=int)
    return int(np.sum(induced[states] != expert[states]))


@dataclass(frozen=True)
class CandidateGrid:
    """Sorted candidate discounts (``mode="discount"``) or horizons (``mode="horizon"``).

    Discounts lie in ``(0, bound]`` and horizons in ``[1, bound]``; the closed
    upper end lets a grid carry the ground-truth value itself.
    """

    values: tuple
    mode: str = "discount"
    bound: float = 0.99

    def __post_init__(self):
        if self.mode not in ("discount", "horizon"):
            raise ValidationError("mode must be 'discount' or 'horizon'")
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size == 0:
            raise ValidationError("candidate grid is empty")
        if np.any(np.diff(vals) <= 0):
            raise ValidationError("candidate values must be strictly increasing")
        if self.mode == "discount":
            if not 0 < self.bound < 1:
                raise ValidationError("discount bound must be in (0, 1)")
            if vals[0] <= 0 or vals[-1] > self.bound:
                raise ValidationError("discount candidates must lie in (0, bound]")
            object.__setattr__(self, "values", tuple(float(v) for v in vals))
        else:
            if np.any(vals != np.round(vals)) or vals[0] < 1 or vals[-1] > self.bound:
                raise ValidationError("horizon candidates must be integers in [1, bound]")
            object.__setattr__(self, "values", tuple(int(v) for v in vals))

    @classmethod
    def discounts(cls, m: int, gamma0: float = 0.99) -> "CandidateGrid":
        """``m`` evenly spaced points ``(i + 1/2) gamma0 / m``, strictly inside ``(0, gamma0)``."""
        if m < 1:
            raise ValidationError("grid size must be >= 1")
        return cls(tuple((i + 0.5) * gamma0 / m for i in range(m)), "discount", gamma0)

    @classmethod
    def horizons(cls, m: int, horizon0: int = 20) -> "CandidateGrid":
        """Up to ``m`` evenly spread integers in ``[1, horizon0]``."""
        if m < 1 or horizon0 < 1:
            raise ValidationError("grid size and horizon0 must be >= 1")
        vals = np.unique(np.round(np.linspace(1, horizon0, min(m, horizon0))).astype(int))
        return cls(tuple(int(v) for v in vals), "horizon", horizon0)

    def with_value(self, value) -> "CandidateGrid":
        return CandidateGrid(tuple(sorted(set(self.values) | {value})), self.mode, self.bound)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LearnerConfig:
    """Hyper-parameters shared by both learners; unused ones are ignored."""

    r_max: float = 1.0
    margin: float | None = None
    epochs: int = 200
    lr: float = 0.05
    restarts: int = 5
    start: str = "uniform"
    train_fraction: float = 0.8


@dataclass(frozen=True)
class SelectionResult:
    chosen: float
    candidates: tuple
    per_candidate_validation_errors: list
    per_candidate_full_errors: list
    infeasible: list = field(default_factory=list)

    @property
    def chosen_index(self) -> int:
        return self.candidates.index(self.chosen)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["candidate", "validation_errors", "full_state_errors"])
            for c, v, f in zip(self.candidates, self.per_candidate_validation_errors,
                               self.per_candidate_full_errors):
                w.writerow([format(c, ".17g") if isinstance(c, float) else c, v, f])
        return path


def _argmin_smallest(errors) -> int:
    # np.argmin returns the first minimum, i.e. the smallest candidate
    return int(np.argmin(np.asarray(errors)))


def learn_policy(mdp: TabularMdp, data, value, learner: str, config: LearnerConfig,
                 features=None, seed: int = 0):
    """Fit the learner at one candidate and return the induced greedy policy.

    ``data`` is a :class:`DemonstrationSet` for ``lp`` and a
    :class:`TrajectorySet` for ``maxent``. Raises :class:`InfeasibleError`
    when LP-IRL has no solution.
    """
    if learner == "lp":
        reward = lp_irl(mdp, data, float(value), r_max=config.r_max, margin=config.margin)
        return optimal_policy(mdp, float(value), reward=reward)[0]
    if learner == "maxent":
        if features is None:
            raise ValidationError("maxent needs a feature matrix")
        fit = train_maxent(mdp, features, data, int(value), epochs=config.epochs, lr=config.lr,
                           restarts=config.restarts, seed=seed, start=config.start)
        return finite_horizon_policy(mdp, int(value), fit.reward)
    raise ValidationError(f"learner must be one of {LEARNERS}")


def _labels(data, mdp):
    if isinstance(data, TrajectorySet):
        data = data.to_pairs(mdp.n_states, mdp.n_actions)
    acts = demonstrated_actions(estimate_policy(data))
    states = np.flatnonzero(acts >= 0)
    return states, acts


def _check_learner_inputs(learner, demos, grid, expert):
    if learner not in LEARNERS:
        raise ValidationError(f"learner must be one of {LEARNERS}")
    if len(grid) == 0:
        raise ValidationError("candidate grid is empty")
    if len(demos) == 0:
        raise ValidationError("no demonstrations")
    want = "discount" if learner == "lp" else "horizon"
    if grid.mode != want:
        raise ValidationError(f"learner {learner!r} needs a {want} grid")
    if learner == "maxent" and expert is None:
        raise ValidationError("maxent selection resamples trajectories and needs the expert")


def _trajectories(mdp, expert, n_pairs, horizon, seed):
    return sample_trajectories(mdp, expert, n_pairs, int(horizon), seed)


def cross_validate(mdp: TabularMdp, demos: DemonstrationSet, grid: CandidateGrid, learner: str = "lp",
                   config: LearnerConfig | None = None, seed: int = 0, expert=None,
                   features=None) -> SelectionResult:
    """80/20 split, fit on the training part, score on held-out states.

    For ``lp`` the split is over pairs. For ``maxent`` a fresh set of
    ``len(demos)`` expert pairs is rolled out as length-``T`` trajectories
    for each candidate ``T`` and split by trajectory. Full-state errors (when
    ``expert`` is given) describe the training-split model.
    """
    config = config or LearnerConfig()
    _check_learner_inputs(learner, demos, grid, expert)
    val_errs, full_errs, infeasible = [], [], []
    if learner == "lp":
        train, val = split_train_validation(demos, config.train_fraction, seed)
        if len(train) == 0 or len(val) == 0:
            raise ValidationError("too few demonstrations for an 80/20 split")
    for value in grid.values:
        if learner == "maxent":
            trajs = _trajectories(mdp, expert, len(demos), value, seed)
            if len(trajs) < 2:
                raise ValidationError(f"too few trajectories of length {value} to split")
            train, val = split_trajectories(trajs, config.train_fraction, seed)
        v_states, v_acts = _labels(val, mdp)
        try:
            pi = learn_policy(mdp, train, value, learner, config, features, seed)
        except InfeasibleError:
            infeasible.append(True)
            val_errs.append(int(v_states.size))
            full_errs.append(mdp.n_states)
            continue
        infeasible.append(False)
        val_errs.append(state_error_count(pi, v_acts, v_states))
        full_errs.append(state_error_count(pi, expert) if expert is not None else -1)
    best = _argmin_smallest(val_errs)
    return SelectionResult(grid.values[best], grid.values, val_errs, full_errs, infeasible)


def oracle_select(mdp: TabularMdp, demos: DemonstrationSet, expert, grid: CandidateGrid,
                  learner: str = "lp", config: LearnerConfig | None = None, seed: int = 0,
                  features=None) -> SelectionResult:
    """Fit on all data and score every state against the true expert."""
    config = config or LearnerConfig()
    _check_learner_inputs(learner, demos, grid, expert)
    errs, infeasible = [], []
    for value in grid.values:
        data = demos if learner == "lp" else _trajectories(mdp, expert, len(demos), value, seed)
        if len(data) == 0:
            raise ValidationError(f"too few pairs for trajectories of length {value}")
        try:
            pi = learn_policy(mdp, data, value, learner, config, features, seed)
        except InfeasibleError:
            infeasible.append(True)
            errs.append(mdp.n_states)
            continue
        infeasible.append(False)
        errs.append(state_error_count(pi, expert))
    best = _argmin_smallest(errs)
    return SelectionResult(grid.values[best], grid.values, list(errs), list(errs), infeasible)
