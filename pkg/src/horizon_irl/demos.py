"""Expert demonstrations: sampling, policy estimation from counts, splitting."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mdp import TabularMdp, ValidationError
from .seeding import rng


@dataclass(frozen=True)
class DemonstrationSet:
    """``N`` expert ``(state, action)`` pairs for an MDP with the given shape."""

    pairs: np.ndarray  # (N, 2) int
    n_states: int
    n_actions: int
    seed: int = 0

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=int).reshape(-1, 2)
        if pairs.size and (pairs[:, 0].min() < 0 or pairs[:, 0].max() >= self.n_states
                           or pairs[:, 1].min() < 0 or pairs[:, 1].max() >= self.n_actions):
            raise ValidationError("demonstration pair out of range")
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    @property
    def states(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def actions(self) -> np.ndarray:
        return self.pairs[:, 1]

    @property
    def count_matrix(self) -> np.ndarray:
        counts = np.zeros((self.n_states, self.n_actions), dtype=int)
        np.add.at(counts, (self.pairs[:, 0], self.pairs[:, 1]), 1)
        return counts

    def subset(self, index) -> "DemonstrationSet":
        return DemonstrationSet(self.pairs[np.asarray(index, dtype=int)], self.n_states,
                                self.n_actions, self.seed)


@dataclass(frozen=True)
class TrajectorySet:
    """Equal-length expert rollouts; ``states``/``actions`` have shape ``(n, horizon)``."""

    states: np.ndarray
    actions: np.ndarray
    horizon: int

    def __post_init__(self):
        s = np.asarray(self.states, dtype=int).reshape(-1, self.horizon)
        a = np.asarray(self.actions, dtype=int).reshape(-1, self.horizon)
        if s.shape != a.shape:
            raise ValidationError("states and actions must have the same shape")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "actions", a)

    def __len__(self):
        return self.states.shape[0]

    def subset(self, index) -> "TrajectorySet":
        index = np.asarray(index, dtype=int)
        return TrajectorySet(self.states[index], self.actions[index], self.horizon)

    def to_pairs(self, n_states: int, n_actions: int) -> DemonstrationSet:
        return DemonstrationSet(np.stack([self.states.ravel(), self.actions.ravel()], axis=1),
                                n_states, n_actions)


def sample_pairs(mdp: TabularMdp, expert, n: int, seed: int) -> DemonstrationSet:
    """``n`` states drawn uniformly with replacement, labelled by the expert."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    expert = np.asarray(expert, dtype=int)
    states = rng(seed).integers(mdp.n_states, size=n)
    return DemonstrationSet(np.stack([states, expert[states]], axis=1), mdp.n_states,
                            mdp.n_actions, seed)


def estimate_policy(demos: DemonstrationSet) -> np.ndarray:
    """0/1 policy matrix: one-hot at the strictly unique most frequent action, else zeros."""
    counts = demos.count_matrix
    est = np.zeros_like(counts)
    top = counts.max(axis=1)
    unique = (counts == top[:, None]).sum(axis=1) == 1
    rows = np.flatnonzero(unique & (top > 0))
    est[rows, counts[rows].argmax(axis=1)] = 1
    return est


def demonstrated_actions(est: np.ndarray) -> np.ndarray:
    """Per-state estimated action, ``-1`` where the estimate is undecided."""
    est = np.asarray(est)
    return np.where(est.sum(axis=1) == 1, est.argmax(axis=1), -1)


def sample_trajectories(mdp: TabularMdp, expert, n_pairs: int, horizon: int, seed: int) -> TrajectorySet:
    """``n_pairs // horizon`` expert rollouts of ``horizon`` states from uniform starts."""
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    expert = np.asarray(expert, dtype=int)
    n_traj = max(n_pairs, 0) // horizon
    g = rng(seed)
    states = np.zeros((n_traj, horizon), dtype=int)
    if n_traj:
        states[:, 0] = g.integers(mdp.n_states, size=n_traj)
        cdf = np.cumsum(mdp.transitions, axis=2)
        for t in range(1, horizon):
            prev = states[:, t - 1]
            u = g.random(n_traj)
            rows = cdf[prev, expert[prev]]
            nxt = (u[:, None] >= rows).sum(axis=1)
            states[:, t] = np.minimum(nxt, mdp.n_states - 1)
    return TrajectorySet(states, expert[states], horizon)


def split_train_validation(demos: DemonstrationSet, train_fraction: float = 0.8, seed: int = 0):
    """Shuffle pairs and cut at ``floor(train_fraction * N)``."""
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError("train_fraction must be in (0, 1)")
    order = rng(seed).permutation(len(demos))
    cut = int(np.floor(train_fraction * len(demos)))
    return demos.subset(order[:cut]), demos.subset(order[cut:])


def split_trajectories(trajs: TrajectorySet, train_fraction: float = 0.8, seed: int = 0):
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError("train_fraction must be in (0, 1)")
    order = rng(seed).permutation(len(trajs))
    cut = int(np.floor(train_fraction * len(trajs)))
    return trajs.subset(order[:cut]), trajs.subset(order[cut:])


def save_demonstrations(demos: DemonstrationSet, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "action"])
        w.writerows(demos.pairs.tolist())
    return path


def load_demonstrations(path, n_states: int, n_actions: int) -> DemonstrationSet:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["state", "action"]:
            raise ValidationError("demonstration CSV must have header 'state,action'")
        rows = [(int(r["state"]), int(r["action"])) for r in reader]
    return DemonstrationSet(np.array(rows, dtype=int).reshape(-1, 2), n_states, n_actions)
