"""Maximum-entropy IRL over a finite effective horizon.

The reward is linear in state features, ``r = features @ theta``. Trajectories
have ``horizon`` states and are undiscounted. The soft policy comes from the
causal log-sum-exp backward recursion, and the gradient is the usual feature
matching difference between expert counts and expected visitation counts.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .demos import TrajectorySet
from .mdp import TabularMdp, ValidationError
from .seeding import derive_seed, rng


@dataclass(frozen=True)
class RewardWeights:
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        if not np.all(np.isfinite(theta)):
            raise ValidationError("theta must be finite")
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class VisitationTable:
    d: np.ndarray  # (S,)
    per_step: np.ndarray  # (T, S)


@dataclass(frozen=True)
class MaxEntFit:
    """Outcome of :func:`train_maxent` with per-restart diagnostics."""

    weights: RewardWeights
    reward: np.ndarray
    restart: int
    grad_l1: float
    restart_grad_l1: list = field(default_factory=list)


def _check_features(mdp: TabularMdp, features) -> np.ndarray:
    phi = np.asarray(features, dtype=float)
    if phi.ndim != 2 or phi.shape[0] != mdp.n_states:
        raise ValidationError("features must have shape (n_states, n_features)")
    return phi


def feature_expectations(trajs: TrajectorySet, features) -> np.ndarray:
    """Mean over trajectories of the summed per-state features."""
    if len(trajs) == 0:
        raise ValidationError("feature_expectations needs at least one trajectory")
    phi = np.asarray(features, dtype=float)
    return phi[trajs.states].sum(axis=1).mean(axis=0)


def soft_backward(mdp: TabularMdp, theta, features, horizon: int) -> np.ndarray:
    """Per-step soft policies ``pi[t, s, a]`` for a ``horizon``-state rollout.

    The last step has no successor, so its action distribution is uniform.
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    phi = _check_features(mdp, features)
    r = phi @ np.asarray(theta, dtype=float)
    n_s, n_a = mdp.n_states, mdp.n_actions
    pi = np.empty((horizon, n_s, n_a))
    pi[-1] = 1.0 / n_a
    v = r.copy()
    for t in range(horizon - 2, -1, -1):
        q = r[:, None] + mdp.transitions @ v
        v = logsumexp(q, axis=1)
        pi[t] = np.exp(q - v[:, None])
    return pi


def expected_svf(mdp: TabularMdp, policy, horizon: int, rho0) -> VisitationTable:
    """Expected state visitation frequencies of ``policy`` over ``horizon`` steps."""
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.shape != (mdp.n_states,) or np.any(rho0 < 0) or abs(rho0.sum() - 1.0) > 1e-9:
        raise ValidationError("rho0 must be a probability vector over states")
    policy = np.asarray(policy, dtype=float)
    if policy.shape[0] < horizon - 1:
        raise ValidationError("policy table is shorter than the horizon")
    per_step = np.empty((horizon, mdp.n_states))
    per_step[0] = rho0
    for t in range(horizon - 1):
        # mass on (s, a), then through P(s' | s, a)
        sa = per_step[t][:, None] * policy[t]
        per_step[t + 1] = np.einsum("sa,sap->p", sa, mdp.transitions)
    return VisitationTable(per_step.sum(axis=0), per_step)


def maxent_gradient(f_expert, svf: VisitationTable, features) -> np.ndarray:
    return np.asarray(f_expert, dtype=float) - np.asarray(features, dtype=float).T @ svf.d


def start_distribution(trajs: TrajectorySet, n_states: int, kind: str = "uniform") -> np.ndarray:
    """``uniform`` over all states, or the ``empirical`` distribution of first states."""
    if kind == "uniform":
        return np.full(n_states, 1.0 / n_states)
    if kind == "empirical":
        if len(trajs) == 0:
            raise ValidationError("empirical start distribution needs trajectories")
        return np.bincount(trajs.states[:, 0], minlength=n_states) / len(trajs)
    raise ValidationError(f"unknown start distribution {kind!r}")


def _gradient(mdp, phi, f_expert, theta, horizon, rho0):
    pi = soft_backward(mdp, theta, phi, horizon)
    return maxent_gradient(f_expert, expected_svf(mdp, pi, horizon, rho0), phi)


def train_maxent(mdp: TabularMdp, features, trajs: TrajectorySet, horizon: int | None = None,
                 epochs: int = 200, lr: float = 0.05, restarts: int = 5, seed: int = 0,
                 start: str = "uniform") -> MaxEntFit:
    """Gradient ascent from ``restarts`` seeded inits; keep the smallest final ``|grad|_1``.

    Ties go to the lowest restart index. ``horizon`` defaults to the
    trajectory length.
    """
    if epochs < 1 or restarts < 1:
        raise ValidationError("epochs and restarts must be >= 1")
    if len(trajs) == 0:
        raise ValidationError("train_maxent needs at least one trajectory")
    horizon = trajs.horizon if horizon is None else int(horizon)
    phi = _check_features(mdp, features)
    f_expert = feature_expectations(trajs, phi)
    rho0 = start_distribution(trajs, mdp.n_states, start)
    best = None
    norms = []
    for i in range(restarts):
        theta = rng(derive_seed(seed, i)).uniform(-0.5, 0.5, size=phi.shape[1])
        for _ in range(epochs):
            theta = theta + lr * _gradient(mdp, phi, f_expert, theta, horizon, rho0)
        norm = float(np.abs(_gradient(mdp, phi, f_expert, theta, horizon, rho0)).sum())
        norms.append(norm)
        if best is None or norm < best[1]:
            best = (i, norm, theta)
    i, norm, theta = best
    reward = np.repeat((phi @ theta)[:, None], mdp.n_actions, axis=1)
    return MaxEntFit(RewardWeights(theta), reward, i, norm, norms)


def save_theta_csv(weights: RewardWeights, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_index", "weight"])
        for k, v in enumerate(weights.theta):
            w.writerow([k, format(float(v), ".17g")])
    return path


def load_theta_csv(path) -> RewardWeights:
    with Path(path).open(newline="") as fh:
        rows = sorted((int(r["feature_index"]), float(r["weight"])) for r in csv.DictReader(fh))
    return RewardWeights(np.array([v for _, v in rows]))
