"""scikit-learn style wrappers around the two IRL learners.

``fit`` takes demonstrations (``(N, 2)`` state/action pairs for LP-IRL,
``(n, T)`` state rollouts or a :class:`TrajectorySet` for MaxEnt), ``predict``
maps states to the action of the induced greedy policy and ``score`` is the
fraction of demonstrated pairs it reproduces.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .demos import DemonstrationSet, TrajectorySet
from .lp_irl import lp_irl
from .maxent import train_maxent
from .mdp import TabularMdp, ValidationError, finite_horizon_policy, optimal_policy


def _check_mdp(mdp):
    if not isinstance(mdp, TabularMdp):
        raise ValidationError("mdp must be a TabularMdp")
    return mdp


def _check_states(X, mdp) -> np.ndarray:
    s = check_array(np.asarray(X).reshape(-1, 1), dtype=np.int64, ensure_2d=True).ravel()
    if s.size and (s.min() < 0 or s.max() >= mdp.n_states):
        raise ValidationError("state index out of range")
    return s


def _check_pairs(X, mdp) -> DemonstrationSet:
    if isinstance(X, DemonstrationSet):
        return X
    pairs = check_array(X, dtype=np.int64, ensure_2d=True)
    if pairs.shape[1] != 2:
        raise ValidationError("pairs must have shape (N, 2)")
    return DemonstrationSet(pairs, mdp.n_states, mdp.n_actions)


class _IrlEstimator(BaseEstimator):
    def predict(self, X):
        check_is_fitted(self, "policy_")
        return self.policy_[_check_states(X, self.mdp)]

    def score(self, X, y=None):
        """Share of ``(state, action)`` pairs whose action the induced policy repeats."""
        demos = _check_pairs(X, self.mdp) if y is None else _check_pairs(
            np.column_stack([np.asarray(X).ravel(), np.asarray(y).ravel()]), self.mdp)
        if len(demos) == 0:
            raise ValidationError("score needs at least one pair")
        return float(np.mean(self.predict(demos.states) == demos.actions))


class LPIRL(_IrlEstimator):
    """LP-IRL at a fixed effective discount ``gamma_hat``."""

    def __init__(self, mdp=None, gamma_hat=0.9, r_max=1.0, margin=None):
        self.mdp = mdp
        self.gamma_hat = gamma_hat
        self.r_max = r_max
        self.margin = margin

    def fit(self, X, y=None):
        mdp = _check_mdp(self.mdp)
        if y is not None:
            X = np.column_stack([np.asarray(X).ravel(), np.asarray(y).ravel()])
        demos = _check_pairs(X, mdp)
        self.reward_ = lp_irl(mdp, demos, self.gamma_hat, r_max=self.r_max, margin=self.margin)
        self.policy_ = optimal_policy(mdp, self.gamma_hat, reward=self.reward_)[0]
        return self


class MaxEntIRL(_IrlEstimator):
    """Finite-horizon MaxEnt IRL; ``horizon=None`` uses the trajectory length."""

    def __init__(self, mdp=None, features=None, horizon=None, epochs=200, lr=0.05, restarts=5,
                 random_state=0, start="uniform"):
        self.mdp = mdp
        self.features = features
        self.horizon = horizon
        self.epochs = epochs
        self.lr = lr
        self.restarts = restarts
        self.random_state = random_state
        self.start = start

    def fit(self, X, y=None):
        mdp = _check_mdp(self.mdp)
        if isinstance(X, TrajectorySet):
            trajs = X
        else:
            states = check_array(X, dtype=np.int64, ensure_2d=True)
            actions = np.zeros_like(states) if y is None else np.asarray(y, dtype=int).reshape(states.shape)
            trajs = TrajectorySet(states, actions, states.shape[1])
        features = np.eye(mdp.n_states) if self.features is None else check_array(self.features)
        fit = train_maxent(mdp, features, trajs, self.horizon, epochs=self.epochs, lr=self.lr,
                           restarts=self.restarts, seed=self.random_state, start=self.start)
        self.theta_ = fit.weights.theta
        self.reward_ = fit.reward
        self.restart_ = fit.restart
        self.horizon_ = trajs.horizon if self.horizon is None else int(self.horizon)
        self.policy_ = finite_horizon_policy(mdp, self.horizon_, self.reward_)
        return self
