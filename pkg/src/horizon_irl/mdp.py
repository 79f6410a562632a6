"""Finite tabular MDPs and exact solvers.

Everything here is dense numpy. Policies are plain integer arrays of length
``n_states``; value tables are float arrays of length ``n_states`` and Q/advantage
tables are ``(n_states, n_actions)`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STOCHASTIC_ATOL = 1e-9
# Actions whose Q-value is within this (scaled) distance of the max count as tied.
TIE_RTOL = 1e-9


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP ``(S, A, P, R)`` with rewards in ``[0, r_max]``.

    ``transitions[s, a, s2]`` is ``P(s2 | s, a)``; ``rewards[s, a]`` is ``R(s, a)``.
    The arrays are copied and made read-only on construction.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    r_max: float = 1.0
    check_reward_range: bool = field(default=True, compare=False)

    def __post_init__(self):
        P = np.array(self.transitions, dtype=float)
        R = np.array(self.rewards, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValidationError(f"transitions must have shape (S, A, S), got {P.shape}")
        if R.shape != P.shape[:2]:
            raise ValidationError(f"rewards must have shape {P.shape[:2]}, got {R.shape}")
        if P.shape[0] < 1 or P.shape[1] < 1:
            raise ValidationError("need at least one state and one action")
        if np.any(P < 0) or not np.allclose(P.sum(axis=2), 1.0, rtol=0, atol=STOCHASTIC_ATOL):
            raise ValidationError("transition rows must be non-negative and sum to 1")
        if not np.all(np.isfinite(R)):
            raise ValidationError("rewards must be finite")
        if self.r_max <= 0:
            raise ValidationError("r_max must be positive")
        if self.check_reward_range and (R.min() < 0 or R.max() > self.r_max):
            raise ValidationError(f"rewards must lie in [0, {self.r_max}]")
        P.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "rewards", R)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    def with_rewards(self, rewards, r_max=None, check_reward_range=False) -> "TabularMdp":
        """Same dynamics, different reward table."""
        return TabularMdp(
            self.transitions,
            rewards,
            r_max=self.r_max if r_max is None else r_max,
            check_reward_range=check_reward_range,
        )


def _check_gamma(gamma):
    if not 0.0 <= gamma < 1.0:
        raise ValidationError(f"gamma must be in [0, 1), got {gamma}")


def _check_policy(mdp, pi):
    pi = np.asarray(pi)
    if pi.shape != (mdp.n_states,):
        raise ValidationError(f"policy must have length {mdp.n_states}")
    if not np.issubdtype(pi.dtype, np.integer):
        if not np.all(pi == np.round(pi)):
            raise ValidationError("policy entries must be integers")
        pi = pi.astype(int)
    if pi.min() < 0 or pi.max() >= mdp.n_actions:
        raise ValidationError("policy entries must be valid action indices")
    return pi


def _check_policy_stack(mdp, pis):
    if pis.shape[1] != mdp.n_states:
        raise ValidationError(f"policies must have length {mdp.n_states}")
    if not np.issubdtype(pis.dtype, np.integer):
        if not np.all(pis == np.round(pis)):
            raise ValidationError("policy entries must be integers")
        pis = pis.astype(int)
    if pis.min() < 0 or pis.max() >= mdp.n_actions:
        raise ValidationError("policy entries must be valid action indices")
    return pis


def _reward_table(mdp, reward):
    R = mdp.rewards if reward is None else np.asarray(reward, dtype=float)
    if R.shape == (mdp.n_states,):
        R = np.repeat(R[:, None], mdp.n_actions, axis=1)
    if R.shape != (mdp.n_states, mdp.n_actions):
        raise ValidationError(f"reward must have shape ({mdp.n_states}, {mdp.n_actions})")
    return R


def q_values(mdp: TabularMdp, v, gamma: float, reward=None) -> np.ndarray:
    """One-step lookahead ``R + gamma * P v``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (mdp.n_states,):
        raise ValidationError(f"value table must have length {mdp.n_states}")
    return _reward_table(mdp, reward) + gamma * (mdp.transitions @ v)


def value_iteration(mdp: TabularMdp, gamma: float, tol: float = 1e-8, reward=None,
                    max_iter: int = 1_000_000) -> np.ndarray:
    """Optimal state values by value iteration.

    Stops once successive sweeps differ by at most ``tol * (1 - gamma) / (2 * gamma)``
    in sup-norm, which keeps the greedy policy within ``tol`` of optimal.
    """
    _check_gamma(gamma)
    if tol <= 0:
        raise ValidationError("tol must be positive")
    R = _reward_table(mdp, reward)
    if gamma == 0.0:
        return R.max(axis=1)
    threshold = tol * (1.0 - gamma) / (2.0 * gamma)
    P = mdp.transitions
    v = R.max(axis=1)
    for _ in range(max_iter):
        v_new = (R + gamma * (P @ v)).max(axis=1)
        if np.max(np.abs(v_new - v)) <= threshold:
            return v_new
        v = v_new
    raise RuntimeError("value iteration did not converge")


def greedy_policy(mdp: TabularMdp, v, gamma: float, reward=None) -> np.ndarray:
    """Greedy actions w.r.t. ``v``; near-ties go to the lowest action index."""
    return argmax_lowest(q_values(mdp, v, gamma, reward))


def argmax_lowest(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    best = q.max(axis=1, keepdims=True)
    slack = TIE_RTOL * np.maximum(1.0, np.abs(best))
    return np.argmax(q >= best - slack, axis=1)


def policy_transition_matrix(mdp: TabularMdp, pi) -> np.ndarray:
    pi = _check_policy(mdp, pi)
    return mdp.transitions[np.arange(mdp.n_states), pi, :]


def closed_form_evaluation(mdp: TabularMdp, pi, gamma: float, reward=None) -> np.ndarray:
    """Solve ``V = R^pi + gamma P^pi V`` directly.

    A ``(K, S)`` stack of policies gives a ``(K, S)`` stack of values.
    """
    _check_gamma(gamma)
    pi = np.asarray(pi)
    if pi.ndim == 2:
        if pi.shape[0] == 0:
            return np.zeros((0, mdp.n_states))
        pi = _check_policy_stack(mdp, pi)
    else:
        pi = _check_policy(mdp, pi)
    R = _reward_table(mdp, reward)
    idx = np.arange(mdp.n_states)
    A = np.eye(mdp.n_states) - gamma * mdp.transitions[idx, pi, :]
    try:
        v = np.linalg.solve(A, R[idx, pi][..., None])[..., 0]
    except np.linalg.LinAlgError as exc:  # unreachable for gamma < 1
        raise RuntimeError("policy evaluation system is singular") from exc
    return v


def advantage(mdp: TabularMdp, pi, gamma: float, reward=None) -> np.ndarray:
    """``A(s, a) = Q^pi(s, a) - V^pi(s)`` with ``A(s, pi(s))`` exactly zero."""
    pi = _check_policy(mdp, pi)
    v = closed_form_evaluation(mdp, pi, gamma, reward)
    q = q_values(mdp, v, gamma, reward)
    idx = np.arange(mdp.n_states)
    adv = q - q[idx, pi][:, None]
    adv[idx, pi] = 0.0
    return adv


def optimal_policy(mdp: TabularMdp, gamma: float, reward=None, tol: float = 1e-8):
    """Optimal policy and its exact value.

    Value iteration gets close, then policy iteration with exact evaluation
    polishes the result so near-ties are resolved on accurate Q-values.
    """
    v = value_iteration(mdp, gamma, tol=tol, reward=reward)
    pi = greedy_policy(mdp, v, gamma, reward)
    for _ in range(10 * mdp.n_states + 10):
        v = closed_form_evaluation(mdp, pi, gamma, reward)
        q = q_values(mdp, v, gamma, reward)
        new_pi = argmax_lowest(q)
        # only switch where the improvement is real, so ties cannot cycle
        idx = np.arange(mdp.n_states)
        gain = q[idx, new_pi] - q[idx, pi]
        keep = gain <= TIE_RTOL * np.maximum(1.0, np.abs(q[idx, pi]))
        new_pi = np.where(keep, pi, new_pi)
        if np.array_equal(new_pi, pi):
            break
        pi = new_pi
    v = closed_form_evaluation(mdp, pi, gamma, reward)
    return argmax_lowest(q_values(mdp, v, gamma, reward)), v


def finite_horizon_values(mdp: TabularMdp, horizon: int, reward=None) -> np.ndarray:
    """Undiscounted optimal ``horizon``-step values (backward induction)."""
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    R = _reward_table(mdp, reward)
    v = np.zeros(mdp.n_states)
    for _ in range(horizon):
        v = (R + mdp.transitions @ v).max(axis=1)
    return v


def finite_horizon_policy(mdp: TabularMdp, horizon: int, reward=None) -> np.ndarray:
    """First-step greedy action of the undiscounted ``horizon``-step problem."""
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    tail = np.zeros(mdp.n_states) if horizon == 1 else finite_horizon_values(mdp, horizon - 1, reward)
    return argmax_lowest(_reward_table(mdp, reward) + mdp.transitions @ tail)


def all_deterministic_policies(n_states: int, n_actions: int):
    """Iterate every policy in ``A^S`` (tiny instances only)."""
    import itertools

    for combo in itertools.product(range(n_actions), repeat=n_states):
        yield np.array(combo, dtype=int)
