"""Numerical checks of the feasible-reward, reward-error, policy-class and value-gap results.

Everything here works on small tabular MDPs with exact linear solves so that
inequalities can be tested to ~1e-9.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mdp import (TabularMdp, ValidationError, advantage, closed_form_evaluation, optimal_policy,
                  policy_transition_matrix)
from .seeding import rng

ADV_TOL = 1e-8
MAX_POLICIES = 10**6


def policy_matrix(pi, n_actions: int | None = None) -> np.ndarray:
    """One-hot ``(S, A)`` matrix for an action vector; matrices pass through."""
    pi = np.asarray(pi)
    if pi.ndim == 2:
        return pi.astype(float)
    if n_actions is None:
        raise ValidationError("n_actions is required for an action vector")
    m = np.zeros((pi.size, n_actions))
    m[np.arange(pi.size), pi.astype(int)] = 1.0
    return m


def expert_filters(pi_matrix, table):
    """Split ``table`` into entries on actions ``pi`` takes and the rest."""
    pi_matrix = np.asarray(pi_matrix, dtype=float)
    table = np.asarray(table, dtype=float)
    if pi_matrix.shape != table.shape:
        raise ValidationError("policy matrix and table must have the same shape")
    taken = pi_matrix > 0
    return np.where(taken, table, 0.0), np.where(taken, 0.0, table)


def _ev(mdp, v):
    return np.repeat(np.asarray(v, dtype=float)[:, None], mdp.n_actions, axis=1)


@dataclass(frozen=True)
class FeasibleRewardWitness:
    zeta: np.ndarray
    v: np.ndarray
    gamma: float
    reward: np.ndarray
    expert: np.ndarray


def _feasible_reward(mdp, expert_m, zeta, v, gamma):
    _, comp = expert_filters(expert_m, zeta)
    return -comp + _ev(mdp, v) - gamma * (mdp.transitions @ np.asarray(v, dtype=float))


def construct_feasible_reward(mdp: TabularMdp, expert, zeta, v, gamma: float) -> FeasibleRewardWitness:
    """``R = -(complement filter of zeta) + E V - gamma P V``; the expert is optimal for it."""
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (mdp.n_states, mdp.n_actions):
        raise ValidationError("zeta must have shape (S, A)")
    if np.any(zeta < 0):
        raise ValidationError("zeta must be non-negative")
    if not 0 < gamma < 1:
        raise ValidationError("gamma must be in (0, 1)")
    expert = np.asarray(expert, dtype=int)
    reward = _feasible_reward(mdp, policy_matrix(expert, mdp.n_actions), zeta, v, gamma)
    return FeasibleRewardWitness(zeta, np.asarray(v, dtype=float), float(gamma), reward, expert)


def witness_from_reward(mdp: TabularMdp, reward, expert, gamma: float) -> FeasibleRewardWitness:
    """Recover ``(zeta, V)`` for a reward under which ``expert`` is optimal.

    ``V`` is the expert's value and ``zeta = E V - Q``; the expert must be
    optimal or a negative ``zeta`` is rejected.
    """
    expert = np.asarray(expert, dtype=int)
    v = closed_form_evaluation(mdp, expert, gamma, reward=reward)
    reward = np.asarray(reward, dtype=float)
    if reward.ndim == 1:
        reward = np.repeat(reward[:, None], mdp.n_actions, axis=1)
    q = reward + gamma * (mdp.transitions @ v)
    zeta = _ev(mdp, v) - q
    zeta[np.arange(mdp.n_states), expert] = 0.0
    if zeta.min() < -ADV_TOL:
        raise ValidationError("expert is not optimal for this reward")
    return FeasibleRewardWitness(np.maximum(zeta, 0.0), v, float(gamma), reward, expert)


def verify_expert_optimal(mdp: TabularMdp, reward, expert, gamma: float):
    """``(ok, violation)``: the largest positive advantage over the expert's actions."""
    if not 0 <= gamma < 1:
        raise ValidationError("gamma must be in [0, 1)")
    adv = advantage(mdp, np.asarray(expert, dtype=int), gamma, reward=reward)
    violation = max(float(adv.max()), 0.0)
    return violation <= ADV_TOL, violation


@dataclass(frozen=True)
class Theorem2Report:
    holds: bool
    zeta_bound_holds: bool
    error: np.ndarray  # |R0 - R_hat|
    bound: np.ndarray  # complement(pi_E) filter(pi_hat) zeta
    r_hat: np.ndarray
    max_slack: float


def theorem2_check(mdp: TabularMdp, expert, est, r0: FeasibleRewardWitness, r_max: float | None = None,
                   gamma_hat: float | None = None, tol: float = 1e-9) -> Theorem2Report:
    """Build the estimated-problem reward of the constructive proof and test the bound.

    ``zeta_hat`` is the complement-filtered ``zeta`` and ``V_hat`` solves
    ``(E - gamma_hat P) V_hat = (E - gamma0 P) V`` in least squares, which is
    exact when ``gamma_hat`` equals the witness discount (the default).
    """
    expert = np.asarray(expert, dtype=int)
    if not np.array_equal(expert, r0.expert):
        raise ValidationError("witness was built for a different expert")
    ok, _ = verify_expert_optimal(mdp, r0.reward, expert, r0.gamma)
    if not ok:
        raise ValidationError("invalid witness: expert is not optimal for r0")
    gamma0 = r0.gamma
    gamma_hat = gamma0 if gamma_hat is None else float(gamma_hat)
    expert_m = policy_matrix(expert, mdp.n_actions)
    est_m = policy_matrix(est, mdp.n_actions)
    _, zeta_hat = expert_filters(expert_m, r0.zeta)
    if gamma_hat == gamma0:
        v_hat = r0.v
    else:
        n, k = mdp.n_states, mdp.n_actions
        E = np.repeat(np.eye(n), k, axis=0)
        lhs = E - gamma_hat * mdp.transitions.reshape(n * k, n)
        rhs = (E - gamma0 * mdp.transitions.reshape(n * k, n)) @ r0.v
        v_hat = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    r_hat = _feasible_reward(mdp, est_m, zeta_hat, v_hat, gamma_hat)
    err = np.abs(r0.reward - r_hat)
    filt, _ = expert_filters(est_m, zeta_hat)
    slack = err - filt
    r_max = float(np.abs(r0.reward).max()) if r_max is None else float(r_max)
    zeta_ok = float(r0.zeta.max()) <= r_max / (1.0 - gamma0) + tol
    return Theorem2Report(bool(slack.max() <= tol), bool(zeta_ok), err, filt, r_hat, float(slack.max()))


def shape_reward(mdp: TabularMdp, reward, potential, gamma: float) -> np.ndarray:
    """Potential-based shaping ``R + gamma P phi - phi``."""
    if not 0 <= gamma < 1:
        raise ValidationError("gamma must be in [0, 1)")
    reward = np.asarray(reward, dtype=float)
    if reward.ndim == 1:
        reward = np.repeat(reward[:, None], mdp.n_actions, axis=1)
    phi = np.asarray(potential, dtype=float)
    return reward + gamma * (mdp.transitions @ phi) - phi[:, None]


def unique_argmax_rows(reward) -> bool:
    """True if every state has exactly one strictly best action (membership in F_R)."""
    reward = np.asarray(reward, dtype=float)
    top = reward.max(axis=1, keepdims=True)
    return bool(np.all((reward == top).sum(axis=1) == 1))


def gamma_lift_certificate(mdp: TabularMdp, reward, pi, gamma: float, gamma_prime: float) -> np.ndarray:
    """Reward ``R_hat(s, a) = R(s, a) - c V(s)`` with ``c = (gamma' - gamma) / gamma``.

    ``V`` solves ``(I - gamma' P_pi + c I) V = R_pi`` and equals the value of
    ``pi`` under ``R_hat`` at ``gamma'``. The correction is per state, so the
    per-state argmax of ``R`` is kept.
    """
    if not 0 < gamma < gamma_prime < 1:
        raise ValidationError("need 0 < gamma < gamma_prime < 1")
    reward = np.asarray(reward, dtype=float)
    if not unique_argmax_rows(reward):
        raise ValidationError("reward must have a unique best action in every state")
    pi = np.asarray(pi, dtype=int)
    c = (gamma_prime - gamma) / gamma
    n = mdp.n_states
    r_pi = reward[np.arange(n), pi]
    v = np.linalg.solve((1.0 + c) * np.eye(n) - gamma_prime * policy_transition_matrix(mdp, pi), r_pi)
    return reward - c * v[:, None]


# -- policy classes ----------------------------------------------------------

@dataclass
class PolicyClassSample:
    gamma: float
    policies: set = field(default_factory=set)  # tuples of actions
    n_reward_samples: int = 0
    seed: int = 0
    rewards: list = field(default_factory=list)  # one witness reward per policy, same order as found
    sampled: list = field(default_factory=list)  # every reward drawn, witnesses or not

    def __len__(self):
        return len(self.policies)


def sample_fr_reward(g: np.random.Generator, n_states: int, n_actions: int) -> np.ndarray:
    """Uniform(0, 1) reward table, redrawn until every row has a strict argmax."""
    while True:
        r = g.random((n_states, n_actions))
        if unique_argmax_rows(r):
            return r


def enumerate_policy_class(mdp: TabularMdp, gamma: float, n_reward_samples: int, seed: int = 0,
                           include_construction: bool = False) -> PolicyClassSample:
    """Distinct optimal policies over sampled rewards with a unique best action per state.

    With ``include_construction`` the explicit many-policy rewards of
    :func:`claim3_instance` are added when ``mdp`` has that structure.
    """
    if n_reward_samples < 1:
        raise ValidationError("n_reward_samples must be >= 1")
    if mdp.n_actions ** mdp.n_states > MAX_POLICIES:
        raise ValidationError("instance too large for policy-class enumeration")
    if not 0 <= gamma < 1:
        raise ValidationError("gamma must be in [0, 1)")
    g = rng(seed)
    sample = PolicyClassSample(float(gamma), set(), n_reward_samples, seed)
    rewards = [sample_fr_reward(g, mdp.n_states, mdp.n_actions) for _ in range(n_reward_samples)]
    if include_construction:
        rewards += claim3_rewards(mdp)
    sample.sampled = rewards
    for r in rewards:
        pi, _ = optimal_policy(mdp, gamma, reward=r)
        key = tuple(int(a) for a in pi)
        if key not in sample.policies:
            sample.policies.add(key)
            sample.rewards.append(r)
    return sample


def optimal_policies_exhaustive(mdp: TabularMdp, reward, gamma: float) -> list:
    """Every deterministic policy whose advantages are all ``<= 1e-8`` (tiny instances only)."""
    if mdp.n_actions ** mdp.n_states > MAX_POLICIES:
        raise ValidationError("instance too large for exhaustive enumeration")
    from .mdp import all_deterministic_policies

    return [pi for pi in all_deterministic_policies(mdp.n_states, mdp.n_actions)
            if verify_expert_optimal(mdp, reward, pi, gamma)[0]]


def claim3_instance(n_states: int = 3, n_actions: int = 2, best_action: int = 0) -> TabularMdp:
    """Fully connected MDP: the best action self-loops, every other action jumps uniformly elsewhere."""
    if n_states < 2 or n_actions < 2:
        raise ValidationError("need at least two states and two actions")
    P = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            if a == best_action:
                P[s, a, s] = 1.0
            else:
                P[s, a] = 1.0 / (n_states - 1)
                P[s, a, s] = 0.0
    return TabularMdp(P, np.zeros((n_states, n_actions)))


def claim3_rewards(mdp: TabularMdp, best_action: int = 0, high: float = 1.0, low: float = 0.1,
                   other: float = 0.05) -> list:
    """One reward per distinguished state ``s*``; its self-loop pays more than ``2|S|`` times the others."""
    n, k = mdp.n_states, mdp.n_actions
    if not high > 2 * n * low:
        raise ValidationError("need high > 2 |S| low")
    if not 0 < other < low:
        raise ValidationError("need 0 < other < low so the best action stays unique")
    out = []
    for star in range(n):
        r = np.full((n, k), other)
        r[:, best_action] = low
        r[star, best_action] = high
        out.append(r)
    return out


def claim3_policies(mdp: TabularMdp, gamma: float, best_action: int = 0) -> set:
    """Optimal policies of the explicit construction, one reward per distinguished state."""
    found = set()
    for r in claim3_rewards(mdp, best_action):
        pi, _ = optimal_policy(mdp, gamma, reward=r)
        found.add(tuple(int(a) for a in pi))
    return found


# -- bounds ------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    n: int
    gamma_hat: float
    gamma0: float
    term1: float
    term2: float
    rhs: float
    lhs: float = float("nan")
    holds: bool | None = None
    threshold: float = float("nan")
    inputs: dict = field(default_factory=dict)


def theorem1_bound(n: int, gamma_hat: float, gamma0: float, r_max: float, n_states: int,
                   pi_class_size: int, delta: float) -> BoundReport:
    """Both right-hand-side terms of the main value-gap bound and the estimation threshold ``t``."""
    if n < 1 or n_states < 1 or pi_class_size < 1:
        raise ValidationError("N, |S| and |Pi| must be >= 1")
    if not 0 < gamma_hat <= gamma0 < 1:
        raise ValidationError("need 0 < gamma_hat <= gamma0 < 1")
    if not 0 < delta < 1:
        raise ValidationError("delta must be in (0, 1)")
    if r_max <= 0:
        raise ValidationError("r_max must be positive")
    log_arg = n_states * pi_class_size / (2.0 * delta)
    if log_arg < 1.0:
        raise ValidationError("|S| |Pi| / (2 delta) must be >= 1")
    one_m = 1.0 - gamma_hat
    term1 = 2.0 * r_max / (one_m * one_m) * math.sqrt(math.log(log_arg) / (2.0 * n))
    term2 = (gamma0 - gamma_hat) / ((1.0 - gamma0) * one_m) * r_max
    t = r_max / one_m * math.sqrt(math.log(n_states * pi_class_size / delta) / (2.0 * n))
    inputs = dict(N=n, gamma_hat=gamma_hat, gamma0=gamma0, r_max=r_max, n_states=n_states,
                  pi_class_size=pi_class_size, delta=delta)
    return BoundReport(n, gamma_hat, gamma0, term1, term2, term1 + term2, threshold=t, inputs=inputs)


def _optimal_value_under(mdp, reward_eval, gamma_eval, reward_plan, gamma_plan):
    pi, _ = optimal_policy(mdp, gamma_plan, reward=reward_plan)
    return closed_form_evaluation(mdp, pi, gamma_eval, reward=reward_eval)


def theorem4_check(mdp: TabularMdp, r0, gamma0: float, r_hat, gamma_hat: float,
                   r_max: float | None = None, tol: float = 1e-8) -> BoundReport:
    """Value gap of planning with ``(r_hat, gamma_hat)`` against its two-term upper bound."""
    r0 = np.asarray(r0, dtype=float)
    r_hat = np.asarray(r_hat, dtype=float)
    if not (0 < gamma0 < 1 and 0 < gamma_hat < 1):
        raise ValidationError("discounts must be in (0, 1)")
    if r_max is None:
        r_max = float(max(r0.max(), r_hat.max()))
    if min(r0.min(), r_hat.min()) < 0 or max(r0.max(), r_hat.max()) > r_max:
        raise ValidationError("rewards must lie in [0, r_max]")
    v_star = _optimal_value_under(mdp, r0, gamma0, r0, gamma0)
    v_hat = _optimal_value_under(mdp, r0, gamma0, r_hat, gamma_hat)
    lhs = float(np.abs(v_star - v_hat).max())
    term1 = 2.0 / (1.0 - gamma_hat) * float(np.abs(r0 - r_hat).max())
    term2 = abs(gamma0 - gamma_hat) / ((1.0 - gamma0) * (1.0 - gamma_hat)) * r_max
    rhs = term1 + term2
    return BoundReport(0, float(gamma_hat), float(gamma0), term1, term2, rhs, lhs, lhs <= rhs + tol)


def discount_gap_check(mdp: TabularMdp, pi, reward, gamma_hat: float, gamma0: float,
                       r_max: float | None = None, tol: float = 1e-8) -> bool:
    """``V(gamma_hat) <= V(gamma0) <= V(gamma_hat) + (gamma0 - gamma_hat) R_max / ((1-gamma0)(1-gamma_hat))``
    for a fixed policy and a non-negative reward, with ``gamma_hat <= gamma0``."""
    if not 0 <= gamma_hat <= gamma0 < 1:
        raise ValidationError("need 0 <= gamma_hat <= gamma0 < 1")
    reward = np.asarray(reward, dtype=float)
    if reward.min() < 0:
        raise ValidationError("reward must be non-negative")
    r_max = float(reward.max()) if r_max is None else float(r_max)
    lo = closed_form_evaluation(mdp, pi, gamma_hat, reward=reward)
    hi = closed_form_evaluation(mdp, pi, gamma0, reward=reward)
    gap = (gamma0 - gamma_hat) / ((1.0 - gamma0) * (1.0 - gamma_hat)) * r_max
    return bool(np.all(lo <= hi + tol) and np.all(hi <= lo + gap + tol))


def planning_gap_check(mdp: TabularMdp, r0, r_hat, gamma: float, tol: float = 1e-8):
    """Same-discount planning loss is at most twice the worst per-policy evaluation gap.

    The maximum runs over the two policies that matter (optimal for ``r0`` and
    for ``r_hat``). Returns ``(ok, lhs, rhs)``.
    """
    pi0, _ = optimal_policy(mdp, gamma, reward=r0)
    pih, _ = optimal_policy(mdp, gamma, reward=r_hat)
    lhs = float(np.abs(closed_form_evaluation(mdp, pi0, gamma, reward=r0)
                       - closed_form_evaluation(mdp, pih, gamma, reward=r0)).max())
    rhs = 2.0 * max(float(np.abs(closed_form_evaluation(mdp, p, gamma, reward=r0)
                                 - closed_form_evaluation(mdp, p, gamma, reward=r_hat)).max())
                    for p in (pi0, pih))
    return lhs <= rhs + tol, lhs, rhs


def save_bound_reports(reports, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "gamma_hat", "gamma0", "term1", "term2", "rhs", "lhs", "holds"])
        for r in reports:
            holds = "" if r.holds is None else str(bool(r.holds)).lower()
            w.writerow([r.n, *(format(float(x), ".17g") for x in
                               (r.gamma_hat, r.gamma0, r.term1, r.term2, r.rhs, r.lhs)), holds])
    return path
