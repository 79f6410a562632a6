"""Linear-programming IRL from partial demonstrations with an effective discount.

Only demonstrated states contribute constraints. Their expert transitions are
kept, every other row of the expert transition matrix is zeroed, and the LP
maximises the summed worst-case margin between the expert action and the
alternatives under ``gamma_hat``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demos import DemonstrationSet, demonstrated_actions, estimate_policy
from .mdp import TabularMdp, ValidationError
from .simplex import INFEASIBLE, LpProblem, LpSolution, solve_lp

MIN_MARGIN = 1e-6


class InfeasibleError(RuntimeError):
    """No reward satisfies the margin constraints, even after back-off."""


@dataclass(frozen=True)
class MappingMatrix:
    """Rows ``F(s, a) = (P_E(s) - P(s, a)) (I - gamma P_E)^-1``.

    ``entries[s, a]`` is zero unless ``active[s, a]``: ``s`` is demonstrated and
    ``a`` has a transition row different from the estimated expert action's.
    Actions with an identical row (e.g. bumping into a wall versus standing
    still) cannot be separated by any reward, so they get no constraint.
    """

    entries: np.ndarray  # (S, A, S)
    active: np.ndarray  # (S, A) bool
    expert_actions: np.ndarray  # (S,), -1 where undemonstrated
    gamma_hat: float

    @property
    def demonstrated_states(self) -> np.ndarray:
        return np.flatnonzero(self.expert_actions >= 0)


def estimate_expert_transitions(mdp: TabularMdp, est) -> np.ndarray:
    """``P(s, a_hat(s), :)`` on demonstrated rows, zero rows elsewhere."""
    acts = demonstrated_actions(est)
    P_E = np.zeros((mdp.n_states, mdp.n_states))
    rows = np.flatnonzero(acts >= 0)
    P_E[rows] = mdp.transitions[rows, acts[rows]]
    return P_E


def mapping_matrix(mdp: TabularMdp, p_e, est, gamma_hat: float) -> MappingMatrix:
    if not 0.0 <= gamma_hat < 1.0:
        raise ValidationError("gamma_hat must be in [0, 1)")
    acts = demonstrated_actions(est)
    n = mdp.n_states
    try:
        inv = np.linalg.inv(np.eye(n) - gamma_hat * np.asarray(p_e, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("I - gamma_hat * P_E is singular") from exc
    active = np.zeros((n, mdp.n_actions), dtype=bool)
    demo = np.flatnonzero(acts >= 0)
    active[demo] = True
    same = np.all(np.isclose(mdp.transitions[demo], mdp.transitions[demo, acts[demo]][:, None, :],
                             rtol=0.0, atol=1e-12), axis=2)
    active[demo] = ~same
    diff = np.asarray(p_e)[:, None, :] - mdp.transitions
    F = np.where(active[:, :, None], diff @ inv, 0.0)
    return MappingMatrix(F, active, acts, float(gamma_hat))


def build_lp(fmap: MappingMatrix, r_max: float = 1.0, margin: float = 0.01) -> LpProblem:
    """Max-min margin LP over ``x = (R, xi)``, written as a minimisation.

    One ``xi`` per demonstrated state carries the inner minimum:
    ``xi_i <= F(i, a) R`` and ``F(i, a) R >= margin`` for every non-expert ``a``,
    with ``|R| <= r_max`` and ``xi >= 0``.
    """
    if not margin > 0:
        raise ValidationError("margin must be strictly positive")
    if r_max <= 0:
        raise ValidationError("r_max must be positive")
    demo = fmap.demonstrated_states
    if demo.size == 0:
        raise ValidationError("no demonstrated states; the LP would be vacuous")
    n = fmap.entries.shape[0]
    k = demo.size
    rows_xi, rows_margin = [], []
    for i, s in enumerate(demo):
        for a in np.flatnonzero(fmap.active[s]):
            f = fmap.entries[s, a]
            row = np.zeros(n + k)
            row[:n] = -f
            row[n + i] = 1.0
            rows_xi.append(row)
            row = np.zeros(n + k)
            row[:n] = -f
            rows_margin.append(row)
    D = np.array(rows_xi + rows_margin).reshape(-1, n + k)
    b = np.concatenate([np.zeros(len(rows_xi)), np.full(len(rows_margin), -margin)])
    c = np.concatenate([np.zeros(n), -np.ones(k)])
    lower = np.concatenate([np.full(n, -r_max), np.zeros(k)])
    upper = np.concatenate([np.full(n, r_max), np.full(k, np.inf)])
    return LpProblem(c, D, b, lower, upper)


def lp_irl(mdp: TabularMdp, demos: DemonstrationSet, gamma_hat: float, r_max: float = 1.0,
           margin: float | None = None, return_details: bool = False):
    """Learn a state reward (broadcast to ``(S, A)``) from demonstrations.

    If the margin is infeasible it is divided by 10 until it drops below
    ``1e-6``, after which :class:`InfeasibleError` is raised.
    """
    if len(demos) == 0:
        raise ValidationError("lp_irl needs at least one demonstration")
    est = estimate_policy(demos)
    if not est.any():
        raise ValidationError("no state has a uniquely most frequent action")
    p_e = estimate_expert_transitions(mdp, est)
    fmap = mapping_matrix(mdp, p_e, est, gamma_hat)
    beta = 0.01 * r_max if margin is None else float(margin)
    while True:
        problem = build_lp(fmap, r_max, beta)
        sol = solve_lp(problem)
        if sol.status != INFEASIBLE:
            break
        beta /= 10.0
        if beta < MIN_MARGIN:
            raise InfeasibleError(f"LP infeasible at gamma_hat={gamma_hat} for every margin tried")
    if not sol.success:
        raise InfeasibleError(f"LP {sol.status} at gamma_hat={gamma_hat}")
    r = sol.x[: mdp.n_states]
    reward = np.repeat(r[:, None], mdp.n_actions, axis=1)
    if return_details:
        return reward, LpDetails(fmap, problem, sol, beta)
    return reward


@dataclass(frozen=True)
class LpDetails:
    fmap: MappingMatrix
    problem: LpProblem
    solution: LpSolution
    margin: float


def save_reward_csv(reward, path):
    """Write ``state,action,reward`` rows with 17-significant-digit reals."""
    import csv
    from pathlib import Path

    reward = np.asarray(reward, dtype=float)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "action", "reward"])
        for s in range(reward.shape[0]):
            for a in range(reward.shape[1]):
                w.writerow([s, a, format(reward[s, a], ".17g")])
    return path


def load_reward_csv(path) -> np.ndarray:
    import csv
    from pathlib import Path

    with Path(path).open(newline="") as fh:
        rows = [(int(r["state"]), int(r["action"]), float(r["reward"])) for r in csv.DictReader(fh)]
    n_s = max(r[0] for r in rows) + 1
    n_a = max(r[1] for r in rows) + 1
    out = np.zeros((n_s, n_a))
    for s, a, v in rows:
        out[s, a] = v
    return out
