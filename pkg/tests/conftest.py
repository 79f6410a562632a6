import numpy as np
import pytest

from horizon_irl.mdp import TabularMdp


def random_mdp(g, n_states, n_actions, r_max=1.0, deterministic=False):
    if deterministic:
        P = np.zeros((n_states, n_actions, n_states))
        P[np.arange(n_states)[:, None], np.arange(n_actions)[None, :],
          g.integers(n_states, size=(n_states, n_actions))] = 1.0
    else:
        P = g.random((n_states, n_actions, n_states)) + 1e-3
        P /= P.sum(axis=2, keepdims=True)
    return TabularMdp(P, g.random((n_states, n_actions)) * r_max, r_max=r_max)


def chain_mdp():
    """Two states; action 0 stays, action 1 moves to the other state. Reward only in state 1."""
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = P[1, 0, 1] = 1.0
    P[0, 1, 1] = P[1, 1, 0] = 1.0
    return TabularMdp(P, np.array([[0.0, 0.0], [1.0, 1.0]]))


@pytest.fixture
def g():
    return np.random.default_rng(12345)
