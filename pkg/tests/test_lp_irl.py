import numpy as np
import pytest

from horizon_irl.demos import DemonstrationSet, estimate_policy, sample_pairs
from horizon_irl.envs import GAMMA0, GridSpec, make_gridworld, make_task
from horizon_irl.lp_irl import (InfeasibleError, build_lp, estimate_expert_transitions, load_reward_csv, lp_irl,
                                mapping_matrix, save_reward_csv)
from horizon_irl.mdp import ValidationError, advantage, optimal_policy
from horizon_irl.selection import state_error_count

from conftest import chain_mdp, random_mdp


def full_demos(mdp, expert):
    s = np.arange(mdp.n_states)
    return DemonstrationSet(np.stack([s, expert[s]], axis=1), mdp.n_states, mdp.n_actions)


@pytest.fixture(scope="module")
def grid_env():
    return make_task("gridworld-simple", 0)


class TestExpertTransitions:
    def test_full(self, g):
        mdp = random_mdp(g, 4, 3)
        expert = np.array([0, 2, 1, 1])
        P_E = estimate_expert_transitions(mdp, estimate_policy(full_demos(mdp, expert)))
        np.testing.assert_array_equal(P_E, mdp.transitions[np.arange(4), expert])

    def test_none(self, g):
        mdp = random_mdp(g, 4, 3)
        empty = DemonstrationSet(np.zeros((0, 2), dtype=int), 4, 3)
        assert not estimate_expert_transitions(mdp, estimate_policy(empty)).any()

    def test_half(self, g):
        mdp = random_mdp(g, 4, 2)
        demos = DemonstrationSet(np.array([[0, 1], [1, 0]]), 4, 2)
        P_E = estimate_expert_transitions(mdp, estimate_policy(demos))
        np.testing.assert_allclose(P_E.sum(axis=1), [1, 1, 0, 0])


class TestMappingMatrix:
    def test_myopic(self, g):
        mdp = random_mdp(g, 4, 3)
        est = estimate_policy(full_demos(mdp, np.array([0, 1, 2, 0])))
        P_E = estimate_expert_transitions(mdp, est)
        F = mapping_matrix(mdp, P_E, est, 0.0)
        np.testing.assert_allclose(F.entries, np.where(F.active[:, :, None], P_E[:, None, :] - mdp.transitions, 0))

    def test_undemonstrated_rows_are_zero(self, g):
        mdp = random_mdp(g, 4, 3)
        est = estimate_policy(DemonstrationSet(np.array([[2, 1]]), 4, 3))
        F = mapping_matrix(mdp, estimate_expert_transitions(mdp, est), est, 0.7)
        assert not F.entries[[0, 1, 3]].any()
        assert F.active[2].tolist() == [True, False, True]

    def test_two_state_by_hand(self):
        # expert moves 0 -> 1 and stays there; (I - 0.5 P_E)^-1 = [[1, 1], [0, 2]]
        mdp = chain_mdp()
        est = estimate_policy(full_demos(mdp, np.array([1, 0])))
        F = mapping_matrix(mdp, estimate_expert_transitions(mdp, est), est, 0.5)
        np.testing.assert_allclose(F.entries[0, 0], [-1.0, 1.0])
        np.testing.assert_allclose(F.entries[1, 1], [-1.0, 1.0])
        assert not F.active[0, 1] and not F.active[1, 0]

    def test_equal_transition_actions_are_skipped(self):
        P = np.zeros((2, 3, 2))
        P[:, 0, 0] = P[:, 1, 0] = 1.0  # actions 0 and 1 identical
        P[:, 2, 1] = 1.0
        from horizon_irl.mdp import TabularMdp

        mdp = TabularMdp(P, np.zeros((2, 3)))
        est = estimate_policy(full_demos(mdp, np.array([0, 0])))
        F = mapping_matrix(mdp, estimate_expert_transitions(mdp, est), est, 0.5)
        assert F.active.tolist() == [[False, False, True], [False, False, True]]


class TestBuildLp:
    def test_counts_for_one_state(self):
        mdp = chain_mdp()
        est = estimate_policy(DemonstrationSet(np.array([[0, 1]]), 2, 2))
        F = mapping_matrix(mdp, estimate_expert_transitions(mdp, est), est, 0.5)
        problem = build_lp(F, 1.0, 0.01)
        assert problem.n_variables == 2 + 1
        assert problem.n_constraints == 2

    def test_margin_must_be_positive(self):
        mdp = chain_mdp()
        est = estimate_policy(full_demos(mdp, np.array([1, 0])))
        F = mapping_matrix(mdp, estimate_expert_transitions(mdp, est), est, 0.5)
        with pytest.raises(ValidationError):
            build_lp(F, 1.0, 0.0)

    def test_isolation_of_states(self, g):
        mdp = random_mdp(g, 5, 3)
        expert = g.integers(3, size=5)
        demos = full_demos(mdp, expert)
        n = mdp.n_states

        def pattern(d):
            est = estimate_policy(d)
            F = mapping_matrix(mdp, estimate_expert_transitions(mdp, est), est, 0.8)
            problem = build_lp(F, 1.0, 0.01)
            xi = problem.constraint_matrix[:, n:]
            owner = F.demonstrated_states[np.argmax(xi != 0, axis=1)]
            has_xi = xi.any(axis=1)
            return problem, owner[has_xi]

        p_all, owners_all = pattern(demos)
        p_less, owners_less = pattern(demos.subset([0, 1, 3, 4]))
        assert 2 not in owners_less
        np.testing.assert_array_equal(np.sort(owners_all[owners_all != 2]), np.sort(owners_less))
        assert p_all.n_variables - p_less.n_variables == 1
        # each constraint row touches at most one xi
        assert np.all((p_all.constraint_matrix[:, n:] != 0).sum(axis=1) <= 1)


class TestLpIrl:
    def test_two_state_expert_uniquely_optimal(self):
        mdp = chain_mdp()
        expert = np.array([1, 0])
        r = lp_irl(mdp, full_demos(mdp, expert), 0.5)
        adv = advantage(mdp, expert, 0.5, reward=r)
        adv[np.arange(2), expert] = -1
        assert adv.max() < 0

    def test_certificate(self, g):
        for _ in range(10):
            mdp = random_mdp(g, 6, 3)
            expert = g.integers(3, size=6)
            demos = sample_pairs(mdp, expert, 4, int(g.integers(1000)))
            r, det = lp_irl(mdp, demos, 0.7, return_details=True)
            F = det.fmap
            vals = F.entries @ r[:, 0]
            assert np.all(vals[F.active] >= det.margin - 1e-7)
            assert np.abs(r).max() <= 1.0 + 1e-9

    def test_single_demonstrated_state(self, g):
        mdp = random_mdp(g, 5, 2)
        demos = DemonstrationSet(np.array([[3, 1]]), 5, 2)
        r, det = lp_irl(mdp, demos, 0.6, return_details=True)
        assert det.problem.n_variables == 5 + 1
        assert det.fmap.entries[3, 0] @ r[:, 0] >= det.margin - 1e-7

    def test_needs_demonstrations(self, g):
        mdp = random_mdp(g, 3, 2)
        with pytest.raises(ValidationError):
            lp_irl(mdp, DemonstrationSet(np.zeros((0, 2), dtype=int), 3, 2), 0.5)

    def test_infeasible_when_alternatives_dominate(self):
        # the expert's transition row is a mixture of the others' rows: any margin fails
        from horizon_irl.mdp import TabularMdp

        P = np.zeros((2, 3, 2))
        P[:, 0, 0] = P[:, 2, 1] = 1.0
        P[:, 1] = 0.5
        mdp = TabularMdp(P, np.zeros((2, 3)))
        with pytest.raises(InfeasibleError):
            lp_irl(mdp, full_demos(mdp, np.array([1, 1])), 0.5)

    def test_full_data_gridworld(self, grid_env):
        env = grid_env
        r = lp_irl(env.mdp, full_demos(env.mdp, env.expert), 0.9)
        pi, _ = optimal_policy(env.mdp, 0.9, reward=r)
        assert state_error_count(pi, env.expert) <= 5

    def test_full_data_recovery_at_gamma0(self):
        mdp, expert, _ = make_gridworld(GridSpec(6, 6, 2, seed=3))
        r = lp_irl(mdp, full_demos(mdp, expert), GAMMA0)
        pi, _ = optimal_policy(mdp, GAMMA0, reward=r)
        adv = advantage(mdp, expert, GAMMA0)
        adv[np.arange(mdp.n_states), expert] = -np.inf
        unique = adv.max(axis=1) < -1e-9
        assert unique.sum() > mdp.n_states // 2
        np.testing.assert_array_equal(pi[unique], expert[unique])

    def test_reward_csv(self, tmp_path, g):
        r = g.normal(size=(4, 3))
        path = save_reward_csv(r, tmp_path / "r.csv")
        assert path.read_text().splitlines()[0] == "state,action,reward"
        np.testing.assert_array_equal(load_reward_csv(path), r)
