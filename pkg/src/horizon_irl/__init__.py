"""Effective-horizon inverse reinforcement learning on tabular MDPs."""
from .demos import DemonstrationSet, TrajectorySet, estimate_policy, sample_pairs, sample_trajectories
from .envs import Environment, make_task
from .estimators import LPIRL, MaxEntIRL
from .lp_irl import InfeasibleError, lp_irl
from .maxent import train_maxent
from .mdp import TabularMdp, ValidationError, optimal_policy, value_iteration
from .selection import CandidateGrid, cross_validate, oracle_select, state_error_count

__version__ = "0.1.0"

__all__ = [
    "CandidateGrid", "DemonstrationSet", "Environment", "InfeasibleError", "LPIRL", "MaxEntIRL",
    "TabularMdp", "TrajectorySet", "ValidationError", "cross_validate", "estimate_policy", "lp_irl",
    "make_task", "optimal_policy", "oracle_select", "sample_pairs", "sample_trajectories",
    "state_error_count", "train_maxent", "value_iteration",
]
