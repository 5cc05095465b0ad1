# Tabular Module
from .qlearning import (
    GO_RIGHT_SET, MAIN_EXPERT_SET, PAIRS, SCRIPTED_EPISODES, PerfectDiscriminatorReward, QTable, SequentialSweep,
    TabularBuffer, brute_force_optimal, converge, converge_many, episode_steps, epsilon_greedy, greedy_path,
    replay_scripted_episodes, run_episode, sequence_return,
)
from .lfgp import TabularRun, run_ail_tabular, run_lfgp_tabular, run_seeds
from .report import SixStateReport, build_report, write_report

__all__ = [
    "GO_RIGHT_SET", "MAIN_EXPERT_SET", "PAIRS", "SCRIPTED_EPISODES", "PerfectDiscriminatorReward", "QTable",
    "SequentialSweep", "TabularBuffer", "brute_force_optimal", "converge", "converge_many", "episode_steps",
    "epsilon_greedy", "greedy_path", "replay_scripted_episodes", "run_episode", "sequence_return", "TabularRun",
    "run_ail_tabular", "run_lfgp_tabular", "run_seeds", "SixStateReport", "build_report", "write_report",
]
