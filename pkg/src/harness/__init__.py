# Harness Module
from .config import RunConfig, load_run_config
from .collect import collect_expert, expert_success_rate, run_expert_episode
from .evaluate import (
    EvaluationResult, evaluate, evaluate_actor, evaluate_policy, policy_actor, random_actor, scripted_actor,
)
from .train import TrainResult, load_expert_data, prepare_expert_buffers, train
from .ablate import AblationMatrix, ablate, load_matrix, parse_matrix
from .plots import plot_runs

__all__ = [
    "RunConfig", "load_run_config", "collect_expert", "expert_success_rate", "run_expert_episode",
    "EvaluationResult", "evaluate", "evaluate_actor", "evaluate_policy", "policy_actor", "random_actor",
    "scripted_actor", "TrainResult", "load_expert_data", "prepare_expert_buffers", "train", "AblationMatrix",
    "ablate", "load_matrix", "parse_matrix", "plot_runs",
]
