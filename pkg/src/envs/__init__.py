# Envs Module
from .six_state import SixStateMDP
from .tasks import TaskId, TaskSet, taskset_for_variant
from .block_world import BlockWorld2D, BlockWorldState, EnvConfig, load_env_config, success, shaped_reward
from .experts import PrefixedExpert, scripted_expert

__all__ = [
    "SixStateMDP", "TaskId", "TaskSet", "taskset_for_variant", "BlockWorld2D", "BlockWorldState",
    "EnvConfig", "load_env_config", "success", "shaped_reward", "PrefixedExpert", "scripted_expert",
]
