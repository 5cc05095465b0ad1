"""
🤖 Experts programados
Controladores proporcionais em malha fechada, um por tarefa. A fase (aproximar, agarrar,
transportar, pousar, recuar) é inferida do estado atual, por isso o expert não guarda memória.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from src.envs.block_world import (
    BLUE, GREEN, NO_BLOCK, BlockWorldState, EnvConfig, blue_on_green, green_on_blue,
)
from src.envs.tasks import TaskId
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)

ALIGN_TOL = 1e-3
GRASP_TOL = 4e-3
ASIDE_OFFSET = 0.08


def _toward(target: np.ndarray, position: np.ndarray, config: EnvConfig) -> np.ndarray:
    return np.clip((np.asarray(target) - position) / config.max_step, -1.0, 1.0)


def _keep_open(state: BlockWorldState) -> float:
    return 1.0 if state.gripper < 1.0 else 0.0


def _action(move, grip: float) -> np.ndarray:
    return np.array([move[0], move[1], grip], dtype=np.float64)


def _release() -> np.ndarray:
    return _action((0.0, 0.0), 1.0)


def _grasp(state: BlockWorldState, config: EnvConfig, block: int) -> np.ndarray:
    """Aproxima com a pinça aberta e fecha sobre o centro do bloco."""
    if state.held not in (NO_BLOCK, block):
        return _release()
    target = state.blocks[block]
    if np.linalg.norm(state.agent - target) > GRASP_TOL:
        return _action(_toward(target, state.agent, config), _keep_open(state))
    if state.gripper > 0.0:
        return _action((0.0, 0.0), -1.0)
    # fechada em vazio: reabre para voltar a fechar
    return _release()


def _waypoint(position: np.ndarray, target: np.ndarray, config: EnvConfig) -> np.ndarray:
    """Sobe à altura de transporte, desloca-se na horizontal e só então desce ao alvo."""
    carry = max(config.carry_height, target[1])
    if abs(position[0] - target[0]) > ALIGN_TOL:
        if position[1] < carry - ALIGN_TOL:
            return np.array([position[0], carry])
        return np.array([target[0], carry])
    return target


def _place(state: BlockWorldState, config: EnvConfig, block: int, target: np.ndarray) -> np.ndarray:
    position = state.blocks[block]
    if np.linalg.norm(position - target) <= ALIGN_TOL:
        return _release()
    return _action(_toward(_waypoint(position, target, config), position, config), 0.0)


def _retreat(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    """Depois de pousar: abre totalmente e afasta-se na vertical."""
    if state.gripper < 1.0:
        return _release()
    clearance = config.release_clearance + 0.01
    if np.linalg.norm(state.agent - state.blue) <= clearance:
        target = np.array([state.agent[0], state.blue[1] + clearance])
        return _action(_toward(target, state.agent, config), 0.0)
    return np.zeros(3)


def _nearest_block(state: BlockWorldState) -> np.ndarray:
    distances = np.linalg.norm(state.blocks - state.agent, axis=1)
    return state.blocks[int(np.argmin(distances))]


# ---------------------------------------------------------------------- #
# Um controlador por tarefa
# ---------------------------------------------------------------------- #
def reach_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    if state.held != NO_BLOCK:
        return _release()
    return _action(_toward(state.blue, state.agent, config), _keep_open(state))


def lift_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    if state.held != BLUE:
        return _grasp(state, config, BLUE)
    target = np.array([state.blue[0], config.carry_height])
    return _action(_toward(target, state.blue, config), 0.0)


def move_object_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    if state.held != BLUE:
        return _grasp(state, config, BLUE)
    if state.blue[1] < config.carry_height - ALIGN_TOL:
        return lift_expert(state, config)

    left, right = 0.25 * config.tray_width, 0.75 * config.tray_width
    x, vx = state.blue[0], state.velocities[BLUE][0]
    if vx > 0:
        direction = 1.0 if x < right else -1.0
    elif vx < 0:
        direction = -1.0 if x > left else 1.0
    else:
        direction = 1.0 if x < config.tray_width / 2.0 else -1.0
    return _action((direction, 0.0), 0.0)


def stack_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    if blue_on_green(state, config) and state.held != BLUE:
        return _retreat(state, config)
    if state.held != BLUE:
        return _grasp(state, config, BLUE)
    goal = state.green + np.array([0.0, config.block_size])
    return _place(state, config, BLUE, goal)


def unstack_stack_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    if state.held == GREEN:
        offset = ASIDE_OFFSET if state.blue[0] < config.tray_width / 2.0 else -ASIDE_OFFSET
        aside = np.array([state.blue[0] + offset, config.rest_height])
        return _place(state, config, GREEN, aside)
    if green_on_blue(state, config):
        return _grasp(state, config, GREEN)
    return stack_expert(state, config)


def _zone_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    target = np.array([config.bring_zone_x, config.rest_height])
    if state.held != BLUE and np.linalg.norm(state.blue - target) <= ALIGN_TOL:
        return _retreat(state, config)
    if state.held != BLUE:
        return _grasp(state, config, BLUE)
    return _place(state, config, BLUE, target)


def open_gripper_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    block = _nearest_block(state)
    move = np.zeros(2)
    if np.linalg.norm(state.agent - block) >= 0.5 * config.near_radius:
        move = _toward(block, state.agent, config)
    return _action(move, 1.0)


def close_gripper_expert(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    block = _nearest_block(state)
    move = np.zeros(2)
    if np.linalg.norm(state.agent - block) >= 0.5 * config.near_radius:
        move = _toward(block, state.agent, config)
    return _action(move, -1.0)


EXPERTS: Dict[TaskId, Callable[[BlockWorldState, EnvConfig], np.ndarray]] = {
    TaskId.REACH: reach_expert,
    TaskId.LIFT: lift_expert,
    TaskId.MOVE_OBJECT: move_object_expert,
    TaskId.STACK: stack_expert,
    TaskId.UNSTACK_STACK: unstack_stack_expert,
    TaskId.BRING: _zone_expert,
    TaskId.INSERT: _zone_expert,
    TaskId.OPEN_GRIPPER: open_gripper_expert,
    TaskId.CLOSE_GRIPPER: close_gripper_expert,
}


def scripted_expert(task, state: BlockWorldState, config: Optional[EnvConfig] = None) -> np.ndarray:
    """Ação do expert programado para `task` no estado atual, em [−1, 1]³."""
    task = TaskId.parse(task)
    if task not in EXPERTS:
        raise ConfigurationError(f"sem expert programado para {task.value}")
    return EXPERTS[task](state, config or EnvConfig())


@dataclass
class PrefixedExpert:
    """
    Expert com prefixo de outra subtarefa nos primeiros passos do episódio.

    Open-Gripper: prefixo de uma subtarefa sorteada entre as restantes; Close-Gripper: prefixo Lift.
    Sem prefixo (prefix_steps = 0) comporta-se como o expert da tarefa.
    """

    task: TaskId
    config: EnvConfig
    prefix_tasks: Sequence[TaskId] = ()
    prefix_steps: int = 0

    @classmethod
    def for_task(cls, task, config: EnvConfig, taskset_tasks: Sequence[TaskId]) -> "PrefixedExpert":
        task = TaskId.parse(task)
        if task == TaskId.OPEN_GRIPPER:
            others = tuple(t for t in taskset_tasks if t != TaskId.OPEN_GRIPPER)
            return cls(task, config, others, config.open_prefix_steps)
        if task == TaskId.CLOSE_GRIPPER:
            return cls(task, config, (TaskId.LIFT,), config.close_prefix_steps)
        return cls(task, config)

    def episode_plan(self, rng: np.random.Generator) -> Optional[TaskId]:
        if not self.prefix_tasks or self.prefix_steps <= 0:
            return None
        return self.prefix_tasks[int(rng.integers(len(self.prefix_tasks)))]

    def act(self, state: BlockWorldState, prefix_task: Optional[TaskId]) -> np.ndarray:
        if prefix_task is not None and state.step < self.prefix_steps:
            return scripted_expert(prefix_task, state, self.config)
        return scripted_expert(self.task, state, self.config)
