"""
🧱 Mundo de blocos 2-D
Análogo em vista lateral do tabuleiro de manipulação: um agente pontual com pinça, um bloco azul
(o que é manipulado) e um bloco verde (base do empilhamento). Sem gravidade nem atrito: um bloco
solto nunca se move e um bloco agarrado acompanha o agente exatamente.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from src.envs.tasks import TaskId, TaskSet, taskset_for_variant
from src.errors import ConfigurationError
from src.settings import build_dataclass, read_key_values

logger = logging.getLogger(__name__)

BLUE, GREEN = 0, 1
NO_BLOCK = -1
OBS_DIM = 18
ACT_DIM = 3


@dataclass
class EnvConfig:
    """Constantes do mundo 2-D (metros, passos). O ficheiro config/environment.env espelha estes campos."""

    variant: str = field(default="stack", metadata={"source": "variante: stack | unstack-stack | bring | insert"})
    tray_width: float = field(default=0.30, metadata={"source": "tabuleiro de 30 cm"})
    tray_height: float = field(default=0.145, metadata={"source": "limite superior do agente (14,5 cm)"})
    agent_min_height: float = field(default=0.02, metadata={"source": "agente alcança o centro de um bloco pousado"})
    agent_reset_min_height: float = field(default=0.05, metadata={"source": "reset do agente entre 5 e 14,5 cm"})
    block_size: float = field(default=0.04, metadata={"source": "blocos de 4 cm"})
    min_block_gap: float = field(default=0.06, metadata={"source": "separação mínima dos blocos no reset"})
    max_step: float = field(default=0.02, metadata={"source": "deslocamento máximo por passo"})
    grip_rate: float = field(default=0.5, metadata={"source": "variação da abertura da pinça por passo"})
    grasp_radius: float = field(default=0.02, metadata={"source": "raio de preensão no instante de fecho"})
    dt: float = field(default=0.05, metadata={"source": "20 Hz"})
    horizon: int = field(default=60, metadata={"source": "episódio 6× mais curto (360 → 60)"})
    reach_threshold: float = field(default=0.015, metadata={"source": "Reach: ‖p_e − p_b‖ < 0.015"})
    lift_threshold: float = field(default=0.06, metadata={"source": "Lift: altura do bloco > 0.06"})
    move_speed_threshold: float = field(default=0.05, metadata={"source": "Move-Object: v_b > 0.05"})
    stack_tolerance: float = field(default=0.005, metadata={"source": "folga vertical de contacto"})
    release_clearance: float = field(default=0.02, metadata={"source": "agente afastado do bloco pousado"})
    near_radius: float = field(default=0.1, metadata={"source": "Open/Close-Gripper: perto de um bloco"})
    bring_zone_x: float = field(default=0.25, metadata={"source": "centro da zona azul"})
    bring_threshold: float = field(default=0.03, metadata={"source": "Bring: 3 cm"})
    insert_threshold: float = field(default=0.0025, metadata={"source": "Insert: análogo com limiar apertado"})
    carry_height: float = field(default=0.10, metadata={"source": "altura de transporte dos experts"})
    hold_steps: int = field(default=5, metadata={"source": "sucesso mantido 5 passos"})
    move_hold_steps: int = field(default=10, metadata={"source": "Move-Object mantido 10 passos"})
    open_prefix_steps: int = field(default=8, metadata={"source": "prefixo de outra subtarefa (45/360 → 8/60)"})
    close_prefix_steps: int = field(default=10, metadata={"source": "prefixo Lift antes do Close-Gripper"})

    def __post_init__(self):
        self.provenance = {}
        if self.horizon <= 0 or self.max_step <= 0 or self.block_size <= 0:
            raise ConfigurationError("horizonte, passo e tamanho do bloco devem ser positivos")
        taskset_for_variant(self.variant)

    @property
    def rest_height(self) -> float:
        return self.block_size / 2.0

    @property
    def taskset(self) -> TaskSet:
        return taskset_for_variant(self.variant)

    def hold_for(self, task: TaskId) -> int:
        return self.move_hold_steps if TaskId.parse(task) == TaskId.MOVE_OBJECT else self.hold_steps

    @classmethod
    def from_file(cls, path, overrides=None) -> "EnvConfig":
        return build_dataclass(cls, read_key_values(path), overrides)


@dataclass
class BlockWorldState:
    agent: np.ndarray
    gripper: float
    blocks: np.ndarray
    velocities: np.ndarray
    held: int = NO_BLOCK
    step: int = 0

    def copy(self) -> "BlockWorldState":
        return BlockWorldState(self.agent.copy(), float(self.gripper), self.blocks.copy(),
                               self.velocities.copy(), int(self.held), int(self.step))

    @property
    def blue(self) -> np.ndarray:
        return self.blocks[BLUE]

    @property
    def green(self) -> np.ndarray:
        return self.blocks[GREEN]


def agent_bounds(config: EnvConfig) -> Tuple[np.ndarray, np.ndarray]:
    return (np.array([0.0, config.agent_min_height]), np.array([config.tray_width, config.tray_height]))


def block_bounds(config: EnvConfig) -> Tuple[np.ndarray, np.ndarray]:
    half = config.rest_height
    return (np.array([half, half]), np.array([config.tray_width - half, config.tray_height]))


def in_bounds(state: BlockWorldState, config: EnvConfig, tol: float = 1e-12) -> bool:
    lo, hi = agent_bounds(config)
    blo, bhi = block_bounds(config)
    agent_ok = np.all(state.agent >= lo - tol) and np.all(state.agent <= hi + tol)
    blocks_ok = np.all(state.blocks >= blo - tol) and np.all(state.blocks <= bhi + tol)
    return bool(agent_ok and blocks_ok and 0.0 <= state.gripper <= 1.0)


# ---------------------------------------------------------------------- #
# Predicados de sucesso (puros sobre o estado)
# ---------------------------------------------------------------------- #
def _resting(y: float, config: EnvConfig) -> bool:
    return abs(y - config.rest_height) < config.stack_tolerance


def _released(state: BlockWorldState, config: EnvConfig) -> bool:
    away = np.linalg.norm(state.agent - state.blue) > config.release_clearance
    return state.held != BLUE and bool(away)


def blue_on_green(state: BlockWorldState, config: EnvConfig) -> bool:
    dx = abs(state.blue[0] - state.green[0])
    dy = abs(state.blue[1] - (state.green[1] + config.block_size))
    return dx < config.block_size / 2.0 and dy < config.stack_tolerance


def green_on_blue(state: BlockWorldState, config: EnvConfig) -> bool:
    dx = abs(state.green[0] - state.blue[0])
    return dx < config.block_size and state.green[1] > state.blue[1] + config.block_size / 2.0


def _near_block(state: BlockWorldState, config: EnvConfig) -> bool:
    return bool(np.min(np.linalg.norm(state.blocks - state.agent, axis=1)) < config.near_radius)


def _in_zone(state: BlockWorldState, config: EnvConfig, threshold: float) -> bool:
    return (abs(state.blue[0] - config.bring_zone_x) < threshold and _resting(state.blue[1], config)
            and _released(state, config))


def success(task, state: BlockWorldState, config: Optional[EnvConfig] = None) -> bool:
    """Indicador binário de sucesso; a persistência por N passos é tratada pela avaliação."""
    config = config or EnvConfig()
    task = TaskId.parse(task)
    if task == TaskId.REACH:
        return bool(np.linalg.norm(state.agent - state.blue) < config.reach_threshold)
    if task == TaskId.LIFT:
        return bool(state.blue[1] - config.rest_height > config.lift_threshold)
    if task == TaskId.MOVE_OBJECT:
        return bool(np.linalg.norm(state.velocities[BLUE]) > config.move_speed_threshold)
    if task in (TaskId.STACK, TaskId.UNSTACK_STACK):
        return blue_on_green(state, config) and _released(state, config)
    if task == TaskId.BRING:
        return _in_zone(state, config, config.bring_threshold)
    if task == TaskId.INSERT:
        return _in_zone(state, config, config.insert_threshold)
    if task == TaskId.OPEN_GRIPPER:
        return state.gripper >= 1.0 and _near_block(state, config)
    if task == TaskId.CLOSE_GRIPPER:
        return state.gripper <= 0.0 and _near_block(state, config)
    raise ConfigurationError(f"tarefa sem predicado de sucesso: {task}")


def shaped_reward(task, state: BlockWorldState, config: Optional[EnvConfig] = None) -> float:
    """Recompensa densa só para diagnóstico (retorno médio nas métricas); nunca usada no treino."""
    config = config or EnvConfig()
    task = TaskId.parse(task)
    if task == TaskId.REACH:
        base = -float(np.linalg.norm(state.agent - state.blue))
    elif task == TaskId.LIFT:
        base = float(np.clip((state.blue[1] - config.rest_height) / config.lift_threshold, 0.0, 1.0)) - 1.0
    elif task == TaskId.MOVE_OBJECT:
        base = min(float(np.linalg.norm(state.velocities[BLUE])) / config.move_speed_threshold, 1.0) - 1.0
    elif task in (TaskId.STACK, TaskId.UNSTACK_STACK):
        goal = state.green + np.array([0.0, config.block_size])
        base = -float(np.linalg.norm(state.blue - goal))
    elif task in (TaskId.BRING, TaskId.INSERT):
        base = -abs(state.blue[0] - config.bring_zone_x) - abs(state.blue[1] - config.rest_height)
    elif task == TaskId.OPEN_GRIPPER:
        base = state.gripper - 1.0
    elif task == TaskId.CLOSE_GRIPPER:
        base = -state.gripper
    else:
        raise ConfigurationError(f"tarefa sem recompensa: {task}")
    return base + float(success(task, state, config))


def observe(state: BlockWorldState, config: EnvConfig) -> np.ndarray:
    """Vetor de observação com 18 dimensões, em unidades do ambiente (sem normalização)."""
    return np.concatenate([
        state.agent,
        [state.gripper],
        state.blue,
        state.green,
        state.velocities[BLUE],
        state.velocities[GREEN],
        state.blue - state.agent,
        state.green - state.agent,
        state.blue - state.green,
        [state.blue[0] - config.bring_zone_x],
    ]).astype(np.float64)


class BlockWorld2D:
    """Ambiente de um só thread; instâncias distintas podem correr em threads diferentes."""

    obs_dim = OBS_DIM
    act_dim = ACT_DIM

    def __init__(self, config: Optional[EnvConfig] = None, seed: Optional[int] = None):
        self.config = config or EnvConfig()
        self.taskset = self.config.taskset
        self._rng = np.random.default_rng(seed)
        self.state: Optional[BlockWorldState] = None

    # ------------------------------------------------------------------ #
    def reset(self, seed: Optional[int] = None) -> BlockWorldState:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        rng, cfg = self._rng, self.config
        half = cfg.rest_height

        while True:
            xs = rng.uniform(half, cfg.tray_width - half, size=2)
            if abs(xs[0] - xs[1]) >= cfg.min_block_gap:
                break
        blocks = np.array([[xs[0], half], [xs[1], half]])
        if cfg.variant == "unstack-stack":
            blocks[GREEN] = [xs[0], half + cfg.block_size]

        agent = np.array([rng.uniform(0.0, cfg.tray_width),
                          rng.uniform(cfg.agent_reset_min_height, cfg.tray_height)])
        self.state = BlockWorldState(agent, 1.0, blocks, np.zeros((2, 2)))
        return self.state

    def observe(self, state: Optional[BlockWorldState] = None) -> np.ndarray:
        return observe(state or self.state, self.config)

    def success(self, task, state: Optional[BlockWorldState] = None) -> bool:
        return success(task, state or self.state, self.config)

    def step(self, action) -> Tuple[BlockWorldState, float, bool]:
        """Ação (Δx, Δy, pinça) recortada a [−1, 1]; pinça > 0 abre, < 0 fecha."""
        if self.state is None:
            self.reset()
        cfg, s = self.config, self.state
        a = np.clip(np.asarray(action, dtype=np.float64).ravel(), -1.0, 1.0)
        if a.size != ACT_DIM:
            raise ConfigurationError(f"ação com dimensão {a.size}, esperado {ACT_DIM}")

        previous_blocks = s.blocks.copy()
        previous_grip = s.gripper
        s.gripper = float(np.clip(previous_grip + cfg.grip_rate * np.sign(a[2]), 0.0, 1.0))
        if s.gripper > 0.0:
            s.held = NO_BLOCK
        elif previous_grip > 0.0 and s.held == NO_BLOCK:
            distances = np.linalg.norm(s.blocks - s.agent, axis=1)
            closest = int(np.argmin(distances))
            if distances[closest] <= cfg.grasp_radius:
                s.held = closest

        lo, hi = agent_bounds(cfg)
        delta = np.clip(s.agent + cfg.max_step * a[:2], lo, hi) - s.agent
        if s.held != NO_BLOCK:
            blo, bhi = block_bounds(cfg)
            moved = np.clip(s.blocks[s.held] + delta, blo, bhi)
            delta = moved - s.blocks[s.held]
            s.blocks[s.held] = moved
        s.agent = s.agent + delta
        s.velocities = (s.blocks - previous_blocks) / cfg.dt
        s.step += 1

        reward = shaped_reward(self.taskset.main, s, cfg)
        return s, reward, s.step >= cfg.horizon


def load_env_config(path=None, overrides=None) -> EnvConfig:
    """EnvConfig do ficheiro (ou só defaults); falha com ConfigurationError em chaves inválidas."""
    if path is None:
        return build_dataclass(EnvConfig, {}, overrides)
    logger.info(f"⚙️ Config do ambiente: {Path(path).name}")
    return EnvConfig.from_file(path, overrides)
