"""
🗓️ Scheduler de intenções
Escolhe a intenção que controla o agente em cada período de ξ passos: WRS, WRS + trajetórias
handcrafted, scheduler aprendido (Boltzmann sobre uma tabela Q atualizada por média móvel
exponencial) ou só a tarefa principal.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigurationError, UsageError
from src.scheduling.library import HCTrajectory

logger = logging.getLogger(__name__)

VARIANTS = ("wrs", "wrs_hc", "learned", "none")
MAIN = 0
NO_PREVIOUS = -1


@dataclass
class SchedulerState:
    variant: str
    n_tasks: int
    p_main: float = 0.5
    hc_library: Tuple[Tuple[int, ...], ...] = ()
    hc_rate: float = 0.5
    period: int = 10
    n_periods: int = 6
    phi: float = 0.6
    temperature: float = 360.0
    temperature_decay: float = 0.9995
    temperature_floor: float = 0.1
    q_table: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    active_hc: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        self.variant = self.variant.strip().lower().replace("-", "_")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"scheduler desconhecido: {self.variant} (opções: {', '.join(VARIANTS)})")
        if self.n_tasks < 1:
            raise ConfigurationError("o scheduler precisa de pelo menos uma tarefa")
        if not 0.0 < self.p_main <= 1.0:
            raise ConfigurationError(f"p_main fora de (0, 1]: {self.p_main}")
        if not 0.0 <= self.hc_rate <= 1.0:
            raise ConfigurationError(f"hc_rate fora de [0, 1]: {self.hc_rate}")
        if not 0.0 < self.phi <= 1.0:
            raise ConfigurationError(f"phi fora de (0, 1]: {self.phi}")
        if self.temperature_floor <= 0.0:
            raise ConfigurationError("temperatura mínima deve ser positiva")
        self.temperature = max(self.temperature, self.temperature_floor)
        self.hc_library = tuple(tuple(int(i) for i in t) for t in self.hc_library)
        for trajectory in self.hc_library:
            if len(trajectory) != self.n_periods:
                raise ConfigurationError(
                    f"trajetória HC com {len(trajectory)} escolhas para H={self.n_periods}")
            if any(not 0 <= i < self.n_tasks for i in trajectory):
                raise ConfigurationError(f"trajetória HC com tarefa fora do TaskSet: {trajectory}")

    @classmethod
    def from_library(cls, variant: str, taskset, library: Sequence[HCTrajectory] = (), **options) -> "SchedulerState":
        indices = tuple(t.indices(taskset) for t in library)
        return cls(variant, len(taskset), hc_library=indices, **options)

    def wrs_weights(self) -> np.ndarray:
        """Massa p_main na tarefa principal e (1 − p_main)/K em cada uma das K auxiliares."""
        if self.n_tasks == 1:
            return np.ones(1)
        aux = (1.0 - self.p_main) / (self.n_tasks - 1)
        return np.array([self.p_main] + [aux] * (self.n_tasks - 1))

    def q_row(self, h: int, prev: Optional[int]) -> np.ndarray:
        row = self.q_table.get((h, _previous(h, prev)))
        return np.zeros(self.n_tasks) if row is None else row

    def boltzmann(self, h: int, prev: Optional[int]) -> np.ndarray:
        logits = self.q_row(h, prev) / self.temperature
        logits = logits - np.max(logits)
        weights = np.exp(logits)
        return weights / weights.sum()


def _previous(h: int, prev: Optional[int]) -> int:
    return NO_PREVIOUS if h == 0 or prev is None else int(prev)


def select_intention(state: SchedulerState, h: int, prev: Optional[int], rng: np.random.Generator) -> int:
    """
    Índice (no TaskSet) da intenção do período h.

    wrs_hc decide em h = 0 se o episódio segue uma trajetória HC (sorteada uniformemente).
    """
    if not 0 <= h < state.n_periods:
        raise UsageError(f"período {h} fora de [0, {state.n_periods})")
    if state.variant == "none":
        return MAIN
    if state.variant == "learned":
        return int(rng.choice(state.n_tasks, p=state.boltzmann(h, prev)))
    if state.variant == "wrs_hc":
        if not state.hc_library:
            raise ConfigurationError("scheduler wrs_hc sem trajetórias HC para este TaskSet")
        if h == 0:
            state.active_hc = None
            if rng.random() < state.hc_rate:
                state.active_hc = state.hc_library[int(rng.integers(len(state.hc_library)))]
        if state.active_hc is not None:
            return state.active_hc[h]
    return int(rng.choice(state.n_tasks, p=state.wrs_weights()))


def ema(q: float, g: float, phi: float) -> float:
    """Q ← (1 − φ)·Q + φ·G."""
    return (1.0 - phi) * q + phi * g


def tail_returns(rewards: Sequence[float], starts: Sequence[int], gamma: float) -> np.ndarray:
    """Retorno descontado a partir de cada início de período, relativo a esse início."""
    rewards = np.asarray(rewards, dtype=np.float64)
    out = np.zeros(len(starts))
    for i, start in enumerate(starts):
        tail = rewards[start:]
        out[i] = float(np.dot(gamma ** np.arange(tail.size), tail))
    return out


def ema_update(state: SchedulerState, choices: Sequence[int], main_rewards: Sequence[float],
               gamma: float) -> SchedulerState:
    """
    Atualiza as células (h, anterior, escolhida) visitadas num episódio terminado.

    `main_rewards` traz a recompensa AIRL da tarefa principal em cada passo do episódio.
    """
    if state.variant != "learned":
        raise UsageError(f"ema_update só se aplica ao scheduler aprendido (variante {state.variant})")
    starts = [h * state.period for h in range(len(choices))]
    returns = tail_returns(main_rewards, starts, gamma)
    prev = NO_PREVIOUS
    for h, (choice, g) in enumerate(zip(choices, returns)):
        key = (h, _previous(h, prev))
        row = state.q_table.setdefault(key, np.zeros(state.n_tasks))
        row[choice] = ema(row[choice], g, state.phi)
        prev = choice
    return state


def temperature_decay(state: SchedulerState) -> SchedulerState:
    if state.variant != "learned":
        raise UsageError(f"temperature_decay só se aplica ao scheduler aprendido (variante {state.variant})")
    state.temperature = max(state.temperature_floor, state.temperature * state.temperature_decay)
    return state


@dataclass
class EpisodeSchedule:
    """Escolhas de um episódio: uma por período, consultadas passo a passo pelo laço de treino."""

    state: SchedulerState
    rng: np.random.Generator
    choices: list = field(default_factory=list)

    def intention_at(self, t: int) -> int:
        h = t // self.state.period
        if h >= self.state.n_periods:
            return self.choices[-1]
        while len(self.choices) <= h:
            prev = self.choices[-1] if self.choices else None
            self.choices.append(select_intention(self.state, len(self.choices), prev, self.rng))
        return self.choices[h]

    def finish(self, main_rewards: Sequence[float], gamma: float) -> SchedulerState:
        if self.state.variant == "learned" and self.choices:
            ema_update(self.state, self.choices, main_rewards, gamma)
            temperature_decay(self.state)
        return self.state
