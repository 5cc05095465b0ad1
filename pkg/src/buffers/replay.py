"""
🔁 Buffer de replay partilhado
Anel FIFO de capacidade fixa; um único escritor (o ciclo de treino).
"""
import logging
from dataclasses import dataclass

import numpy as np

from src.buffers.transition import REPLAY_SOURCE, Batch, Transition
from src.errors import ConfigurationError, WarmupError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReplayView:
    """Cópia imutável do conteúdo válido, do mais antigo para o mais recente."""

    obs: np.ndarray
    act: np.ndarray
    next_obs: np.ndarray
    terminal: np.ndarray

    def __len__(self):
        return self.obs.shape[0]

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if len(self) == 0:
            raise WarmupError("replay vazio")
        idx = rng.integers(len(self), size=n)
        return Batch(self.obs[idx], self.act[idx], self.next_obs[idx], self.terminal[idx],
                     np.full(n, REPLAY_SOURCE, dtype=np.int64))


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity <= 0:
            raise ConfigurationError(f"capacidade do replay deve ser positiva: {capacity}")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, transition: Transition):
        i = self.cursor
        self.obs[i] = transition.s
        self.act[i] = transition.a
        self.next_obs[i] = transition.s_next
        self.terminal[i] = transition.terminal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _order(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self.cursor) % self.capacity

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise WarmupError("replay vazio: nenhuma transição antes do warmup")
        idx = rng.integers(self.size, size=n)
        return Batch(self.obs[idx], self.act[idx], self.next_obs[idx], self.terminal[idx],
                     np.full(n, REPLAY_SOURCE, dtype=np.int64))

    def snapshot(self) -> ReplayView:
        order = self._order()
        arrays = [self.obs[order], self.act[order], self.next_obs[order], self.terminal[order]]
        for array in arrays:
            array.flags.writeable = False
        return ReplayView(*arrays)
