"""
🧮 Banco de Q duplo por tarefa
Tronco próprio sobre (s, a) + duas cabeças por tarefa (clipped double Q) e cópia-alvo polyak.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.intentions.policy import HEADS, TRUNK, trunk_and_heads
from src.ndgrad import tensor as T
from src.ndgrad.mlp import Network, forward_graph
from src.ndgrad.tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass
class QBank:
    """Cabeças na ordem (T0·Q1, T0·Q2, T1·Q1, …); `target` usa o mesmo layout plano."""

    network: Network
    target: np.ndarray
    n_tasks: int
    tau: float = 1e-4

    @classmethod
    def build(cls, obs_dim: int, act_dim: int, n_tasks: int, trunk_hidden: Sequence[int], head_hidden: int,
              rng: np.random.Generator, tau: float = 1e-4) -> "QBank":
        specs = trunk_and_heads(obs_dim + act_dim, 1, 2 * n_tasks, trunk_hidden, head_hidden)
        network = Network.initialised(specs, rng)
        return cls(network, network.params.values.copy(), n_tasks, tau)

    @property
    def params(self):
        return self.network.params

    @property
    def _pair_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_tasks), 2)

    def evaluate(self, obs: np.ndarray, actions: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Q para todas as tarefas: (K, 2, B).

        `actions` (B, A) é partilhada por todas as tarefas; (K, B, A) dá uma ação por tarefa.
        """
        obs = np.atleast_2d(obs)
        if actions.ndim == 2:
            features = self.network.evaluate(TRUNK, np.concatenate([obs, actions], axis=1), values)
            stacked = np.broadcast_to(features, (2 * self.n_tasks,) + features.shape)
        else:
            K, B, _ = actions.shape
            tiled = np.broadcast_to(obs, (K,) + obs.shape)
            flat = np.concatenate([tiled, actions], axis=2).reshape(K * B, -1)
            features = self.network.evaluate(TRUNK, flat, values).reshape(K, B, -1)
            stacked = features[self._pair_index]
        out = self.network.evaluate(HEADS, stacked, values)
        return out.reshape(self.n_tasks, 2, -1)

    def graph(self, leaves: dict, obs: np.ndarray, actions) -> Tensor:
        """Mesma avaliação gravada na fita; `actions` pode ser um Tensor (K, B, A)."""
        obs = np.atleast_2d(obs)
        actions = Tensor.const(actions)
        trunk_spec, heads_spec = self.network.specs[TRUNK], self.network.specs[HEADS]
        if actions.value.ndim == 2:
            x = T.concat([Tensor.const(obs), actions], axis=1)
            features = forward_graph(trunk_spec, leaves[TRUNK], x)
        else:
            K, B, _ = actions.shape
            tiled = Tensor.const(np.broadcast_to(obs, (K,) + obs.shape))
            x = T.reshape(T.concat([tiled, actions], axis=2), (K * B, -1))
            features = T.reshape(forward_graph(trunk_spec, leaves[TRUNK], x), (K, B, -1))
            features = T.take(features, self._pair_index, axis=0)
        out = forward_graph(heads_spec, leaves[HEADS], features)
        return T.reshape(out, (self.n_tasks, 2, -1))


def polyak_update(qbank: QBank, tau: Optional[float] = None) -> QBank:
    """target ← (1 − τ)·target + τ·online."""
    tau = qbank.tau if tau is None else tau
    qbank.target = (1.0 - tau) * qbank.target + tau * qbank.network.params.values
    return qbank
