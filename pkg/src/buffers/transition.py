"""
📦 Transições e lotes
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

REPLAY_SOURCE = -1


@dataclass(frozen=True)
class Transition:
    """
    `terminal` só no último passo do horizonte (corta o bootstrap quando configurado);
    `episode_end` marca a última transição do episódio, incluindo episódios de expert que param no sucesso.
    """

    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    terminal: bool = False
    episode_end: bool = False


@dataclass
class Batch:
    """Lote em arrays; `source` é −1 para o replay ou o índice da tarefa do expert."""

    obs: np.ndarray
    act: np.ndarray
    next_obs: np.ndarray
    terminal: np.ndarray
    source: np.ndarray

    def __len__(self):
        return self.obs.shape[0]

    @property
    def expert_fraction(self) -> float:
        return float(np.mean(self.source != REPLAY_SOURCE)) if len(self) else 0.0

    @staticmethod
    def concat(batches: Sequence["Batch"]) -> "Batch":
        batches = [b for b in batches if len(b)]
        return Batch(
            np.concatenate([b.obs for b in batches]),
            np.concatenate([b.act for b in batches]),
            np.concatenate([b.next_obs for b in batches]),
            np.concatenate([b.terminal for b in batches]),
            np.concatenate([b.source for b in batches]),
        )
