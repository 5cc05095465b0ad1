"""
🌡️ Temperaturas por tarefa
α_T = exp(log α_T) > 0, ajustada para manter a entropia perto de −dim(a).
"""
from dataclasses import dataclass

import numpy as np

from src.ndgrad.mlp import ParamStore
from src.ndgrad.optim import adam_step

DEFAULT_INITIAL_ALPHA = 1e-2


@dataclass
class TemperatureSet:
    params: ParamStore
    target_entropy: float

    @classmethod
    def create(cls, n_tasks: int, act_dim: int, initial_alpha: float = DEFAULT_INITIAL_ALPHA) -> "TemperatureSet":
        return cls(ParamStore(np.full(n_tasks, np.log(initial_alpha))), -float(act_dim))

    @property
    def alpha(self) -> np.ndarray:
        return np.exp(self.params.values)

    def __len__(self):
        return len(self.params)


def alpha_gradient(temperatures: TemperatureSet, log_probs: np.ndarray) -> np.ndarray:
    """∂/∂log α_T de média(−α_T·(log π + H̄)) = −α_T·média(log π + H̄)."""
    log_probs = np.atleast_2d(log_probs)
    return -temperatures.alpha * np.mean(log_probs + temperatures.target_entropy, axis=1)


def alpha_update(temperatures: TemperatureSet, log_probs: np.ndarray, lr: float = 3e-4) -> TemperatureSet:
    """Um passo Adam em log α por tarefa, a partir de log-probs frescos (K, B)."""
    temperatures.params.grads[:] = alpha_gradient(temperatures, log_probs)
    adam_step(temperatures.params, lr)
    return temperatures
