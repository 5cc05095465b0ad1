"""
🎭 Intenções: política gaussiana-tanh multitarefa
Tronco partilhado (ReLU) + uma cabeça por tarefa que produz média μ̂ e pré-variância x̂;
variância σ̂² = softplus(x̂) + 1e-7 e ações tanh(amostra) em [−1, 1].
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.ndgrad import tensor as T
from src.ndgrad.mlp import MLPSpec, Network, forward_graph
from src.ndgrad.tensor import Tensor

logger = logging.getLogger(__name__)

TRUNK = "trunk"
HEADS = "heads"
VARIANCE_EPS = 1e-7
LOG_2PI = float(np.log(2.0 * np.pi))
LOG_2 = float(np.log(2.0))


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def tanh_log_det(u: np.ndarray) -> np.ndarray:
    """log(1 − tanh(u)²) na forma estável 2·(log 2 − u − softplus(−2u))."""
    return 2.0 * (LOG_2 - u - _softplus(-2.0 * u))


def trunk_and_heads(input_dim: int, head_outputs: int, copies: int, trunk_hidden: Sequence[int],
                    head_hidden: int) -> dict:
    trunk_hidden = tuple(trunk_hidden)
    trunk = MLPSpec(input_dim, trunk_hidden[-1], tuple((w, "relu") for w in trunk_hidden[:-1]),
                    output_activation="relu")
    heads = MLPSpec(trunk_hidden[-1], head_outputs, ((head_hidden, "relu"),), copies=copies)
    return {TRUNK: trunk, HEADS: heads}


@dataclass
class IntentionPolicy:
    network: Network
    n_tasks: int
    act_dim: int

    @classmethod
    def build(cls, obs_dim: int, act_dim: int, n_tasks: int, trunk_hidden: Sequence[int], head_hidden: int,
              rng: np.random.Generator) -> "IntentionPolicy":
        specs = trunk_and_heads(obs_dim, 2 * act_dim, n_tasks, trunk_hidden, head_hidden)
        return cls(Network.initialised(specs, rng), n_tasks, act_dim)

    @property
    def params(self):
        return self.network.params

    @property
    def obs_dim(self) -> int:
        return self.network.specs[TRUNK].input_dim

    def distribution(self, obs: np.ndarray, values: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Média e variância para todas as cabeças: formas (K, B, A)."""
        obs = np.atleast_2d(obs)
        features = self.network.evaluate(TRUNK, obs, values)
        out = self.network.evaluate(HEADS, features, values)
        if out.ndim == 2:
            out = out[None, ...]
        mean = out[..., :self.act_dim]
        variance = _softplus(out[..., self.act_dim:]) + VARIANCE_EPS
        return mean, variance

    def graph_distribution(self, leaves: dict, obs: np.ndarray) -> Tuple[Tensor, Tensor]:
        features = forward_graph(self.network.specs[TRUNK], leaves[TRUNK], np.atleast_2d(obs))
        out = forward_graph(self.network.specs[HEADS], leaves[HEADS], features)
        if out.value.ndim == 2:
            out = T.reshape(out, (1,) + out.shape)
        A = self.act_dim
        mean = T.index(out, (slice(None), slice(None), slice(0, A)))
        pre_variance = T.index(out, (slice(None), slice(None), slice(A, 2 * A)))
        return mean, T.softplus(pre_variance) + VARIANCE_EPS

    def sample_all(self, obs: np.ndarray, rng: np.random.Generator,
                   values: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Amostras estocásticas de todas as intenções: ações (K, B, A) e log-probs (K, B)."""
        mean, variance = self.distribution(obs, values)
        noise = rng.standard_normal(mean.shape)
        return squash(mean, variance, noise)

    def reparameterized(self, leaves: dict, obs: np.ndarray, noise: np.ndarray) -> Tuple[Tensor, Tensor]:
        """Ações e log-probs como grafo (truque de reparametrização)."""
        mean, variance = self.graph_distribution(leaves, obs)
        u = mean + T.sqrt(variance) * noise
        gaussian = T.tsum(-0.5 * noise ** 2 - 0.5 * LOG_2PI - 0.5 * T.log(variance), axis=-1)
        log_det = T.tsum(2.0 * (LOG_2 - u - T.softplus(-2.0 * u)), axis=-1)
        return T.tanh(u), gaussian - log_det


def squash(mean: np.ndarray, variance: np.ndarray, noise: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """tanh(μ + σε) e o log-prob com a correção de mudança de variável."""
    u = mean + np.sqrt(variance) * noise
    gaussian = np.sum(-0.5 * noise ** 2 - 0.5 * LOG_2PI - 0.5 * np.log(variance), axis=-1)
    return np.tanh(u), gaussian - np.sum(tanh_log_det(u), axis=-1)


def sample_action(policy: IntentionPolicy, task: int, s: np.ndarray, stochastic: bool,
                  rng: Optional[np.random.Generator] = None,
                  values: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Optional[float]]:
    """
    Ação da intenção `task` para uma observação.

    Estocástico: tanh da amostra reparametrizada + log-prob. Determinístico: tanh(μ̂), sem log-prob.
    """
    mean, variance = policy.distribution(np.atleast_2d(s), values)
    mu, var = mean[task, 0], variance[task, 0]
    if not stochastic:
        return np.tanh(mu), None
    rng = rng or np.random.default_rng()
    action, log_prob = squash(mu, var, rng.standard_normal(mu.shape))
    return action, float(log_prob)
