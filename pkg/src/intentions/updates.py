"""
🔧 Atualizações conjuntas do SAC multitarefa
Resíduo de Bellman suave somado sobre as tarefas (Q) e objetivo da política somado sobre as
intenções (π), ambos com recorte da norma global e Adam com weight decay desacoplado.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.adversary.discriminator import DiscriminatorBank, task_rewards
from src.buffers.transition import Batch
from src.errors import NumericalError
from src.intentions.critic import QBank
from src.intentions.policy import IntentionPolicy
from src.intentions.temperature import TemperatureSet
from src.ndgrad import tensor as T
from src.ndgrad.optim import adam_step, clip_grad_norm

logger = logging.getLogger(__name__)


@dataclass
class OptimSettings:
    lr: float
    weight_decay: float = 1e-2
    max_grad_norm: float = 10.0


def bellman_targets(rewards: np.ndarray, target_q: np.ndarray, next_log_prob: np.ndarray, alpha: np.ndarray,
                    gamma: float, continuation: Optional[np.ndarray] = None) -> np.ndarray:
    """
    δ_T = r_T + γ·c·(min(Q'_1, Q'_2) − α_T·log π_T(a'|s')).

    rewards (K, B); target_q (K, 2, B); next_log_prob (K, B); alpha (K,); c (B,) ∈ {0, 1}.
    """
    soft_value = np.min(target_q, axis=1) - np.asarray(alpha)[:, None] * next_log_prob
    if continuation is not None:
        soft_value = soft_value * continuation[None, :]
    return rewards + gamma * soft_value


def q_update(qbank: QBank, policy: IntentionPolicy, temperatures: TemperatureSet,
             adversary: Optional[DiscriminatorBank], batch: Batch, gamma: float, rng: np.random.Generator,
             optim: OptimSettings, rewards: Optional[np.ndarray] = None, cut_on_terminal: bool = False,
             stats: Optional[Dict] = None) -> float:
    """
    Regressão das duas cabeças de Q de cada tarefa para o alvo suave; devolve a perda somada.

    As recompensas vêm de `task_rewards(adversary, ...)` salvo se `rewards` (B, K) for dado.
    """
    if rewards is None:
        rewards = task_rewards(adversary, batch.obs, batch.act)
    next_actions, next_log_prob = policy.sample_all(batch.next_obs, rng)
    target_q = qbank.evaluate(batch.next_obs, next_actions, values=qbank.target)
    continuation = (1.0 - batch.terminal.astype(np.float64)) if cut_on_terminal else None
    targets = bellman_targets(rewards.T, target_q, next_log_prob, temperatures.alpha, gamma, continuation)
    if not np.all(np.isfinite(targets)):
        raise NumericalError("alvo de Bellman não finito",
                             {"non_finite": int(np.count_nonzero(~np.isfinite(targets)))})

    params = qbank.params
    params.zero_grad()
    q = qbank.graph(qbank.network.bind(trainable=True), batch.obs, batch.act)
    diff = q - targets[:, None, :]
    loss = T.tsum(diff * diff) * (1.0 / len(batch))
    loss.backward()
    clip_grad_norm(params, optim.max_grad_norm)
    adam_step(params, optim.lr, weight_decay=optim.weight_decay)

    if stats is not None:
        stats["q_mean"] = float(np.mean(q.value))
        stats["q_target_mean"] = float(np.mean(targets))
    return float(loss.value)


def pi_update(policy: IntentionPolicy, qbank: QBank, temperatures: TemperatureSet, batch: Batch,
              rng: np.random.Generator, optim: OptimSettings) -> Tuple[float, np.ndarray]:
    """
    Sobe Σ_T E[min Q_T(s, a∼π_T) − α_T·log π_T(a|s)] pela reparametrização.

    Os pesos de Q entram como constantes. Devolve a perda e os log-probs frescos (K, B) para α.
    """
    K, B, A = policy.n_tasks, len(batch), policy.act_dim
    params = policy.params
    params.zero_grad()
    noise = rng.standard_normal((K, B, A))
    actions, log_prob = policy.reparameterized(policy.network.bind(trainable=True), batch.obs, noise)
    q = qbank.graph(qbank.network.bind(trainable=False), batch.obs, actions)
    min_q = T.minimum(T.index(q, (slice(None), 0, slice(None))), T.index(q, (slice(None), 1, slice(None))))
    alpha = temperatures.alpha[:, None]
    loss = T.tsum(T.mean(alpha * log_prob - min_q, axis=1))
    loss.backward()
    clip_grad_norm(params, optim.max_grad_norm)
    adam_step(params, optim.lr, weight_decay=optim.weight_decay)
    return float(loss.value), log_prob.value.copy()
