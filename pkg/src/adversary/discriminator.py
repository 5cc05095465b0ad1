"""
⚔️ Discriminadores por tarefa
Uma MLP com ativações tanh e um logit por tarefa; perda conjunta com penalização do gradiente
e a recompensa no formato AIRL (igual ao logit, limitada a ±20).
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from src.buffers.transition import Batch
from src.errors import ConfigurationError, NumericalError
from src.ndgrad import tensor as T
from src.ndgrad.mlp import MLPSpec, Network, forward_graph, input_gradient
from src.ndgrad.tensor import Tensor

logger = logging.getLogger(__name__)

NET = "discriminator"
REWARD_CLAMP = 20.0
DEFAULT_GP_LAMBDA = 10.0
REWARD_FORMS = ("airl", "gail", "positive")
GP_TARGETS = ("logit", "probability")


@dataclass
class DiscriminatorBank:
    """Entrada (s, a) concatenada; saída com um logit por tarefa, na ordem do TaskSet."""

    network: Network
    n_tasks: int
    reward_form: str = "airl"
    gp_target: str = "logit"

    def __post_init__(self):
        if self.reward_form not in REWARD_FORMS:
            raise ConfigurationError(f"forma de recompensa desconhecida: {self.reward_form}")
        if self.gp_target not in GP_TARGETS:
            raise ConfigurationError(f"alvo da penalização desconhecido: {self.gp_target}")
        if self.spec.output_dim != self.n_tasks:
            raise ConfigurationError(f"discriminador com {self.spec.output_dim} saídas para {self.n_tasks} tarefas")

    @classmethod
    def build(cls, obs_dim: int, act_dim: int, n_tasks: int, hidden: Sequence[int],
              rng: np.random.Generator, **options) -> "DiscriminatorBank":
        spec = MLPSpec(obs_dim + act_dim, n_tasks, tuple((w, "tanh") for w in hidden))
        return cls(Network.initialised({NET: spec}, rng), n_tasks, **options)

    @property
    def spec(self) -> MLPSpec:
        return self.network.specs[NET]

    @property
    def params(self):
        return self.network.params

    def logits(self, obs: np.ndarray, act: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        x = np.concatenate([np.atleast_2d(obs), np.atleast_2d(act)], axis=1)
        return self.network.evaluate(NET, x, values)


def _inputs(batch: Batch) -> np.ndarray:
    return np.concatenate([batch.obs, batch.act], axis=1)


def _check_finite(logits: np.ndarray, where: str):
    if not np.all(np.isfinite(logits)):
        bad = int(np.count_nonzero(~np.isfinite(logits)))
        logger.error(f"❌ Logits não finitos no discriminador ({where}): {bad}")
        raise NumericalError("logits não finitos no discriminador",
                             {"where": where, "non_finite": bad,
                              "max_abs_finite": float(np.max(np.abs(logits[np.isfinite(logits)]), initial=0.0))})


def discriminator_loss(bank: DiscriminatorBank, policy_batch: Batch, expert_batches: Sequence[Batch],
                       gp_lambda: float = DEFAULT_GP_LAMBDA, rng: Optional[np.random.Generator] = None,
                       stats: Optional[Dict] = None) -> Tensor:
    """
    Σ_T [ −E_B log(1 − D_T) − E_{B^E_T} log D_T ] + λ·Σ_T média (‖∇D_T‖ − 1)².

    Os pontos da penalização interpolam índice a índice o lote da política e o lote de expert
    da tarefa, com um coeficiente uniforme por par.
    """
    K = bank.n_tasks
    if len(expert_batches) != K:
        raise ConfigurationError(f"{len(expert_batches)} lotes de expert para {K} tarefas")
    leaves = bank.network.bind(trainable=True)[NET]

    policy_logits = forward_graph(bank.spec, leaves, _inputs(policy_batch))
    _check_finite(policy_logits.value, "policy")
    # −log(1 − σ(z)) = −log σ(−z), média sobre o lote e soma sobre as tarefas
    policy_term = -T.tsum(T.mean(T.log_sigmoid(-policy_logits), axis=0))

    expert_inputs = np.concatenate([_inputs(b) for b in expert_batches])
    sizes = [len(b) for b in expert_batches]
    rows = np.concatenate([np.arange(n) + offset for n, offset in zip(sizes, np.cumsum([0] + sizes[:-1]))])
    columns = np.repeat(np.arange(K), sizes)
    expert_logits = forward_graph(bank.spec, leaves, expert_inputs)
    _check_finite(expert_logits.value, "expert")
    own_logits = T.index(expert_logits, (rows, columns))
    weights = np.repeat([1.0 / n for n in sizes], sizes)
    expert_term = -T.tsum(T.log_sigmoid(own_logits) * weights)

    loss = policy_term + expert_term
    penalty_value = 0.0
    if gp_lambda > 0.0:
        penalty = gradient_penalty(bank, policy_batch, expert_batches, rng or np.random.default_rng(0), leaves)
        penalty_value = float(penalty.value)
        loss = loss + gp_lambda * penalty

    if stats is not None:
        stats.update({
            "disc_policy_term": float(policy_term.value),
            "disc_expert_term": float(expert_term.value),
            "disc_penalty": penalty_value,
        })
    return loss


def gradient_penalty(bank: DiscriminatorBank, policy_batch: Batch, expert_batches: Sequence[Batch],
                     rng: np.random.Generator, leaves=None) -> Tensor:
    """Σ_T média_i (‖∇_x D_T(x̂_i)‖ − 1)² com x̂_i = u_i·expert_i + (1 − u_i)·policy_i."""
    leaves = leaves if leaves is not None else bank.network.bind(trainable=True)[NET]
    policy_x = _inputs(policy_batch)
    points, tasks, weights = [], [], []
    for task, batch in enumerate(expert_batches):
        n = min(len(batch), len(policy_x))
        u = rng.uniform(size=(n, 1))
        points.append(u * _inputs(batch)[:n] + (1.0 - u) * policy_x[:n])
        tasks.append(np.full(n, task))
        weights.append(np.full(n, 1.0 / n))
    x_hat = np.concatenate(points)
    tasks = np.concatenate(tasks)
    selector = np.zeros((x_hat.shape[0], bank.n_tasks))
    selector[np.arange(x_hat.shape[0]), tasks] = 1.0

    logits, grad = input_gradient(bank.spec, leaves, x_hat, selector)
    if bank.gp_target == "probability":
        chosen = T.tsum(logits * Tensor.const(selector), axis=1, keepdims=True)
        probability = T.sigmoid(chosen)
        grad = grad * (probability * (1.0 - probability))
    norms = T.sqrt(T.tsum(grad * grad, axis=1) + 1e-12)
    return T.tsum(((norms - 1.0) ** 2) * np.concatenate(weights))


def reward_from_logits(logits: np.ndarray, form: str = "airl", clamp: float = REWARD_CLAMP) -> np.ndarray:
    """
    Recompensa a partir dos logits.

    airl: log D − log(1 − D) = z (calculado pela forma estável log σ(z) − log σ(−z));
    gail: −log(1 − D); positive: log D.
    """
    z = np.asarray(logits, dtype=np.float64)
    log_d = -np.logaddexp(0.0, -z)
    log_one_minus_d = -np.logaddexp(0.0, z)
    if form == "airl":
        reward = log_d - log_one_minus_d
    elif form == "gail":
        reward = -log_one_minus_d
    elif form == "positive":
        reward = log_d
    else:
        raise ConfigurationError(f"forma de recompensa desconhecida: {form}")
    return reward if clamp is None else np.clip(reward, -clamp, clamp)


def task_rewards(bank: DiscriminatorBank, obs: np.ndarray, act: np.ndarray,
                 values: Optional[np.ndarray] = None) -> np.ndarray:
    """Recompensas (B, K) para todas as tarefas de uma vez."""
    logits = bank.logits(obs, act, values)
    _check_finite(logits, "reward")
    return reward_from_logits(logits, bank.reward_form)


def airl_reward(bank: DiscriminatorBank, task: int, s: np.ndarray, a: np.ndarray,
                values: Optional[np.ndarray] = None) -> float:
    """Recompensa escalar da tarefa `task` (índice no TaskSet) para um par (s, a)."""
    if not 0 <= task < bank.n_tasks:
        raise ConfigurationError(f"índice de tarefa fora do banco: {task}")
    return float(task_rewards(bank, np.atleast_2d(s), np.atleast_2d(a), values)[0, task])
