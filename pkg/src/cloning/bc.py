"""
🧑‍🏫 Behavioural cloning
Regressão MSE da saída média (tanh(μ̂)) para as ações do expert, em versão de uma tarefa ou
multitarefa, com dois protocolos: número fixo de atualizações ou early stopping sobre uma
divisão treino/validação.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.buffers.expert import ExpertBuffer
from src.buffers.transition import Batch
from src.errors import ConfigurationError, UsageError
from src.intentions.policy import IntentionPolicy
from src.intentions.updates import OptimSettings
from src.ndgrad import tensor as T
from src.ndgrad.optim import adam_step, clip_grad_norm

logger = logging.getLogger(__name__)

TARGET_MARGIN = 1e-6
PROTOCOLS = ("fixed_updates", "early_stopping")


@dataclass
class BCConfig:
    multitask: bool = field(default=True, metadata={"source": "bc (False) ou bc_multitask (True)"})
    batch_size: int = field(default=256, metadata={"source": "hiperparâmetros BC: batch size 256"})
    lr: float = field(default=1e-5, metadata={"source": "hiperparâmetros BC: learning rate 1e-5"})
    weight_decay: float = field(default=1e-2, metadata={"source": "hiperparâmetros BC: weight decay 1e-2"})
    max_grad_norm: float = field(default=10.0, metadata={"source": "mesmo recorte das intenções"})
    protocol: str = field(default="fixed_updates", metadata={"source": "fixed_updates | early_stopping"})
    split_fraction: float = field(default=0.7, metadata={"source": "divisão treino/validação 70/30"})
    overfit_tolerance: int = field(default=100, metadata={"source": "hiperparâmetros BC: overfit tolerance 100 épocas"})
    max_epochs: int = field(default=10_000, metadata={"source": "limite de segurança do early stopping"})

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigurationError(f"protocolo BC desconhecido: {self.protocol}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigurationError(f"split_fraction fora de (0, 1): {self.split_fraction}")
        if self.overfit_tolerance < 1:
            raise ConfigurationError(f"overfit_tolerance deve ser ≥ 1: {self.overfit_tolerance}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size deve ser ≥ 1: {self.batch_size}")

    @property
    def optim(self) -> OptimSettings:
        return OptimSettings(self.lr, self.weight_decay, self.max_grad_norm)


def clip_targets(act: np.ndarray) -> np.ndarray:
    bound = 1.0 - TARGET_MARGIN
    return np.clip(act, -bound, bound)


def _stack(policy: IntentionPolicy, batches: Sequence[Batch]):
    if len(batches) != policy.n_tasks:
        raise ConfigurationError(f"{len(batches)} lotes para {policy.n_tasks} cabeças")
    obs = np.concatenate([b.obs for b in batches])
    targets = clip_targets(np.concatenate([b.act for b in batches]))
    sizes = [len(b) for b in batches]
    heads = np.repeat(np.arange(len(batches)), sizes)
    weights = np.repeat([1.0 / max(n, 1) for n in sizes], sizes)
    return obs, targets, heads, weights


def bc_loss(policy: IntentionPolicy, batches: Sequence[Batch], values: Optional[np.ndarray] = None) -> float:
    """Σ_T média ‖tanh(μ̂_T(s)) − a‖² sem gradiente (validação)."""
    obs, targets, heads, weights = _stack(policy, batches)
    if obs.shape[0] == 0:
        return 0.0
    mean, _ = policy.distribution(obs, values)
    prediction = np.tanh(mean[heads, np.arange(obs.shape[0])])
    return float(np.sum(np.sum((prediction - targets) ** 2, axis=1) * weights))


def bc_update(policy: IntentionPolicy, expert_batches: Sequence[Batch], optim: OptimSettings) -> float:
    """
    Um passo de gradiente da perda MSE; devolve a perda antes do passo.

    Multitarefa: um lote por cabeça, na ordem do TaskSet. Uma tarefa: política com uma só cabeça.
    """
    obs, targets, heads, weights = _stack(policy, expert_batches)
    params = policy.params
    params.zero_grad()
    mean, _ = policy.graph_distribution(policy.network.bind(trainable=True), obs)
    chosen = T.index(mean, (heads, np.arange(obs.shape[0])))
    diff = T.tanh(chosen) - targets
    loss = T.tsum(T.tsum(diff * diff, axis=1) * weights)
    loss.backward()
    clip_grad_norm(params, optim.max_grad_norm)
    adam_step(params, optim.lr, weight_decay=optim.weight_decay)
    return float(loss.value)


def early_stop_check(history: Sequence[float], tolerance: int) -> Tuple[bool, int]:
    """Para quando passaram `tolerance` épocas desde a melhor perda de validação (primeira ocorrência)."""
    if len(history) == 0:
        raise UsageError("histórico de validação vazio")
    best = int(np.argmin(np.asarray(history, dtype=np.float64)))
    return len(history) - 1 - best >= tolerance, best


@dataclass
class BCResult:
    updates: int
    train_losses: List[float]
    validation_losses: List[float] = field(default_factory=list)
    best_epoch: Optional[int] = None


class BCTrainer:
    """Treina uma IntentionPolicy por BC sobre os pares regulares dos buffers de expert."""

    def __init__(self, policy: IntentionPolicy, expert_buffers: Sequence[ExpertBuffer], config: BCConfig,
                 rng: np.random.Generator):
        if not config.multitask and (policy.n_tasks != 1 or len(expert_buffers) != 1):
            raise ConfigurationError(f"BC de uma tarefa pede uma cabeça e um buffer "
                                     f"({policy.n_tasks} cabeças, {len(expert_buffers)} buffers)")
        if len(expert_buffers) != policy.n_tasks:
            raise ConfigurationError(f"{len(expert_buffers)} buffers para {policy.n_tasks} cabeças")
        for buffer in expert_buffers:
            if buffer.regular_count == 0:
                raise ConfigurationError(f"buffer de {buffer.task.value} sem pares regulares para BC")
        self.policy = policy
        self.buffers = list(expert_buffers)
        self.config = config
        self.rng = rng

    def _sample(self, pools: Sequence[np.ndarray]) -> List[Batch]:
        return [buffer.select(pool[self.rng.integers(pool.size, size=self.config.batch_size)], source=k)
                for k, (buffer, pool) in enumerate(zip(self.buffers, pools))]

    def split(self) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """Divisão por par (não por trajetória), independente por tarefa."""
        train, validation = [], []
        for buffer in self.buffers:
            order = self.rng.permutation(buffer.regular_count)
            cut = min(max(1, int(round(self.config.split_fraction * order.size))), order.size)
            train.append(np.sort(order[:cut]))
            validation.append(np.sort(order[cut:]))
        return train, validation

    def run_fixed_updates(self, updates: int, on_update: Optional[Callable[[int], None]] = None) -> BCResult:
        """Exatamente `updates` passos de gradiente, seja qual for a perda."""
        pools = [np.arange(b.regular_count) for b in self.buffers]
        losses = []
        for step in range(1, updates + 1):
            losses.append(bc_update(self.policy, self._sample(pools), self.config.optim))
            if on_update is not None:
                on_update(step)
        logger.info(f"🧑‍🏫 BC: {updates} atualizações, perda final {losses[-1] if losses else float('nan'):.5f}")
        return BCResult(updates, losses)

    def run_early_stopping(self) -> BCResult:
        """Épocas sobre 70% dos pares; restaura os parâmetros da melhor época de validação."""
        train, validation = self.split()
        val_batches = [b.select(idx, source=k) for k, (b, idx) in enumerate(zip(self.buffers, validation))]
        per_epoch = max(1, int(np.ceil(max(idx.size for idx in train) / self.config.batch_size)))
        losses, history = [], []
        best_values = self.policy.params.values.copy()
        updates = 0
        for epoch in range(self.config.max_epochs):
            for _ in range(per_epoch):
                losses.append(bc_update(self.policy, self._sample(train), self.config.optim))
                updates += 1
            history.append(bc_loss(self.policy, val_batches))
            stop, best = early_stop_check(history, self.config.overfit_tolerance)
            if best == epoch:
                best_values = self.policy.params.values.copy()
            if stop:
                logger.info(f"🛑 Early stopping na época {epoch} (melhor: {best})")
                break
        else:
            logger.warning(f"⚠️ BC atingiu max_epochs={self.config.max_epochs} sem parar")
        self.policy.params.values[:] = best_values
        _, best = early_stop_check(history, self.config.overfit_tolerance)
        return BCResult(updates, losses, history, best)

    def run(self, updates: int, on_update: Optional[Callable[[int], None]] = None) -> BCResult:
        if self.config.protocol == "early_stopping":
            return self.run_early_stopping()
        return self.run_fixed_updates(updates, on_update)
