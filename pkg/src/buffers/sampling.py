"""
🎰 Amostragem de lotes
B_all para π/Q (replay + proporção decrescente de dados de expert) e lotes de expert para o
discriminador com enviesamento para os pares finais (s_T, 0).
"""
import logging
from typing import Sequence, Tuple, Union

import numpy as np

from src.buffers.expert import ExpertBuffer
from src.buffers.replay import ReplayBuffer, ReplayView
from src.buffers.transition import Batch
from src.errors import ConfigurationError, WarmupError

logger = logging.getLogger(__name__)


def sample_policy_batch(replay: Union[ReplayBuffer, ReplayView], expert_buffers: Sequence[ExpertBuffer],
                        batch_size: int, expert_proportion: float, decay: float,
                        rng: np.random.Generator) -> Tuple[Batch, float]:
    """
    Lote para as atualizações de π e Q.

    O número de entradas de expert segue Binomial(batch_size, expert_proportion), com a tarefa
    sorteada uniformemente por entrada. Devolve o lote e a proporção já multiplicada por `decay`.
    """
    if len(replay) == 0:
        raise WarmupError("replay vazio: amostragem pedida antes do warmup")
    if not 0.0 <= expert_proportion <= 1.0:
        raise ConfigurationError(f"proporção de expert fora de [0, 1]: {expert_proportion}")

    usable = [(k, b) for k, b in enumerate(expert_buffers) if len(b)]
    n_expert = int(rng.binomial(batch_size, expert_proportion)) if usable and expert_proportion > 0 else 0

    parts = [replay.sample(batch_size - n_expert, rng)] if batch_size > n_expert else []
    if n_expert:
        picks = rng.integers(len(usable), size=n_expert)
        for slot, (task_index, buffer) in enumerate(usable):
            count = int(np.count_nonzero(picks == slot))
            if count:
                parts.append(buffer.select(rng.integers(len(buffer), size=count), source=task_index))
    return Batch.concat(parts), expert_proportion * decay


def sample_discriminator_batch(expert_buffer: ExpertBuffer, batch_size: int, final_pair_bias: float,
                               rng: np.random.Generator, source: int = 0) -> Batch:
    """
    Lote de expert para D_T.

    bias = 0 desliga o enviesamento (uniforme sobre todos os pares); bias > 0 sorteia
    Binomial(batch_size, bias) pares finais e o restante entre os pares regulares.
    """
    if not 0.0 <= final_pair_bias <= 1.0:
        raise ConfigurationError(f"final_pair_bias fora de [0, 1]: {final_pair_bias}")
    if len(expert_buffer) == 0:
        raise ConfigurationError(f"buffer de expert vazio para {expert_buffer.task.value}")
    if final_pair_bias == 0.0:
        return expert_buffer.select(rng.integers(len(expert_buffer), size=batch_size), source)
    if expert_buffer.final_count == 0:
        raise ConfigurationError(
            f"{expert_buffer.task.value}: final_pair_bias={final_pair_bias} sem pares finais no buffer")

    n_final = int(rng.binomial(batch_size, final_pair_bias))
    if expert_buffer.regular_count == 0:
        n_final = batch_size
    finals = expert_buffer.regular_count + rng.integers(expert_buffer.final_count, size=n_final)
    regular = rng.integers(max(expert_buffer.regular_count, 1), size=batch_size - n_final)
    idx = rng.permutation(np.concatenate([finals, regular]))
    return expert_buffer.select(idx, source)
