"""
🎓 Buffers de demonstrações por tarefa
Imutáveis durante o treino; as operações de preparação (subamostragem, pares finais,
substituição) devolvem buffers novos. Os pares finais (s_T, 0) ocupam sempre o fim do buffer.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.buffers.transition import Batch, Transition
from src.envs.tasks import TaskId
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)


def _frozen(array, dtype=np.float64) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ExpertBuffer:
    task: TaskId
    obs: np.ndarray
    act: np.ndarray
    next_obs: np.ndarray
    episode_end: np.ndarray
    final_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "task", TaskId.parse(self.task))
        object.__setattr__(self, "obs", _frozen(np.atleast_2d(self.obs)))
        object.__setattr__(self, "act", _frozen(np.atleast_2d(self.act)))
        object.__setattr__(self, "next_obs", _frozen(np.atleast_2d(self.next_obs)))
        object.__setattr__(self, "episode_end", _frozen(self.episode_end, dtype=bool).ravel())
        n = self.obs.shape[0]
        if not (self.act.shape[0] == self.next_obs.shape[0] == self.episode_end.shape[0] == n):
            raise ConfigurationError("arrays do buffer de expert com comprimentos diferentes")
        if not 0 <= self.final_count <= n:
            raise ConfigurationError(f"final_count inválido: {self.final_count} para {n} pares")
        if self.final_count and np.any(self.act[n - self.final_count:] != 0.0):
            raise ConfigurationError("pares finais devem ter ação nula")

    @classmethod
    def empty(cls, task, obs_dim: int, act_dim: int) -> "ExpertBuffer":
        return cls(task, np.zeros((0, obs_dim)), np.zeros((0, act_dim)), np.zeros((0, obs_dim)),
                   np.zeros(0, dtype=bool))

    @classmethod
    def from_transitions(cls, task, transitions: Sequence[Transition], obs_dim: int, act_dim: int,
                         final_count: int = 0) -> "ExpertBuffer":
        if not transitions:
            return cls.empty(task, obs_dim, act_dim)
        return cls(task,
                   np.stack([t.s for t in transitions]),
                   np.stack([t.a for t in transitions]),
                   np.stack([t.s_next for t in transitions]),
                   np.array([t.episode_end for t in transitions], dtype=bool),
                   final_count)

    def __len__(self):
        return self.obs.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.obs.shape[1]

    @property
    def act_dim(self) -> int:
        return self.act.shape[1]

    @property
    def regular_count(self) -> int:
        return len(self) - self.final_count

    @property
    def final_pair_indices(self) -> np.ndarray:
        return np.arange(self.regular_count, len(self))

    def select(self, idx: np.ndarray, source: int = 0) -> Batch:
        idx = np.asarray(idx, dtype=np.int64)
        # pares de expert nunca cortam o bootstrap: o fim de episódio não é o fim do horizonte
        return Batch(self.obs[idx], self.act[idx], self.next_obs[idx], np.zeros(idx.size, dtype=bool),
                     np.full(idx.size, source, dtype=np.int64))

    def trajectories(self) -> List[Tuple[int, int]]:
        """Intervalos [início, fim) das trajetórias regulares, separadas pelas marcas de fim de episódio."""
        spans, start = [], 0
        for i in range(self.regular_count):
            if self.episode_end[i]:
                spans.append((start, i + 1))
                start = i + 1
        if start < self.regular_count:
            spans.append((start, self.regular_count))
        return spans

    def _with(self, idx: np.ndarray, extra: Optional[Tuple[np.ndarray, ...]] = None,
              final_count: int = 0) -> "ExpertBuffer":
        parts = [self.obs[idx], self.act[idx], self.next_obs[idx], self.episode_end[idx]]
        if extra is not None:
            parts = [np.concatenate([p, e]) for p, e in zip(parts, extra)]
        return ExpertBuffer(self.task, *parts, final_count=final_count)


def subsample(buffer: ExpertBuffer, stride: int) -> ExpertBuffer:
    """Mantém os índices 0, stride, 2·stride, … de cada trajetória; pares finais mantidos."""
    if stride < 1:
        raise ConfigurationError(f"stride deve ser ≥ 1: {stride}")
    if stride == 1:
        return buffer
    keep = [np.arange(start, end, stride) for start, end in buffer.trajectories()]
    keep.append(buffer.final_pair_indices)
    idx = np.concatenate(keep).astype(np.int64) if keep else np.zeros(0, dtype=np.int64)
    logger.debug(f"✂️ {buffer.task.value}: {buffer.regular_count} → {idx.size - buffer.final_count} pares")
    return buffer._with(idx, final_count=buffer.final_count)


def episode_final_states(buffer: ExpertBuffer) -> np.ndarray:
    ends = [end - 1 for start, end in buffer.trajectories() if buffer.episode_end[end - 1]]
    return buffer.next_obs[np.asarray(ends, dtype=np.int64)]


def augment_final_pairs(buffer: ExpertBuffer, n: int, final_states: Optional[np.ndarray] = None,
                        rng: Optional[np.random.Generator] = None) -> ExpertBuffer:
    """
    Acrescenta n pares (s_T, 0) ao fim do buffer.

    Sem `final_states`, sorteia estados terminais dos episódios já presentes no buffer.
    """
    if n < 0:
        raise ConfigurationError(f"n deve ser ≥ 0: {n}")
    if n == 0:
        return buffer
    if final_states is None:
        source = episode_final_states(buffer)
        if source.shape[0] == 0:
            raise ConfigurationError(f"{buffer.task.value}: nenhum episódio terminado para pares finais")
        rng = rng or np.random.default_rng(0)
        final_states = source[rng.integers(source.shape[0], size=n)]
    final_states = np.asarray(final_states, dtype=np.float64)
    if final_states.shape[0] < n:
        raise ConfigurationError(f"{final_states.shape[0]} estados finais disponíveis, {n} pedidos")

    states = final_states[:n]
    extra = (states, np.zeros((n, buffer.act_dim)), states.copy(), np.ones(n, dtype=bool))
    return buffer._with(np.arange(len(buffer)), extra, final_count=buffer.final_count + n)


def replace_final_pairs(buffer: ExpertBuffer, regular: ExpertBuffer) -> ExpertBuffer:
    """Troca os pares finais pelo mesmo número de pares regulares extra (ablação de substituição)."""
    n = buffer.final_count
    if regular.regular_count < n:
        raise ConfigurationError(f"{regular.regular_count} pares extra disponíveis, {n} necessários")
    idx = np.arange(n)
    extra = (regular.obs[idx], regular.act[idx], regular.next_obs[idx], regular.episode_end[idx])
    return buffer._with(np.arange(buffer.regular_count), extra, final_count=0)


def merge(buffers: Sequence[ExpertBuffer], task) -> ExpertBuffer:
    """Une vários buffers num só (pares regulares primeiro, finais no fim)."""
    regular = [(b, np.arange(b.regular_count)) for b in buffers]
    finals = [(b, b.final_pair_indices) for b in buffers]
    parts = [np.concatenate([getattr(b, name)[idx] for b, idx in regular + finals])
             for name in ("obs", "act", "next_obs", "episode_end")]
    return ExpertBuffer(task, *parts, final_count=sum(b.final_count for b in buffers))


def drop_final_pairs(buffer: ExpertBuffer) -> ExpertBuffer:
    """Só os pares regulares (ablação sem (s_T, 0))."""
    if buffer.final_count == 0:
        return buffer
    return buffer._with(np.arange(buffer.regular_count), final_count=0)


def truncate_pairs(buffer: ExpertBuffer, pairs: int, finals: int) -> ExpertBuffer:
    """Os primeiros `pairs` pares regulares e os primeiros `finals` pares finais."""
    if pairs > buffer.regular_count or finals > buffer.final_count:
        raise ConfigurationError(
            f"{buffer.task.value}: pedidos {pairs}+{finals} pares, o ficheiro tem "
            f"{buffer.regular_count}+{buffer.final_count}")
    if pairs == buffer.regular_count and finals == buffer.final_count:
        return buffer
    idx = np.concatenate([np.arange(pairs), buffer.final_pair_indices[:finals]]).astype(np.int64)
    return buffer._with(idx, final_count=finals)
