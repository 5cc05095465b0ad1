"""
🧪 Protocolo de avaliação
Episódios aleatorizados com a ação média da política (tanh(μ̂)); um episódio conta como sucesso
se o indicador da tarefa se mantiver durante o número de passos exigido dentro do horizonte.
Os episódios de um snapshot podem correr numa pool de threads; cada um tem a sua seed.
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.envs.block_world import ACT_DIM, BlockWorld2D, BlockWorldState, EnvConfig, shaped_reward
from src.envs.experts import scripted_expert
from src.envs.tasks import TaskId, TaskSet
from src.errors import ConfigurationError
from src.intentions.policy import IntentionPolicy
from src.ndgrad.checkpoint import load_checkpoint
from src.ndgrad.mlp import Network

logger = logging.getLogger(__name__)

DEFAULT_EPISODES = 50

# ator: (observações (B, D), estados, um rng por episódio) -> ações (B, A)
Actor = Callable[[np.ndarray, Sequence[BlockWorldState], Sequence[np.random.Generator]], np.ndarray]


@dataclass
class EvaluationResult:
    task: str
    successes: List[bool]
    returns: List[float]

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.successes)) if self.successes else 0.0

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.returns)) if self.returns else 0.0


def policy_actor(policy: IntentionPolicy, task_index: int, values: Optional[np.ndarray] = None) -> Actor:
    """Ação determinística tanh(μ̂) da intenção `task_index`, sobre uma cópia dos parâmetros."""
    frozen = (policy.params.values if values is None else values).copy()

    def act(obs, states, rngs):
        mean, _ = policy.distribution(obs, frozen)
        return np.tanh(mean[task_index])
    return act


def scripted_actor(task, config: EnvConfig) -> Actor:
    task = TaskId.parse(task)

    def act(obs, states, rngs):
        return np.stack([scripted_expert(task, state, config) for state in states])
    return act


def random_actor() -> Actor:
    def act(obs, states, rngs):
        return np.stack([rng.uniform(-1.0, 1.0, size=ACT_DIM) for rng in rngs])
    return act


def episode_seeds(seed: int, episodes: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(episodes)


def _run_chunk(actor: Actor, config: EnvConfig, task: TaskId, seeds: Sequence[int]):
    """Episódios em lockstep (o ator recebe as observações em lote)."""
    envs = [BlockWorld2D(config) for _ in seeds]
    states = [env.reset(int(s)) for env, s in zip(envs, seeds)]
    rngs = [np.random.default_rng(int(s)) for s in seeds]
    hold = config.hold_for(task)
    streaks = np.zeros(len(envs), dtype=np.int64)
    reached = np.zeros(len(envs), dtype=bool)
    returns = np.zeros(len(envs))
    for _ in range(config.horizon):
        obs = np.stack([env.observe() for env in envs])
        actions = np.atleast_2d(actor(obs, states, rngs))
        for i, env in enumerate(envs):
            states[i], _, _ = env.step(actions[i])
            returns[i] += shaped_reward(task, states[i], config)
            streaks[i] = streaks[i] + 1 if env.success(task) else 0
            reached[i] |= streaks[i] >= hold
    return reached.tolist(), returns.tolist()


def evaluate_actor(actor: Actor, config: EnvConfig, task, episodes: int = DEFAULT_EPISODES, seed: int = 0,
                   workers: int = 1) -> EvaluationResult:
    """
    Taxa de sucesso e retorno médio (recompensa moldada, só diagnóstico) de um ator.

    O resultado não depende de `workers`: cada episódio tem a sua seed e o seu rng.
    """
    task = TaskId.parse(task)
    seeds = episode_seeds(seed, episodes)
    chunks = [c for c in np.array_split(seeds, max(1, workers)) if c.size]
    if workers <= 1 or len(chunks) <= 1:
        parts = [_run_chunk(actor, config, task, c) for c in chunks]
    else:
        results: Dict[int, tuple] = {}
        with ThreadPoolExecutor(max_workers=workers) as executor:
            fut_to_idx = {executor.submit(_run_chunk, actor, config, task, c): idx for idx, c in enumerate(chunks)}
            for fut in as_completed(fut_to_idx):
                results[fut_to_idx[fut]] = fut.result()
        parts = [results[idx] for idx in range(len(chunks))]
    successes = [ok for part in parts for ok in part[0]]
    returns = [r for part in parts for r in part[1]]
    return EvaluationResult(task.value, successes, returns)


def evaluate_policy(policy: IntentionPolicy, taskset: TaskSet, config: EnvConfig, episodes: int, seed: int,
                    workers: int = 1) -> Dict[str, EvaluationResult]:
    """Todas as intenções da política, cada uma na sua tarefa (mesmas seeds de episódio)."""
    values = policy.params.values.copy()
    return {task.value: evaluate_actor(policy_actor(policy, k, values), config, task, episodes, seed, workers)
            for k, task in enumerate(taskset.tasks)}


def checkpoint_header(algorithm: str, taskset: TaskSet, env_config: EnvConfig, policy: IntentionPolicy,
                      step: int, seed: int) -> Dict:
    return {
        "algorithm": algorithm,
        "tasks": list(taskset.names),
        "env": asdict(env_config),
        "network": policy.network.describe(),
        "act_dim": policy.act_dim,
        "step": int(step),
        "seed": int(seed),
    }


def policy_from_checkpoint(path):
    """(política, tarefas, EnvConfig) reconstruídos a partir do cabeçalho do checkpoint."""
    header, values = load_checkpoint(path)
    for key in ("tasks", "env", "network", "act_dim"):
        if key not in header:
            raise ConfigurationError(f"checkpoint sem '{key}' no cabeçalho: {path}")
    network = Network.from_description(header["network"], values)
    policy = IntentionPolicy(network, len(header["tasks"]), int(header["act_dim"]))
    return policy, list(header["tasks"]), EnvConfig(**header["env"])


def evaluate(checkpoint, task=None, episodes: int = DEFAULT_EPISODES, seed: int = 0,
             workers: int = 1) -> EvaluationResult:
    """Avalia a intenção de `task` (por omissão a principal) de um checkpoint gravado."""
    policy, tasks, config = policy_from_checkpoint(checkpoint)
    name = tasks[0] if task is None else TaskId.parse(task).value
    if name not in tasks:
        raise ConfigurationError(f"tarefa {name} não existe no checkpoint (tarefas: {', '.join(tasks)})")
    result = evaluate_actor(policy_actor(policy, tasks.index(name)), config, name, episodes, seed, workers)
    logger.info(f"🧪 {name}: sucesso {result.success_rate:.1%} em {episodes} episódios")
    return result
