"""
🎬 Coleta de demonstrações
Corre os experts programados até o indicador de sucesso se manter durante o número de passos da
tarefa; episódios falhados são descartados e contados. Grava, por tarefa, o ficheiro principal
(pares regulares + pares finais (s_T, 0)) e o ficheiro extra de pares regulares.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from src.buffers.expert import ExpertBuffer, augment_final_pairs
from src.buffers.storage import save_expert_buffer
from src.buffers.transition import Transition
from src.envs.block_world import ACT_DIM, OBS_DIM, BlockWorld2D, EnvConfig
from src.envs.experts import PrefixedExpert
from src.envs.tasks import TaskId, TaskSet
from src.errors import CollectionError, ConfigurationError
from src.utils import expert_paths

logger = logging.getLogger(__name__)

DEFAULT_MAX_FAILURE_RATE = 0.05
MIN_ATTEMPTS_FOR_ABORT = 20


@dataclass
class TaskCollection:
    task: TaskId
    transitions: List[Transition] = field(default_factory=list)
    final_states: List[np.ndarray] = field(default_factory=list)
    successes: int = 0
    failures: int = 0

    @property
    def attempts(self) -> int:
        return self.successes + self.failures

    @property
    def failure_rate(self) -> float:
        return self.failures / self.attempts if self.attempts else 0.0


@dataclass
class CollectionSummary:
    paths: Dict[str, Tuple[Path, Path]]
    failure_rates: Dict[str, float]


def run_expert_episode(env: BlockWorld2D, expert: PrefixedExpert, seed: int,
                       rng: np.random.Generator) -> Tuple[List[Transition], bool]:
    """
    Um episódio do expert até o sucesso se manter `hold_for` passos (contados depois do prefixo).

    Devolve as transições e se houve sucesso. A última transição de um episódio bem sucedido marca o fim
    do episódio; `terminal` só fica ligado se o sucesso cair no último passo do horizonte.
    """
    config = env.config
    hold = config.hold_for(expert.task)
    prefix_task = expert.episode_plan(rng)
    state = env.reset(seed)
    obs = env.observe()
    transitions, streak = [], 0
    for _ in range(config.horizon):
        action = np.clip(expert.act(state, prefix_task), -1.0, 1.0)
        state, _, done = env.step(action)
        next_obs = env.observe()
        past_prefix = prefix_task is None or state.step > expert.prefix_steps
        streak = streak + 1 if past_prefix and env.success(expert.task) else 0
        finished = streak >= hold
        transitions.append(Transition(obs, action, next_obs, terminal=done, episode_end=finished or done))
        obs = next_obs
        if finished:
            return transitions, True
        if done:
            break
    return transitions, False


def collect_task(config: EnvConfig, task, taskset_tasks, regular_pairs: int, need_final_states: bool,
                 seed_sequence: np.random.SeedSequence,
                 max_failure_rate: float = DEFAULT_MAX_FAILURE_RATE) -> TaskCollection:
    """Episódios bem sucedidos até haver `regular_pairs` transições (e um estado final, se pedido)."""
    task = TaskId.parse(task)
    expert = PrefixedExpert.for_task(task, config, taskset_tasks)
    rng = np.random.default_rng(seed_sequence)
    env = BlockWorld2D(config)
    out = TaskCollection(task)

    while len(out.transitions) < regular_pairs or (need_final_states and not out.final_states):
        episode_seed = int(rng.integers(2 ** 32))
        transitions, ok = run_expert_episode(env, expert, episode_seed, rng)
        if not ok:
            out.failures += 1
            logger.warning(f"⚠️ {task.value}: episódio falhado (seed {episode_seed})")
            if out.attempts >= MIN_ATTEMPTS_FOR_ABORT and out.failure_rate > max_failure_rate:
                break
            continue
        out.successes += 1
        out.transitions.extend(transitions)
        out.final_states.append(transitions[-1].s_next)

    # abaixo de MIN_ATTEMPTS_FOR_ABORT tentativas uma falha isolada só gera aviso
    if out.failure_rate > max_failure_rate and (out.attempts >= MIN_ATTEMPTS_FOR_ABORT or out.successes == 0):
        raise CollectionError(f"taxa de falha do expert {task.value} acima do limite",
                              {"task": task.value, "failures": out.failures, "attempts": out.attempts,
                               "limit": max_failure_rate})
    logger.info(f"🎬 {task.value}: {out.successes} episódios, {out.failures} falhas, "
                f"{len(out.transitions)} transições")
    return out


def build_task_buffers(collection: TaskCollection, pairs: int, final_pairs: int, extra_pairs: int,
                       rng: np.random.Generator) -> Tuple[ExpertBuffer, ExpertBuffer]:
    """Ficheiro principal (pairs + final_pairs) e extra (extra_pairs regulares) com contagens exatas."""
    task = collection.task
    main = ExpertBuffer.from_transitions(task, collection.transitions[:pairs], OBS_DIM, ACT_DIM)
    extra = ExpertBuffer.from_transitions(task, collection.transitions[pairs:pairs + extra_pairs], OBS_DIM, ACT_DIM)
    if final_pairs:
        states = np.stack(collection.final_states)
        chosen = states[rng.integers(states.shape[0], size=final_pairs)]
        main = augment_final_pairs(main, final_pairs, final_states=chosen)
    return main, extra


def collect_expert(env_config: EnvConfig, taskset: TaskSet, pairs_per_task: int, final_pairs: int,
                   seed: int, out_dir, max_failure_rate: float = DEFAULT_MAX_FAILURE_RATE,
                   single: bool = True) -> CollectionSummary:
    """
    Ficheiros multitarefa (um por tarefa) e o ficheiro de tarefa única da principal.

    O ficheiro de tarefa única tem |TaskSet| vezes mais pares e pares finais, para que DAC e BC
    vejam a mesma quantidade total de dados de expert que LfGP.
    """
    if pairs_per_task < 0 or final_pairs < 0:
        raise ConfigurationError("pairs_per_task e final_pairs devem ser ≥ 0")
    out_dir = Path(out_dir)
    n = len(taskset)
    streams = np.random.SeedSequence(seed).spawn(n + 1)
    paths: Dict[str, Tuple[Path, Path]] = {}
    rates: Dict[str, float] = {}

    jobs = [(task, True, pairs_per_task, final_pairs, streams[k]) for k, task in enumerate(taskset.tasks)]
    if single:
        jobs.append((taskset.main, False, n * pairs_per_task, n * final_pairs, streams[n]))

    for task, multitask, pairs, finals, stream in jobs:
        collect_seq, final_seq = stream.spawn(2)
        if pairs == 0 and finals == 0:
            collection = TaskCollection(task)
        else:
            collection = collect_task(env_config, task, taskset.tasks, pairs + finals, finals > 0, collect_seq,
                                      max_failure_rate)
        main, extra = build_task_buffers(collection, pairs, finals, finals, np.random.default_rng(final_seq))
        main_path, extra_path = expert_paths(out_dir, task.value, multitask)
        save_expert_buffer(main, main_path)
        save_expert_buffer(extra, extra_path)
        key = task.value if multitask else f"single:{task.value}"
        paths[key] = (main_path, extra_path)
        rates[key] = collection.failure_rate
    return CollectionSummary(paths, rates)


def expert_success_rate(env_config: EnvConfig, task, taskset_tasks, episodes: int, seed: int) -> float:
    """Fração de episódios em que o expert programado cumpre a tarefa (verificação de saúde)."""
    task = TaskId.parse(task)
    expert = PrefixedExpert.for_task(task, env_config, taskset_tasks)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    env = BlockWorld2D(env_config)
    wins = sum(run_expert_episode(env, expert, int(rng.integers(2 ** 32)), rng)[1] for _ in range(episodes))
    return wins / episodes if episodes else 0.0


def collect_summary_lines(summary: CollectionSummary) -> List[str]:
    return [f"{key:<24} falhas {rate:6.1%}  {paths[0].name}, {paths[1].name}"
            for (key, paths), rate in zip(summary.paths.items(), summary.failure_rates.values())]
