"""
🧭 LfGP tabular
Intenções tabulares (uma tabela Q por tarefa) a partilhar o mesmo buffer; o scheduler WRS escolhe
em cada episódio a intenção que recolhe os dados. Sem auxiliares é o AIL simples da tarefa principal.
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.envs.six_state import HORIZON
from src.errors import ConfigurationError
from src.scheduling.scheduler import SchedulerState, select_intention
from src.tabular.qlearning import (
    BOOTSTRAPS, GO_RIGHT_SET, MAIN_EXPERT_SET, SCRIPTED_EPISODES, SWEEPS, Pair, PerfectDiscriminatorReward, QTable,
    SequentialSweep, TabularBuffer, brute_force_optimal, converge_many, episode_steps, epsilon_greedy, greedy_path,
    run_episode, sequence_return,
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1
DEFAULT_EPISODES = 200


@dataclass
class TabularRun:
    task_names: Tuple[str, ...]
    qtables: List[QTable]
    greedy: Tuple[str, ...]
    true_return: float
    optimal_return: float
    seed: int
    choices: List[int] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.true_return >= self.optimal_return

    @property
    def first_action(self) -> str:
        return self.greedy[0]


def _run(task_sets: Sequence[Tuple[str, FrozenSet[Pair]]], episodes: int, seed: int, epsilon: float,
         p_main: float, prefill: bool, sweep: str, bootstrap: str, gamma: float) -> TabularRun:
    if sweep not in SWEEPS or bootstrap not in BOOTSTRAPS:
        raise ConfigurationError(f"protocolo tabular desconhecido: sweep={sweep}, bootstrap={bootstrap}")
    names = tuple(name for name, _ in task_sets)
    rewards = [PerfectDiscriminatorReward(pairs) for _, pairs in task_sets]
    scheduler = SchedulerState("wrs" if len(task_sets) > 1 else "none", len(task_sets), p_main=p_main,
                               period=HORIZON, n_periods=1)
    schedule_seq, explore_seq = np.random.SeedSequence(seed).spawn(2)
    schedule_rng, explore_rng = np.random.default_rng(schedule_seq), np.random.default_rng(explore_seq)

    qtables = [QTable() for _ in task_sets]
    buffer = TabularBuffer()
    exact = None
    if sweep == "sequential" and bootstrap == "next_action":
        exact = SequentialSweep(np.stack([r.vector() for r in rewards]), qtables[0].alpha, gamma)

    def update(new_episodes):
        if exact is None:
            converge_many(qtables, buffer, rewards, sweep=sweep, bootstrap=bootstrap, gamma=gamma)
            return
        for episode in new_episodes:
            exact.extend(episode_steps(episode))
        values = exact.fixed_point(np.stack([q.values for q in qtables]))
        for qtable, row in zip(qtables, values):
            qtable.values = row.copy()

    if prefill:
        scripted = [run_episode(qtables[0], episode, buffer) for episode in SCRIPTED_EPISODES]
        update(scripted)

    choices = []
    for _ in range(episodes):
        k = select_intention(scheduler, 0, None, schedule_rng)
        choices.append(k)
        update([run_episode(qtables[k], epsilon_greedy(qtables[k], epsilon, explore_rng), buffer)])

    path = greedy_path(qtables[0])
    best, _ = brute_force_optimal()
    return TabularRun(names, qtables, path, sequence_return(path), best, seed, choices)


def run_lfgp_tabular(main_set: FrozenSet[Pair] = MAIN_EXPERT_SET,
                     aux_sets: Optional[Mapping[str, FrozenSet[Pair]]] = None,
                     episodes: int = DEFAULT_EPISODES, seed: int = 0, epsilon: float = DEFAULT_EPSILON,
                     p_main: float = 0.5, prefill: bool = True, sweep: str = "sequential",
                     bootstrap: str = "next_action", gamma: float = 1.0) -> TabularRun:
    """
    Tabelas Q por tarefa e a política gulosa da principal.

    Por omissão usa a auxiliar go-right e começa do buffer dos três episódios guionados.
    """
    aux_sets = {"go_right": GO_RIGHT_SET} if aux_sets is None else dict(aux_sets)
    if not aux_sets:
        raise ConfigurationError("LfGP tabular precisa de pelo menos uma tarefa auxiliar")
    task_sets = [("main", frozenset(main_set))] + [(name, frozenset(s)) for name, s in aux_sets.items()]
    return _run(task_sets, episodes, seed, epsilon, p_main, prefill, sweep, bootstrap, gamma)


def run_ail_tabular(main_set: FrozenSet[Pair] = MAIN_EXPERT_SET, episodes: int = DEFAULT_EPISODES,
                    seed: int = 0, epsilon: float = DEFAULT_EPSILON, prefill: bool = True,
                    sweep: str = "sequential", bootstrap: str = "next_action", gamma: float = 1.0) -> TabularRun:
    """AIL só com a tarefa principal (o scheduler colapsa em 'none')."""
    return _run([("main", frozenset(main_set))], episodes, seed, epsilon, 1.0, prefill, sweep, bootstrap, gamma)


def run_seeds(runner: Callable[..., TabularRun], seeds: Sequence[int], workers: int = 1,
              **options) -> List[TabularRun]:
    """Uma execução independente por seed; com workers > 1 corre numa pool de threads."""
    if workers <= 1:
        return [runner(seed=seed, **options) for seed in seeds]
    results: Dict[int, TabularRun] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        fut_to_idx = {executor.submit(runner, seed=seed, **options): idx for idx, seed in enumerate(seeds)}
        for fut in as_completed(fut_to_idx):
            results[fut_to_idx[fut]] = fut.result()
    return [results[idx] for idx in range(len(seeds))]
