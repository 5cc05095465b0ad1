"""
🔢 Q-learning tabular no MDP de seis estados
Tabelas Q sobre os 10 pares legais, recompensas de discriminador perfeito, episódios com
sequência fixa ou ε-greedy, convergência sobre o buffer inteiro e o oráculo por força bruta.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.envs.six_state import (
    ACTIONS, HORIZON, INITIAL_STATE, LEGAL_ACTIONS, SixStateMDP, destination, is_legal, true_reward,
)
from src.errors import ConfigurationError, DomainError, NumericalError

logger = logging.getLogger(__name__)

ALPHA = 0.1
TOLERANCE = 1e-9
MAX_SWEEPS = 1_000_000
SWEEPS = ("sequential", "expected")
BOOTSTRAPS = ("max", "next_action")

Pair = Tuple[int, str]
PAIRS: Tuple[Pair, ...] = tuple(
    (state, action) for action in ACTIONS for state in LEGAL_ACTIONS if action in LEGAL_ACTIONS[state])
PAIR_INDEX: Dict[Pair, int] = {pair: i for i, pair in enumerate(PAIRS)}
STATES: Tuple[int, ...] = tuple(sorted(LEGAL_ACTIONS))

MAIN_EXPERT_SET: FrozenSet[Pair] = frozenset({(1, "a12"), (2, "a23"), (3, "a34"), (4, "a45"), (5, "a55")})
GO_RIGHT_SET: FrozenSet[Pair] = frozenset({(1, "a12"), (2, "a23"), (3, "a34")})

SCRIPTED_EPISODES: Tuple[Tuple[str, ...], ...] = (
    ("a15", "a55", "a55", "a55", "a55"),
    ("a12", "a26", "a61", "a15", "a55"),
    ("a12", "a23", "a36", "a61", "a15"),
)


@dataclass
class QTable:
    """Q(s, a) nos pares legais, na ordem de PAIRS (que segue a ordem global das ações)."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(len(PAIRS)))
    alpha: float = ALPHA

    def __getitem__(self, pair: Pair) -> float:
        if pair not in PAIR_INDEX:
            raise DomainError(f"par ilegal: s{pair[0]}, {pair[1]}")
        return float(self.values[PAIR_INDEX[pair]])

    def copy(self) -> "QTable":
        return QTable(self.values.copy(), self.alpha)

    def greedy(self, state: int) -> str:
        """Ação de maior Q; empates resolvidos pelo menor índice na ordem global das ações."""
        legal = LEGAL_ACTIONS[state]
        scores = [self.values[PAIR_INDEX[(state, a)]] for a in legal]
        return legal[int(np.argmax(scores))]

    def as_dict(self) -> Dict[str, float]:
        return {f"s{s},{a}": float(v) for (s, a), v in zip(PAIRS, self.values)}


@dataclass(frozen=True)
class PerfectDiscriminatorReward:
    """+1 nos pares do conjunto de expert, −1 em todos os outros."""

    expert_pairs: FrozenSet[Pair]

    def __post_init__(self):
        pairs = frozenset((int(s), str(a)) for s, a in self.expert_pairs)
        illegal = [p for p in pairs if not is_legal(*p)]
        if illegal:
            raise DomainError(f"conjunto de expert com pares ilegais: {sorted(illegal)}")
        object.__setattr__(self, "expert_pairs", pairs)

    def __call__(self, state: int, action: str) -> float:
        return 1.0 if (state, action) in self.expert_pairs else -1.0

    def vector(self) -> np.ndarray:
        return np.array([self(s, a) for s, a in PAIRS])


@dataclass(frozen=True)
class Step:
    state: int
    action: str
    next_state: int
    next_action: Optional[str]
    terminal: bool


@dataclass
class TabularBuffer:
    """Episódios completos, na ordem de chegada; cada um é uma sequência de pares (s, a)."""

    episodes: List[Tuple[Pair, ...]] = field(default_factory=list)

    def __len__(self):
        return sum(len(e) for e in self.episodes)

    def append(self, episode: Sequence[Pair]):
        self.episodes.append(tuple(episode))

    def steps(self) -> List[Step]:
        return [step for episode in self.episodes for step in episode_steps(episode)]


def episode_steps(episode: Sequence[Pair]) -> List[Step]:
    out = []
    for t, (state, action) in enumerate(episode):
        terminal = t == HORIZON - 1
        following = episode[t + 1][1] if t + 1 < len(episode) else None
        out.append(Step(state, action, destination(action), None if terminal else following, terminal))
    return out


def epsilon_greedy(qtable: QTable, epsilon: float, rng: np.random.Generator) -> Callable[[int], str]:
    def choose(state: int) -> str:
        if epsilon > 0.0 and rng.random() < epsilon:
            legal = LEGAL_ACTIONS[state]
            return legal[int(rng.integers(len(legal)))]
        return qtable.greedy(state)
    return choose


def run_episode(qtable: QTable, behaviour, buffer: Optional[TabularBuffer] = None) -> List[Pair]:
    """
    Um episódio de 5 passos a partir de s1.

    `behaviour` é uma sequência fixa de ações ou uma função estado → ação (ex.: ε-greedy).
    """
    mdp = SixStateMDP()
    mdp.reset()
    scripted = not callable(behaviour)
    if scripted and len(behaviour) != HORIZON:
        raise DomainError(f"sequência com {len(behaviour)} ações, o horizonte é {HORIZON}")
    trajectory = []
    for t in range(HORIZON):
        action = behaviour[t] if scripted else behaviour(mdp.state)
        state = mdp.state
        mdp.step(action)
        trajectory.append((state, action))
    if buffer is not None:
        buffer.append(trajectory)
    return trajectory


# ---------------------------------------------------------------------- #
# Convergência
# ---------------------------------------------------------------------- #
def _state_max(values: np.ndarray) -> np.ndarray:
    """max_a Q(s, a) por estado; `values` tem forma (..., n_pares)."""
    out = np.zeros(values.shape[:-1] + (max(STATES) + 1,))
    for state in STATES:
        columns = [PAIR_INDEX[(state, a)] for a in LEGAL_ACTIONS[state]]
        out[..., state] = values[..., columns].max(axis=-1)
    return out


def _check(kind: str, choice: str, options: Tuple[str, ...]):
    if choice not in options:
        raise ConfigurationError(f"{kind} desconhecido: {choice} (opções: {', '.join(options)})")


def _sequential(values: np.ndarray, steps: Sequence[Step], rewards: np.ndarray, alpha: float, gamma: float,
                bootstrap: str, tolerance: float, max_sweeps: int) -> np.ndarray:
    rows = [(PAIR_INDEX[(s.state, s.action)], s) for s in steps]
    for sweep in range(1, max_sweeps + 1):
        start = values.copy()
        for i, step in rows:
            if step.terminal:
                target = rewards[i]
            elif bootstrap == "max":
                target = rewards[i] + gamma * max(values[PAIR_INDEX[(step.next_state, a)]]
                                                  for a in LEGAL_ACTIONS[step.next_state])
            else:
                target = rewards[i] + gamma * values[PAIR_INDEX[(step.next_state, step.next_action)]]
            values[i] += alpha * (target - values[i])
        change = float(np.max(np.abs(values - start)))
        if not np.isfinite(change):
            raise NumericalError("Q tabular não finito", {"sweep": sweep})
        if change < tolerance:
            logger.debug(f"🔁 Convergência sequencial em {sweep} varrimentos")
            return values
    raise NumericalError("Q tabular não convergiu", {"sweeps": max_sweeps, "change": change})


def _expected_operators(steps: Sequence[Step]):
    """Médias por par: peso de cada par seguinte (next_action) e de cada estado seguinte (max)."""
    n = len(PAIRS)
    counts = np.zeros(n)
    next_pair = np.zeros((n, n))
    next_state = np.zeros((n, max(STATES) + 1))
    for step in steps:
        i = PAIR_INDEX[(step.state, step.action)]
        counts[i] += 1
        if not step.terminal:
            next_state[i, step.next_state] += 1
            if step.next_action is not None:
                next_pair[i, PAIR_INDEX[(step.next_state, step.next_action)]] += 1
    seen = counts > 0
    scale = np.where(seen, 1.0 / np.maximum(counts, 1), 0.0)
    return seen, next_pair * scale[:, None], next_state * scale[:, None]


def _expected(values: np.ndarray, steps: Sequence[Step], rewards: np.ndarray, alpha: float, gamma: float,
              bootstrap: str, tolerance: float, max_sweeps: int) -> np.ndarray:
    """Varrimento síncrono: cada par avança α em direção à média dos seus alvos no buffer."""
    seen, pair_weights, state_weights = _expected_operators(steps)
    mask = seen.astype(np.float64)
    for sweep in range(1, max_sweeps + 1):
        if bootstrap == "max":
            bootstrap_values = _state_max(values) @ state_weights.T
        else:
            bootstrap_values = values @ pair_weights.T
        delta = alpha * mask * (rewards + gamma * bootstrap_values - values)
        values = values + delta
        change = float(np.max(np.abs(delta)))
        if not np.isfinite(change):
            raise NumericalError("Q tabular não finito", {"sweep": sweep})
        if change < tolerance:
            logger.debug(f"🔁 Convergência síncrona em {sweep} varrimentos")
            return values
    raise NumericalError("Q tabular não convergiu", {"sweeps": max_sweeps, "change": change})


class SequentialSweep:
    """
    Varrimento sequencial com bootstrap next_action, composto passo a passo.

    Cada atualização é afim nos valores de partida, portanto o varrimento inteiro é v ← M v + c e o
    ponto fixo sai de um sistema linear nos pares visitados (os outros mantêm o valor). `extend`
    acrescenta episódios no fim do buffer sem refazer o que já foi composto. Uma linha de `offsets`
    por tarefa: M não depende da recompensa.
    """

    def __init__(self, rewards: np.ndarray, alpha: float = ALPHA, gamma: float = 1.0):
        self.rewards = np.atleast_2d(np.asarray(rewards, dtype=np.float64))
        self.alpha = alpha
        self.gamma = gamma
        n = len(PAIRS)
        self.matrix = np.eye(n)
        self.offsets = np.zeros((self.rewards.shape[0], n))
        self.seen = np.zeros(n, dtype=bool)

    def extend(self, steps: Iterable[Step]) -> "SequentialSweep":
        keep = 1.0 - self.alpha
        for step in steps:
            i = PAIR_INDEX[(step.state, step.action)]
            self.seen[i] = True
            if step.terminal or step.next_action is None:
                self.matrix[i] *= keep
                self.offsets[:, i] = keep * self.offsets[:, i] + self.alpha * self.rewards[:, i]
                continue
            j = PAIR_INDEX[(step.next_state, step.next_action)]
            self.matrix[i] = keep * self.matrix[i] + self.alpha * self.gamma * self.matrix[j]
            self.offsets[:, i] = (keep * self.offsets[:, i]
                                  + self.alpha * (self.rewards[:, i] + self.gamma * self.offsets[:, j]))
        return self

    def fixed_point(self, values: np.ndarray) -> np.ndarray:
        """`values` (n_tarefas, n_pares): só os pares nunca visitados são lidos."""
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        visited, unvisited = self.seen, ~self.seen
        system = np.eye(int(visited.sum())) - self.matrix[np.ix_(visited, visited)]
        rhs = self.offsets[:, visited] + values[:, unvisited] @ self.matrix[np.ix_(visited, unvisited)].T
        try:
            solved = np.linalg.solve(system, rhs.T).T
        except np.linalg.LinAlgError as e:
            raise NumericalError("varrimento sequencial sem ponto fixo", {"visited": int(visited.sum())}) from e
        if not np.all(np.isfinite(solved)):
            raise NumericalError("Q tabular não finito", {"visited": int(visited.sum())})
        out = values.copy()
        out[:, visited] = solved
        return out


def converge(qtable: QTable, buffer: TabularBuffer, reward_fn: Callable[[int, str], float],
             sweep: str = "sequential", bootstrap: str = "next_action", gamma: float = 1.0,
             tolerance: float = TOLERANCE, max_sweeps: int = MAX_SWEEPS) -> QTable:
    """
    Atualiza Q com o buffer inteiro até a maior variação num varrimento ficar abaixo de `tolerance`.

    O passo t = 5 é terminal: o alvo é só a recompensa. `sequential` percorre o buffer pela ordem de
    chegada e o ponto fixo pesa mais as ocorrências recentes de cada par, logo depende da ordem;
    `expected` é o varrimento síncrono, independente da ordem.
    """
    _check("varrimento", sweep, SWEEPS)
    _check("bootstrap", bootstrap, BOOTSTRAPS)
    if len(buffer) == 0:
        raise ConfigurationError("buffer tabular vazio")
    steps = buffer.steps()
    rewards = np.array([reward_fn(s, a) for s, a in PAIRS])
    values = qtable.values.astype(np.float64).copy()
    if sweep == "sequential":
        values = _sequential(values, steps, rewards, qtable.alpha, gamma, bootstrap, tolerance, max_sweeps)
    else:
        values = _expected(values, steps, rewards, qtable.alpha, gamma, bootstrap, tolerance, max_sweeps)
    qtable.values = values
    return qtable


def converge_many(qtables: Sequence[QTable], buffer: TabularBuffer, reward_fns: Sequence[Callable],
                  sweep: str = "sequential", bootstrap: str = "next_action", gamma: float = 1.0,
                  tolerance: float = TOLERANCE, max_sweeps: int = MAX_SWEEPS) -> List[QTable]:
    """
    Várias tabelas sobre o mesmo buffer, vetorizado sobre as tarefas.

    sequential + next_action resolve o ponto fixo exato (SequentialSweep); sequential + max itera
    tabela a tabela; expected é o varrimento síncrono.
    """
    _check("varrimento", sweep, SWEEPS)
    _check("bootstrap", bootstrap, BOOTSTRAPS)
    if len(buffer) == 0:
        raise ConfigurationError("buffer tabular vazio")
    alphas = {q.alpha for q in qtables}
    if len(alphas) != 1:
        raise ConfigurationError("tabelas com taxas de aprendizagem diferentes")
    alpha = alphas.pop()
    rewards = np.stack([[fn(s, a) for s, a in PAIRS] for fn in reward_fns])
    values = np.stack([q.values for q in qtables]).astype(np.float64)
    if sweep == "expected":
        values = _expected(values, buffer.steps(), rewards, alpha, gamma, bootstrap, tolerance, max_sweeps)
    elif bootstrap == "next_action":
        values = SequentialSweep(rewards, alpha, gamma).extend(buffer.steps()).fixed_point(values)
    else:
        steps = buffer.steps()
        values = np.stack([_sequential(row.copy(), steps, reward_row, alpha, gamma, bootstrap, tolerance, max_sweeps)
                           for row, reward_row in zip(values, rewards)])
    for qtable, row in zip(qtables, values):
        qtable.values = row.copy()
    return list(qtables)


# ---------------------------------------------------------------------- #
# Avaliação
# ---------------------------------------------------------------------- #
def sequence_return(actions: Sequence[str], reward_fn: Callable[[int, str], float] = true_reward) -> float:
    state, total = INITIAL_STATE, 0.0
    for action in actions:
        if not is_legal(state, action):
            raise DomainError(f"ação ilegal {action} em s{state}")
        total += reward_fn(state, action)
        state = destination(action)
    return total


def greedy_path(qtable: QTable) -> Tuple[str, ...]:
    state, path = INITIAL_STATE, []
    for _ in range(HORIZON):
        action = qtable.greedy(state)
        path.append(action)
        state = destination(action)
    return tuple(path)


def legal_sequences(horizon: int = HORIZON, start: int = INITIAL_STATE) -> Iterable[Tuple[str, ...]]:
    """Todas as sequências legais, pela ordem lexicográfica da ordem global das ações."""
    def extend(state: int, depth: int):
        if depth == 0:
            yield ()
            return
        for action in LEGAL_ACTIONS[state]:
            for rest in extend(destination(action), depth - 1):
                yield (action,) + rest
    return extend(start, horizon)


def brute_force_optimal(reward_fn: Callable[[int, str], float] = true_reward,
                        horizon: int = HORIZON) -> Tuple[float, Tuple[str, ...]]:
    """Melhor retorno e a primeira sequência que o atinge (enumeração exaustiva)."""
    best_return, best_sequence = -np.inf, ()
    for sequence in legal_sequences(horizon):
        value = sequence_return(sequence, reward_fn)
        if value > best_return:
            best_return, best_sequence = value, sequence
    return float(best_return), best_sequence


def replay_scripted_episodes(bootstrap: str = "next_action", sweep: str = "sequential",
                             gamma: float = 1.0) -> List[QTable]:
    """Tabela Q da tarefa principal após cada um dos três episódios guionados (com convergência)."""
    reward = PerfectDiscriminatorReward(MAIN_EXPERT_SET)
    qtable, buffer, snapshots = QTable(), TabularBuffer(), []
    for episode in SCRIPTED_EPISODES:
        run_episode(qtable, episode, buffer)
        converge(qtable, buffer, reward, sweep=sweep, bootstrap=bootstrap, gamma=gamma)
        snapshots.append(qtable.copy())
    return snapshots

