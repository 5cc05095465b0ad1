"""
🎲 MDP de seis estados
Cadeia determinística com recompensa enganadora: a15 dá −5 mas leva direto ao estado absorvente
que paga +1; o caminho ótimo percorre s1→s2→s3→s4→s5.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

from src.errors import DomainError

logger = logging.getLogger(__name__)

HORIZON = 5
INITIAL_STATE = 1

# Ordem global das ações: define o desempate "menor índice" da política gulosa.
ACTIONS: Tuple[str, ...] = ("a12", "a15", "a23", "a26", "a34", "a36", "a45", "a46", "a55", "a61")

LEGAL_ACTIONS: Dict[int, Tuple[str, ...]] = {
    1: ("a12", "a15"),
    2: ("a23", "a26"),
    3: ("a34", "a36"),
    4: ("a45", "a46"),
    5: ("a55",),
    6: ("a61",),
}

TRUE_REWARDS: Dict[Tuple[int, str], float] = {
    (5, "a55"): 1.0,
    (1, "a15"): -5.0,
}


def destination(action: str) -> int:
    return int(action[-1])


def is_legal(state: int, action: str) -> bool:
    return action in LEGAL_ACTIONS.get(state, ())


def true_reward(state: int, action: str) -> float:
    return TRUE_REWARDS.get((state, action), 0.0)


@dataclass
class SixStateMDP:
    """Estado atual e passo t ∈ {1..5} (t = passo a executar)."""

    state: int = INITIAL_STATE
    timestep: int = 1

    def reset(self, seed=None) -> int:
        self.state = INITIAL_STATE
        self.timestep = 1
        return self.state

    @property
    def done(self) -> bool:
        return self.timestep > HORIZON

    def legal_actions(self, state: int = None) -> Tuple[str, ...]:
        return LEGAL_ACTIONS[self.state if state is None else state]

    def step(self, action: str) -> Tuple[int, float, bool]:
        if self.done:
            raise DomainError(f"episódio terminado (t={self.timestep}); faça reset()")
        if not is_legal(self.state, action):
            raise DomainError(f"ação ilegal {action} em s{self.state}")
        reward = true_reward(self.state, action)
        self.state = destination(action)
        self.timestep += 1
        return self.state, reward, self.done
