"""
📜 Biblioteca de trajetórias handcrafted (HC)
Um ficheiro de texto, uma trajetória por linha, nomes de tarefas separados por vírgula.
Linhas com tarefas fora do TaskSet, ou sem a tarefa principal, são ignoradas (o mesmo ficheiro serve
todas as variantes).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from src.envs.tasks import TaskId, TaskSet
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HCTrajectory:
    tasks: Tuple[TaskId, ...]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(TaskId.parse(t) for t in self.tasks))

    def __len__(self):
        return len(self.tasks)

    def indices(self, taskset: TaskSet) -> Tuple[int, ...]:
        return tuple(taskset.index(t) for t in self.tasks)

    @classmethod
    def parse(cls, line: str) -> "HCTrajectory":
        return cls(tuple(name.strip() for name in line.split(",") if name.strip()))


def parse_hc_lines(lines: Sequence[str], taskset: TaskSet, length: Optional[int] = None) -> List[HCTrajectory]:
    library = []
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        trajectory = HCTrajectory.parse(line)
        missing = [t.value for t in trajectory.tasks if t not in taskset]
        if missing:
            logger.debug(f"📜 Linha {number} ignorada: {', '.join(missing)} fora do TaskSet")
            continue
        if taskset.main not in trajectory.tasks:
            logger.debug(f"📜 Linha {number} ignorada: sem a tarefa principal {taskset.main.value}")
            continue
        if length is not None and len(trajectory) != length:
            raise ConfigurationError(
                f"trajetória HC na linha {number} com {len(trajectory)} escolhas, esperado {length}")
        library.append(trajectory)
    return library


def load_hc_library(path, taskset: TaskSet, length: Optional[int] = None) -> List[HCTrajectory]:
    """Lê a biblioteca HC; `length` (H) valida o comprimento de cada trajetória aceite."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"biblioteca HC não encontrada: {path}")
    library = parse_hc_lines(path.read_text(encoding="utf-8").splitlines(), taskset, length)
    logger.info(f"📜 {len(library)} trajetórias HC para {taskset.main.value} ({path.name})")
    return library
