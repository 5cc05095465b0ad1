"""
🎯 Tarefas e conjuntos de tarefas
Identidades da tarefa principal e das auxiliares; a ordem do TaskSet indexa todas as entidades
por tarefa (cabeças, discriminadores, temperaturas, ficheiros de expert).
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

from src.errors import ConfigurationError


class TaskId(str, Enum):
    OPEN_GRIPPER = "open_gripper"
    CLOSE_GRIPPER = "close_gripper"
    REACH = "reach"
    LIFT = "lift"
    MOVE_OBJECT = "move_object"
    STACK = "stack"
    UNSTACK_STACK = "unstack_stack"
    BRING = "bring"
    INSERT = "insert"

    @classmethod
    def parse(cls, name) -> "TaskId":
        if isinstance(name, TaskId):
            return name
        key = str(name).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"tarefa desconhecida: {name}")


BASE_AUX: Tuple[TaskId, ...] = (
    TaskId.OPEN_GRIPPER, TaskId.CLOSE_GRIPPER, TaskId.REACH, TaskId.LIFT, TaskId.MOVE_OBJECT,
)


@dataclass(frozen=True)
class TaskSet:
    """Tarefa principal no índice 0, auxiliares a seguir pela ordem dada."""

    main: TaskId
    aux: Tuple[TaskId, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "main", TaskId.parse(self.main))
        object.__setattr__(self, "aux", tuple(TaskId.parse(t) for t in self.aux))
        if self.main in self.aux:
            raise ConfigurationError(f"tarefa principal {self.main.value} repetida nas auxiliares")
        if len(set(self.aux)) != len(self.aux):
            raise ConfigurationError("tarefas auxiliares duplicadas")

    @property
    def tasks(self) -> Tuple[TaskId, ...]:
        return (self.main,) + self.aux

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(t.value for t in self.tasks)

    def __len__(self):
        return 1 + len(self.aux)

    def __iter__(self):
        return iter(self.tasks)

    def __contains__(self, task) -> bool:
        return TaskId.parse(task) in self.tasks

    def index(self, task) -> int:
        task = TaskId.parse(task)
        if task not in self.tasks:
            raise ConfigurationError(f"tarefa {task.value} fora do TaskSet {self.names}")
        return self.tasks.index(task)

    def single(self) -> "TaskSet":
        return TaskSet(self.main)


VARIANT_TASKSETS: Dict[str, TaskSet] = {
    "stack": TaskSet(TaskId.STACK, BASE_AUX),
    "unstack-stack": TaskSet(TaskId.UNSTACK_STACK, BASE_AUX),
    "bring": TaskSet(TaskId.BRING, BASE_AUX),
    "insert": TaskSet(TaskId.INSERT, (TaskId.BRING,) + BASE_AUX),
}


def taskset_for_variant(variant: str) -> TaskSet:
    key = variant.strip().lower().replace("_", "-")
    if key not in VARIANT_TASKSETS:
        raise ConfigurationError(f"variante desconhecida: {variant} (opções: {', '.join(VARIANT_TASKSETS)})")
    return VARIANT_TASKSETS[key]
