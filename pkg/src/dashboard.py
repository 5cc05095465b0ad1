"""
📊 Métricas de treino e dashboard de consola

Um registo por ponto de avaliação, acrescentado a metrics.csv (nunca reescrito). Cabeçalho:

    step, success_<tarefa>..., return_<tarefa>..., loss_discriminator, loss_q, loss_pi,
    alpha_mean, expert_proportion, scheduler_temperature, scheduler_main_fraction

As tarefas seguem a ordem do TaskSet. Os números são gravados com repr() para que duas execuções
com a mesma seed produzam ficheiros idênticos byte a byte.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

logger = logging.getLogger(__name__)

LOSS_KEYS = ("loss_discriminator", "loss_q", "loss_pi", "alpha_mean", "expert_proportion")
SCHEDULER_KEYS = ("scheduler_temperature", "scheduler_main_fraction")


def _format(value: float) -> str:
    value = float(value)
    return "nan" if math.isnan(value) else repr(value)


@dataclass
class MetricsRecord:
    step: int
    success: Dict[str, float]
    returns: Dict[str, float] = field(default_factory=dict)
    losses: Dict[str, float] = field(default_factory=dict)
    scheduler: Dict[str, float] = field(default_factory=dict)

    def row(self, tasks: Sequence[str]) -> Dict[str, str]:
        row = {"step": str(int(self.step))}
        for task in tasks:
            row[f"success_{task}"] = _format(self.success.get(task, math.nan))
        for task in tasks:
            row[f"return_{task}"] = _format(self.returns.get(task, math.nan))
        for key in LOSS_KEYS:
            row[key] = _format(self.losses.get(key, math.nan))
        for key in SCHEDULER_KEYS:
            row[key] = _format(self.scheduler.get(key, math.nan))
        return row

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> "MetricsRecord":
        success = {k[len("success_"):]: float(v) for k, v in row.items() if k.startswith("success_")}
        returns = {k[len("return_"):]: float(v) for k, v in row.items() if k.startswith("return_")}
        losses = {k: float(row[k]) for k in LOSS_KEYS if k in row}
        scheduler = {k: float(row[k]) for k in SCHEDULER_KEYS if k in row}
        return cls(int(row["step"]), success, returns, losses, scheduler)


def metrics_header(tasks: Sequence[str]) -> List[str]:
    return (["step"] + [f"success_{t}" for t in tasks] + [f"return_{t}" for t in tasks]
            + list(LOSS_KEYS) + list(SCHEDULER_KEYS))


class MetricsRecorder:
    """Escreve os registos de uma execução; `fresh=True` apaga um ficheiro anterior."""

    def __init__(self, path, tasks: Sequence[str], fresh: bool = True):
        self.path = Path(path)
        self.tasks = tuple(tasks)
        self.records: List[MetricsRecord] = []
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if fresh and self.path.exists():
            self.path.unlink()
        if not self.path.exists():
            with open(self.path, "w", newline="", encoding="utf-8") as f:
                csv.DictWriter(f, fieldnames=metrics_header(self.tasks)).writeheader()

    def record(self, record: MetricsRecord) -> MetricsRecord:
        if self.records and record.step <= self.records[-1].step:
            logger.warning(f"⚠️ Registo fora de ordem: passo {record.step} após {self.records[-1].step}")
        with open(self.path, "a", newline="", encoding="utf-8") as f:
            csv.DictWriter(f, fieldnames=metrics_header(self.tasks)).writerow(record.row(self.tasks))
        self.records.append(record)
        main = self.tasks[0] if self.tasks else None
        if main is not None:
            logger.info(f"📈 Passo {record.step}: sucesso {main} = {record.success.get(main, math.nan):.2f}")
        return record


def read_metrics(path) -> List[MetricsRecord]:
    with open(Path(path), newline="", encoding="utf-8") as f:
        return [MetricsRecord.from_row(row) for row in csv.DictReader(f)]


def metrics_tasks(path) -> List[str]:
    with open(Path(path), newline="", encoding="utf-8") as f:
        header = next(csv.reader(f))
    return [name[len("success_"):] for name in header if name.startswith("success_")]


class Dashboard:
    """Resumo de consola de uma ou mais execuções (apenas para os pontos de entrada)."""

    def __init__(self, runs: Dict[str, List[MetricsRecord]]):
        self.runs = runs

    def imprimir_dashboard(self, titulo: str = "📊 DASHBOARD LfGP"):
        print("\n" + "=" * 60)
        print(titulo)
        print("=" * 60)
        for name, records in self.runs.items():
            if not records:
                print(f"\n⚠️ {name}: sem registos")
                continue
            last = records[-1]
            best = max(records, key=lambda r: next(iter(r.success.values()), 0.0))
            print(f"\n🏃 {name} (passo {last.step})")
            for task, rate in last.success.items():
                print(f"   {task:<16} sucesso {rate:6.1%}  retorno {last.returns.get(task, math.nan):8.2f}")
            main_rate = next(iter(best.success.values()), math.nan)
            print(f"   ⭐ Melhor (principal): {main_rate:.1%} no passo {best.step}")
        print("=" * 60)
