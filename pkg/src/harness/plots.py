"""
📉 Curvas de aprendizagem
Lê os metrics.csv de várias execuções, agrupa as seeds do mesmo método (nome da execução sem
_seed<N>) e desenha sucesso vs. passos com média ± desvio padrão em SVG. As séries por seed
vão também para CSV, sem suavização.
"""
import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.dashboard import MetricsRecord, read_metrics
from src.errors import ConfigurationError
from src.utils import METRICS_FILE, run_label

logger = logging.getLogger(__name__)

PLOT_FILE = "success_curves.svg"
SERIES_FILE = "success_series.csv"

Groups = Dict[str, Dict[str, List[MetricsRecord]]]


def find_metrics(paths: Sequence) -> List[Path]:
    """Ficheiros de métricas: os próprios ou procurados recursivamente nos diretórios dados."""
    found = []
    for path in map(Path, paths):
        if path.is_dir():
            found.extend(sorted(path.rglob(METRICS_FILE)))
        elif path.exists():
            found.append(path)
        else:
            raise ConfigurationError(f"caminho de métricas não encontrado: {path}")
    return found


def group_runs(metrics_files: Sequence[Path]) -> Groups:
    groups: Groups = {}
    for path in metrics_files:
        run_dir = Path(path).parent
        groups.setdefault(run_label(run_dir), {})[run_dir.name] = read_metrics(path)
    return groups


def success_series(records: Sequence[MetricsRecord], task: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(passos, sucesso) da tarefa; por omissão a principal (primeira coluna de sucesso)."""
    steps, values = [], []
    for record in records:
        name = task or next(iter(record.success), None)
        if name is None or name not in record.success:
            continue
        steps.append(record.step)
        values.append(record.success[name])
    return np.asarray(steps, dtype=np.int64), np.asarray(values, dtype=np.float64)


def aggregate(runs: Dict[str, List[MetricsRecord]], task: Optional[str] = None):
    """Média e desvio padrão entre seeds nos passos comuns a todas as seeds."""
    series = [success_series(records, task) for records in runs.values()]
    series = [s for s in series if s[0].size]
    if not series:
        return np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0)
    common = sorted(set.intersection(*(set(s[0].tolist()) for s in series)))
    table = np.array([[dict(zip(s[0].tolist(), s[1].tolist()))[step] for step in common] for s in series])
    return np.asarray(common, dtype=np.int64), table.mean(axis=0), table.std(axis=0)


def write_series_csv(groups: Groups, path, task: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=["method", "run", "step", "success"])
        writer.writeheader()
        for label, runs in groups.items():
            for run, records in runs.items():
                for step, value in zip(*success_series(records, task)):
                    writer.writerow({"method": label, "run": run, "step": int(step), "success": repr(float(value))})
    return path


def plot_success(groups: Groups, path, task: Optional[str] = None, title: Optional[str] = None) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams.update({
        "font.family": "DejaVu Sans",
        "axes.unicode_minus": False,
        "svg.hashsalt": "lfgp",
    })
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.4, 4.0), constrained_layout=True)
    for label, runs in sorted(groups.items()):
        steps, mean, std = aggregate(runs, task)
        if not steps.size:
            logger.warning(f"⚠️ {label}: sem pontos para a tarefa {task or 'principal'}")
            continue
        ax.plot(steps, mean, marker="o", markersize=3, label=f"{label} (n={len(runs)})")
        ax.fill_between(steps, np.clip(mean - std, 0.0, 1.0), np.clip(mean + std, 0.0, 1.0), alpha=0.2)
    ax.set_title(title or f"Sucesso: {task or 'tarefa principal'}")
    ax.set_xlabel("Passos de ambiente")
    ax.set_ylabel("Taxa de sucesso")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    if groups:
        ax.legend(loc="best", fontsize=8)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"📉 Gráfico gravado: {path}")
    return path


def plot_runs(paths: Sequence, out_dir, task: Optional[str] = None) -> Dict[str, Path]:
    """SVG + CSV das séries por seed para todas as execuções encontradas."""
    files = find_metrics(paths)
    if not files:
        raise ConfigurationError("nenhum metrics.csv encontrado nos caminhos dados")
    groups = group_runs(files)
    out_dir = Path(out_dir)
    return {
        "svg": plot_success(groups, out_dir / PLOT_FILE, task),
        "csv": write_series_csv(groups, out_dir / SERIES_FILE, task),
    }
