"""
🧬 Matriz de ablações
Produto cartesiano dos eixos pedidos (scheduler, amostragem de expert, tamanho do dataset,
subamostragem, pares finais, algoritmo) com as mesmas seeds; cada célula é uma execução
independente com o seu metrics.csv. As células correm em processos paralelos.
"""
import csv
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from src.errors import ConfigurationError
from src.harness.config import RunConfig
from src.harness.train import train
from src.settings import coerce, read_key_values
from src.utils import RUNS_DIR, run_name

logger = logging.getLogger(__name__)

AXES = ("algorithm", "scheduler", "expert_sampling", "pairs_per_task", "subsample", "final_pair_mode",
        "final_pairs")
INDEX_FILE = "ablation_index.csv"


@dataclass
class AblationMatrix:
    """Eixos na ordem declarada; sem eixos a matriz é a execução base (uma vez por seed)."""

    axes: Dict[str, Tuple[Any, ...]] = field(default_factory=dict)
    seeds: Tuple[int, ...] = ()
    workers: int = 1

    def __post_init__(self):
        unknown = sorted(set(self.axes) - set(AXES))
        if unknown:
            raise ConfigurationError(f"eixos de ablação desconhecidos: {', '.join(unknown)} (opções: {', '.join(AXES)})")
        for name, values in self.axes.items():
            if not values:
                raise ConfigurationError(f"eixo '{name}' sem valores")

    def cells(self, base: RunConfig) -> List[Tuple[str, RunConfig]]:
        seeds = self.seeds or (base.seed,)
        names = list(self.axes)
        out = []
        for combo in product(*(self.axes[n] for n in names)):
            changes = dict(zip(names, combo))
            label = "__".join(f"{k}={_label(v)}" for k, v in changes.items()) or None
            for seed in seeds:
                name = run_name(base.algorithm, base.variant, seed, prefix=label)
                out.append((name, base.replace(seed=seed, **changes)))
        return out


def _label(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    return str(value)


def parse_matrix(entries: Dict[str, Tuple[str, str]], base: Optional[RunConfig] = None) -> AblationMatrix:
    """Converte `eixo=v1,v2,…` para os tipos dos campos da RunConfig."""
    base = base or RunConfig()
    axes: Dict[str, Tuple[Any, ...]] = {}
    seeds: Tuple[int, ...] = ()
    workers = 1
    for key, (text, _) in entries.items():
        values = [v.strip() for v in text.split(",") if v.strip()]
        if key == "seeds":
            seeds = tuple(int(v) for v in values)
        elif key == "workers":
            workers = int(text)
        else:
            if key not in AXES:
                raise ConfigurationError(f"eixo de ablação desconhecido: {key}")
            axes[key] = tuple(coerce(v, getattr(base, key), key) for v in values)
    return AblationMatrix(axes, seeds, workers)


def load_matrix(path, base: Optional[RunConfig] = None) -> AblationMatrix:
    return parse_matrix(read_key_values(path), base)


def run_cell(config: RunConfig, run_dir: str, expert_dir: Optional[str]) -> str:
    """Uma célula num processo próprio; devolve o caminho do metrics.csv."""
    return str(train(config, Path(run_dir), expert_dir).metrics_path)


def ablate(base: RunConfig, matrix: AblationMatrix, out_dir, expert_dir: Optional[str] = None) -> Dict[str, Path]:
    """Corre todas as células e escreve o índice (célula, seed, alterações, ficheiro de métricas)."""
    out_dir = Path(out_dir)
    cells = matrix.cells(base)
    runs_dir = out_dir / RUNS_DIR
    logger.info(f"🧬 {len(cells)} células de ablação ({matrix.workers} processos)")

    jobs = [(name, config, str(runs_dir / name)) for name, config in cells]
    metrics: Dict[str, Path] = {}
    if matrix.workers <= 1:
        for name, config, run_dir in jobs:
            metrics[name] = Path(run_cell(config, run_dir, expert_dir))
    else:
        with ProcessPoolExecutor(max_workers=matrix.workers) as executor:
            fut_to_name = {executor.submit(run_cell, config, run_dir, expert_dir): name
                           for name, config, run_dir in jobs}
            for fut in as_completed(fut_to_name):
                name = fut_to_name[fut]
                metrics[name] = Path(fut.result())
                logger.info(f"✅ Célula concluída: {name}")

    write_index(out_dir / INDEX_FILE, cells, metrics, list(matrix.axes))
    return {name: metrics[name] for name, _ in cells}


def write_index(path: Path, cells: Sequence[Tuple[str, RunConfig]], metrics: Dict[str, Path],
                axes: Sequence[str]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=["cell", "seed"] + list(axes) + ["metrics"])
        writer.writeheader()
        for name, config in cells:
            row = {"cell": name, "seed": config.seed, "metrics": Path(metrics[name]).relative_to(path.parent).as_posix()}
            row.update({axis: _label(getattr(config, axis)) for axis in axes})
            writer.writerow(row)
    return path
