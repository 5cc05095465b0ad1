"""
🗂️ Layout dos diretórios de execução
Onde ficam os dados de expert, as execuções (métricas, checkpoints, config) e os relatórios.
"""
import logging
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

EXPERTS_DIR = "experts"
RUNS_DIR = "runs"
PLOTS_DIR = "plots"
MULTITASK_DIR = "multitask"
SINGLE_DIR = "single"
CHECKPOINTS_DIR = "checkpoints"
METRICS_FILE = "metrics.csv"
CONFIG_FILE = "config.txt"
EXTRA_SUFFIX = "_extra"
EXPERT_EXTENSION = ".bin"

_SEED_SUFFIX = re.compile(r"_seed\d+$")


def criar_estrutura_diretorios(out_dir) -> List[Path]:
    """Cria <out>/experts, <out>/runs e <out>/plots se não existirem."""
    out_dir = Path(out_dir)
    diretorios = [out_dir / EXPERTS_DIR, out_dir / RUNS_DIR, out_dir / PLOTS_DIR]
    for diretorio in diretorios:
        diretorio.mkdir(parents=True, exist_ok=True)
    logger.debug(f"📁 Estrutura de diretórios verificada em {out_dir}")
    return diretorios


def expert_root(out_dir, expert_dir: str = "") -> Path:
    return Path(expert_dir) if expert_dir else Path(out_dir) / EXPERTS_DIR


def expert_paths(expert_dir, task: str, multitask: bool) -> Tuple[Path, Path]:
    """
    Caminhos (principal, extra) do ficheiro de expert de uma tarefa.

    O ficheiro extra guarda os pares regulares usados na ablação de substituição dos pares finais.
    """
    folder = Path(expert_dir) / (MULTITASK_DIR if multitask else SINGLE_DIR)
    return folder / f"{task}{EXPERT_EXTENSION}", folder / f"{task}{EXTRA_SUFFIX}{EXPERT_EXTENSION}"


def missing_expert_files(expert_dir, tasks: Sequence[str], multitask: bool) -> List[str]:
    return [task for task in tasks if not expert_paths(expert_dir, task, multitask)[0].exists()]


def run_name(algorithm: str, variant: str, seed: int, prefix: Optional[str] = None) -> str:
    base = prefix or f"{algorithm}_{variant}"
    return f"{base}_seed{seed}"


def run_label(run_dir) -> str:
    """Nome da execução sem o sufixo _seed<N> (agrupa seeds do mesmo método)."""
    return _SEED_SUFFIX.sub("", Path(run_dir).name)


def checkpoint_path(run_dir, step: int) -> Path:
    return Path(run_dir) / CHECKPOINTS_DIR / f"policy_{step}.ckpt"


def list_checkpoints(run_dir) -> List[Path]:
    """Checkpoints de uma execução ordenados pelo passo."""
    folder = Path(run_dir) / CHECKPOINTS_DIR
    if not folder.exists():
        return []
    return sorted(folder.glob("policy_*.ckpt"), key=lambda p: int(p.stem.split("_")[-1]))


def salvar_relatorio(path, linhas: Sequence[str]) -> Path:
    """Grava um relatório de texto (uma linha por item)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(linhas) + "\n", encoding="utf-8")
    logger.info(f"📝 Relatório salvo: {path}")
    return path
