#!/usr/bin/env python3
"""
🧪 Experiência de secretária
Recolhe os dados de expert, treina LfGP, DAC e BC multitarefa em várias seeds, desenha as curvas
de sucesso e escreve um resumo com a taxa de sucesso final da tarefa principal por método.

USO:
    python scripts/run_desk_experiment.py --out runs_desk --seeds 0 1 2
    python scripts/run_desk_experiment.py --variant bring --total-steps 50000 --seeds 0
    python scripts/run_desk_experiment.py --skip-collect --algorithms lfgp dac
"""
import sys
import argparse
import logging
from pathlib import Path

# Adiciona a raiz do repositório ao path
sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv

from src.dashboard import Dashboard
from src.envs.block_world import load_env_config
from src.harness.collect import collect_expert, collect_summary_lines
from src.harness.config import load_run_config
from src.harness.plots import aggregate, group_runs, plot_runs
from src.harness.train import train
from src.utils import RUNS_DIR, criar_estrutura_diretorios, expert_root, run_name, salvar_relatorio

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s [%(levelname)s] %(message)s',
    datefmt='%H:%M:%S'
)
logger = logging.getLogger(__name__)

ALGORITHMS = ["lfgp", "dac", "bc_multitask"]


def resumo(metrics_paths: list) -> list:
    """Linhas do resumo: sucesso final (média ± desvio) da tarefa principal por método"""
    linhas = ["método                    seeds  passo    sucesso"]
    for label, runs in sorted(group_runs(metrics_paths).items()):
        steps, mean, std = aggregate(runs)
        if not steps.size:
            linhas.append(f"{label:<25} {len(runs):>5}  -        sem pontos")
            continue
        linhas.append(f"{label:<25} {len(runs):>5}  {int(steps[-1]):<8} {mean[-1]:.2f} ± {std[-1]:.2f}")
    return linhas


def main():
    load_dotenv()
    parser = argparse.ArgumentParser(description="🧪 Experiência de secretária LfGP vs DAC vs BC")
    parser.add_argument("--config", default="config/run_defaults.env", help="RunConfig base")
    parser.add_argument("--out", default="runs_desk", help="Diretório de saída")
    parser.add_argument("--variant", help="Variante do mundo de blocos (padrão: a da config)")
    parser.add_argument("--algorithms", nargs="+", default=ALGORITHMS, help="Métodos a comparar")
    parser.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2], help="Seeds")
    parser.add_argument("--total-steps", type=int, help="Orçamento de passos (padrão: o da config)")
    parser.add_argument("--skip-collect", action="store_true", help="Reutiliza os dados de expert existentes")
    args = parser.parse_args()

    overrides = {}
    if args.variant:
        overrides["variant"] = args.variant
    if args.total_steps is not None:
        overrides["total_steps"] = args.total_steps
    base = load_run_config(args.config if Path(args.config).exists() else None, overrides)
    env_path = Path(base.env_config)
    env_config = load_env_config(env_path if env_path.exists() else None, {"variant": base.variant})
    out = Path(args.out)
    criar_estrutura_diretorios(out)

    print("\n" + "=" * 60)
    print(f"🧪 EXPERIÊNCIA DE SECRETÁRIA · {base.variant}")
    print("=" * 60 + "\n")

    experts = expert_root(out, base.expert_dir)
    if not args.skip_collect:
        summary = collect_expert(env_config, env_config.taskset, base.pairs_per_task, base.final_pairs,
                                 base.seed, experts)
        for line in collect_summary_lines(summary):
            print(f"   ✅ {line}")

    metrics_paths, records = [], {}
    for algorithm in args.algorithms:
        for seed in args.seeds:
            config = base.replace(algorithm=algorithm, seed=seed)
            name = run_name(algorithm, base.variant, seed)
            logger.info(f"🏋️ {name}")
            result = train(config, out / RUNS_DIR / name, experts, env_config)
            metrics_paths.append(result.metrics_path)
            records[name] = result.records

    Dashboard(records).imprimir_dashboard()
    paths = plot_runs(metrics_paths, out / "plots")
    linhas = resumo(metrics_paths)
    salvar_relatorio(out / "summary.txt", linhas)
    print("\n".join(linhas))
    print(f"\n📉 {paths['svg']}")
    print(f"📝 {out / 'summary.txt'}")


if __name__ == "__main__":
    main()
