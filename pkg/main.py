#!/usr/bin/env python3
"""
🤖 LfGP - Learning from Guided Play
Imitação adversarial multitarefa com intenções auxiliares num mundo de blocos 2-D

Comandos:
    python main.py collect-expert  - Recolhe demonstrações dos experts programados
    python main.py train           - Treina LfGP, DAC ou BC (ou o MDP de seis estados)
    python main.py evaluate        - Avalia um checkpoint em episódios aleatorizados
    python main.py ablate          - Corre uma matriz de ablações
    python main.py six-state       - Relatório do MDP de seis estados
    python main.py plot            - Curvas de sucesso (SVG) a partir dos metrics.csv
"""
import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

# Adiciona a raiz do repositório ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dotenv import load_dotenv

from src.dashboard import Dashboard, read_metrics
from src.envs.block_world import load_env_config
from src.errors import ConfigurationError, LfGPError
from src.harness.ablate import AblationMatrix, ablate, load_matrix
from src.harness.collect import collect_expert, collect_summary_lines
from src.harness.config import RunConfig, load_run_config
from src.harness.evaluate import evaluate
from src.harness.plots import plot_runs
from src.harness.train import train
from src.settings import coerce, explain
from src.tabular.qlearning import SWEEPS
from src.tabular.report import build_report, write_report
from src.utils import RUNS_DIR, criar_estrutura_diretorios, expert_root, list_checkpoints, run_name

COMMANDS = ["collect-expert", "train", "evaluate", "ablate", "six-state", "plot"]


def resolve_config(args) -> RunConfig:
    """RunConfig: defaults < ficheiro --config < LFGP_* < flags da CLI."""
    defaults = RunConfig()
    overrides = {}
    for f in fields(RunConfig):
        text = getattr(args, f.name, None)
        if text is not None:
            overrides[f.name] = coerce(str(text), getattr(defaults, f.name), f.name)
    return load_run_config(args.config, overrides)


def env_config_for(config: RunConfig):
    path = Path(config.env_config)
    if not path.exists():
        logging.getLogger(__name__).warning(f"⚠️ {path} não encontrado, ambiente com valores por omissão")
    return load_env_config(path if path.exists() else None, {"variant": config.variant})


def cmd_collect_expert(config: RunConfig, args):
    """Recolhe os ficheiros multitarefa e de tarefa única"""
    env_config = env_config_for(config)
    taskset = env_config.taskset
    out = expert_root(args.out, config.expert_dir)
    print(f"🎬 Coleta: {len(taskset)} tarefas × {config.pairs_per_task} pares + {config.final_pairs} finais\n")
    summary = collect_expert(env_config, taskset, config.pairs_per_task, config.final_pairs, config.seed, out,
                             max_failure_rate=args.max_failure_rate)
    for line in collect_summary_lines(summary):
        print(f"   ✅ {line}")
    print(f"\n📁 Dados de expert em {out}")


def cmd_train(config: RunConfig, args):
    """Treina segundo o algoritmo da config"""
    name = run_name(config.algorithm, config.variant if config.environment == "block_world" else "six_state",
                    config.seed)
    run_dir = Path(args.out) / RUNS_DIR / name
    print(f"🏋️ Treino {config.algorithm} → {run_dir}\n")
    result = train(config, run_dir)
    Dashboard({name: result.records}).imprimir_dashboard()
    if result.checkpoints:
        print(f"\n💾 Último checkpoint: {result.checkpoints[-1]}")


def cmd_evaluate(config: RunConfig, args):
    """Avalia um checkpoint (por omissão o último da execução)"""
    checkpoint = args.checkpoint
    if checkpoint is None:
        run_dir = Path(args.out) / RUNS_DIR / run_name(config.algorithm, config.variant, config.seed)
        found = list_checkpoints(run_dir)
        if not found:
            raise ConfigurationError(f"nenhum checkpoint em {run_dir}")
        checkpoint = found[-1]
    result = evaluate(checkpoint, args.task, config.eval_episodes, config.seed, config.eval_workers)
    print(f"🧪 {Path(checkpoint).name} · {result.task}")
    print(f"   📈 Sucesso: {result.success_rate:.1%} ({sum(result.successes)}/{len(result.successes)})")
    print(f"   ⭐ Retorno médio (moldado): {result.mean_return:.2f}")


def cmd_ablate(config: RunConfig, args):
    """Corre o produto cartesiano dos eixos da matriz"""
    matrix = load_matrix(args.matrix, config) if args.matrix else AblationMatrix()
    metrics = ablate(config, matrix, args.out)
    Dashboard({name: read_metrics(path) for name, path in metrics.items()}).imprimir_dashboard("🧬 ABLAÇÕES")


def cmd_six_state(config: RunConfig, args):
    """Reprodução tabular e comparação AIL vs LfGP"""
    seeds = range(config.seed, config.seed + args.seeds)
    report = build_report(seeds=seeds, episodes=config.tabular_episodes, workers=args.workers, sweeps=SWEEPS)
    paths = write_report(report, args.out)
    for line in report.lines():
        print(line)
    print(f"\n📝 {paths['text']}")


def cmd_plot(config: RunConfig, args):
    """Curvas de sucesso (média ± desvio entre seeds)"""
    paths = plot_runs(args.runs or [Path(args.out) / RUNS_DIR], Path(args.out) / "plots", args.task)
    print(f"📉 {paths['svg']}")
    print(f"📄 {paths['csv']}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="🤖 LfGP - Learning from Guided Play",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exemplos:
  python main.py collect-expert --config config/run_defaults.env --out runs_desk
  python main.py train --algorithm lfgp --seed 0 --out runs_desk
  python main.py train --algorithm dac --total-steps 20000 --out runs_desk
  python main.py evaluate --checkpoint runs_desk/runs/lfgp_stack_seed0/checkpoints/policy_150000.ckpt
  python main.py ablate --matrix config/ablation_example.env --out runs_ablation
  python main.py six-state --seeds 20 --out reports
  python main.py plot --out runs_desk
  python main.py train --explain-config
        """
    )
    parser.add_argument(
        "command",
        choices=COMMANDS,
        help="Comando a executar"
    )
    parser.add_argument("--config", help="Ficheiro chave=valor com a RunConfig (suporta include=)")
    parser.add_argument("--out", default="runs", help="Diretório de saída (padrão: runs)")
    parser.add_argument("--verbose", action="store_true", help="Logs em nível DEBUG")
    parser.add_argument("--explain-config", action="store_true",
                        help="Mostra cada chave com o valor, a origem e a fonte do valor por omissão")

    parser.add_argument("--checkpoint", help="Checkpoint a avaliar (evaluate)")
    parser.add_argument("--task", help="Tarefa a avaliar ou desenhar (padrão: principal)")
    parser.add_argument("--matrix", help="Ficheiro da matriz de ablações (ablate)")
    parser.add_argument("--runs", nargs="*", help="metrics.csv ou diretórios de execuções (plot)")
    parser.add_argument("--seeds", type=int, default=20, help="Número de seeds (six-state, padrão: 20)")
    parser.add_argument("--workers", type=int, default=1, help="Threads para as seeds (six-state)")
    parser.add_argument("--max-failure-rate", type=float, default=0.05,
                        help="Taxa máxima de falha do expert (collect-expert, padrão: 0.05)")

    group = parser.add_argument_group("RunConfig", "Uma flag por chave da RunConfig")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        group.add_argument(flag, dest=f.name, default=None, help=f.metadata.get("source", ""))
    return parser


def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s [%(levelname)s] %(message)s',
        datefmt='%H:%M:%S'
    )

    handlers = {
        "collect-expert": cmd_collect_expert,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "ablate": cmd_ablate,
        "six-state": cmd_six_state,
        "plot": cmd_plot,
    }

    try:
        config = resolve_config(args)
        if args.explain_config:
            print("\n".join(explain(config)))
            return 0

        print("\n" + "=" * 60)
        print(f"🤖 LfGP · {args.command}")
        print("=" * 60 + "\n")
        criar_estrutura_diretorios(args.out)
        handlers[args.command](config, args)
        print("\n" + "=" * 60 + "\n")
        return 0

    except LfGPError as e:
        print(e.error_line(), file=sys.stderr)
        return 2
    except Exception as e:
        text = str(e).replace('"', "'")
        print(f'error code=internal type={type(e).__name__} message="{text}"', file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
