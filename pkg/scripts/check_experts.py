#!/usr/bin/env python3
"""
🩺 Verificação dos experts programados
Mede a taxa de sucesso de cada expert (com o prefixo de outra subtarefa) em episódios
aleatorizados. A coleta aborta acima de 5% de falhas, por isso convém confirmar antes.

USO:
    python scripts/check_experts.py
    python scripts/check_experts.py --variant insert --episodes 200
"""
import sys
import argparse
import logging
from pathlib import Path

# Adiciona a raiz do repositório ao path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.envs.block_world import load_env_config
from src.harness.collect import DEFAULT_MAX_FAILURE_RATE, expert_success_rate

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s [%(levelname)s] %(message)s',
    datefmt='%H:%M:%S'
)
logger = logging.getLogger(__name__)


def main():
    parser = argparse.ArgumentParser(description="🩺 Taxa de sucesso dos experts programados")
    parser.add_argument("--env-config", default="config/environment.env", help="Ficheiro do ambiente")
    parser.add_argument("--variant", help="Variante (padrão: a do ficheiro)")
    parser.add_argument("--episodes", type=int, default=100, help="Episódios por tarefa")
    parser.add_argument("--seed", type=int, default=0, help="Seed")
    args = parser.parse_args()

    path = Path(args.env_config)
    overrides = {"variant": args.variant} if args.variant else None
    config = load_env_config(path if path.exists() else None, overrides)
    taskset = config.taskset

    print("\n" + "=" * 60)
    print(f"🩺 EXPERTS · {config.variant}")
    print("=" * 60)
    falhas = 0
    for task in taskset.tasks:
        rate = expert_success_rate(config, task, taskset.tasks, args.episodes, args.seed)
        ok = 1.0 - rate <= DEFAULT_MAX_FAILURE_RATE
        falhas += not ok
        print(f"   {'✅' if ok else '❌'} {task.value:<16} {rate:6.1%}")
    print("=" * 60 + "\n")
    return 1 if falhas else 0


if __name__ == "__main__":
    sys.exit(main())
