"""
⚙️ Configuração de uma execução
RunConfig com um valor por omissão rastreável para cada hiperparâmetro (valor de referência ou decisão
de escala de secretária), carregada de config/run_defaults.env, LFGP_* e flags da CLI.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from src.envs.tasks import TaskSet, taskset_for_variant
from src.errors import ConfigurationError
from src.settings import build_dataclass, read_key_values

logger = logging.getLogger(__name__)

ALGORITHMS = ("lfgp", "dac", "bc", "bc_multitask")
ENVIRONMENTS = ("block_world", "six_state")
FINAL_PAIR_MODES = ("augment", "replace", "none")
MULTITASK_ALGORITHMS = ("lfgp", "bc_multitask")


def _src(text: str) -> Dict[str, str]:
    return {"source": text}


@dataclass
class RunConfig:
    # Execução
    algorithm: str = field(default="lfgp", metadata=_src("lfgp | dac | bc | bc_multitask"))
    environment: str = field(default="block_world", metadata=_src("block_world | six_state (tabular)"))
    variant: str = field(default="stack", metadata=_src("variante do mundo de blocos"))
    seed: int = field(default=0, metadata=_src("semente raiz (SeedSequence)"))
    total_steps: int = field(default=150_000, metadata=_src("escala de secretária: 150k passos (escala completa 2M–4M)"))
    eval_every: int = field(default=5_000, metadata=_src("escala de secretária: a cada 5k (escala completa 100k)"))
    eval_episodes: int = field(default=50, metadata=_src("protocolo: 50 episódios aleatorizados"))
    eval_workers: int = field(default=1, metadata=_src("threads para os episódios de avaliação"))
    env_config: str = field(default="config/environment.env", metadata=_src("ficheiro do EnvConfig"))
    expert_dir: str = field(default="", metadata=_src("diretório dos dados de expert (vazio: <out>/experts)"))

    # AIL / SAC
    gamma: float = field(default=0.99, metadata=_src("hiperparâmetros AIL: desconto 0.99"))
    tau: float = field(default=1e-4, metadata=_src("hiperparâmetros AIL: polyak 1e-4"))
    batch_size: int = field(default=256, metadata=_src("hiperparâmetros AIL: batch size 256"))
    lr_policy: float = field(default=1e-5, metadata=_src("hiperparâmetros AIL: learning rate de π 1e-5"))
    lr_q: float = field(default=3e-4, metadata=_src("hiperparâmetros AIL: learning rate de Q 3e-4"))
    lr_discriminator: float = field(default=3e-4, metadata=_src("hiperparâmetros AIL: learning rate de D 3e-4"))
    lr_alpha: float = field(default=3e-4, metadata=_src("hiperparâmetros AIL: learning rate de α 3e-4"))
    weight_decay: float = field(default=1e-2, metadata=_src("hiperparâmetros AIL: weight decay 1e-2"))
    max_grad_norm: float = field(default=10.0, metadata=_src("hiperparâmetros AIL: norma máxima do gradiente 10"))
    gp_lambda: float = field(default=10.0, metadata=_src("hiperparâmetros AIL: penalização do gradiente λ=10"))
    gp_target: str = field(default="logit", metadata=_src("penalização sobre o logit (ou 'probability')"))
    reward_form: str = field(default="airl", metadata=_src("recompensa AIRL = logit"))
    initial_alpha: float = field(default=1e-2, metadata=_src("hiperparâmetros AIL: α inicial 1e-2"))
    target_entropy: float = field(default=-3.0, metadata=_src("entropia alvo −dim(a)"))
    updates_per_step: int = field(default=1, metadata=_src("uma atualização por passo de ambiente"))
    bootstrap_on_truncation: bool = field(default=True, metadata=_src("horizonte infinito: o corte do episódio não é terminal"))

    # Redes
    trunk_hidden: Tuple[int, ...] = field(default=(64, 64), metadata=_src("escala de secretária: tronco 64×64"))
    head_hidden: int = field(default=64, metadata=_src("escala de secretária: cabeças com 64 unidades"))
    discriminator_hidden: Tuple[int, ...] = field(default=(64, 64), metadata=_src("escala de secretária: D 64×64 tanh"))

    # Buffers e dados de expert
    replay_capacity: int = field(default=200_000, metadata=_src("hiperparâmetros AIL: buffer 2M → 200k"))
    warmup: int = field(default=2_500, metadata=_src("hiperparâmetros AIL: buffer warmup 25k → 2.5k"))
    initial_exploration: int = field(default=5_000, metadata=_src("hiperparâmetros AIL: exploração inicial 50k → 5k"))
    expert_sampling: bool = field(default=True, metadata=_src("amostragem de expert em π/Q + viés 0.95"))
    expert_proportion: float = field(default=0.1, metadata=_src("proporção inicial de dados de expert 0.1"))
    expert_decay: float = field(default=0.99999, metadata=_src("decaimento por amostragem 0.99999"))
    final_pair_bias: float = field(default=0.95, metadata=_src("viés para pares (s_T, 0) 0.95"))
    pairs_per_task: int = field(default=1_000, metadata=_src("1k pares por tarefa"))
    final_pairs: int = field(default=200, metadata=_src("200 pares (s_T, 0) extra por tarefa"))
    final_pair_mode: str = field(default="augment", metadata=_src("augment | replace | none"))
    subsample: int = field(default=1, metadata=_src("subamostragem do expert (ablação: 20)"))

    # Scheduler
    scheduler: str = field(default="wrs", metadata=_src("wrs | wrs_hc | learned | none"))
    p_main: float = field(default=0.5, metadata=_src("hiperparâmetros do scheduler: main task rate 0.5"))
    hc_rate: float = field(default=0.5, metadata=_src("trajetórias HC metade das vezes"))
    hc_library: str = field(default="config/hc_trajectories.txt", metadata=_src("biblioteca HC"))
    scheduler_period: int = field(default=10, metadata=_src("ξ = 10 (escala completa 45)"))
    scheduler_phi: float = field(default=0.6, metadata=_src("hiperparâmetros do scheduler: φ 0.6"))
    scheduler_temperature: float = field(default=360.0, metadata=_src("hiperparâmetros do scheduler: temperatura inicial 360"))
    scheduler_decay: float = field(default=0.9995, metadata=_src("hiperparâmetros do scheduler: decaimento 0.9995"))
    scheduler_floor: float = field(default=0.1, metadata=_src("hiperparâmetros do scheduler: temperatura mínima 0.1"))

    # BC
    bc_protocol: str = field(default="fixed_updates", metadata=_src("fixed_updates | early_stopping"))
    bc_lr: float = field(default=1e-5, metadata=_src("hiperparâmetros BC: learning rate 1e-5"))
    bc_tolerance: int = field(default=100, metadata=_src("hiperparâmetros BC: overfit tolerance 100"))
    bc_split: float = field(default=0.7, metadata=_src("divisão treino/validação 70/30"))

    # Tabular
    tabular_episodes: int = field(default=200, metadata=_src("episódios no MDP de seis estados"))
    tabular_epsilon: float = field(default=0.1, metadata=_src("ε-greedy tabular 0.1"))

    def __post_init__(self):
        self.provenance = {}
        self.trunk_hidden = tuple(int(w) for w in self.trunk_hidden)
        self.discriminator_hidden = tuple(int(w) for w in self.discriminator_hidden)
        choices = {"algorithm": ALGORITHMS, "environment": ENVIRONMENTS, "final_pair_mode": FINAL_PAIR_MODES}
        for key, options in choices.items():
            if getattr(self, key) not in options:
                raise ConfigurationError(f"{key}={getattr(self, key)!r} inválido (opções: {', '.join(options)})")
        if self.total_steps < 0 or self.eval_every <= 0 or self.eval_episodes <= 0:
            raise ConfigurationError("total_steps ≥ 0, eval_every > 0 e eval_episodes > 0")
        if self.batch_size <= 0 or self.updates_per_step < 0:
            raise ConfigurationError("batch_size > 0 e updates_per_step ≥ 0")
        if not self.trunk_hidden or not self.discriminator_hidden:
            raise ConfigurationError("as redes precisam de pelo menos uma camada escondida")
        if self.environment == "block_world":
            taskset_for_variant(self.variant)

    @property
    def multitask(self) -> bool:
        return self.algorithm in MULTITASK_ALGORITHMS

    def taskset(self) -> TaskSet:
        full = taskset_for_variant(self.variant)
        return full if self.multitask else full.single()

    @property
    def effective_expert_proportion(self) -> float:
        return self.expert_proportion if self.expert_sampling else 0.0

    @property
    def effective_final_pair_bias(self) -> float:
        return self.final_pair_bias if self.expert_sampling and self.final_pair_mode == "augment" else 0.0

    def replace(self, **changes) -> "RunConfig":
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data.update(changes)
        out = RunConfig(**data)
        out.provenance = dict(self.provenance, **{k: "ablation" for k in changes})
        return out

    def as_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def load_run_config(path=None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    sources = read_key_values(path) if path else {}
    if path:
        logger.info(f"⚙️ Config da execução: {Path(path).name}")
    return build_dataclass(RunConfig, sources, overrides)
