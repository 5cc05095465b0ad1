"""
🏋️ Ciclo de treino
LfGP: interage com a intenção escolhida pelo scheduler, guarda no replay partilhado, atualiza os
discriminadores, depois Q, π e α de todas as tarefas, e o scheduler aprendido no fim de cada
episódio. DAC é o mesmo ciclo com um TaskSet de uma só tarefa; BC e o MDP de seis estados
delegam nos módulos próprios.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.adversary.discriminator import DiscriminatorBank, airl_reward, discriminator_loss
from src.buffers.expert import ExpertBuffer, drop_final_pairs, replace_final_pairs, subsample, truncate_pairs
from src.buffers.replay import ReplayBuffer
from src.buffers.sampling import sample_discriminator_batch, sample_policy_batch
from src.buffers.storage import load_expert_buffer
from src.buffers.transition import Transition
from src.cloning.bc import BCConfig, BCTrainer
from src.dashboard import MetricsRecord, MetricsRecorder
from src.envs.block_world import ACT_DIM, OBS_DIM, BlockWorld2D, EnvConfig, load_env_config
from src.envs.tasks import TaskSet, taskset_for_variant
from src.errors import ConfigurationError
from src.harness.config import RunConfig
from src.harness.evaluate import checkpoint_header, evaluate_policy
from src.intentions.critic import QBank, polyak_update
from src.intentions.policy import IntentionPolicy, sample_action
from src.intentions.temperature import TemperatureSet, alpha_update
from src.intentions.updates import OptimSettings, pi_update, q_update
from src.ndgrad.checkpoint import save_checkpoint
from src.ndgrad.optim import adam_step, clip_grad_norm
from src.scheduling.library import load_hc_library
from src.scheduling.scheduler import EpisodeSchedule, SchedulerState
from src.settings import explain
from src.tabular.lfgp import run_ail_tabular, run_lfgp_tabular
from src.utils import CONFIG_FILE, METRICS_FILE, checkpoint_path, expert_paths, expert_root, missing_expert_files

logger = logging.getLogger(__name__)

STREAMS = ("init", "env", "explore", "sampling", "policy", "scheduler", "evaluation")


@dataclass
class TrainResult:
    run_dir: Path
    metrics_path: Path
    records: List[MetricsRecord]
    checkpoints: List[Path] = field(default_factory=list)


@dataclass
class Learner:
    """Todas as peças treináveis de uma execução LfGP/DAC."""

    policy: IntentionPolicy
    qbank: QBank
    temperatures: TemperatureSet
    discriminator: DiscriminatorBank

    @classmethod
    def build(cls, config: RunConfig, n_tasks: int, rng: np.random.Generator) -> "Learner":
        policy = IntentionPolicy.build(OBS_DIM, ACT_DIM, n_tasks, config.trunk_hidden, config.head_hidden, rng)
        qbank = QBank.build(OBS_DIM, ACT_DIM, n_tasks, config.trunk_hidden, config.head_hidden, rng, config.tau)
        temperatures = TemperatureSet.create(n_tasks, ACT_DIM, config.initial_alpha)
        temperatures.target_entropy = config.target_entropy
        discriminator = DiscriminatorBank.build(OBS_DIM, ACT_DIM, n_tasks, config.discriminator_hidden, rng,
                                                reward_form=config.reward_form, gp_target=config.gp_target)
        return cls(policy, qbank, temperatures, discriminator)


def load_expert_data(config: RunConfig, taskset: TaskSet, expert_dir) -> List[ExpertBuffer]:
    """
    Buffers de expert na ordem do TaskSet, já cortados ao tamanho pedido e preparados.

    Tarefa única (DAC, BC) lê o ficheiro `single/` com |TaskSet completo| vezes mais pares.
    """
    multitask = config.multitask
    names = list(taskset.names)
    missing = missing_expert_files(expert_dir, names, multitask)
    if missing:
        raise ConfigurationError(f"ficheiros de expert em falta para: {', '.join(missing)}",
                                 {"expert_dir": str(expert_dir)})
    scale = 1 if multitask else len(taskset_for_variant(config.variant))
    buffers, extras = [], []
    for name in names:
        main_path, extra_path = expert_paths(expert_dir, name, multitask)
        buffer = truncate_pairs(load_expert_buffer(main_path), scale * config.pairs_per_task,
                                scale * config.final_pairs)
        buffers.append(buffer)
        extras.append(load_expert_buffer(extra_path) if config.final_pair_mode == "replace" else None)
    return prepare_expert_buffers(buffers, config, extras)


def prepare_expert_buffers(buffers: Sequence[ExpertBuffer], config: RunConfig,
                           extras: Optional[Sequence[Optional[ExpertBuffer]]] = None) -> List[ExpertBuffer]:
    """Subamostragem e modo dos pares finais (augment | replace | none)."""
    extras = list(extras) if extras is not None else [None] * len(buffers)
    out = []
    for buffer, extra in zip(buffers, extras):
        buffer = subsample(buffer, config.subsample)
        if config.final_pair_mode == "replace":
            if extra is None:
                raise ConfigurationError(f"{buffer.task.value}: modo replace sem ficheiro de pares extra")
            buffer = replace_final_pairs(buffer, extra)
        elif config.final_pair_mode == "none":
            buffer = drop_final_pairs(buffer)
        out.append(buffer)
    return out


def build_scheduler(config: RunConfig, taskset: TaskSet, env_config: EnvConfig) -> SchedulerState:
    """Scheduler da execução; com uma só tarefa colapsa em 'none'."""
    variant = config.scheduler if len(taskset) > 1 else "none"
    n_periods = max(1, env_config.horizon // config.scheduler_period)
    library = load_hc_library(config.hc_library, taskset, n_periods) if variant == "wrs_hc" else ()
    return SchedulerState.from_library(
        variant, taskset, library, p_main=config.p_main, hc_rate=config.hc_rate,
        period=config.scheduler_period, n_periods=n_periods, phi=config.scheduler_phi,
        temperature=config.scheduler_temperature, temperature_decay=config.scheduler_decay,
        temperature_floor=config.scheduler_floor)


class LfGPTrainer:
    """Algoritmo de um processo: um thread de treino, avaliação opcionalmente em threads."""

    def __init__(self, config: RunConfig, env_config: EnvConfig, expert_buffers: Sequence[ExpertBuffer],
                 run_dir, taskset: Optional[TaskSet] = None):
        self.config = config
        self.env_config = env_config
        self.taskset = taskset or config.taskset()
        if len(expert_buffers) != len(self.taskset):
            raise ConfigurationError(f"{len(expert_buffers)} buffers de expert para {len(self.taskset)} tarefas")
        self.expert_buffers = list(expert_buffers)
        self.run_dir = Path(run_dir)
        streams = dict(zip(STREAMS, np.random.SeedSequence(config.seed).spawn(len(STREAMS))))
        self.rngs = {name: np.random.default_rng(seq) for name, seq in streams.items()}
        self.eval_seed = int(streams["evaluation"].generate_state(1)[0])

        n = len(self.taskset)
        self.learner = Learner.build(config, n, self.rngs["init"])
        self.replay = ReplayBuffer(config.replay_capacity, OBS_DIM, ACT_DIM)
        self.scheduler = build_scheduler(config, self.taskset, env_config)
        self.env = BlockWorld2D(env_config, seed=int(streams["env"].generate_state(1)[0]))
        self.expert_proportion = config.effective_expert_proportion
        self.final_pair_bias = config.effective_final_pair_bias
        self.q_optim = OptimSettings(config.lr_q, config.weight_decay, config.max_grad_norm)
        self.pi_optim = OptimSettings(config.lr_policy, config.weight_decay, config.max_grad_norm)
        self.losses: Dict[str, float] = {}
        self.choice_counts = np.zeros(n, dtype=np.int64)
        self.updates = 0

    # ------------------------------------------------------------------ #
    def update(self):
        """Uma atualização de D, depois Q, π, α e a cópia-alvo."""
        cfg, rng, L = self.config, self.rngs["sampling"], self.learner
        policy_batch = self.replay.sample(cfg.batch_size, rng)
        expert_batches = [sample_discriminator_batch(b, cfg.batch_size, self.final_pair_bias, rng, source=k)
                          for k, b in enumerate(self.expert_buffers)]
        L.discriminator.params.zero_grad()
        d_loss = discriminator_loss(L.discriminator, policy_batch, expert_batches, cfg.gp_lambda, rng)
        d_loss.backward()
        clip_grad_norm(L.discriminator.params, cfg.max_grad_norm)
        adam_step(L.discriminator.params, cfg.lr_discriminator, weight_decay=cfg.weight_decay)

        batch, self.expert_proportion = sample_policy_batch(
            self.replay, self.expert_buffers, cfg.batch_size, self.expert_proportion, cfg.expert_decay, rng)
        noise = self.rngs["policy"]
        q_loss = q_update(L.qbank, L.policy, L.temperatures, L.discriminator, batch, cfg.gamma, noise,
                          self.q_optim, cut_on_terminal=not cfg.bootstrap_on_truncation)
        pi_loss, log_prob = pi_update(L.policy, L.qbank, L.temperatures, batch, noise, self.pi_optim)
        alpha_update(L.temperatures, log_prob, cfg.lr_alpha)
        polyak_update(L.qbank)
        self.updates += 1
        self.losses = {
            "loss_discriminator": float(d_loss.value),
            "loss_q": q_loss,
            "loss_pi": pi_loss,
            "alpha_mean": float(np.mean(L.temperatures.alpha)),
            "expert_proportion": self.expert_proportion,
        }

    def act(self, step: int, obs: np.ndarray, schedule: EpisodeSchedule) -> np.ndarray:
        if step <= self.config.initial_exploration:
            return self.rngs["explore"].uniform(-1.0, 1.0, size=ACT_DIM)
        k = schedule.intention_at(self.env.state.step)
        self.choice_counts[k] += 1
        action, _ = sample_action(self.learner.policy, k, obs, True, self.rngs["policy"])
        return action

    def evaluation_record(self, step: int) -> MetricsRecord:
        results = evaluate_policy(self.learner.policy, self.taskset, self.env_config,
                                  self.config.eval_episodes, self.eval_seed, self.config.eval_workers)
        total = int(self.choice_counts.sum())
        scheduler = {
            "scheduler_temperature": self.scheduler.temperature,
            "scheduler_main_fraction": self.choice_counts[0] / total if total else float("nan"),
        }
        self.choice_counts[:] = 0
        return MetricsRecord(step, {k: r.success_rate for k, r in results.items()},
                             {k: r.mean_return for k, r in results.items()}, dict(self.losses), scheduler)

    def save(self, step: int) -> Path:
        header = checkpoint_header(self.config.algorithm, self.taskset, self.env_config, self.learner.policy,
                                   step, self.config.seed)
        return save_checkpoint(checkpoint_path(self.run_dir, step), self.learner.policy.params.values, header)

    def run(self) -> TrainResult:
        cfg = self.config
        recorder = MetricsRecorder(self.run_dir / METRICS_FILE, self.taskset.names)
        checkpoints = []
        logger.info(f"🏋️ {cfg.algorithm} em {cfg.variant}: {len(self.taskset)} tarefas, {cfg.total_steps} passos")

        self.env.reset()
        obs = self.env.observe()
        schedule = EpisodeSchedule(self.scheduler, self.rngs["scheduler"])
        main_rewards: List[float] = []
        guided = cfg.initial_exploration == 0
        learned = self.scheduler.variant == "learned"

        for step in range(1, cfg.total_steps + 1):
            action = self.act(step, obs, schedule)
            state, _, done = self.env.step(action)
            next_obs = self.env.observe()
            terminal = done and not cfg.bootstrap_on_truncation
            self.replay.add(Transition(obs, action, next_obs, terminal))
            if learned:
                main_rewards.append(airl_reward(self.learner.discriminator, 0, obs, action))
            obs = next_obs

            if done:
                if learned and guided:
                    schedule.finish(main_rewards, cfg.gamma)
                self.env.reset()
                obs = self.env.observe()
                schedule = EpisodeSchedule(self.scheduler, self.rngs["scheduler"])
                main_rewards = []
                guided = step >= cfg.initial_exploration

            if len(self.replay) >= cfg.warmup:
                for _ in range(cfg.updates_per_step):
                    self.update()

            if step % cfg.eval_every == 0 or step == cfg.total_steps:
                recorder.record(self.evaluation_record(step))
                checkpoints.append(self.save(step))
        return TrainResult(self.run_dir, recorder.path, recorder.records, checkpoints)


def train_bc(config: RunConfig, env_config: EnvConfig, expert_buffers: Sequence[ExpertBuffer],
             run_dir, taskset: Optional[TaskSet] = None) -> TrainResult:
    """BC de uma tarefa ou multitarefa; avalia na mesma cadência do ciclo AIL (em atualizações)."""
    taskset = taskset or config.taskset()
    run_dir = Path(run_dir)
    streams = dict(zip(STREAMS, np.random.SeedSequence(config.seed).spawn(len(STREAMS))))
    eval_seed = int(streams["evaluation"].generate_state(1)[0])
    policy = IntentionPolicy.build(OBS_DIM, ACT_DIM, len(taskset), config.trunk_hidden, config.head_hidden,
                                   np.random.default_rng(streams["init"]))
    bc_config = BCConfig(multitask=config.multitask, batch_size=config.batch_size, lr=config.bc_lr,
                         weight_decay=config.weight_decay, max_grad_norm=config.max_grad_norm,
                         protocol=config.bc_protocol, split_fraction=config.bc_split,
                         overfit_tolerance=config.bc_tolerance)
    trainer = BCTrainer(policy, expert_buffers, bc_config, np.random.default_rng(streams["sampling"]))
    recorder = MetricsRecorder(run_dir / METRICS_FILE, taskset.names)
    checkpoints: List[Path] = []
    last_loss: Dict[str, float] = {}

    def record(step: int):
        results = evaluate_policy(policy, taskset, env_config, config.eval_episodes, eval_seed, config.eval_workers)
        recorder.record(MetricsRecord(step, {k: r.success_rate for k, r in results.items()},
                                      {k: r.mean_return for k, r in results.items()}, dict(last_loss)))
        header = checkpoint_header(config.algorithm, taskset, env_config, policy, step, config.seed)
        checkpoints.append(save_checkpoint(checkpoint_path(run_dir, step), policy.params.values, header))

    def on_update(step: int):
        if step % config.eval_every == 0 or step == config.total_steps:
            record(step)

    result = trainer.run(config.total_steps, on_update)
    if config.bc_protocol == "early_stopping":
        last_loss["loss_pi"] = result.train_losses[-1] if result.train_losses else float("nan")
        record(result.updates)
    return TrainResult(run_dir, recorder.path, recorder.records, checkpoints)


def train_six_state(config: RunConfig, run_dir) -> TrainResult:
    """LfGP (go-right) ou AIL simples no MDP tabular; um registo com a política gulosa final."""
    run_dir = Path(run_dir)
    if config.algorithm == "lfgp":
        run = run_lfgp_tabular(episodes=config.tabular_episodes, seed=config.seed, epsilon=config.tabular_epsilon,
                               p_main=config.p_main)
    else:
        run = run_ail_tabular(episodes=config.tabular_episodes, seed=config.seed, epsilon=config.tabular_epsilon)
    recorder = MetricsRecorder(run_dir / METRICS_FILE, run.task_names)
    returns = {name: float("nan") for name in run.task_names}
    returns[run.task_names[0]] = run.true_return
    main_fraction = run.choices.count(0) / len(run.choices) if run.choices else float("nan")
    recorder.record(MetricsRecord(config.tabular_episodes, {run.task_names[0]: float(run.optimal)}, returns,
                                  scheduler={"scheduler_main_fraction": main_fraction}))
    logger.info(f"🎲 Seis estados ({config.algorithm}): caminho guloso {' '.join(run.greedy)}")
    return TrainResult(run_dir, recorder.path, recorder.records)


def write_run_config(config: RunConfig, run_dir) -> Path:
    path = Path(run_dir) / CONFIG_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(explain(config)) + "\n", encoding="utf-8")
    return path


def train(config: RunConfig, run_dir, expert_dir=None, env_config: Optional[EnvConfig] = None,
          expert_buffers: Optional[Sequence[ExpertBuffer]] = None) -> TrainResult:
    """
    Treina segundo o algoritmo da config e grava métricas, checkpoints e a config resolvida.

    `expert_buffers` (já preparados) dispensa a leitura dos ficheiros de expert.
    """
    run_dir = Path(run_dir)
    write_run_config(config, run_dir)
    if config.environment == "six_state":
        return train_six_state(config, run_dir)

    if env_config is None:
        env_path = Path(config.env_config)
        if not env_path.exists():
            logger.warning(f"⚠️ {env_path} não encontrado, ambiente com valores por omissão")
        env_config = load_env_config(env_path if env_path.exists() else None, {"variant": config.variant})
    if env_config.variant != config.variant:
        raise ConfigurationError(f"variante do ambiente ({env_config.variant}) difere da execução ({config.variant})")
    taskset = config.taskset()
    if expert_buffers is None:
        # layout <out>/runs/<execução>: os dados de expert ficam em <out>/experts
        expert_dir = expert_dir or expert_root(run_dir.parent.parent, config.expert_dir)
        expert_buffers = load_expert_data(config, taskset, expert_dir)

    if config.algorithm in ("bc", "bc_multitask"):
        return train_bc(config, env_config, expert_buffers, run_dir, taskset)
    return LfGPTrainer(config, env_config, expert_buffers, run_dir, taskset).run()
