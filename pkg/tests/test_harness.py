import csv
import math

import numpy as np
import pytest

from main import main
from src.buffers.expert import ExpertBuffer, augment_final_pairs
from src.buffers.storage import load_expert_buffer
from src.dashboard import MetricsRecord, MetricsRecorder, metrics_header, metrics_tasks, read_metrics
from src.envs.block_world import ACT_DIM, OBS_DIM, EnvConfig
from src.envs.tasks import TaskId, TaskSet
from src.errors import ConfigurationError
from src.harness.ablate import INDEX_FILE, AblationMatrix, ablate, parse_matrix
from src.harness.collect import collect_expert
from src.harness.config import RunConfig
from src.harness.evaluate import evaluate, evaluate_actor, random_actor, scripted_actor
from src.harness.plots import aggregate, group_runs, plot_runs
from src.harness.train import LfGPTrainer, prepare_expert_buffers, train
from src.utils import CONFIG_FILE, expert_paths, list_checkpoints, run_name


def tiny_config(**changes) -> RunConfig:
    base = dict(total_steps=30, eval_every=15, eval_episodes=2, warmup=10, initial_exploration=5,
                batch_size=8, trunk_hidden=(8,), head_hidden=8, discriminator_hidden=(8,),
                replay_capacity=200, scheduler_period=10)
    base.update(changes)
    return RunConfig(**base)


def tiny_env() -> EnvConfig:
    return EnvConfig(variant="stack", horizon=20)


def synthetic_buffers(taskset: TaskSet, pairs: int = 20, finals: int = 5):
    rng = np.random.default_rng(99)
    out = []
    for task in taskset.tasks:
        buffer = ExpertBuffer(task, rng.uniform(-1, 1, (pairs, OBS_DIM)), rng.uniform(-1, 1, (pairs, ACT_DIM)),
                              rng.uniform(-1, 1, (pairs, OBS_DIM)), np.zeros(pairs, dtype=bool))
        out.append(augment_final_pairs(buffer, finals, final_states=rng.uniform(-1, 1, (finals, OBS_DIM))))
    return out


# ------------------------------------------------------------------ config

def test_run_config_rejects_unknown_choices():
    with pytest.raises(ConfigurationError):
        RunConfig(algorithm="gail")
    with pytest.raises(ConfigurationError):
        RunConfig(final_pair_mode="sometimes")
    with pytest.raises(ConfigurationError):
        RunConfig(variant="tower")
    with pytest.raises(ConfigurationError):
        RunConfig(eval_every=0)


def test_effective_expert_settings():
    assert RunConfig().effective_expert_proportion == 0.1
    assert RunConfig().effective_final_pair_bias == 0.95
    off = RunConfig(expert_sampling=False)
    assert off.effective_expert_proportion == 0.0
    assert off.effective_final_pair_bias == 0.0
    assert RunConfig(final_pair_mode="replace").effective_final_pair_bias == 0.0


def test_tasksets_follow_algorithm():
    assert len(RunConfig(algorithm="lfgp").taskset()) == 6
    assert RunConfig(algorithm="dac").taskset().names == ("stack",)
    assert len(RunConfig(algorithm="bc_multitask", variant="insert").taskset()) == 7


def test_replace_marks_ablation_provenance():
    changed = RunConfig().replace(seed=4, scheduler="none")
    assert changed.seed == 4 and changed.scheduler == "none"
    assert changed.provenance["seed"] == "ablation"


# ------------------------------------------------------------------ dashboard

def test_metrics_round_trip(tmp_path):
    recorder = MetricsRecorder(tmp_path / "metrics.csv", ("stack", "reach"))
    recorder.record(MetricsRecord(10, {"stack": 0.5, "reach": 1.0}, {"stack": 2.0}, {"loss_q": 0.25}))
    recorder.record(MetricsRecord(20, {"stack": 0.75, "reach": 1.0}))
    records = read_metrics(tmp_path / "metrics.csv")
    assert [r.step for r in records] == [10, 20]
    assert records[0].success == {"stack": 0.5, "reach": 1.0}
    assert records[0].losses["loss_q"] == 0.25
    assert math.isnan(records[0].returns["reach"])
    assert math.isnan(records[1].losses["loss_pi"])
    assert metrics_tasks(tmp_path / "metrics.csv") == ["stack", "reach"]


# ------------------------------------------------------------------ training

def test_tiny_lfgp_run_writes_metrics_and_checkpoints(tmp_path):
    config = tiny_config()
    taskset = config.taskset()
    result = train(config, tmp_path / "run", env_config=tiny_env(), expert_buffers=synthetic_buffers(taskset))

    assert (tmp_path / "run" / CONFIG_FILE).exists()
    with open(result.metrics_path, newline="", encoding="utf-8") as f:
        header = next(csv.reader(f))
    assert header == metrics_header(taskset.names)
    assert [r.step for r in result.records] == [15, 30]
    assert all(0.0 <= r.success["stack"] <= 1.0 for r in result.records)
    assert np.isfinite(result.records[-1].losses["loss_q"])
    assert result.records[-1].losses["expert_proportion"] < 0.1
    assert list_checkpoints(tmp_path / "run") == result.checkpoints


def test_training_is_bit_identical_for_a_seed(tmp_path):
    config = tiny_config(seed=5)
    buffers = synthetic_buffers(config.taskset())
    first = train(config, tmp_path / "a", env_config=tiny_env(), expert_buffers=buffers)
    second = train(config, tmp_path / "b", env_config=tiny_env(), expert_buffers=buffers)
    assert first.metrics_path.read_bytes() == second.metrics_path.read_bytes()


def test_checkpoint_can_be_evaluated(tmp_path):
    config = tiny_config(total_steps=15)
    result = train(config, tmp_path / "run", env_config=tiny_env(),
                   expert_buffers=synthetic_buffers(config.taskset()))
    evaluation = evaluate(result.checkpoints[-1], "reach", episodes=2, seed=1)
    assert evaluation.task == "reach"
    assert len(evaluation.successes) == 2
    with pytest.raises(ConfigurationError):
        evaluate(result.checkpoints[-1], "insert", episodes=1)


def test_learned_scheduler_cools_after_guided_episodes(tmp_path):
    config = tiny_config(scheduler="learned", total_steps=45)
    result = train(config, tmp_path / "run", env_config=tiny_env(),
                   expert_buffers=synthetic_buffers(config.taskset()))
    temperatures = [r.scheduler["scheduler_temperature"] for r in result.records]
    assert temperatures[0] == 360.0
    assert temperatures[-1] == pytest.approx(360.0 * 0.9995)


def test_dac_trains_a_single_intention(tmp_path):
    config = tiny_config(algorithm="dac", total_steps=15)
    result = train(config, tmp_path / "dac", env_config=tiny_env(),
                   expert_buffers=synthetic_buffers(config.taskset()))
    assert list(result.records[-1].success) == ["stack"]


def test_reduced_desk_comparison_keeps_lfgp_at_or_above_dac(tmp_path):
    metrics = []
    for algorithm in ("lfgp", "dac"):
        for seed in (0, 1):
            config = tiny_config(algorithm=algorithm, seed=seed)
            result = train(config, tmp_path / run_name(algorithm, "stack", seed), env_config=tiny_env(),
                           expert_buffers=synthetic_buffers(config.taskset()))
            metrics.append(result.metrics_path)
    groups = group_runs(metrics)
    assert set(groups) == {"lfgp_stack", "dac_stack"}
    lfgp_steps, lfgp, _ = aggregate(groups["lfgp_stack"])
    dac_steps, dac, _ = aggregate(groups["dac_stack"])
    assert lfgp_steps.tolist() == dac_steps.tolist() == [15, 30]
    assert lfgp[-1] >= dac[-1]


def test_bc_fixed_updates_records_on_cadence(tmp_path):
    config = tiny_config(algorithm="bc", total_steps=10, eval_every=5)
    result = train(config, tmp_path / "bc", env_config=tiny_env(),
                   expert_buffers=synthetic_buffers(config.taskset()))
    assert [r.step for r in result.records] == [5, 10]
    assert len(result.checkpoints) == 2


def test_buffer_count_must_match_taskset(tmp_path):
    config = tiny_config()
    with pytest.raises(ConfigurationError):
        LfGPTrainer(config, tiny_env(), synthetic_buffers(TaskSet(TaskId.STACK)), tmp_path)


def test_missing_expert_files_raise(tmp_path):
    with pytest.raises(ConfigurationError):
        train(tiny_config(), tmp_path / "runs" / "x", expert_dir=tmp_path / "nothing", env_config=tiny_env())


def test_env_variant_must_match_run(tmp_path):
    with pytest.raises(ConfigurationError):
        train(tiny_config(variant="bring"), tmp_path / "run", env_config=tiny_env(),
              expert_buffers=synthetic_buffers(TaskSet(TaskId.BRING)))


def test_prepare_expert_buffers_drops_final_pairs():
    config = tiny_config(final_pair_mode="none")
    prepared = prepare_expert_buffers(synthetic_buffers(TaskSet(TaskId.STACK)), config)
    assert prepared[0].final_count == 0
    assert len(prepared[0]) == 20


def test_replace_mode_needs_extra_pairs():
    config = tiny_config(final_pair_mode="replace")
    with pytest.raises(ConfigurationError):
        prepare_expert_buffers(synthetic_buffers(TaskSet(TaskId.STACK)), config)


def test_six_state_run(tmp_path):
    config = RunConfig(environment="six_state", tabular_episodes=200, tabular_epsilon=0.1, seed=0)
    result = train(config, tmp_path / "six")
    record = result.records[0]
    assert record.step == 200
    assert record.success["main"] in (0.0, 1.0)


# ------------------------------------------------------------------ collection and evaluation

def test_collect_expert_writes_exact_counts(tmp_path):
    taskset = TaskSet(TaskId.REACH)
    summary = collect_expert(EnvConfig(), taskset, pairs_per_task=30, final_pairs=3, seed=0, out_dir=tmp_path)
    main_path, extra_path = expert_paths(tmp_path, "reach", True)
    main_buffer = load_expert_buffer(main_path)
    assert len(main_buffer) == 33
    assert main_buffer.final_count == 3
    assert np.all(main_buffer.act[-3:] == 0.0)
    assert len(load_expert_buffer(extra_path)) == 3
    assert set(summary.paths) == {"reach", "single:reach"}


def test_empty_collection_writes_empty_files(tmp_path):
    collect_expert(EnvConfig(), TaskSet(TaskId.REACH), pairs_per_task=0, final_pairs=0, seed=0, out_dir=tmp_path)
    assert len(load_expert_buffer(expert_paths(tmp_path, "reach", False)[0])) == 0


def test_collect_rejects_negative_counts(tmp_path):
    with pytest.raises(ConfigurationError):
        collect_expert(EnvConfig(), TaskSet(TaskId.REACH), -1, 0, 0, tmp_path)


def test_evaluation_does_not_depend_on_workers():
    config = EnvConfig(horizon=10)
    serial = evaluate_actor(random_actor(), config, "reach", episodes=4, seed=3, workers=1)
    threaded = evaluate_actor(random_actor(), config, "reach", episodes=4, seed=3, workers=2)
    assert serial.successes == threaded.successes
    assert serial.returns == threaded.returns


def test_scripted_reach_actor_mostly_succeeds():
    config = EnvConfig()
    result = evaluate_actor(scripted_actor("reach", config), config, "reach", episodes=5, seed=0)
    assert result.success_rate >= 0.6


# ------------------------------------------------------------------ ablations and plots

def test_parse_matrix_coerces_axis_values():
    matrix = parse_matrix({"expert_sampling": ("on,off", "file"), "pairs_per_task": ("100,1000", "file"),
                           "seeds": ("0,1", "file"), "workers": ("3", "file")})
    assert matrix.axes == {"expert_sampling": (True, False), "pairs_per_task": (100, 1000)}
    assert matrix.seeds == (0, 1)
    assert matrix.workers == 3
    with pytest.raises(ConfigurationError):
        parse_matrix({"lr_q": ("1e-3", "file")})


def test_matrix_cells_cross_axes_and_seeds():
    cells = AblationMatrix({"scheduler": ("wrs", "none")}, seeds=(0, 1)).cells(RunConfig())
    assert [name for name, _ in cells] == ["scheduler=wrs_seed0", "scheduler=wrs_seed1",
                                           "scheduler=none_seed0", "scheduler=none_seed1"]
    assert cells[3][1].scheduler == "none" and cells[3][1].seed == 1
    base = AblationMatrix().cells(RunConfig(seed=7))
    assert [name for name, _ in base] == ["lfgp_stack_seed7"]


def test_empty_axis_is_rejected():
    with pytest.raises(ConfigurationError):
        AblationMatrix({"scheduler": ()})
    with pytest.raises(ConfigurationError):
        AblationMatrix({"gamma": (0.9,)})


def test_ablate_six_state_cells(tmp_path):
    base = RunConfig(environment="six_state", tabular_episodes=20)
    metrics = ablate(base, AblationMatrix({"algorithm": ("lfgp", "dac")}, seeds=(0,)), tmp_path)
    assert list(metrics) == ["algorithm=lfgp_seed0", "algorithm=dac_seed0"]
    assert all(path.exists() for path in metrics.values())
    with open(tmp_path / INDEX_FILE, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert [row["algorithm"] for row in rows] == ["lfgp", "dac"]


def _write_run(folder, values):
    recorder = MetricsRecorder(folder / "metrics.csv", ("stack",))
    for step, value in values:
        recorder.record(MetricsRecord(step, {"stack": value}))


def test_plot_runs_groups_seeds(tmp_path):
    runs = tmp_path / "runs"
    _write_run(runs / "lfgp_stack_seed0", [(10, 0.2), (20, 0.6)])
    _write_run(runs / "lfgp_stack_seed1", [(10, 0.4), (20, 0.8)])
    _write_run(runs / "dac_stack_seed0", [(10, 0.0)])

    groups = group_runs(sorted(runs.rglob("metrics.csv")))
    assert set(groups) == {"lfgp_stack", "dac_stack"}
    steps, mean, std = aggregate(groups["lfgp_stack"])
    assert steps.tolist() == [10, 20]
    np.testing.assert_allclose(mean, [0.3, 0.7])
    np.testing.assert_allclose(std, [0.1, 0.1])

    paths = plot_runs([runs], tmp_path / "plots")
    assert "<svg" in paths["svg"].read_text(encoding="utf-8")
    with open(paths["csv"], newline="", encoding="utf-8") as f:
        assert len(list(csv.DictReader(f))) == 5


def test_plot_runs_without_metrics(tmp_path):
    with pytest.raises(ConfigurationError):
        plot_runs([tmp_path], tmp_path / "plots")


# ------------------------------------------------------------------ command line

def test_cli_configuration_error_exit_code(tmp_path, capsys):
    code = main(["train", "--algorithm", "gail", "--out", str(tmp_path)])
    assert code == 2
    assert capsys.readouterr().err.startswith("error code=config type=ConfigurationError")


def test_cli_explain_config(capsys):
    assert main(["train", "--explain-config", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "seed = 3  [flag]" in out
    assert "gamma = 0.99  [default]" in out


def test_cli_six_state_report(tmp_path):
    assert main(["six-state", "--seeds", "2", "--tabular-episodes", "20", "--out", str(tmp_path)]) == 0
    assert any(tmp_path.iterdir())
