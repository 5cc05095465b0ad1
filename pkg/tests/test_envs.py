import numpy as np
import pytest

from src.envs.block_world import (
    ACT_DIM, BLUE, NO_BLOCK, OBS_DIM, BlockWorld2D, EnvConfig, in_bounds, load_env_config, success,
)
from src.envs.experts import PrefixedExpert, scripted_expert
from src.envs.six_state import SixStateMDP
from src.envs.tasks import TaskId, TaskSet, taskset_for_variant
from src.errors import ConfigurationError, DomainError
from src.harness.collect import expert_success_rate, run_expert_episode


def test_task_ids_parse_loosely():
    assert TaskId.parse("Open-Gripper") is TaskId.OPEN_GRIPPER
    assert TaskId.parse(TaskId.STACK) is TaskId.STACK
    with pytest.raises(ConfigurationError):
        TaskId.parse("juggle")


def test_taskset_orders_main_first():
    taskset = taskset_for_variant("insert")
    assert taskset.names[:2] == ("insert", "bring")
    assert len(taskset) == 7
    assert taskset.index("bring") == 1
    assert taskset.single().names == ("insert",)
    assert "reach" in taskset
    with pytest.raises(ConfigurationError):
        taskset.single().index("reach")
    with pytest.raises(ConfigurationError):
        TaskSet("stack", ("reach", "reach"))
    with pytest.raises(ConfigurationError):
        taskset_for_variant("pour")


def test_six_state_optimal_and_deceptive_paths():
    mdp = SixStateMDP()
    total = 0.0
    for action in ("a12", "a23", "a34", "a45", "a55"):
        _, reward, done = mdp.step(action)
        total += reward
    assert total == 1.0 and done

    mdp.reset()
    total = 0.0
    for action in ("a15", "a55", "a55", "a55", "a55"):
        _, reward, _ = mdp.step(action)
        total += reward
    assert total == -1.0


def test_six_state_rejects_illegal_actions_and_steps_after_done():
    mdp = SixStateMDP()
    with pytest.raises(DomainError):
        mdp.step("a23")
    for action in ("a15", "a55", "a55", "a55", "a55"):
        mdp.step(action)
    with pytest.raises(DomainError):
        mdp.step("a55")


def test_reset_is_seeded_and_respects_layout():
    config = EnvConfig()
    env = BlockWorld2D(config)
    first = env.reset(7).copy()
    second = env.reset(7)
    np.testing.assert_array_equal(first.blocks, second.blocks)
    np.testing.assert_array_equal(first.agent, second.agent)
    for seed in range(20):
        state = env.reset(seed)
        assert abs(state.blocks[0, 0] - state.blocks[1, 0]) >= config.min_block_gap
        assert state.gripper == 1.0 and state.held == NO_BLOCK
        assert in_bounds(state, config)
    assert env.observe().shape == (OBS_DIM,)


def test_unstack_variant_starts_with_green_on_blue():
    env = BlockWorld2D(EnvConfig(variant="unstack-stack"))
    state = env.reset(3)
    assert state.green[0] == state.blue[0]
    assert state.green[1] == pytest.approx(state.blue[1] + 0.04)


def test_random_actions_stay_in_bounds_and_truncate_at_horizon(rng):
    config = EnvConfig(horizon=25)
    env = BlockWorld2D(config, seed=0)
    env.reset()
    done = False
    steps = 0
    while not done:
        state, _, done = env.step(rng.uniform(-3.0, 3.0, size=ACT_DIM))
        steps += 1
        assert in_bounds(state, config)
    assert steps == 25
    with pytest.raises(ConfigurationError):
        env.step(np.zeros(2))


def test_closing_on_a_block_grasps_and_carries_it():
    env = BlockWorld2D(EnvConfig())
    state = env.reset(1)
    state.agent = state.blue.copy()
    env.step([0.0, 0.0, -1.0])
    state, _, _ = env.step([0.0, 0.0, -1.0])
    assert state.gripper == 0.0 and state.held == BLUE
    start = state.blue.copy()
    state, _, _ = env.step([0.0, 1.0, -1.0])
    assert state.blue[1] == pytest.approx(start[1] + 0.02)
    assert success("move_object", state, env.config)
    assert np.linalg.norm(state.velocities[BLUE]) == pytest.approx(0.4)

    state, _, _ = env.step([0.0, 0.0, 1.0])
    assert state.held == NO_BLOCK
    before = state.blue.copy()
    state, _, _ = env.step([1.0, 1.0, 1.0])
    np.testing.assert_array_equal(state.blue, before)


def test_success_predicates_on_constructed_states():
    config = EnvConfig()
    env = BlockWorld2D(config)
    state = env.reset(5)
    state.blocks[:] = [[0.10, 0.06], [0.10, 0.02]]
    state.agent = np.array([0.10, 0.12])
    assert success("stack", state, config)
    assert not success("reach", state, config)
    assert success("open_gripper", state, config)
    state.held = BLUE
    assert not success("stack", state, config)

    state.held = NO_BLOCK
    state.blocks[:] = [[config.bring_zone_x + 0.01, 0.02], [0.05, 0.02]]
    assert success("bring", state, config)
    assert not success("insert", state, config)


def test_env_config_file_and_unknown_keys(tmp_path):
    path = tmp_path / "env.env"
    path.write_text("# mundo\nvariant=bring\nhorizon=40\n", encoding="utf-8")
    config = load_env_config(path)
    assert config.variant == "bring" and config.horizon == 40
    assert config.taskset.main is TaskId.BRING
    assert config.hold_for("move_object") == config.move_hold_steps

    path.write_text("gravity=9.8\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_env_config(path)


def test_scripted_experts_stay_within_action_bounds():
    config = EnvConfig()
    env = BlockWorld2D(config)
    for task in TaskId:
        state = env.reset(11)
        action = scripted_expert(task, state, config)
        assert action.shape == (ACT_DIM,)
        assert np.all(np.abs(action) <= 1.0)


def test_reach_and_lift_experts_succeed():
    config = EnvConfig()
    env = BlockWorld2D(config)
    rng = np.random.default_rng(0)
    for task in (TaskId.REACH, TaskId.LIFT):
        expert = PrefixedExpert.for_task(task, config, config.taskset.tasks)
        for seed in range(5):
            transitions, ok = run_expert_episode(env, expert, seed, rng)
            assert ok
            assert transitions[-1].episode_end
            assert not any(t.episode_end or t.terminal for t in transitions[:-1])
            assert transitions[-1].terminal == (len(transitions) >= config.horizon)


def test_stack_expert_success_rate():
    config = EnvConfig()
    assert expert_success_rate(config, "stack", config.taskset.tasks, episodes=10, seed=0) >= 0.9


def test_prefixed_experts_draw_a_prefix_task():
    config = EnvConfig()
    tasks = config.taskset.tasks
    opener = PrefixedExpert.for_task("open_gripper", config, tasks)
    assert TaskId.OPEN_GRIPPER not in opener.prefix_tasks
    assert opener.episode_plan(np.random.default_rng(0)) in tasks
    closer = PrefixedExpert.for_task("close_gripper", config, tasks)
    assert closer.prefix_tasks == (TaskId.LIFT,)
    assert PrefixedExpert.for_task("stack", config, tasks).episode_plan(np.random.default_rng(0)) is None
