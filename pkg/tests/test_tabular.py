import csv
import time

import numpy as np
import pytest

from src.errors import ConfigurationError, DomainError
from src.tabular.lfgp import run_ail_tabular, run_lfgp_tabular, run_seeds
from src.tabular.qlearning import (
    BOOTSTRAPS, GO_RIGHT_SET, MAIN_EXPERT_SET, PAIRS, SCRIPTED_EPISODES, SWEEPS, PerfectDiscriminatorReward, QTable,
    SequentialSweep, TabularBuffer, brute_force_optimal, converge, converge_many, episode_steps, epsilon_greedy,
    greedy_path, legal_sequences, replay_scripted_episodes, run_episode, sequence_return,
)
from src.tabular.report import build_report, write_report


def test_pairs_cover_the_ten_legal_actions():
    assert len(PAIRS) == 10
    assert PAIRS[0] == (1, "a12") and PAIRS[1] == (1, "a15")


def test_perfect_discriminator_reward():
    reward = PerfectDiscriminatorReward(MAIN_EXPERT_SET)
    assert reward(1, "a12") == 1.0 and reward(1, "a15") == -1.0
    assert reward.vector().sum() == 0.0
    with pytest.raises(DomainError):
        PerfectDiscriminatorReward(frozenset({(1, "a23")}))


def test_brute_force_oracle():
    best, sequence = brute_force_optimal()
    assert best == 1.0
    assert sequence == ("a12", "a23", "a34", "a45", "a55")
    assert len(list(legal_sequences())) == 8
    assert sequence_return(("a15", "a55", "a55", "a55", "a55")) == -1.0
    with pytest.raises(DomainError):
        sequence_return(("a23",))


def test_scripted_replay_matches_the_worked_example():
    snapshots = replay_scripted_episodes()
    first, final = snapshots[0], snapshots[-1]
    assert first[(1, "a15")] == pytest.approx(2.7, abs=1e-6)
    assert first[(1, "a12")] == 0.0
    assert first[(5, "a55")] == pytest.approx(3.7, abs=1e-6)
    assert final[(1, "a15")] == pytest.approx(0.49, abs=0.01)
    assert final[(1, "a12")] == pytest.approx(0.13, abs=0.01)
    assert final.greedy(1) == "a15"


GREEDY_A15 = ("a15", "a55", "a55", "a55", "a55")
LOOP_BACK = ("a12", "a23", "a36", "a61", "a15")


def _random_buffer(rng, n_episodes=12):
    buffer = TabularBuffer()
    for _ in range(n_episodes):
        run_episode(QTable(), epsilon_greedy(QTable(), 1.0, rng), buffer)
    return buffer


def _shuffled(buffer, rng):
    out = TabularBuffer()
    for i in rng.permutation(len(buffer.episodes)):
        out.append(buffer.episodes[i])
    return out


def test_expected_sweep_is_order_independent(rng):
    reward = PerfectDiscriminatorReward(MAIN_EXPERT_SET)
    buffer = _random_buffer(rng)
    run_episode(QTable(), ("a12", "a23", "a34", "a45", "a55"), buffer)
    reference = converge(QTable(), buffer, reward, sweep="expected", tolerance=1e-12)
    for _ in range(2):
        other = converge(QTable(), _shuffled(buffer, rng), reward, sweep="expected", tolerance=1e-12)
        np.testing.assert_allclose(other.values, reference.values, atol=1e-8)


def test_sequential_sweep_weights_the_latest_occurrence_more():
    reward = PerfectDiscriminatorReward(MAIN_EXPERT_SET)
    forward, backward = TabularBuffer(), TabularBuffer()
    for episode in (GREEDY_A15, LOOP_BACK):
        run_episode(QTable(), episode, forward)
    for episode in (LOOP_BACK, GREEDY_A15):
        run_episode(QTable(), episode, backward)
    a = converge(QTable(), forward, reward)
    b = converge(QTable(), backward, reward)
    # a15 is terminal in LOOP_BACK: its target is -1 instead of -1 + Q(s5,a55)
    assert a[(1, "a15")] == pytest.approx(0.7526, abs=1e-3)
    assert b[(1, "a15")] == pytest.approx(0.9474, abs=1e-3)
    assert a[(5, "a55")] == pytest.approx(b[(5, "a55")], abs=1e-6)


def test_exact_sequential_fixed_point_matches_iterated_sweeps(rng):
    buffer = _random_buffer(rng)
    rewards = [PerfectDiscriminatorReward(MAIN_EXPERT_SET), PerfectDiscriminatorReward(GO_RIGHT_SET)]
    start = rng.normal(size=len(PAIRS))
    tables = converge_many([QTable(start.copy()), QTable(start.copy())], buffer, rewards)
    for table, reward in zip(tables, rewards):
        iterated = converge(QTable(start.copy()), buffer, reward, tolerance=1e-12)
        np.testing.assert_allclose(table.values, iterated.values, atol=1e-8)

    incremental = SequentialSweep(np.stack([r.vector() for r in rewards]))
    for episode in buffer.episodes:
        incremental.extend(episode_steps(episode))
    values = incremental.fixed_point(np.stack([start, start]))
    np.testing.assert_allclose(values, np.stack([t.values for t in tables]), atol=1e-10)
    unvisited = ~incremental.seen
    np.testing.assert_array_equal(values[0, unvisited], start[unvisited])


def test_converge_many_matches_single_table_sweeps():
    buffer = TabularBuffer()
    run_episode(QTable(), ("a12", "a26", "a61", "a15", "a55"), buffer)
    rewards = [PerfectDiscriminatorReward(MAIN_EXPERT_SET), PerfectDiscriminatorReward(GO_RIGHT_SET)]
    for sweep in SWEEPS:
        for bootstrap in BOOTSTRAPS:
            tables = converge_many([QTable(), QTable()], buffer, rewards, sweep=sweep, bootstrap=bootstrap)
            for table, reward in zip(tables, rewards):
                single = converge(QTable(), buffer, reward, sweep=sweep, bootstrap=bootstrap)
                np.testing.assert_allclose(table.values, single.values, atol=1e-6)


def test_converge_validation():
    reward = PerfectDiscriminatorReward(MAIN_EXPERT_SET)
    with pytest.raises(ConfigurationError):
        converge(QTable(), TabularBuffer(), reward)
    buffer = TabularBuffer()
    run_episode(QTable(), ("a15", "a55", "a55", "a55", "a55"), buffer)
    with pytest.raises(ConfigurationError):
        converge(QTable(), buffer, reward, bootstrap="mean")
    with pytest.raises(DomainError):
        run_episode(QTable(), ("a15",))
    with pytest.raises(DomainError):
        QTable()[(1, "a23")]


def test_greedy_ties_break_towards_the_lowest_action_index():
    assert QTable().greedy(4) == "a45"
    assert greedy_path(QTable()) == ("a12", "a23", "a34", "a45", "a55")


def _after(episodes):
    buffer = TabularBuffer()
    for episode in SCRIPTED_EPISODES + tuple(episodes):
        run_episode(QTable(), episode, buffer)
    return converge(QTable(), buffer, PerfectDiscriminatorReward(MAIN_EXPERT_SET))


def test_exploring_a12_loops_back_once_greedy_a15_episodes_pile_up():
    # right after the scripted episodes a single a12 exploration would continue greedily through a34
    early = _after(())
    assert early[(3, "a36")] < early[(3, "a34")] == 0.0

    late = _after((GREEDY_A15,) * 10)
    assert late.greedy(1) == "a15"
    assert late[(3, "a36")] > late[(3, "a34")] == 0.0
    assert [late.greedy(s) for s in (2, 3, 6)] == ["a23", "a36", "a61"]

    explored = _after((GREEDY_A15,) * 10 + (LOOP_BACK,))
    assert explored.greedy(1) == "a15"
    assert explored[(1, "a15")] - explored[(1, "a12")] > 0.1
    assert sequence_return(greedy_path(explored)) == -1.0


def test_ail_without_exploration_stays_on_the_deceptive_action():
    run = run_ail_tabular(episodes=20, seed=0, epsilon=0.0)
    assert run.greedy == GREEDY_A15 and run.true_return == -1.0
    assert set(run.choices) == {0}


def test_twenty_seeds_ail_against_lfgp_with_go_right():
    start = time.perf_counter()
    ail = run_seeds(run_ail_tabular, range(20), episodes=200, epsilon=0.1)
    lfgp = run_seeds(run_lfgp_tabular, range(20), episodes=200, epsilon=0.1)
    elapsed = time.perf_counter() - start

    ail_optimal = sum(run.optimal for run in ail)
    lfgp_optimal = sum(run.optimal for run in lfgp)
    assert lfgp_optimal >= 18
    assert sum(run.first_action == "a15" for run in ail) >= 3
    assert lfgp_optimal > ail_optimal
    assert all(run.task_names == ("main", "go_right") and {0, 1} <= set(run.choices) for run in lfgp)
    assert elapsed < 10.0


def test_runs_accept_both_sweeps():
    for sweep in SWEEPS:
        run = run_lfgp_tabular(episodes=5, seed=1, epsilon=0.1, sweep=sweep)
        assert len(run.choices) == 5 and len(run.greedy) == 5
    with pytest.raises(ConfigurationError):
        run_ail_tabular(episodes=1, sweep="reverse")


def test_run_seeds_is_independent_of_worker_count():
    serial = run_seeds(run_lfgp_tabular, [3, 4], workers=1, episodes=15, epsilon=0.1)
    threaded = run_seeds(run_lfgp_tabular, [3, 4], workers=2, episodes=15, epsilon=0.1)
    for a, b in zip(serial, threaded):
        assert a.seed == b.seed and a.choices == b.choices
        np.testing.assert_array_equal(a.qtables[0].values, b.qtables[0].values)


def test_lfgp_requires_an_auxiliary_task():
    with pytest.raises(ConfigurationError):
        run_lfgp_tabular(aux_sets={}, episodes=1)


def test_report_files(tmp_path):
    report = build_report(seeds=(0, 1), episodes=10, epsilons=(0.0,))
    paths = write_report(report, tmp_path)
    text = paths["text"].read_text(encoding="utf-8")
    assert "Q(s1,a15)=2.7000" in text
    assert set(report.runs) == {"ail ε=0", "lfgp ε=0"}
    assert report.stuck_rate("ail ε=0") == 1.0
    with open(paths["runs"], newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    with open(paths["qtables"], newline="", encoding="utf-8") as f:
        assert len(list(csv.DictReader(f))) == 2 * 3 * len(PAIRS)
