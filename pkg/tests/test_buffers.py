import numpy as np
import pytest
from scipy import stats

from src.buffers.expert import (
    ExpertBuffer, augment_final_pairs, drop_final_pairs, merge, replace_final_pairs, subsample, truncate_pairs,
)
from src.buffers.replay import ReplayBuffer
from src.buffers.sampling import sample_discriminator_batch, sample_policy_batch
from src.buffers.storage import load_expert_buffer, save_expert_buffer
from src.buffers.transition import REPLAY_SOURCE, Transition
from src.errors import ConfigurationError, WarmupError

OBS, ACT = 4, 2


def make_transitions(episodes, length, offset=0.0):
    """Episódios sintéticos: obs[0] = índice global, a última transição de cada episódio fecha o episódio."""
    out = []
    for e in range(episodes):
        for t in range(length):
            i = offset + e * length + t
            end = t == length - 1
            out.append(Transition(np.full(OBS, i), np.full(ACT, 0.5), np.full(OBS, i + 1), terminal=end,
                                  episode_end=end))
    return out


def make_buffer(task="stack", episodes=3, length=5, finals=0):
    buffer = ExpertBuffer.from_transitions(task, make_transitions(episodes, length), OBS, ACT)
    return augment_final_pairs(buffer, finals, rng=np.random.default_rng(0)) if finals else buffer


def test_replay_ring_keeps_the_newest_transitions(rng):
    replay = ReplayBuffer(3, OBS, ACT)
    with pytest.raises(WarmupError):
        replay.sample(4, rng)
    for t in make_transitions(1, 5):
        replay.add(t)
    assert len(replay) == 3
    view = replay.snapshot()
    np.testing.assert_array_equal(view.obs[:, 0], [2.0, 3.0, 4.0])
    assert view.terminal.tolist() == [False, False, True]
    with pytest.raises(ValueError):
        view.obs[0, 0] = 1.0
    batch = replay.sample(16, rng)
    assert len(batch) == 16
    assert np.all(batch.source == REPLAY_SOURCE)
    assert set(batch.obs[:, 0]) <= {2.0, 3.0, 4.0}


def test_expert_buffer_is_immutable_and_validated():
    buffer = make_buffer()
    assert len(buffer) == 15 and buffer.final_count == 0
    with pytest.raises(ValueError):
        buffer.obs[0, 0] = 9.0
    with pytest.raises(ConfigurationError):
        ExpertBuffer("stack", np.zeros((2, OBS)), np.zeros((3, ACT)), np.zeros((2, OBS)), [False, True])
    with pytest.raises(ConfigurationError):
        ExpertBuffer("stack", np.zeros((1, OBS)), np.ones((1, ACT)), np.zeros((1, OBS)), [True], final_count=1)


def test_augment_final_pairs_uses_episode_end_states():
    buffer = make_buffer(finals=4)
    assert buffer.final_count == 4 and buffer.regular_count == 15
    finals = buffer.final_pair_indices
    assert np.all(buffer.act[finals] == 0.0)
    assert np.all(buffer.episode_end[finals])
    np.testing.assert_array_equal(buffer.obs[finals], buffer.next_obs[finals])
    assert set(buffer.obs[finals, 0]) <= {5.0, 10.0, 15.0}


def test_expert_batches_keep_bootstrapping_across_episode_ends():
    buffer = make_buffer(episodes=3, length=5, finals=2)
    assert buffer.episode_end.tolist()[:15] == [t % 5 == 4 for t in range(15)]
    batch = buffer.select(np.arange(len(buffer)), source=1)
    assert not np.any(batch.terminal)
    assert buffer.trajectories() == [(0, 5), (5, 10), (10, 15)]


def test_augment_requires_a_finished_episode():
    partial = ExpertBuffer.from_transitions("reach", make_transitions(1, 3)[:2], OBS, ACT)
    with pytest.raises(ConfigurationError):
        augment_final_pairs(partial, 2)


def test_subsample_keeps_every_stride_within_each_trajectory():
    buffer = make_buffer(episodes=2, length=5, finals=3)
    thinned = subsample(buffer, 2)
    np.testing.assert_array_equal(thinned.obs[:thinned.regular_count, 0], [0, 2, 4, 5, 7, 9])
    assert thinned.final_count == 3
    assert subsample(buffer, 1) is buffer
    with pytest.raises(ConfigurationError):
        subsample(buffer, 0)


def test_stride_twenty_keeps_five_pairs_of_a_hundred_step_trajectory():
    thinned = subsample(make_buffer(episodes=1, length=100), 20)
    assert thinned.regular_count == 5
    np.testing.assert_array_equal(thinned.obs[:, 0], [0, 20, 40, 60, 80])


def test_replace_and_drop_final_pairs():
    buffer = make_buffer(finals=3)
    extra = ExpertBuffer.from_transitions("stack", make_transitions(1, 5, offset=100.0), OBS, ACT)
    replaced = replace_final_pairs(buffer, extra)
    assert replaced.final_count == 0 and len(replaced) == 18
    np.testing.assert_array_equal(replaced.obs[15:, 0], [100.0, 101.0, 102.0])
    dropped = drop_final_pairs(buffer)
    assert len(dropped) == 15 and dropped.final_count == 0
    with pytest.raises(ConfigurationError):
        replace_final_pairs(make_buffer(finals=3), extra._with(np.arange(2)))


def test_truncate_pairs_takes_prefixes():
    buffer = make_buffer(finals=4)
    cut = truncate_pairs(buffer, 7, 2)
    assert cut.regular_count == 7 and cut.final_count == 2
    np.testing.assert_array_equal(cut.obs[:7, 0], np.arange(7))
    assert truncate_pairs(buffer, 15, 4) is buffer
    with pytest.raises(ConfigurationError):
        truncate_pairs(buffer, 16, 0)


def test_merge_keeps_final_pairs_at_the_end():
    merged = merge([make_buffer(finals=2), make_buffer(finals=1)], "stack")
    assert len(merged) == 33 and merged.final_count == 3
    assert np.all(merged.act[-3:] == 0.0)
    assert np.all(merged.act[:30] == 0.5)


def test_expert_file_round_trip_and_validation(tmp_path):
    buffer = make_buffer(finals=2)
    path = save_expert_buffer(buffer, tmp_path / "experts" / "stack.bin")
    loaded = load_expert_buffer(path)
    assert loaded.task == buffer.task
    assert loaded.final_count == 2
    np.testing.assert_allclose(loaded.obs, buffer.obs)
    np.testing.assert_array_equal(loaded.episode_end, buffer.episode_end)

    empty = save_expert_buffer(ExpertBuffer.empty("reach", OBS, ACT), tmp_path / "reach.bin")
    assert len(load_expert_buffer(empty)) == 0

    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(ConfigurationError):
        load_expert_buffer(path)
    with pytest.raises(ConfigurationError):
        load_expert_buffer(tmp_path / "missing.bin")


def test_policy_batch_mixes_replay_and_expert_at_the_requested_rate():
    replay = ReplayBuffer(100, OBS, ACT)
    for t in make_transitions(4, 5, offset=1000.0):
        replay.add(t)
    buffers = [make_buffer("stack"), make_buffer("reach")]
    rng = np.random.default_rng(42)

    expert_entries, proportion = 0, 0.1
    for _ in range(200):
        batch, next_proportion = sample_policy_batch(replay, buffers, 256, 0.1, 0.99999, rng)
        assert len(batch) == 256
        expert_entries += int(np.count_nonzero(batch.source != REPLAY_SOURCE))
        assert set(np.unique(batch.source)) <= {REPLAY_SOURCE, 0, 1}
    assert next_proportion == pytest.approx(proportion * 0.99999)
    assert stats.binomtest(expert_entries, 200 * 256, 0.1).pvalue > 1e-3

    batch, _ = sample_policy_batch(replay, buffers, 64, 0.0, 0.99999, rng)
    assert batch.expert_fraction == 0.0
    with pytest.raises(WarmupError):
        sample_policy_batch(ReplayBuffer(4, OBS, ACT), buffers, 8, 0.1, 1.0, rng)


def test_discriminator_batch_bias_towards_final_pairs():
    buffer = make_buffer(finals=5)
    rng = np.random.default_rng(7)
    n_final = 0
    for _ in range(100):
        batch = sample_discriminator_batch(buffer, 256, 0.95, rng, source=2)
        assert np.all(batch.source == 2)
        n_final += int(np.count_nonzero(np.all(batch.act == 0.0, axis=1)))
    assert stats.binomtest(n_final, 100 * 256, 0.95).pvalue > 1e-3

    uniform = sample_discriminator_batch(buffer, 4000, 0.0, rng)
    share = np.mean(np.all(uniform.act == 0.0, axis=1))
    assert share == pytest.approx(5 / 20, abs=0.05)

    with pytest.raises(ConfigurationError):
        sample_discriminator_batch(make_buffer(), 8, 0.95, rng)
    with pytest.raises(ConfigurationError):
        sample_discriminator_batch(ExpertBuffer.empty("stack", OBS, ACT), 8, 0.0, rng)
