import numpy as np
import pytest

from src.buffers.expert import ExpertBuffer
from src.cloning.bc import BCConfig, BCTrainer, bc_loss, bc_update, clip_targets, early_stop_check
from src.errors import ConfigurationError, UsageError
from src.intentions.policy import IntentionPolicy
from src.intentions.updates import OptimSettings

OBS, ACT = 4, 2


def constant_buffer(task, value, n, rng):
    return ExpertBuffer(task, rng.normal(size=(n, OBS)), np.full((n, ACT), value), rng.normal(size=(n, OBS)),
                        np.zeros(n, dtype=bool))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        BCConfig(protocol="dagger")
    with pytest.raises(ConfigurationError):
        BCConfig(split_fraction=1.0)
    with pytest.raises(ConfigurationError):
        BCConfig(overfit_tolerance=0)


def test_early_stop_check_counts_epochs_since_first_best():
    assert early_stop_check([3.0, 2.0, 1.0, 1.5, 1.6], 2) == (True, 2)
    assert early_stop_check([3.0, 1.0, 1.0, 2.0], 3) == (False, 1)
    with pytest.raises(UsageError):
        early_stop_check([], 1)


def test_targets_are_kept_inside_the_open_interval():
    clipped = clip_targets(np.array([-1.0, 0.3, 1.0]))
    assert np.all(np.abs(clipped) < 1.0)
    assert clipped[1] == 0.3


def test_bc_update_reports_loss_before_the_step(rng):
    policy = IntentionPolicy.build(OBS, ACT, 2, (16,), 16, rng)
    batches = [constant_buffer("reach", 0.4, 16, rng).select(np.arange(16), source=0),
               constant_buffer("lift", -0.4, 16, rng).select(np.arange(16), source=1)]
    before = bc_loss(policy, batches)
    assert bc_update(policy, batches, OptimSettings(1e-2, 0.0, 10.0)) == pytest.approx(before)
    for _ in range(20):
        bc_update(policy, batches, OptimSettings(1e-2, 0.0, 10.0))
    assert bc_loss(policy, batches) < before


def test_fixed_updates_fit_one_constant_per_head(rng):
    policy = IntentionPolicy.build(OBS, ACT, 2, (16, 16), 16, rng)
    buffers = [constant_buffer("stack", 0.5, 64, rng), constant_buffer("reach", -0.5, 64, rng)]
    config = BCConfig(batch_size=32, lr=1e-2, weight_decay=0.0)
    calls = []
    trainer = BCTrainer(policy, buffers, config, rng)
    before = bc_loss(policy, [b.select(np.arange(64)) for b in buffers])
    result = trainer.run(300, calls.append)

    assert result.updates == 300 and len(result.train_losses) == 300
    assert calls == list(range(1, 301))
    after = bc_loss(policy, [b.select(np.arange(64)) for b in buffers])
    assert after < 0.1 * before
    mean, _ = policy.distribution(buffers[0].obs[:8])
    np.testing.assert_allclose(np.tanh(mean[0]), 0.5, atol=0.1)
    np.testing.assert_allclose(np.tanh(mean[1]), -0.5, atol=0.1)


def test_early_stopping_records_validation_history(rng):
    policy = IntentionPolicy.build(OBS, ACT, 1, (8,), 8, rng)
    buffers = [constant_buffer("stack", 0.2, 40, rng)]
    config = BCConfig(multitask=False, batch_size=16, lr=1e-2, weight_decay=0.0, protocol="early_stopping",
                      overfit_tolerance=3, max_epochs=25)
    result = BCTrainer(policy, buffers, config, rng).run(0)
    assert 1 <= len(result.validation_losses) <= 25
    assert result.best_epoch == int(np.argmin(result.validation_losses))
    assert result.updates == len(result.train_losses) == len(result.validation_losses) * 2


def test_split_is_per_pair_and_disjoint(rng):
    policy = IntentionPolicy.build(OBS, ACT, 1, (8,), 8, rng)
    trainer = BCTrainer(policy, [constant_buffer("stack", 0.2, 10, rng)], BCConfig(), rng)
    train, validation = trainer.split()
    assert train[0].size == 7 and validation[0].size == 3
    assert not set(train[0]) & set(validation[0])


def test_trainer_rejects_mismatched_or_empty_buffers(rng):
    policy = IntentionPolicy.build(OBS, ACT, 2, (8,), 8, rng)
    with pytest.raises(ConfigurationError):
        BCTrainer(policy, [constant_buffer("stack", 0.2, 10, rng)], BCConfig(), rng)
    empty = ExpertBuffer.empty("reach", OBS, ACT)
    with pytest.raises(ConfigurationError):
        BCTrainer(policy, [constant_buffer("stack", 0.2, 10, rng), empty], BCConfig(), rng)


def test_single_task_config_needs_one_head_and_one_buffer(rng):
    buffers = [constant_buffer("stack", 0.2, 10, rng), constant_buffer("reach", 0.1, 10, rng)]
    two_heads = IntentionPolicy.build(OBS, ACT, 2, (8,), 8, rng)
    with pytest.raises(ConfigurationError):
        BCTrainer(two_heads, buffers, BCConfig(multitask=False), rng)
    BCTrainer(two_heads, buffers, BCConfig(multitask=True), rng)


@pytest.mark.parametrize("protocol", ["fixed_updates", "early_stopping"])
def test_multitask_bc_with_one_task_reduces_to_single_task_bc(protocol):
    buffer = constant_buffer("stack", 0.3, 48, np.random.default_rng(5))
    runs = []
    for multitask in (False, True):
        policy = IntentionPolicy.build(OBS, ACT, 1, (8,), 8, np.random.default_rng(7))
        config = BCConfig(multitask=multitask, batch_size=16, lr=1e-2, weight_decay=0.0, protocol=protocol,
                          overfit_tolerance=2, max_epochs=6)
        result = BCTrainer(policy, [buffer], config, np.random.default_rng(11)).run(40)
        runs.append((policy.params.values.copy(), result))
    (single_values, single), (multi_values, multi) = runs
    np.testing.assert_array_equal(single_values, multi_values)
    assert single.train_losses == multi.train_losses
    assert single.validation_losses == multi.validation_losses
