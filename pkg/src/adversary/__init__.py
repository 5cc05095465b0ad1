# Adversary Module
from .discriminator import (
    DiscriminatorBank, airl_reward, discriminator_loss, gradient_penalty, reward_from_logits, task_rewards,
)

__all__ = [
    "DiscriminatorBank", "airl_reward", "discriminator_loss", "gradient_penalty", "reward_from_logits",
    "task_rewards",
]
