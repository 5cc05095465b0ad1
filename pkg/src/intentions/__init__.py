# Intentions Module
from .policy import IntentionPolicy, sample_action, squash
from .critic import QBank, polyak_update
from .temperature import TemperatureSet, alpha_update
from .updates import OptimSettings, bellman_targets, pi_update, q_update

__all__ = [
    "IntentionPolicy", "sample_action", "squash", "QBank", "polyak_update", "TemperatureSet",
    "alpha_update", "OptimSettings", "bellman_targets", "pi_update", "q_update",
]
