# Buffers Module
from .transition import Batch, Transition
from .replay import ReplayBuffer, ReplayView
from .expert import (
    ExpertBuffer, augment_final_pairs, drop_final_pairs, merge, replace_final_pairs, subsample, truncate_pairs,
)
from .sampling import sample_discriminator_batch, sample_policy_batch
from .storage import load_expert_buffer, save_expert_buffer

__all__ = [
    "Batch", "Transition", "ReplayBuffer", "ReplayView", "ExpertBuffer", "augment_final_pairs", "drop_final_pairs",
    "merge", "replace_final_pairs", "subsample", "truncate_pairs", "sample_discriminator_batch", "sample_policy_batch",
    "load_expert_buffer", "save_expert_buffer",
]
