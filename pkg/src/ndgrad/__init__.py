# ndgrad Module
from .tensor import Tensor, backward
from .mlp import MLPSpec, ParamStore, Network, forward, forward_graph, input_gradient
from .optim import adam_step, clip_grad_norm
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "Tensor", "backward", "MLPSpec", "ParamStore", "Network", "forward", "forward_graph",
    "input_gradient", "adam_step", "clip_grad_norm", "save_checkpoint", "load_checkpoint",
]
