# Cloning Module
from .bc import BCConfig, BCResult, BCTrainer, bc_loss, bc_update, early_stop_check

__all__ = ["BCConfig", "BCResult", "BCTrainer", "bc_loss", "bc_update", "early_stop_check"]
