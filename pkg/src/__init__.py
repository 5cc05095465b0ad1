"""
Pacote src - Learning from Guided Play (imitação adversarial multitarefa)
"""
from .errors import (
    LfGPError,
    ConfigurationError,
    NumericalError,
    DomainError,
    UsageError,
    WarmupError,
    CollectionError
)
from .utils import (
    criar_estrutura_diretorios,
    expert_root,
    expert_paths,
    run_name,
    run_label,
    checkpoint_path,
    list_checkpoints,
    salvar_relatorio
)
