"""
📉 Otimização
Adam com weight decay desacoplado e recorte da norma global dos gradientes.
"""
import logging
from typing import Iterable, Union

import numpy as np

from src.errors import NumericalError
from src.ndgrad.mlp import ParamStore

logger = logging.getLogger(__name__)

DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPS = 1e-8
CLIP_RTOL = 1e-9


def adam_step(params: ParamStore, lr: float, beta1: float = DEFAULT_BETA1, beta2: float = DEFAULT_BETA2,
              eps: float = DEFAULT_EPS, weight_decay: float = 0.0) -> ParamStore:
    """
    Um passo de Adam.

    O decay é aplicado aos valores (values·(1 − lr·wd)) antes do delta do Adam.
    Gradientes não finitos abortam o passo sem tocar em nenhum estado.
    """
    if not np.all(np.isfinite(params.grads)):
        bad = int(np.count_nonzero(~np.isfinite(params.grads)))
        logger.error(f"❌ Passo Adam abortado: {bad} gradientes não finitos")
        raise NumericalError("gradiente não finito no passo Adam",
                             {"non_finite": bad, "step": params.step_count})

    params.step_count += 1
    t = params.step_count
    g = params.grads
    if weight_decay:
        params.values *= (1.0 - lr * weight_decay)
    params.adam_m[:] = beta1 * params.adam_m + (1.0 - beta1) * g
    params.adam_v[:] = beta2 * params.adam_v + (1.0 - beta2) * g * g
    m_hat = params.adam_m / (1.0 - beta1 ** t)
    v_hat = params.adam_v / (1.0 - beta2 ** t)
    params.values -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params


def global_norm(stores: Iterable[ParamStore]) -> float:
    return float(np.sqrt(sum(float(np.dot(s.grads, s.grads)) for s in stores)))


def clip_grad_norm(params: Union[ParamStore, Iterable[ParamStore]], max_norm: float) -> float:
    """
    Reescala todos os gradientes se a norma global exceder `max_norm`; devolve o fator.

    Uma norma acima de `max_norm` só por arredondamento (até CLIP_RTOL) conta como cortada, logo
    cortar duas vezes não altera os gradientes.
    """
    stores = [params] if isinstance(params, ParamStore) else list(params)
    norm = global_norm(stores)
    if norm <= max_norm * (1.0 + CLIP_RTOL) or norm == 0.0:
        return 1.0
    factor = max_norm / norm
    for store in stores:
        store.grads *= factor
    return factor
