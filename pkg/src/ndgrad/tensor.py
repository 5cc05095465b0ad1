"""
🧮 Fita de diferenciação reversa
Tensor sobre arrays numpy float64 que grava o grafo dinamicamente e retropropaga gradientes.
"""
import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from src.errors import UsageError

logger = logging.getLogger(__name__)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Soma o gradiente sobre os eixos que foram difundidos (broadcast)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    Valor numpy + ligação ao grafo que o produziu.

    Folhas com `requires_grad=True` recebem `.grad` após `backward()`; se tiverem `sink`,
    o gradiente também é acumulado no ParamStore de origem.
    """

    __slots__ = ("value", "grad", "requires_grad", "parents", "backward_fn", "sink", "op")
    # numpy delega as operações mistas (ndarray ⊕ Tensor) nos operadores refletidos do Tensor
    __array_ufunc__ = None

    def __init__(self, value, parents: Sequence["Tensor"] = (), op: str = "",
                 requires_grad: Optional[bool] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.parents = tuple(parents)
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self.parents)
        self.requires_grad = requires_grad
        self.backward_fn: Optional[Callable] = None
        self.sink: Optional[Callable[[np.ndarray], None]] = None
        self.op = op

    @staticmethod
    def const(value) -> "Tensor":
        return value if isinstance(value, Tensor) else Tensor(value, requires_grad=False)

    @staticmethod
    def leaf(value, sink: Optional[Callable[[np.ndarray], None]] = None) -> "Tensor":
        node = Tensor(value, requires_grad=True, op="leaf")
        node.sink = sink
        return node

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        return f"Tensor(op={self.op or 'const'}, shape={self.shape})"

    # ------------------------------------------------------------------ #
    # Retropropagação
    # ------------------------------------------------------------------ #
    def backward(self, grad: Optional[np.ndarray] = None):
        if not self.requires_grad:
            raise UsageError("backward() sem forward gravado: o tensor não depende de nenhum parâmetro")
        if grad is None:
            if self.value.size != 1:
                raise UsageError(f"backward() exige perda escalar, recebido shape {self.shape}")
            grad = np.ones_like(self.value)

        pending = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(_topological_order(self)):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node.backward_fn is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                if node.sink is not None:
                    node.sink(g)
                continue
            for parent, parent_grad in zip(node.parents, node.backward_fn(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    # ------------------------------------------------------------------ #
    # Operadores
    # ------------------------------------------------------------------ #
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(Tensor.const(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(Tensor.const(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(Tensor.const(other), self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(Tensor.const(other), self)

    def __neg__(self):
        return mul(self, Tensor.const(-1.0))

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)


def _topological_order(root: Tensor):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def _node(value, parents, op, backward_fn) -> Tensor:
    out = Tensor(value, parents, op)
    if out.requires_grad:
        out.backward_fn = backward_fn
    return out


# ---------------------------------------------------------------------- #
# Aritmética elementar
# ---------------------------------------------------------------------- #
def add(a, b) -> Tensor:
    a, b = Tensor.const(a), Tensor.const(b)
    return _node(a.value + b.value, (a, b), "add",
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = Tensor.const(a), Tensor.const(b)
    return _node(a.value - b.value, (a, b), "sub",
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = Tensor.const(a), Tensor.const(b)
    return _node(a.value * b.value, (a, b), "mul",
                 lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)))


def div(a, b) -> Tensor:
    a, b = Tensor.const(a), Tensor.const(b)
    return _node(a.value / b.value, (a, b), "div",
                 lambda g: (_unbroadcast(g / b.value, a.shape),
                            _unbroadcast(-g * a.value / (b.value ** 2), b.shape)))


def power(a, exponent: float) -> Tensor:
    a = Tensor.const(a)
    return _node(a.value ** exponent, (a,), "pow",
                 lambda g: (g * exponent * a.value ** (exponent - 1),))


def matmul(a, b) -> Tensor:
    a, b = Tensor.const(a), Tensor.const(b)

    def backward(g):
        grad_a = np.matmul(g, np.swapaxes(b.value, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.value, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _node(np.matmul(a.value, b.value), (a, b), "matmul", backward)


def minimum(a, b) -> Tensor:
    a, b = Tensor.const(a), Tensor.const(b)
    mask = a.value <= b.value
    return _node(np.minimum(a.value, b.value), (a, b), "minimum",
                 lambda g: (_unbroadcast(g * mask, a.shape), _unbroadcast(g * ~mask, b.shape)))


# ---------------------------------------------------------------------- #
# Reduções e forma
# ---------------------------------------------------------------------- #
def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = Tensor.const(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.array(np.broadcast_to(g, a.shape)),)

    return _node(a.value.sum(axis=axis, keepdims=keepdims), (a,), "sum", backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = Tensor.const(a)
    count = a.value.size if axis is None else a.value.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(a, shape) -> Tensor:
    a = Tensor.const(a)
    return _node(a.value.reshape(shape), (a,), "reshape", lambda g: (g.reshape(a.shape),))


def transpose(a) -> Tensor:
    """Troca os dois últimos eixos."""
    a = Tensor.const(a)
    return _node(np.swapaxes(a.value, -1, -2), (a,), "transpose", lambda g: (np.swapaxes(g, -1, -2),))


def index(a, key) -> Tensor:
    a = Tensor.const(a)

    def backward(g):
        full = np.zeros_like(a.value)
        np.add.at(full, key, g)
        return (full,)

    return _node(a.value[key], (a,), "index", backward)


def take(a, indices, axis: int = 0) -> Tensor:
    """Seleção por índices inteiros (com repetição) ao longo de um eixo."""
    a = Tensor.const(a)
    indices = np.asarray(indices, dtype=np.int64)

    def backward(g):
        full = np.zeros_like(a.value)
        moved_full = np.moveaxis(full, axis, 0)
        np.add.at(moved_full, indices, np.moveaxis(g, axis, 0))
        return (full,)

    return _node(np.take(a.value, indices, axis=axis), (a,), "take", backward)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [Tensor.const(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _node(np.concatenate([t.value for t in tensors], axis=axis), tensors, "concat", backward)


# ---------------------------------------------------------------------- #
# Não-linearidades
# ---------------------------------------------------------------------- #
def relu(a) -> Tensor:
    a = Tensor.const(a)
    mask = a.value > 0
    return _node(a.value * mask, (a,), "relu", lambda g: (g * mask,))


def tanh(a) -> Tensor:
    a = Tensor.const(a)
    t = np.tanh(a.value)
    return _node(t, (a,), "tanh", lambda g: (g * (1.0 - t * t),))


def sigmoid(a) -> Tensor:
    a = Tensor.const(a)
    s = _stable_sigmoid(a.value)
    return _node(s, (a,), "sigmoid", lambda g: (g * s * (1.0 - s),))


def softplus(a) -> Tensor:
    a = Tensor.const(a)
    return _node(np.logaddexp(0.0, a.value), (a,), "softplus",
                 lambda g: (g * _stable_sigmoid(a.value),))


def log_sigmoid(a) -> Tensor:
    """log σ(a) = −softplus(−a), estável para |a| grande."""
    a = Tensor.const(a)
    return _node(-np.logaddexp(0.0, -a.value), (a,), "log_sigmoid",
                 lambda g: (g * _stable_sigmoid(-a.value),))


def exp(a) -> Tensor:
    a = Tensor.const(a)
    e = np.exp(a.value)
    return _node(e, (a,), "exp", lambda g: (g * e,))


def log(a) -> Tensor:
    a = Tensor.const(a)
    return _node(np.log(a.value), (a,), "log", lambda g: (g / a.value,))


def sqrt(a) -> Tensor:
    a = Tensor.const(a)
    r = np.sqrt(a.value)
    return _node(r, (a,), "sqrt", lambda g: (g * 0.5 / r,))


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def backward(loss: Tensor) -> Tensor:
    """Retropropaga uma perda escalar para as folhas (e ParamStores) ligadas ao grafo."""
    loss.backward()
    return loss
