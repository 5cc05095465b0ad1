"""
🧠 MLPs sobre ParamStore plano
Especificação declarativa, armazenamento plano de parâmetros, avaliação rápida (numpy) e avaliação
gravada na fita (para gradientes), incluindo o gradiente da saída em relação à entrada.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigurationError
from src.ndgrad import tensor as T
from src.ndgrad.tensor import Tensor

logger = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass(frozen=True)
class MLPSpec:
    """
    Rede totalmente ligada.

    `copies` > 1 empilha réplicas independentes avaliadas em lote (ex.: uma cabeça por tarefa);
    os pesos passam a ter forma (copies, in, out).
    """

    input_dim: int
    output_dim: int
    hidden: Tuple[Tuple[int, str], ...] = ()
    output_activation: str = "identity"
    copies: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple((int(w), str(a)) for w, a in self.hidden))
        if self.input_dim <= 0 or self.output_dim <= 0 or self.copies <= 0:
            raise ConfigurationError(f"dimensões devem ser positivas: {self}")
        for width, activation in self.hidden:
            if width <= 0:
                raise ConfigurationError(f"largura de camada inválida: {width}")
            if activation not in ACTIVATIONS:
                raise ConfigurationError(f"ativação desconhecida: {activation}")
        if self.output_activation not in ACTIVATIONS:
            raise ConfigurationError(f"ativação desconhecida: {self.output_activation}")

    @property
    def activations(self) -> List[str]:
        return [a for _, a in self.hidden] + [self.output_activation]

    def layer_shapes(self) -> List[Tuple[int, ...]]:
        """Formas na ordem plana [W0, b0, W1, b1, ...]."""
        dims = [self.input_dim] + [w for w, _ in self.hidden] + [self.output_dim]
        shapes = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            if self.copies == 1:
                shapes += [(fan_in, fan_out), (fan_out,)]
            else:
                shapes += [(self.copies, fan_in, fan_out), (self.copies, 1, fan_out)]
        return shapes

    def param_count(self) -> int:
        return int(sum(np.prod(s) for s in self.layer_shapes()))

    def to_dict(self) -> Dict:
        return {"input_dim": self.input_dim, "output_dim": self.output_dim,
                "hidden": [list(h) for h in self.hidden],
                "output_activation": self.output_activation, "copies": self.copies}

    @classmethod
    def from_dict(cls, data: Dict) -> "MLPSpec":
        return cls(data["input_dim"], data["output_dim"], tuple(tuple(h) for h in data["hidden"]),
                   data.get("output_activation", "identity"), data.get("copies", 1))


@dataclass
class ParamStore:
    """Vetor plano de parâmetros com gradientes e momentos do Adam do mesmo tamanho."""

    values: np.ndarray
    grads: Optional[np.ndarray] = None
    adam_m: Optional[np.ndarray] = None
    adam_v: Optional[np.ndarray] = None
    step_count: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel().copy()
        size = self.values.size
        for name in ("grads", "adam_m", "adam_v"):
            current = getattr(self, name)
            if current is None:
                setattr(self, name, np.zeros(size))
            elif np.asarray(current).size != size:
                raise ConfigurationError(f"{name} com tamanho {np.asarray(current).size}, esperado {size}")

    @classmethod
    def zeros(cls, size: int) -> "ParamStore":
        return cls(np.zeros(size))

    def __len__(self):
        return self.values.size

    def zero_grad(self):
        self.grads[:] = 0.0

    def view(self, offset: int, shape: Tuple[int, ...], values: Optional[np.ndarray] = None) -> np.ndarray:
        source = self.values if values is None else values
        size = int(np.prod(shape))
        return source[offset:offset + size].reshape(shape)

    def leaf(self, offset: int, shape: Tuple[int, ...]) -> Tensor:
        size = int(np.prod(shape))

        def sink(g):
            self.grads[offset:offset + size] += g.ravel()

        return Tensor.leaf(self.view(offset, shape), sink=sink)

    def snapshot(self) -> np.ndarray:
        """Cópia só-de-leitura dos valores (partilhável entre threads de avaliação)."""
        frozen = self.values.copy()
        frozen.flags.writeable = False
        return frozen

    def copy(self) -> "ParamStore":
        return ParamStore(self.values.copy(), self.grads.copy(), self.adam_m.copy(),
                          self.adam_v.copy(), self.step_count)


def init_uniform(spec: MLPSpec, rng: np.random.Generator) -> np.ndarray:
    """Inicialização uniforme ±1/√fan_in para pesos e vieses."""
    shapes = spec.layer_shapes()
    fan_ins = [spec.input_dim] + [w for w, _ in spec.hidden]
    flat = []
    for layer, fan_in in enumerate(fan_ins):
        bound = 1.0 / np.sqrt(fan_in)
        for shape in shapes[2 * layer:2 * layer + 2]:
            flat.append(rng.uniform(-bound, bound, size=int(np.prod(shape))))
    return np.concatenate(flat)


def _activate(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(x, 0.0)
    if activation == "tanh":
        return np.tanh(x)
    return x


def _activate_graph(x: Tensor, activation: str) -> Tensor:
    if activation == "relu":
        return T.relu(x)
    if activation == "tanh":
        return T.tanh(x)
    return x


def split_weights(spec: MLPSpec, params, offset: int = 0) -> List[np.ndarray]:
    """Vistas numpy [W0, b0, ...] de um ParamStore (ou vetor plano) a partir de `offset`."""
    values = params.values if isinstance(params, ParamStore) else np.asarray(params)
    if values.size < offset + spec.param_count():
        raise ConfigurationError(
            f"parâmetros insuficientes: {values.size - offset} disponíveis, {spec.param_count()} exigidos")
    arrays, cursor = [], offset
    for shape in spec.layer_shapes():
        size = int(np.prod(shape))
        arrays.append(values[cursor:cursor + size].reshape(shape))
        cursor += size
    return arrays


def _check_input(spec: MLPSpec, x: np.ndarray):
    if x.shape[-1] != spec.input_dim:
        raise ConfigurationError(f"entrada com dimensão {x.shape[-1]}, esperado {spec.input_dim}")


def forward(spec: MLPSpec, params, x, offset: int = 0) -> np.ndarray:
    """Avaliação sem fita. Aceita vetor (in,), lote (B, in) ou, com copies>1, (copies, B, in)."""
    x = np.asarray(x, dtype=np.float64)
    _check_input(spec, x)
    single = x.ndim == 1
    h = x[None, :] if single else x
    weights = split_weights(spec, params, offset)
    for (W, b), activation in zip(zip(weights[0::2], weights[1::2]), spec.activations):
        h = _activate(np.matmul(h, W) + b, activation)
    if single and spec.copies == 1:
        return h[0]
    if single:
        return h[:, 0, :]
    return h


def forward_graph(spec: MLPSpec, leaves: Sequence[Tensor], x) -> Tensor:
    """Avaliação gravada na fita; `leaves` segue a ordem de `layer_shapes()`."""
    h = Tensor.const(x)
    _check_input(spec, h.value)
    for (W, b), activation in zip(zip(leaves[0::2], leaves[1::2]), spec.activations):
        h = _activate_graph(h @ W + b, activation)
    return h


def _derivative(z: Tensor, h: Tensor, activation: str):
    if activation == "relu":
        return Tensor.const((z.value > 0).astype(np.float64))
    if activation == "tanh":
        return 1.0 - h * h
    return Tensor.const(1.0)


def input_gradient(spec: MLPSpec, leaves: Sequence[Tensor], x, selector: np.ndarray) -> Tuple[Tensor, Tensor]:
    """
    Saída da rede e ∂(Σ_j selector[r, j]·out[r, j])/∂x[r], linha a linha, como grafo diferenciável.

    Permite penalizar a norma do gradiente em relação à entrada e retropropagar essa penalização
    até aos parâmetros (dupla retropropagação) sem diferenciação de segunda ordem genérica.
    """
    if spec.copies != 1:
        raise ConfigurationError("input_gradient só suporta redes sem réplicas")
    h = Tensor.const(x)
    _check_input(spec, h.value)
    pre, post = [], []
    weight_leaves = list(leaves[0::2])
    for (W, b), activation in zip(zip(leaves[0::2], leaves[1::2]), spec.activations):
        z = h @ W + b
        h = _activate_graph(z, activation)
        pre.append(z)
        post.append(h)

    activations = spec.activations
    delta = Tensor.const(selector) * _derivative(pre[-1], post[-1], activations[-1])
    grad = None
    for layer in range(len(weight_leaves) - 1, -1, -1):
        grad = delta @ T.transpose(weight_leaves[layer])
        if layer > 0:
            delta = grad * _derivative(pre[layer - 1], post[layer - 1], activations[layer - 1])
    return post[-1], grad


@dataclass
class Network:
    """
    Várias MLPs nomeadas num único ParamStore (tronco + cabeças).

    A ordem de `specs` define o layout plano e é gravada nos checkpoints.
    """

    specs: Dict[str, MLPSpec]
    params: Optional[ParamStore] = None
    offsets: Dict[str, int] = field(default_factory=dict, init=False)

    def __post_init__(self):
        cursor = 0
        for name, spec in self.specs.items():
            self.offsets[name] = cursor
            cursor += spec.param_count()
        if self.params is None:
            self.params = ParamStore.zeros(cursor)
        elif len(self.params) != cursor:
            raise ConfigurationError(f"ParamStore com {len(self.params)} valores, layout exige {cursor}")

    @classmethod
    def initialised(cls, specs: Dict[str, MLPSpec], rng: np.random.Generator) -> "Network":
        values = np.concatenate([init_uniform(spec, rng) for spec in specs.values()])
        return cls(dict(specs), ParamStore(values))

    @property
    def size(self) -> int:
        return len(self.params)

    def weights(self, name: str, values: Optional[np.ndarray] = None) -> List[np.ndarray]:
        source = self.params.values if values is None else values
        return split_weights(self.specs[name], source, self.offsets[name])

    def evaluate(self, name: str, x, values: Optional[np.ndarray] = None) -> np.ndarray:
        source = self.params.values if values is None else values
        return forward(self.specs[name], source, x, offset=self.offsets[name])

    def bind(self, trainable: bool = True) -> Dict[str, List[Tensor]]:
        """Folhas da fita por rede; com trainable=False os pesos entram como constantes."""
        bound = {}
        for name, spec in self.specs.items():
            cursor = self.offsets[name]
            leaves = []
            for shape in spec.layer_shapes():
                if trainable:
                    leaves.append(self.params.leaf(cursor, shape))
                else:
                    leaves.append(Tensor.const(self.params.view(cursor, shape)))
                cursor += int(np.prod(shape))
            bound[name] = leaves
        return bound

    def describe(self) -> Dict:
        return {name: spec.to_dict() for name, spec in self.specs.items()}

    @classmethod
    def from_description(cls, description: Dict, values: np.ndarray) -> "Network":
        specs = {name: MLPSpec.from_dict(data) for name, data in description.items()}
        return cls(specs, ParamStore(values))
