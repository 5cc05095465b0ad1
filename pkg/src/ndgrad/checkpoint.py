"""
💾 Checkpoints de parâmetros

Layout (little-endian):
    8 bytes   magic b"LFGPCKPT"
    u32       versão do formato (1)
    u32       comprimento N do cabeçalho JSON
    N bytes   cabeçalho JSON UTF-8 (specs das redes, ordem das tarefas, extras)
    u64       número P de parâmetros
    P × f32   valores na ordem plana do ParamStore
"""
import json
import struct
import logging
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from src.errors import ConfigurationError

logger = logging.getLogger(__name__)

MAGIC = b"LFGPCKPT"
VERSION = 1
VALUE_DTYPE = np.dtype("<f4")


def save_checkpoint(path, values: np.ndarray, header: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(values, dtype=np.float64).ravel()
    header = dict(header, param_count=int(values.size))
    blob = json.dumps(header, sort_keys=True).encode("utf-8")

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(blob)))
        f.write(blob)
        f.write(struct.pack("<Q", values.size))
        f.write(values.astype(VALUE_DTYPE).tobytes())
    logger.debug(f"💾 Checkpoint gravado: {path} ({values.size} parâmetros)")
    return path


def load_checkpoint(path) -> Tuple[Dict, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"checkpoint não encontrado: {path}")
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise ConfigurationError(f"ficheiro não é um checkpoint LfGP: {path}")

    version, header_len = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise ConfigurationError(f"versão de checkpoint não suportada: {version}")
    cursor = 16
    header = json.loads(data[cursor:cursor + header_len].decode("utf-8"))
    cursor += header_len
    (count,) = struct.unpack_from("<Q", data, cursor)
    cursor += 8
    expected = cursor + count * VALUE_DTYPE.itemsize
    if len(data) != expected or header.get("param_count") != count:
        raise ConfigurationError(f"checkpoint truncado ou inconsistente: {path}")
    values = np.frombuffer(data, dtype=VALUE_DTYPE, count=count, offset=cursor).astype(np.float64)
    return header, values
