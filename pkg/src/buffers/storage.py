"""
🗄️ Ficheiros de dados de expert

Layout binário (little-endian):
    8 bytes   magic b"LFGPEXPT"
    u16       versão do formato (1)
    u16       comprimento L do nome da tarefa
    L bytes   nome da tarefa (UTF-8)
    u32       dimensão da observação (O)
    u32       dimensão da ação (A)
    u32       número de pares regulares (P)
    u32       número de pares finais (F)
    (P + F) registos de (2·O + A + 1) × f32: s, a, s_next, fim de episódio (0.0 / 1.0)
Os F pares finais são os últimos registos.
"""
import struct
import logging
from pathlib import Path

import numpy as np

from src.buffers.expert import ExpertBuffer
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)

MAGIC = b"LFGPEXPT"
VERSION = 1
RECORD_DTYPE = np.dtype("<f4")


def record_width(obs_dim: int, act_dim: int) -> int:
    return 2 * obs_dim + act_dim + 1


def header_size(task_name: str) -> int:
    return 8 + 4 + len(task_name.encode("utf-8")) + 16


def save_expert_buffer(buffer: ExpertBuffer, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    name = buffer.task.value.encode("utf-8")
    records = np.concatenate(
        [buffer.obs, buffer.act, buffer.next_obs, buffer.episode_end[:, None].astype(np.float64)], axis=1,
    ) if len(buffer) else np.zeros((0, record_width(buffer.obs_dim, buffer.act_dim)))

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HH", VERSION, len(name)))
        f.write(name)
        f.write(struct.pack("<IIII", buffer.obs_dim, buffer.act_dim, buffer.regular_count, buffer.final_count))
        f.write(records.astype(RECORD_DTYPE).tobytes())
    logger.info(f"💾 {buffer.task.value}: {buffer.regular_count} pares + {buffer.final_count} finais → {path}")
    return path


def load_expert_buffer(path) -> ExpertBuffer:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"ficheiro de expert em falta: {path}")
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise ConfigurationError(f"ficheiro de expert inválido: {path}")
    version, name_len = struct.unpack_from("<HH", data, 8)
    if version != VERSION:
        raise ConfigurationError(f"versão de ficheiro de expert não suportada: {version}")
    cursor = 12
    task = data[cursor:cursor + name_len].decode("utf-8")
    cursor += name_len
    obs_dim, act_dim, pairs, finals = struct.unpack_from("<IIII", data, cursor)
    cursor += 16

    width = record_width(obs_dim, act_dim)
    count = pairs + finals
    if len(data) != cursor + count * width * RECORD_DTYPE.itemsize:
        raise ConfigurationError(f"tamanho de {path.name} não corresponde ao cabeçalho")
    records = np.frombuffer(data, dtype=RECORD_DTYPE, count=count * width, offset=cursor)
    records = records.reshape(count, width).astype(np.float64)
    return ExpertBuffer(
        task,
        records[:, :obs_dim],
        records[:, obs_dim:obs_dim + act_dim],
        records[:, obs_dim + act_dim:2 * obs_dim + act_dim],
        records[:, -1] > 0.5,
        final_count=finals,
    )
