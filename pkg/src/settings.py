"""
⚙️ Leitura de configuração chave=valor
Ficheiros planos lidos com python-dotenv, com suporte a `include=` e overrides LFGP_* do ambiente.
"""
import os
import logging
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import dotenv_values

from src.errors import ConfigurationError

logger = logging.getLogger(__name__)

INCLUDE_KEY = "include"
ENV_PREFIX = "LFGP_"


def read_key_values(path, _stack: Optional[List[Path]] = None) -> Dict[str, Tuple[str, str]]:
    """
    Lê um ficheiro chave=valor resolvendo `include` recursivamente.

    Returns:
        Dict chave -> (valor em texto, origem "file:<caminho>")
    """
    path = Path(path).resolve()
    stack = list(_stack or [])
    if path in stack:
        chain = " -> ".join(p.name for p in stack + [path])
        raise ConfigurationError(f"include circular: {chain}")
    if not path.exists():
        raise ConfigurationError(f"ficheiro de configuração não encontrado: {path}")

    raw = dotenv_values(path)
    merged: Dict[str, Tuple[str, str]] = {}

    include = raw.pop(INCLUDE_KEY, None)
    if include:
        merged.update(read_key_values(path.parent / include, stack + [path]))

    for key, value in raw.items():
        if value is None:
            raise ConfigurationError(f"chave sem valor em {path.name}: {key}")
        merged[key.strip().lower()] = (value.strip(), f"file:{path.name}")
    return merged


def coerce(value: str, default: Any, key: str) -> Any:
    """Converte o texto para o tipo do valor por omissão."""
    try:
        if isinstance(default, bool):
            lowered = value.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(float(value)) if "e" in value.lower() else int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(item.strip() for item in value.split(",") if item.strip())
    except ValueError:
        raise ConfigurationError(f"valor inválido para '{key}': {value!r}")
    return value


def build_dataclass(cls, sources: Dict[str, Tuple[str, str]], overrides: Optional[Dict[str, Any]] = None,
                    use_environment: bool = True):
    """
    Instancia uma dataclass de configuração com proveniência por chave.

    Ordem: default < ficheiro(s) < variável LFGP_<CHAVE> < override (flag da CLI).
    Chaves desconhecidas no ficheiro são erro de configuração.
    """
    known = {f.name: f for f in fields(cls) if f.init}
    unknown = sorted(set(sources) - set(known))
    if unknown:
        raise ConfigurationError(f"chaves desconhecidas para {cls.__name__}: {', '.join(unknown)}")

    defaults = cls()
    values: Dict[str, Any] = {}
    provenance: Dict[str, str] = {}
    for name in known:
        default = getattr(defaults, name)
        value, origin = default, "default"
        if name in sources:
            text, origin = sources[name]
            value = coerce(text, default, name)
        env_value = os.getenv(ENV_PREFIX + name.upper()) if use_environment else None
        if env_value is not None:
            value, origin = coerce(env_value, default, name), f"env:{ENV_PREFIX}{name.upper()}"
        if overrides and overrides.get(name) is not None:
            value, origin = overrides[name], "flag"
        values[name] = value
        provenance[name] = origin

    instance = cls(**values)
    instance.provenance = provenance
    return instance


def explain(instance) -> List[str]:
    """Linhas `chave = valor  [origem] fonte` para o --explain-config."""
    provenance = getattr(instance, "provenance", {})
    lines = []
    for f in fields(instance):
        if not f.init:
            continue
        source = f.metadata.get("source", "")
        origin = provenance.get(f.name, "default")
        lines.append(f"{f.name} = {getattr(instance, f.name)!r}  [{origin}] {source}")
    return lines
