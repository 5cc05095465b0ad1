"""
🚨 Erros do motor LfGP
Hierarquia única de exceções; só o main.py as converte em linha de erro legível por máquina.
"""
from typing import Dict, Optional


class LfGPError(Exception):
    """Erro base com código curto para a linha de erro da CLI."""

    code = "lfgp"

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        super().__init__(message)
        self.message = message
        self.diagnostics = diagnostics or {}

    def error_line(self) -> str:
        text = self.message.replace('"', "'")
        line = f'error code={self.code} type={type(self).__name__} message="{text}"'
        for key, value in self.diagnostics.items():
            line += f" {key}={value}"
        return line


class ConfigurationError(LfGPError):
    """Dimensões incompatíveis, tarefa desconhecida, ficheiro em falta, chave inválida."""

    code = "config"


class NumericalError(LfGPError):
    """Gradiente/logit/alvo não finito ou ausência de convergência."""

    code = "numerical"


class DomainError(LfGPError):
    """Ação discreta ilegal no estado atual."""

    code = "domain"


class UsageError(LfGPError):
    """Uso incorreto da API (ex.: backward sem forward)."""

    code = "usage"


class WarmupError(LfGPError):
    """Amostragem pedida antes de existirem transições no replay."""

    code = "warmup"


class CollectionError(LfGPError):
    """Taxa de falha do expert acima do limite durante a coleta."""

    code = "collection"
