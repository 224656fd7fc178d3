from typing import Any, Optional


class OdatError(Exception):
    exit_code = 1


class ConfigError(OdatError):
    exit_code = 2


class DomainError(OdatError, ValueError):
    exit_code = 2


class DimensionError(OdatError, ValueError):
    exit_code = 2


class SignalFileError(OdatError, OSError):
    exit_code = 3

    def __init__(self, message: str, path: Any = None, position: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.position = position
        where = ""
        if self.path is not None:
            where = f" [{self.path}"
            if position is not None:
                where += f" @ {position}"
            where += "]"
        super().__init__(f"{message}{where}")


class UnsupportedWavError(SignalFileError):
    pass


class ShortSignalError(SignalFileError):
    pass


class CsvParseError(SignalFileError):
    pass


class NumericalError(OdatError):
    exit_code = 4

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        self.diagnostics = diagnostics or {}
        detail = ""
        if self.diagnostics:
            detail = " (" + ", ".join(f"{k}={v}" for k, v in self.diagnostics.items()) + ")"
        super().__init__(f"{message}{detail}")


class SymmetryViolationError(NumericalError):
    pass
