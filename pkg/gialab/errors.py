from __future__ import annotations

from typing import Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class GIALabError(Exception):
    """Base for every failure the CLI turns into an exit code."""

    exit_code = EXIT_CONFIG


class ConfigError(GIALabError):
    pass


class LoadError(GIALabError):
    def __init__(self, path, line: Optional[int], message: str) -> None:
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class ConstructionError(GIALabError):
    pass


class BudgetError(GIALabError):
    def __init__(self, violations: list) -> None:
        self.violations = list(violations)
        shown = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"injection violates budget: {shown}{more}")


class NumericalError(GIALabError):
    exit_code = EXIT_NUMERICAL

    def __init__(
        self,
        stage: str,
        message: str,
        *,
        epoch: Optional[int] = None,
        lr: Optional[float] = None,
    ) -> None:
        self.stage = stage
        self.epoch = epoch
        self.lr = lr
        bits = [f"{stage}: {message}"]
        if epoch is not None:
            bits.append(f"epoch={epoch}")
        if lr is not None:
            bits.append(f"lr={lr}")
        super().__init__(" ".join(bits))
