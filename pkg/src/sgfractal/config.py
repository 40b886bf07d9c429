"""Run configuration shared by the ``verify`` report and the CLI."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from .analysis import DIM_SG, MeasureSpec
from .field import FieldParseError, parse_expression
from .fractal import MAX_OPERATOR_LEVEL, BaseOperator, ScalingFamily
from .lattice import MAX_LEVEL

__all__ = ["ConfigError", "RunConfig"]

AlphaSpec = Union[float, str, list]


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending field."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass
class RunConfig:
    f: str = "y^2*sin(x)/2"
    b: str | None = None
    T: str = "harmonic0"
    alpha: AlphaSpec = 0.05
    N: int = 1
    level: int = 6
    alpha_level: int = 6
    beta: float = 0.8
    n_max: int | None = None
    q: float = 2.0
    p: list = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])
    seed: int = 42
    trials: int = 20
    inverse_level: int = 4
    tol: float = 1e-12
    slack: float = 1e-9
    boundary: str = "warn"
    unchecked: bool = False

    # -- (de)serialization
    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"unknown key {k!r}" for k in unknown])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # accept a whole report
        return cls.from_dict(data)

    def dump(self, path: str | Path) -> None:
        from .theorems import dumps

        Path(path).write_text(dumps(self.to_dict()) + "\n", encoding="utf-8")

    # -- derived objects
    @property
    def measure(self) -> MeasureSpec:
        return MeasureSpec(tuple(self.p))

    @property
    def base_operator(self) -> BaseOperator:
        return BaseOperator.parse(self.T)

    @property
    def effective_n_max(self) -> int:
        return self.level if self.n_max is None else self.n_max

    def scaling_family(self) -> ScalingFamily:
        kw = dict(sample_level=self.alpha_level, unchecked=self.unchecked)
        if isinstance(self.alpha, list):
            return ScalingFamily(self.N, self.alpha, **kw)
        if isinstance(self.alpha, (int, float)):
            return ScalingFamily.constant(self.N, float(self.alpha), **kw)
        return ScalingFamily.parse(str(self.alpha), self.N, **kw)

    def validate(self) -> "RunConfig":
        """Check every field and raise one ConfigError listing all problems."""
        problems: list[str] = []
        for name in ("f", "b"):
            text = getattr(self, name)
            if text is None:
                continue
            try:
                parse_expression(text)
            except FieldParseError as err:
                problems.append(f"{name}: {err}")
        try:
            BaseOperator.parse(self.T)
        except ValueError as err:
            problems.append(f"T: {err}")
        if not isinstance(self.N, int) or self.N < 1:
            problems.append(f"N: must be a positive integer, got {self.N!r}")
        if not isinstance(self.level, int) or not 0 <= self.level <= MAX_LEVEL:
            problems.append(f"level: must be an integer in 0..{MAX_LEVEL}, got {self.level!r}")
        elif isinstance(self.N, int) and self.level < self.N:
            problems.append(f"level: must be >= N ({self.N}), got {self.level}")
        if not isinstance(self.alpha_level, int) or not 0 <= self.alpha_level <= MAX_LEVEL:
            problems.append(f"alpha_level: must be an integer in 0..{MAX_LEVEL}")
        if not isinstance(self.inverse_level, int) or not 1 <= self.inverse_level <= MAX_OPERATOR_LEVEL:
            problems.append(f"inverse_level: must be an integer in 1..{MAX_OPERATOR_LEVEL}")
        elif isinstance(self.N, int) and self.inverse_level < self.N:
            problems.append(f"inverse_level: must be >= N ({self.N})")
        if not (isinstance(self.beta, (int, float)) and 0.0 < self.beta <= DIM_SG):
            problems.append(f"beta: must lie in (0, log3/log2], got {self.beta!r}")
        if self.n_max is not None and not (
            isinstance(self.n_max, int) and 1 <= self.n_max <= min(self.level, self.alpha_level)
        ):
            problems.append("n_max: must be an integer in 1..min(level, alpha_level)")
        if not (isinstance(self.q, (int, float)) and self.q >= 1.0 and math.isfinite(self.q)):
            problems.append(f"q: must be a finite number >= 1, got {self.q!r}")
        try:
            MeasureSpec(tuple(self.p))
        except (TypeError, ValueError) as err:
            problems.append(f"p: {err}")
        if not isinstance(self.seed, int):
            problems.append("seed: must be an integer")
        if not isinstance(self.trials, int) or self.trials < 1:
            problems.append("trials: must be a positive integer")
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            problems.append("tol: must be positive")
        if not (isinstance(self.slack, (int, float)) and self.slack >= 0):
            problems.append("slack: must be non-negative")
        if self.boundary not in ("warn", "strict"):
            problems.append(f"boundary: must be 'warn' or 'strict', got {self.boundary!r}")
        if not problems:
            try:
                self.scaling_family()
            except (ValueError, FieldParseError) as err:
                problems.append(f"alpha: {err}")
        if problems:
            raise ConfigError(problems)
        return self
