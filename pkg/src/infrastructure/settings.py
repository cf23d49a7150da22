#!/usr/bin/env python3
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import find_dotenv, load_dotenv

from ..domain.errors import InvalidConfigurationError

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class Settings:
    # Logging
    log_level: str = "INFO"

    # Harness
    workers: int = 1
    output_dir: Path = Path("reports")

    # Solver
    linear_solver: str = "cg"


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidConfigurationError(f"{name} must be an integer, got {raw!r}") from None
    if value < 1:
        raise InvalidConfigurationError(f"{name} must be >= 1, got {value}")
    return value


def load_settings(env_file: Optional[str] = None) -> Settings:
    """Process settings from the environment, after reading an optional .env file (default: nearest to the working directory)."""
    load_dotenv(env_file or find_dotenv(usecwd=True), override=False)
    solver = os.getenv("FRACSUB_LINEAR_SOLVER", "cg")
    if solver not in ("cg", "direct"):
        raise InvalidConfigurationError(f"FRACSUB_LINEAR_SOLVER must be 'cg' or 'direct', got {solver!r}")
    level = os.getenv("FRACSUB_LOG_LEVEL", "INFO").upper()
    if level not in LOG_LEVELS:
        raise InvalidConfigurationError(f"FRACSUB_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {level!r}")
    return Settings(
        log_level=level,
        workers=_int_env("FRACSUB_WORKERS", 1),
        output_dir=Path(os.getenv("FRACSUB_OUTPUT_DIR", "reports")),
        linear_solver=solver,
    )
