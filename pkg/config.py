"""Tolerances, run configuration and logging setup."""

import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from errors import InvalidArgumentError

OUTPUT_DIR_ENV = "NONGAUSS_OUTPUT_DIR"
DATABASE_URI_ENV = "NONGAUSS_DATABASE_URI"
DEFAULT_DATABASE_URI = "sqlite:///nongaussianity_runs.db"
VERSION = "1.0.0"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class Tolerances:
    truncation_leakage: float = 1e-8
    probability_floor: float = 1e-12
    integration_tol: float = 1e-6
    imaginary_residue: float = 1e-10
    hermiticity: float = 1e-9
    zero_clip: float = 1e-14
    symplectic: float = 1e-8
    max_refinements: int = 4

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value <= 0:
                raise InvalidArgumentError(f"tolerance {name} must be positive, got {value}")

    def override(self, **changes):
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


DEFAULT_TOLERANCES = Tolerances()


def default_dim(nbar: float) -> int:
    """Per-mode Fock cutoff used when the caller does not choose one."""
    return max(20, int(math.ceil(8.0 * (float(nbar) + 1.0))))


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


@dataclass
class RunConfig:
    tolerances: Tolerances = field(default_factory=Tolerances)
    dim: Optional[int] = None
    output_dir: Path = field(default_factory=default_output_dir)
    fmt: str = "csv"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise InvalidArgumentError(f"unknown output format {self.fmt!r}")
        if self.dim is not None and self.dim < 2:
            raise InvalidArgumentError("dim must be at least 2")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be at least 1")
        self.output_dir = Path(self.output_dir)

    def provenance(self) -> dict:
        tol = self.tolerances
        return {
            "version": VERSION,
            "seed": self.seed,
            "dim": self.dim if self.dim is not None else "auto",
            "truncation_leakage": tol.truncation_leakage,
            "integration_tol": tol.integration_tol,
            "probability_floor": tol.probability_floor,
        }


def configure_logging(level=logging.INFO, log_path=None) -> None:
    """Set up stream logging, optionally mirrored to a UTF-8 file."""
    handlers = [logging.StreamHandler()]
    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path, encoding="utf-8"))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
