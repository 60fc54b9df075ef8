import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from src.utils.errors import DomainError

# Paramètres de référence (pendule 1 Hz, chariot 240 mm/s)
REFERENCE_OMEGA_N = 2.0 * math.pi
REFERENCE_V_MAX = 240.0
GRAVITY = 9.81

DEFAULT_LOG_FILE = os.path.join("logs", "run_data.json")


@dataclass(frozen=True)
class Settings:
    """Runtime settings read from the environment (and `.env` when present)."""

    threads: int
    log_file: Path
    log_level: str


def _parse_threads(raw: str | None) -> int:
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        threads = int(raw)
    except ValueError:
        raise DomainError(f"SWAYOPT_THREADS must be an integer, got {raw!r}") from None
    if threads < 1:
        raise DomainError(f"SWAYOPT_THREADS must be >= 1, got {threads}")
    return threads


def load_settings(threads_override: int | None = None) -> Settings:
    load_dotenv()
    threads = _parse_threads(os.getenv("SWAYOPT_THREADS"))
    if threads_override is not None:
        threads = _parse_threads(str(threads_override))
    return Settings(
        threads=threads,
        log_file=Path(os.getenv("SWAYOPT_LOG_FILE", DEFAULT_LOG_FILE)),
        log_level=os.getenv("SWAYOPT_LOG_LEVEL", "WARNING").upper(),
    )


def configure_logging(settings: Settings, verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
