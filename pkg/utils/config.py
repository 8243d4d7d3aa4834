import logging
import os
from dataclasses import dataclass

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    """Runtime knobs, read from the environment (and a .env file loaded by app.py)."""

    threads: int = 1
    log_level: str = 'INFO'
    solver_tol: float = 1e-12
    agreement_tol: float = 1e-9
    power_max_iter: int = 1_000_000

    @classmethod
    def from_env(cls) -> 'Settings':
        defaults = cls()
        threads = _read('STUBBORN_DYN_THREADS', int, defaults.threads)
        return cls(
            threads=max(1, threads),
            log_level=os.getenv('STUBBORN_DYN_LOG_LEVEL', defaults.log_level).upper(),
            solver_tol=_read('STUBBORN_DYN_SOLVER_TOL', float, defaults.solver_tol),
            agreement_tol=_read('STUBBORN_DYN_AGREEMENT_TOL', float, defaults.agreement_tol),
            power_max_iter=_read('STUBBORN_DYN_POWER_MAX_ITER', int, defaults.power_max_iter),
        )


def _read(name: str, cast, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return cast(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r, using default %r", name, raw, default)
        return default


def get_settings() -> Settings:
    return Settings.from_env()
