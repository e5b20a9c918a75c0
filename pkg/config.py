"""
Runtime configuration for singular-quad.
Values come from the environment, optionally seeded from .env_quadrature.
"""

import os
import logging
from dataclasses import dataclass
from functools import lru_cache

from dotenv import load_dotenv

from errors import ConfigError

# Load environment variables
load_dotenv('.env_quadrature')

logger = logging.getLogger(__name__)

ABSCISSAE_MODES = ('equispaced', 'nodes')


def _float_env(name: str, default: str) -> float:
    raw = os.getenv(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")


def _int_env(name: str, default: str) -> int:
    raw = os.getenv(name, default)
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


@dataclass(frozen=True)
class Settings:
    moment_epsabs: float = 1e-13
    moment_epsrel: float = 1e-11
    moment_limit: int = 60
    gauss_nodes: int = 24
    abscissae: str = 'equispaced'
    log_level: str = 'INFO'
    results_dir: str = 'results'

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from QUAD_* environment variables."""
        abscissae = os.getenv('QUAD_ABSCISSAE', 'equispaced').strip().lower()
        if abscissae not in ABSCISSAE_MODES:
            raise ConfigError(
                f"QUAD_ABSCISSAE must be one of {ABSCISSAE_MODES}, got {abscissae!r}"
            )

        settings = cls(
            moment_epsabs=_float_env('QUAD_MOMENT_EPSABS', '1e-13'),
            moment_epsrel=_float_env('QUAD_MOMENT_EPSREL', '1e-11'),
            moment_limit=_int_env('QUAD_MOMENT_LIMIT', '60'),
            gauss_nodes=_int_env('QUAD_GAUSS_NODES', '24'),
            abscissae=abscissae,
            log_level=os.getenv('QUAD_LOG_LEVEL', 'INFO').upper(),
            results_dir=os.getenv('QUAD_RESULTS_DIR', 'results'),
        )
        if settings.moment_limit < 1 or settings.gauss_nodes < 2:
            raise ConfigError("QUAD_MOMENT_LIMIT must be >= 1 and QUAD_GAUSS_NODES >= 2")
        return settings


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    settings = Settings.from_env()
    logger.debug(f"Loaded settings: {settings}")
    return settings
