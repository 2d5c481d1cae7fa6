# Import libraries
import os
import logging
from functools import lru_cache

import dotenv
from pydantic import BaseModel, ConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    energy_tol: float = 1e-9
    position_tol: float = 1e-12
    hj_tol: float = 1e-8
    root_samples: int = 4096
    degeneracy_tol: float = 1e-8
    eps_floor: float = 1e-4
    log_level: str = "INFO"

    def with_overrides(self, overrides: dict[str, float]) -> "Settings":
        unknown = set(overrides) - set(type(self).model_fields)
        if unknown:
            raise ValueError(f"Unknown tolerance keys: {sorted(unknown)}")
        return self.model_copy(update=overrides)


_ENV_KEYS = {
    "energy_tol": "LANDSCAPE_ENERGY_TOL",
    "position_tol": "LANDSCAPE_POSITION_TOL",
    "hj_tol": "LANDSCAPE_HJ_TOL",
    "root_samples": "LANDSCAPE_ROOT_SAMPLES",
    "degeneracy_tol": "LANDSCAPE_DEGENERACY_TOL",
    "eps_floor": "LANDSCAPE_EPS_FLOOR",
    "log_level": "LANDSCAPE_LOG_LEVEL",
}


_active: Settings | None = None


@lru_cache(maxsize=1)
def _environment_settings() -> Settings:
    """
    Read tolerance settings from the environment (and a local .env file).

    Returns:
        Settings: Defaults overridden by any LANDSCAPE_* variables that are set.
    """
    dotenv.load_dotenv()
    values = {}
    for field, key in _ENV_KEYS.items():
        raw = os.getenv(key)
        if raw is not None:
            values[field] = raw
            logger.info(f"Setting {field} from {key}={raw}")
    return Settings(**values)


def get_settings() -> Settings:
    return _active if _active is not None else _environment_settings()


def override_settings(overrides: dict[str, float] | None) -> Settings:
    """Apply tolerance overrides (e.g. from a run config) on top of the environment."""
    global _active
    _active = _environment_settings().with_overrides(overrides) if overrides else None
    return get_settings()
