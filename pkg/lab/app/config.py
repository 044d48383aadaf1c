"""
Runtime settings.
Values come from environment variables, optionally loaded from lab/.env.
"""
import os
from functools import lru_cache
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from app.errors import DomainError

# Load environment variables from lab/.env regardless of CWD
_ENV_PATH = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(_ENV_PATH)


class Settings(BaseModel):
    """Process-wide defaults; CLI flags override them"""
    workers: int = Field(..., ge=1, description="Worker processes for replica fan-out")
    output_dir: Path = Field(Path("runs"))
    i_max: int = Field(1_000_000, ge=1, description="Cap on swallowed boundary length per step")
    max_steps: int = Field(5_000_000, ge=1)
    max_vertices: int = Field(2_000_000, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    class Config:
        frozen = True


_ENV_FIELDS = {
    "LAB_WORKERS": "workers",
    "LAB_OUTPUT_DIR": "output_dir",
    "LAB_I_MAX": "i_max",
    "LAB_MAX_STEPS": "max_steps",
    "LAB_MAX_VERTICES": "max_vertices",
    "LAB_LOG_LEVEL": "log_level",
}


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Build settings from the environment.

    Raises:
        DomainError: if a LAB_* variable does not validate
    """
    values = {"workers": os.cpu_count() or 1}
    for var, field in _ENV_FIELDS.items():
        raw = os.getenv(var)
        if raw is not None and raw != "":
            values[field] = raw.upper() if field == "log_level" else raw
    try:
        return Settings(**values)
    except ValidationError as e:
        bad = ", ".join(
            var for var, field in _ENV_FIELDS.items()
            if any(err["loc"] and err["loc"][0] == field for err in e.errors())
        )
        raise DomainError(f"Invalid configuration in {bad or 'environment'}: {e}") from e


def reset_settings() -> None:
    """Forget cached settings (used by tests after patching the environment)"""
    get_settings.cache_clear()
