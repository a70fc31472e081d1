"""Process-level configuration for t3k-lab."""
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from environment variables (prefix ``T3K_``)."""

    model_config = SettingsConfigDict(
        env_prefix="T3K_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    PROJECT_NAME: str = "t3k-lab"

    # Overrides ``output.directory`` of every run config
    OUTPUT_DIR: Path | None = None

    LOG_LEVEL: str = "WARNING"

    # Sweep workers; joblib semantics (-1 = all cores)
    N_JOBS: int = 1

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_level(cls, v: str) -> str:
        """Accept lower-case level names."""
        return str(v).upper()

    @field_validator("N_JOBS")
    @classmethod
    def check_jobs(cls, v: int) -> int:
        if v == 0:
            raise ValueError("N_JOBS must be non-zero")
        return v


def get_settings() -> Settings:
    """Read settings fresh from the environment."""
    return Settings()
