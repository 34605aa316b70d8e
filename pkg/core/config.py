"""
Core configuration module for settings shared by the CLI and the HTTP service.
"""
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        # Unrelated variables in the environment or .env must not stop startup.
        extra="ignore",
    )

    # Project Info
    PROJECT_NAME: str = "Accuracy Forecast"
    PROJECT_VERSION: str = "1.0.0"
    API_V1_PREFIX: str = "/api/v1"

    # Artifacts
    MODEL_PATH: Path = Path("artifacts/svr_model.txt")
    OUTPUT_DIR: Path = Path("artifacts")

    # Worker pool for full trainings (database builds, top-n retrains)
    MAX_WORKERS: int = Field(default=4, ge=1)

    # Logging
    LOG_LEVEL: str = "INFO"

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Accept only the level names the logging module knows."""
        level = v.strip().upper()
        if level not in {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"}:
            raise ValueError(f"Unknown LOG_LEVEL '{v}'")
        return level


settings = Settings()
