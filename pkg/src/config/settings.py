"""
Runtime settings using Pydantic Settings.

Only process-level knobs live here (logging, parallelism). Everything that
determines numeric results belongs to the experiment config file, so the
same config produces the same artifacts under any environment.
"""

from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Runtime settings with environment variable support (prefix ``HGPCC_``).
    """

    model_config = SettingsConfigDict(
        env_prefix="HGPCC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ============================================
    # Logging Configuration
    # ============================================
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO",
        description="Logging level"
    )
    log_format: Literal["json", "text"] = Field(
        default="json",
        description="Log output format"
    )

    # ============================================
    # Execution Configuration
    # ============================================
    workers: int = Field(
        default=1,
        ge=1,
        le=64,
        description="Threads used for episodes and ensemble factorization"
    )
    ensemble_chunk_size: int = Field(
        default=256,
        ge=1,
        description="Samples factorized per batched Cholesky call"
    )


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get or create the global settings instance.

    Returns:
        Settings: Global settings instance
    """
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reload_settings() -> Settings:
    """
    Force reload settings from environment.

    Returns:
        Settings: Newly loaded settings instance
    """
    global _settings
    _settings = Settings()
    return _settings
