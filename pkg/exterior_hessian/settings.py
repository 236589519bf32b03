"""
Process-level settings, read from the environment or a `.env` file.
"""
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="EXTERIOR_HESSIAN_",
        env_file=".env",
        extra="ignore",
    )

    out_dir: str = Field(default="runs", description="Default directory for reports and checkpoints")
    threads: int = Field(default=1, ge=1, description="Worker count for per-level analysis")
    log_level: str = Field(default="INFO", description="Root logging level")
    registry: Optional[str] = Field(default=None, description="Run registry file; defaults to <out_dir>/runs.json")


def get_settings() -> Settings:
    return Settings()
