from functools import lru_cache
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="WADG_", extra="ignore"
    )

    # Output
    output_dir: str = "output"

    # Parallelism (operator column probing)
    num_threads: int = 1

    # Dense operator assembly limit
    dof_cap: int = 20000

    # Optional settings
    log_level: str = "INFO"
    debug: bool = False


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
