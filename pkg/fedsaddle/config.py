"""Process configuration management."""

from enum import Enum
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class LogLevel(str, Enum):
    """Supported log levels."""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class Settings(BaseSettings):
    """Process settings, overridable through ``FEDSADDLE_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="FEDSADDLE_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # Output Configuration
    output_dir: Path = Path("./results")

    # Logging Configuration
    log_level: LogLevel = LogLevel.INFO

    # Execution Configuration
    workers: int = Field(1, ge=1, description="Client thread pool size; 1 disables threads")

    def model_post_init(self, __context) -> None:
        """Create output directory if it doesn't exist."""
        if isinstance(self.output_dir, str):
            self.output_dir = Path(self.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)


settings = Settings()
