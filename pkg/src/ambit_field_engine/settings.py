from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class EngineSettings(BaseSettings):
    """Runtime settings read from ``AMBIT_*`` environment variables (and ``.env``).

    ``AMBIT_THREADS`` takes precedence over the ``--threads`` flag.
    """

    model_config = SettingsConfigDict(env_file=".env", extra="ignore", env_prefix="AMBIT_")

    threads: int | None = Field(default=None, ge=1)
    log_level: str = "INFO"
    chunk_size: int = Field(default=1 << 20, ge=1024)
    output_dir: Path = Path("results")

    def resolve_threads(self, flag: int | None) -> int:
        if self.threads is not None:
            return self.threads
        return flag if flag is not None and flag >= 1 else 1
