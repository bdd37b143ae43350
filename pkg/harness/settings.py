"""Process-level settings from the environment (and a local .env file)."""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


@dataclass(frozen=True)
class Settings:
    output_dir: str
    log_level: str
    langfuse_public_key: str | None
    langfuse_secret_key: str | None
    langfuse_host: str | None

    @property
    def tracing_configured(self) -> bool:
        return bool(self.langfuse_public_key and self.langfuse_secret_key)


def get_settings() -> Settings:
    return Settings(
        output_dir=os.getenv("DBMPPO_OUTPUT_DIR", "runs"),
        log_level=os.getenv("DBMPPO_LOG_LEVEL", "INFO").upper(),
        langfuse_public_key=os.getenv("LANGFUSE_PUBLIC_KEY"),
        langfuse_secret_key=os.getenv("LANGFUSE_SECRET_KEY"),
        # Support both LANGFUSE_HOST (legacy) and LANGFUSE_BASE_URL (official)
        langfuse_host=os.getenv("LANGFUSE_BASE_URL") or os.getenv("LANGFUSE_HOST"),
    )
