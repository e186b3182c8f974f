import logging
import os
from dotenv import load_dotenv

load_dotenv()

# LLM Endpoint Configuration
LLM_ENDPOINT = os.getenv("LLM_ENDPOINT", "")
LLM_API_KEY_VAR = os.getenv("LLM_API_KEY_VAR", "LLM_API_KEY")
LLM_MODEL = os.getenv("LLM_MODEL", "deepseek-chat")
LLM_TEMPERATURE = float(os.getenv("LLM_TEMPERATURE", "0.7"))
LLM_TIMEOUT = float(os.getenv("LLM_TIMEOUT", "30"))
LLM_MAX_RETRIES = int(os.getenv("LLM_MAX_RETRIES", "3"))
LLM_MAX_CONCURRENT = int(os.getenv("LLM_MAX_CONCURRENT", "4"))
LLM_MIN_INTERVAL = float(os.getenv("LLM_MIN_INTERVAL", "0.0"))

# Runtime Configuration
LOG_LEVEL = os.getenv("FAIRLINE_LOG_LEVEL", "INFO")
DEFAULT_SEED = int(os.getenv("FAIRLINE_SEED", "0"))

# HTTP Service Configuration
API_HOST = os.getenv("FAIRLINE_HOST", "0.0.0.0")
API_PORT = int(os.getenv("FAIRLINE_PORT", "8001"))

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | int | None = None) -> None:
    """Install one stream handler on the root logger (idempotent)."""
    level = level if level is not None else LOG_LEVEL
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    root = logging.getLogger()
    root.setLevel(level)
    if not any(getattr(h, "_fairline", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._fairline = True
        root.addHandler(handler)
