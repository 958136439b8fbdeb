import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv

from utils.errors import ConfigError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class Settings:
    """Runtime settings read from the environment (and .env)"""

    data_dir: str = "data"
    log_level: str = "WARNING"
    legal_words_cap: int = 20
    verify_width_cap: int = 16
    solver_limit: Optional[int] = None
    flatten_bound: int = 100_000
    threads: int = 1
    margin_log: int = 10
    margin_son: int = 2
    margin_grp: int = 4
    cnf_var_cap: int = 20


def _int_env(key: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(key, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from e


def load_settings(dotenv: bool = True) -> Settings:
    """Build Settings from TILING_* environment variables"""
    if dotenv:
        load_dotenv()

    defaults = Settings()
    return Settings(
        data_dir=os.getenv("TILING_DATA_DIR", defaults.data_dir),
        log_level=os.getenv("TILING_LOG_LEVEL", defaults.log_level).upper(),
        legal_words_cap=_int_env("TILING_LEGAL_WORDS_CAP", defaults.legal_words_cap),
        verify_width_cap=_int_env("TILING_VERIFY_WIDTH_CAP", defaults.verify_width_cap),
        solver_limit=_int_env("TILING_SOLVER_LIMIT", defaults.solver_limit),
        flatten_bound=_int_env("TILING_FLATTEN_BOUND", defaults.flatten_bound),
        threads=_int_env("TILING_THREADS", defaults.threads),
        margin_log=_int_env("TILING_MARGIN_LOG", defaults.margin_log),
        margin_son=_int_env("TILING_MARGIN_SON", defaults.margin_son),
        margin_grp=_int_env("TILING_MARGIN_GRP", defaults.margin_grp),
        cnf_var_cap=_int_env("TILING_CNF_VAR_CAP", defaults.cnf_var_cap),
    )


def configure_logging(level: str = "WARNING") -> None:
    """Route package logs to stderr at the given level"""
    numeric = getattr(logging, level.upper(), None)
    if not isinstance(numeric, int):
        raise ConfigError(f"Unknown log level {level!r}")

    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_tiling_handler", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._tiling_handler = True
    root.addHandler(handler)
    root.setLevel(numeric)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Process-wide settings, loaded once"""
    return load_settings()
