from pydantic_settings import BaseSettings, SettingsConfigDict
import logging

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    # Solver tolerances
    TOL_COMPAT: float = 1e-10
    TOL_SOLVE: float = 1e-10
    TOL_MEAN: float = 1e-12
    NULL_SPACE_RTOL: float = 1e-9
    CHECK_NULL_SPACE: bool = True
    # Grids
    DEFAULT_N_1D: int = 64
    DEFAULT_N_2D: int = 32
    DEFAULT_S_SAMPLES: int = 16
    # Time stepping
    CFL_SAFETY: float = 0.9
    CFL_SCAN_SAMPLES: int = 256
    # Execution / output
    MAX_WORKERS: int = 1
    OUTPUT_DIR: str = "out"
    FRONTEND_URL: str = "http://localhost:3000"

    model_config = SettingsConfigDict(
        env_prefix="HOMOGEN_",
        env_file='.env',
        env_file_encoding='utf-8',
        extra='ignore',  # Ignore any unmatched vars
        case_sensitive=False
    )


settings = Settings()
logger.debug(f"Settings loaded: {settings.model_dump()}")
