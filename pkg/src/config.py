from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional
import os
from pathlib import Path
from dotenv import load_dotenv
import logging

# Get the project root directory (parent of src)
PROJECT_ROOT = Path(__file__).parent.parent

# Load environment variables from .env file
load_dotenv()

class Settings(BaseSettings):
    # Cache Configuration
    CACHE_DIR: str = ".hdinfer_cache"

    # Solver Configuration
    CD_TOL: float = 1e-8
    KKT_TOL: float = 1e-6
    MAX_SWEEPS: int = 10_000
    GRAM_MAX_P: int = 2000  # covariance updates up to this many columns
    SCALED_LASSO_TOL: float = 1e-8
    SCALED_LASSO_MAX_ITER: int = 100
    GLM_TOL: float = 1e-7  # stationarity residual of the proximal-gradient solver
    GLM_MAX_ITER: int = 20_000

    # Tuning Configuration
    CV_FOLDS: int = 10
    CV_GRID_SIZE: int = 50
    CV_GRID_RATIO: float = 0.01
    NODEWISE_CV_SUBSAMPLE: int = 50

    # Bootstrap Configuration
    BOOTSTRAP_DRAWS: int = 1000

    # Simulation Configuration
    MAX_FAILURE_RATE: float = 0.01

    # Parallelism (None means all available cores)
    THREADS: Optional[int] = None

    # Logging Configuration
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    model_config = SettingsConfigDict(env_file=".env", env_prefix="HDINFER_", case_sensitive=True)

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        # Convert relative paths to absolute paths
        if not os.path.isabs(self.CACHE_DIR):
            self.CACHE_DIR = str(PROJECT_ROOT / self.CACHE_DIR)

    @property
    def thread_count(self) -> int:
        """Number of worker threads to use for parallel sections."""
        if self.THREADS:
            return max(1, int(self.THREADS))
        return os.cpu_count() or 1

# Create a singleton instance
settings = Settings()

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL),
    format=settings.LOG_FORMAT
)
logger = logging.getLogger("hdinfer")
