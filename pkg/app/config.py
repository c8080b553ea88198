# app/config.py - numeric tolerances and run defaults from environment
from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.

    Tolerances and iteration limits are tunable per run.
    """

    app_name: str = os.getenv("APP_NAME", "Elliptic Cone Lab")
    app_version: str = os.getenv("APP_VERSION", "1.0.0")
    log_level: str = os.getenv("LOG_LEVEL", "INFO")

    # Algebra
    tau_alg: float = float(os.getenv("TAU_ALG", "1e-9"))
    search_max_dimension: int = int(os.getenv("SEARCH_MAX_DIMENSION", "8"))
    max_matrix_dimension: int = int(os.getenv("MAX_MATRIX_DIMENSION", "16"))

    # Finite differences
    fd_tau_scale: float = float(os.getenv("FD_TAU_SCALE", "1e-9"))
    tau_mc: float = float(os.getenv("TAU_MC", "1e-8"))
    dense_limit: int = int(os.getenv("DENSE_LIMIT", "6000"))

    # Bellman / eigenvalues
    tau_eig: float = float(os.getenv("TAU_EIG", "1e-8"))
    verification_nodes: int = int(os.getenv("VERIFICATION_NODES", "200"))
    eigen_step: float = float(os.getenv("EIGEN_STEP", "1e-3"))
    eigen_max_iter: int = int(os.getenv("EIGEN_MAX_ITER", "500"))

    # Runs
    default_seed: int = int(os.getenv("DEFAULT_SEED", "42"))
    default_trials: int = int(os.getenv("DEFAULT_TRIALS", "200"))
    output_dir: str = os.getenv("OUTPUT_DIR", ".")

    model_config = SettingsConfigDict(env_file=".env")


@lru_cache()
def get_settings():
    """
    Returns cached settings instance.
    """
    return Settings()
