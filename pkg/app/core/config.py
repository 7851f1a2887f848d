import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    # App Settings
    APP_NAME: str = os.getenv("APP_NAME", "Semantic Privacy Toolkit")
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")

    # Logging Settings (the only values read from the environment)
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "WARNING").upper()
    LOG_FILE: str = os.getenv("LOG_FILE", "")
    LOG_MAX_BYTES: int = 5 * 1024 * 1024  # 5 MB
    LOG_BACKUP_COUNT: int = 5

    # Numerical tolerances
    NORMALIZATION_TOL: float = 1e-9
    IDENTITY_TOL: float = 1e-12
    RATIO_SLACK: float = 1e-12
    BISECTION_TOL: float = 1e-9

    # Database spaces
    ENUMERATION_CAP: int = 2 ** 20

    # Noise grids
    GRID_STEP_FRACTION: float = 1 / 8
    TAIL_MASS: float = 1e-12
    MAX_GRID_CELLS: int = 200_000

    # Verifier defaults
    DEFAULT_TRIALS: int = 1000
    DEFAULT_SEED: int = 0
    RANDOM_PRIORS: int = 200

    # Serialization
    DECIMAL_DIGITS: int = 17
    DENSE_WRITE_CAP: int = 1_000_000

    def __init__(self):
        if self.LOG_FILE:
            os.makedirs(os.path.dirname(os.path.abspath(self.LOG_FILE)), exist_ok=True)

settings = Settings()
