"""Configuration settings for the Hardy Projection Toolkit."""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix ``HARDY_``)."""

    # Logging
    log_level: str = "INFO"

    # Run ledger
    db_path: str = "./data/runs.db"
    ledger_enabled: bool = True

    # Sampling defaults for the CLI
    default_grid_size: int = 1024
    default_samples: int = 20
    default_seed: int = 0
    default_max_degree: int = 16

    # Tolerances
    operator_tolerance: float = 1e-8
    norm_tolerance: float = 1e-6
    order_tolerance: float = 1e-9
    power_tolerance: float = 1e-8
    nonzero_threshold: float = 1e-6

    # Operator evaluation
    max_composition_depth: int = 8
    crosscheck_degree: int = 24

    # Order detection for operators
    order_check_points: int = 32
    order_check_polynomials: int = 5

    # Lagrange falsifier
    falsifier_trials: int = 256
    falsifier_separation: float = 0.05

    # Polish the boundary maximum for the sup norm
    sup_refine: bool = True

    class Config:
        env_file = ".env"
        env_prefix = "HARDY_"
        case_sensitive = False


# Global settings instance
settings = Settings()
