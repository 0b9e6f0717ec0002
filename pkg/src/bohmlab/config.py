"""Configuration management for bohmlab.

Process-wide numerical defaults live here, loaded with pydantic-settings so
they can be overridden from environment variables or a .env file. Per-run
parameters (the wavefunction, time windows, initial conditions) belong to a
scenario file instead, see :mod:`bohmlab.scenarios.base`.
"""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical defaults loaded from environment variables.

    Settings can be configured via:
    1. Environment variables (prefixed with BOHMLAB_)
    2. .env file in the working directory
    3. Default values

    Example:
        ```bash
        export BOHMLAB_THREADS=4
        export BOHMLAB_ESCAPE_RADIUS=15
        ```
    """

    model_config = SettingsConfigDict(
        env_prefix="BOHMLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Field evaluation
    psi_floor: float = Field(
        default=1e-13,
        gt=0,
        description="Below this |psi| the velocity ratio grad/psi is a node singularity",
    )

    # Node finding and tracking
    node_tol: float = Field(
        default=1e-8,
        gt=0,
        description="Maximum |psi| at a reported active node",
    )
    escape_radius: float = Field(
        default=12.0,
        gt=0,
        description="Distance from the origin beyond which a node counts as escaped",
    )
    collision_tol: float = Field(
        default=1e-3,
        gt=0,
        description="Moving-to-fixed node distance that registers a collision",
    )
    continuation_jump_max: float = Field(
        default=0.2,
        gt=0,
        description="Largest accepted per-step displacement of a tracked node",
    )

    # X-points
    xpoint_search_radius: float = Field(
        default=1.0,
        gt=0,
        description="Radius around a node searched for X-points",
    )
    xpoint_owner_ratio: float = Field(
        default=1.5,
        gt=1,
        description="A saddle is dropped when another node is this many times closer than the frame node",
    )

    # Trajectories and chaos
    node_step_factor: float = Field(
        default=0.05,
        gt=0,
        description="Step cap as a fraction of (node distance / local speed)",
    )
    loop_radius: float = Field(
        default=0.6,
        gt=0,
        description="Particle-node distance inside which windings are counted",
    )
    chaos_threshold: float = Field(
        default=0.05,
        ge=0,
        description="Stretching number separating ordered from chaotic motion",
    )
    bootstrap_samples: int = Field(
        default=400,
        ge=10,
        description="Resamples used for the stretching-number confidence band",
    )

    # Runtime
    threads: int = Field(
        default=1,
        ge=1,
        description="Worker processes for ensemble subcommands",
    )
    log_level: str = Field(
        default="WARNING",
        description="Logging level for the bohmlab logger",
    )


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Returns:
        Settings object with all configuration values
    """
    return Settings()
