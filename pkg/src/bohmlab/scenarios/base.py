"""Scenario files: the per-run configuration of every subcommand.

A scenario is a YAML document validated by a pydantic model. Everything a
run depends on is a field here; :meth:`Scenario.resolved` fills the few
optional fields from the process settings so the echo written next to the
outputs is fully explicit.

Example:
    ```yaml
    name: typical
    modes: [[3, 3], [3, 4], [4, 5]]
    coefficients: [1.0, 1.0, 0.7071067811865476]
    omega1: 1.0
    omega2: 0.7071067811865476
    t0: 0.1
    t1: 2.5
    ```
"""

from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_serializer, field_validator, model_validator

from bohmlab.config import Settings, get_settings
from bohmlab.core.errors import ScenarioError
from bohmlab.core.models import QuantumPotentialForm, SuperpositionSpec


def _parse_coefficient(value: Any) -> complex:
    if isinstance(value, bool):
        raise ValueError("coefficient cannot be a boolean")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"coefficient must be a number, 'a+bj' or [re, im], got {value!r}")


class Tolerances(BaseModel):
    """Integrator tolerances."""

    model_config = ConfigDict(extra="forbid")

    rel_tol: float = Field(default=1e-10, gt=0, lt=1)
    abs_tol: float = Field(default=1e-12, gt=0)


class Scenario(BaseModel):
    """Validated contents of a scenario file.

    Attributes:
        name: Label copied into the run manifest
        modes: (m, n) quantum numbers
        coefficients: Complex amplitudes; numbers, "a+bj" strings or [re, im]
        omega1: Frequency along x
        omega2: Frequency along y
        t0: Start of the time window
        t1: End of the time window
        dt: Output sampling step for trajectories and node tracks
        region: (xmin, xmax, ymin, ymax) for grids and node scans
        resolution: Points per axis of the field grid
        scan_resolution: Points per axis of the node scan
        initial_conditions: Particle starts (x, y) at t0
        tolerances: Integrator tolerances
        frames: Field snapshot times; empty means a single snapshot at t0
        xpoint_time: Frozen time for X-points, t0 if omitted
        xpoint_nodes: Frame node ids; empty means every active node
        search_radius: X-point search radius, settings value if omitted
        s_span: Fictitious-time span of asymptotic curves
        chaos_horizon: Integration span of the stretching number
        renorm_dt: Tangent renormalization interval
        period: Return time for the oracle periodicity check
        loop_nodes: Node ids whose windings are annotated on trajectories
        seed: Seed for every randomized step
        q_form: Quantum potential expression
    """

    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    modes: list[tuple[int, int]] = Field(min_length=1)
    coefficients: list[complex] = Field(min_length=1)
    omega1: float = Field(default=1.0, gt=0)
    omega2: float = Field(default=1.0, gt=0)

    t0: float = 0.1
    t1: float = 2.5
    dt: float = Field(default=0.01, gt=0)
    region: tuple[float, float, float, float] = (-5.0, 5.0, -5.0, 5.0)
    resolution: int = Field(default=201, ge=2)
    scan_resolution: int = Field(default=400, ge=100)

    initial_conditions: list[tuple[float, float]] = Field(default_factory=list)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    frames: list[float] = Field(default_factory=list)

    xpoint_time: float | None = None
    xpoint_nodes: list[int] = Field(default_factory=list)
    search_radius: float | None = Field(default=None, gt=0)
    s_span: float = Field(default=10.0, gt=0)

    chaos_horizon: float = Field(default=100.0, gt=0)
    renorm_dt: float = Field(default=1.0, gt=0)
    period: float | None = Field(default=None, gt=0)
    loop_nodes: list[int] = Field(default_factory=list)

    seed: int = 0
    q_form: QuantumPotentialForm = QuantumPotentialForm.AMPLITUDE

    @field_validator("coefficients", mode="before")
    @classmethod
    def _coerce_coefficients(cls, value: Any) -> list[complex]:
        if not isinstance(value, (list, tuple)):
            raise ValueError("coefficients must be a list")
        return [_parse_coefficient(item) for item in value]

    @field_serializer("coefficients")
    def _dump_coefficients(self, value: list[complex]) -> list[list[float]]:
        return [[c.real, c.imag] for c in value]

    @model_validator(mode="after")
    def _check_consistency(self) -> "Scenario":
        if not self.t1 > self.t0:
            raise ValueError(f"t1 must exceed t0, got t0={self.t0}, t1={self.t1}")
        xmin, xmax, ymin, ymax = self.region
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"region must be (xmin, xmax, ymin, ymax) with min < max, got {self.region}")
        self.to_spec()
        return self

    def to_spec(self) -> SuperpositionSpec:
        """The wavefunction described by this scenario.

        Raises:
            ValueError: If modes, coefficients or frequencies are invalid
        """
        return SuperpositionSpec.from_terms(
            [(m, n, c) for (m, n), c in zip(self.modes, self.coefficients, strict=True)],
            self.omega1,
            self.omega2,
        )

    @property
    def ics(self) -> list[tuple[float, float, float]]:
        """Initial conditions with t0 attached."""
        return [(x, y, self.t0) for x, y in self.initial_conditions]

    def resolved(self, settings: Settings | None = None) -> "Scenario":
        """Copy with every optional field made explicit."""
        settings = settings or get_settings()
        return self.model_copy(
            update={
                "xpoint_time": self.t0 if self.xpoint_time is None else self.xpoint_time,
                "search_radius": settings.xpoint_search_radius
                if self.search_radius is None
                else self.search_radius,
            }
        )

    def to_yaml(self) -> str:
        """Scenario as a YAML document that :func:`load_scenario` accepts."""
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


def load_scenario(path: Path | str) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioError: If the file is missing, is not YAML or fails validation
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(f"Cannot read scenario {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"Scenario {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"Scenario {path} must be a mapping, got {type(raw).__name__}")
    try:
        return Scenario.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioError(f"Invalid scenario {path}:\n{exc}") from exc
