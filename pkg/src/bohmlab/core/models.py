"""Core data models for bohmlab.

This module defines the records passed between the numerical modules:
- Mode, OscillatorParams, SuperpositionSpec: the wavefunction
- FieldSample: psi and its derivatives at one spacetime point
- NodeRecord, NodeTrack, StructureClass: nodal points and their history
- XPointRecord, AsymptoticCurve: saddles of the co-moving flow
- Trajectory, ChaosReport: particle paths and their diagnostics
"""

from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MAX_QUANTUM = 30


class QuantumPotentialForm(str, Enum):
    """Which expression is used for the quantum potential."""

    AMPLITUDE = "amplitude"  # -1/2 lap(R)/R with R = |psi|
    COMPLEX = "complex"  # -1/2 Re(lap(psi)/psi)


class StructureTag(str, Enum):
    """Which coincidence of quantum numbers a three-mode state has."""

    TWO_EQUAL_M = "two_equal_m"
    TWO_EQUAL_N = "two_equal_n"
    THREE_EQUAL_M = "three_equal_m"
    THREE_EQUAL_N = "three_equal_n"
    ALL_DISTINCT_SMALL = "all_distinct_small"
    GENERAL_NUMERIC = "general_numeric"


class NodeKind(str, Enum):
    """Whether a nodal point moves with time."""

    FIXED = "fixed"
    MOVING = "moving"


class NodeStatus(str, Enum):
    """Lifecycle state of a tracked node at one sample."""

    ACTIVE = "active"
    ESCAPED = "escaped"
    COLLIDED = "collided"


class EventKind(str, Enum):
    """Notable instants in the life of a moving node."""

    ESCAPE_TO_INFINITY = "escape_to_infinity"
    COLLISION_WITH_FIXED = "collision_with_fixed"
    REAPPEARANCE = "reappearance"
    LOST = "lost"


class CurveBranch(str, Enum):
    """The four asymptotic branches leaving an X-point."""

    STABLE_PLUS = "stable_plus"
    STABLE_MINUS = "stable_minus"
    UNSTABLE_PLUS = "unstable_plus"
    UNSTABLE_MINUS = "unstable_minus"

    @property
    def is_stable(self) -> bool:
        return self in (CurveBranch.STABLE_PLUS, CurveBranch.STABLE_MINUS)


class StationaryType(str, Enum):
    """Linear type of a planar stationary point."""

    SADDLE = "saddle"
    STABLE_NODE = "stable_node"
    UNSTABLE_NODE = "unstable_node"
    STABLE_FOCUS = "stable_focus"
    UNSTABLE_FOCUS = "unstable_focus"
    CENTER = "center"
    DEGENERATE = "degenerate"


class ChaosClass(str, Enum):
    """Verdict of the stretching-number indicator."""

    ORDERED = "ordered"
    CHAOTIC = "chaotic"
    UNDETERMINED = "undetermined"


# =============================================================================
# Wavefunction
# =============================================================================


@dataclass(frozen=True)
class Mode:
    """Quantum numbers (m, n) of one 2-d oscillator eigenstate."""

    m: int
    n: int

    def __post_init__(self) -> None:
        for name, value in (("m", self.m), ("n", self.n)):
            if value < 0:
                raise ValueError(f"Quantum number {name} must be >= 0, got {value}")
            if value > MAX_QUANTUM:
                raise ValueError(
                    f"Quantum number {name}={value} exceeds the supported maximum {MAX_QUANTUM}"
                )


@dataclass(frozen=True)
class OscillatorParams:
    """Angular frequencies of the anisotropic oscillator (hbar = m = 1)."""

    omega1: float
    omega2: float

    def __post_init__(self) -> None:
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ValueError(
                f"Frequencies must be positive, got omega1={self.omega1}, omega2={self.omega2}"
            )


@dataclass(frozen=True)
class SuperpositionSpec:
    """A finite superposition of oscillator eigenstates.

    Attributes:
        modes: Distinct (m, n) modes
        coefficients: Complex amplitude of each mode, same length as modes
        params: Oscillator frequencies
    """

    modes: tuple[Mode, ...]
    coefficients: tuple[complex, ...]
    params: OscillatorParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(
            self, "coefficients", tuple(complex(c) for c in self.coefficients)
        )
        if not self.modes:
            raise ValueError("A superposition needs at least one mode")
        if len(self.modes) != len(self.coefficients):
            raise ValueError(
                f"{len(self.modes)} modes but {len(self.coefficients)} coefficients"
            )
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("Modes must be pairwise distinct")
        if all(c == 0 for c in self.coefficients):
            raise ValueError("At least one coefficient must be nonzero")

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[tuple[int, int, complex]],
        omega1: float,
        omega2: float,
    ) -> "SuperpositionSpec":
        """Build a spec from (m, n, coefficient) triples.

        Example:
            ```python
            spec = SuperpositionSpec.from_terms(
                [(3, 3, 1.0), (3, 4, 1.0), (4, 5, 0.5**0.5)], 1.0, 0.5**0.5
            )
            ```
        """
        terms = list(terms)
        return cls(
            modes=tuple(Mode(m, n) for m, n, _ in terms),
            coefficients=tuple(complex(c) for _, _, c in terms),
            params=OscillatorParams(omega1, omega2),
        )

    @property
    def k(self) -> int:
        return len(self.modes)

    @property
    def m_values(self) -> np.ndarray:
        return np.array([mode.m for mode in self.modes], dtype=int)

    @property
    def n_values(self) -> np.ndarray:
        return np.array([mode.n for mode in self.modes], dtype=int)

    @property
    def coefficient_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    def scaled(self, factor: complex) -> "SuperpositionSpec":
        """Same state multiplied by a nonzero complex constant."""
        if factor == 0:
            raise ValueError("Scale factor must be nonzero")
        return SuperpositionSpec(
            self.modes, tuple(c * factor for c in self.coefficients), self.params
        )

    def transposed(self) -> "SuperpositionSpec":
        """The same state with the x and y axes exchanged."""
        return SuperpositionSpec(
            tuple(Mode(mode.n, mode.m) for mode in self.modes),
            self.coefficients,
            OscillatorParams(self.params.omega2, self.params.omega1),
        )


@dataclass
class FieldSample:
    """Psi with first and second spatial derivatives.

    Attributes:
        psi: Complex value
        grad: (d/dx, d/dy) of psi, shape (2, ...)
        lap: Laplacian of psi
        hess: (d2/dx2, d2/dxdy, d2/dy2) of psi, shape (3, ...)
    """

    psi: complex | np.ndarray
    grad: np.ndarray
    lap: complex | np.ndarray
    hess: np.ndarray


# =============================================================================
# Nodes
# =============================================================================


@dataclass
class StructureClass:
    """Classification of a three-mode state by coinciding quantum numbers.

    For the two-equal tags ``shared`` holds the indices of the two modes with
    the common quantum number and ``lone`` the index of the third. For the
    three-equal tags the roots describe fixed nodal lines rather than points.
    """

    tag: StructureTag
    fixed_x_roots: list[float] = field(default_factory=list)
    fixed_y_roots: list[float] = field(default_factory=list)
    shared: tuple[int, int] | None = None
    lone: int | None = None

    @property
    def is_analytic(self) -> bool:
        return self.tag in (StructureTag.TWO_EQUAL_M, StructureTag.TWO_EQUAL_N)

    @property
    def fixed_nodes(self) -> list[tuple[float, float]]:
        """Isolated time-independent nodes, rows ordered top to bottom."""
        if not self.is_analytic:
            return []
        return [
            (x, y)
            for y in sorted(self.fixed_y_roots, reverse=True)
            for x in sorted(self.fixed_x_roots)
        ]


@dataclass
class NodeRecord:
    """A nodal point at one instant."""

    id: int
    kind: NodeKind
    position: tuple[float, float]
    t: float
    status: NodeStatus = NodeStatus.ACTIVE

    @property
    def x(self) -> float:
        return self.position[0]

    @property
    def y(self) -> float:
        return self.position[1]


@dataclass
class NodeEvent:
    """An escape, collision, reappearance or loss of a tracked node."""

    t: float
    kind: EventKind
    partner_fixed_id: int | None = None
    position: tuple[float, float] | None = None


@dataclass
class NodeTrack:
    """Time history of one nodal point.

    Attributes:
        id: Label assigned at the start of tracking
        kind: Fixed or moving
        samples: (t, x, y) with strictly increasing t
        statuses: Status at each sample
        events: Escapes, collisions and reappearances in time order
    """

    id: int
    kind: NodeKind
    samples: list[tuple[float, float, float]] = field(default_factory=list)
    statuses: list[NodeStatus] = field(default_factory=list)
    events: list[NodeEvent] = field(default_factory=list)

    def append(self, t: float, x: float, y: float, status: NodeStatus) -> None:
        if self.samples and t <= self.samples[-1][0]:
            raise ValueError(f"Track {self.id}: sample time {t} is not increasing")
        self.samples.append((t, x, y))
        self.statuses.append(status)

    @property
    def times(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def positions(self) -> np.ndarray:
        return np.array([(s[1], s[2]) for s in self.samples]).reshape(-1, 2)

    def position_at(self, t: float | np.ndarray) -> np.ndarray:
        """Linearly interpolated position; NaN outside the sampled window."""
        times = self.times
        pos = self.positions
        x = np.interp(t, times, pos[:, 0], left=np.nan, right=np.nan)
        y = np.interp(t, times, pos[:, 1], left=np.nan, right=np.nan)
        return np.stack([x, y], axis=-1)

    def events_of(self, kind: EventKind) -> list[NodeEvent]:
        return [event for event in self.events if event.kind == kind]


# =============================================================================
# X-points
# =============================================================================


@dataclass
class XPointRecord:
    """A saddle of the frozen-time flow in a node's co-moving frame.

    Attributes:
        frame_node_id: Node whose frame is used
        position: (u, v) relative to the node
        absolute: (x, y) in the inertial frame
        t: Frozen time
        node_velocity: Velocity of the frame node
        jacobian: 2x2 Jacobian of the relative flow
        eigenvalues: (unstable, stable) eigenvalues
        eigvecs: Unit eigenvectors in the same order
    """

    frame_node_id: int
    position: tuple[float, float]
    absolute: tuple[float, float]
    t: float
    node_velocity: tuple[float, float]
    jacobian: np.ndarray
    eigenvalues: tuple[float, float]
    eigvecs: tuple[np.ndarray, np.ndarray]

    @property
    def node_position(self) -> tuple[float, float]:
        return (
            self.absolute[0] - self.position[0],
            self.absolute[1] - self.position[1],
        )


@dataclass
class AsymptoticCurve:
    """One branch of an X-point's stable or unstable manifold.

    Samples are (s, u, v) in the co-moving frame; stable branches run to
    negative s. ``truncated`` marks integrations stopped by a node.
    """

    xpoint: XPointRecord
    branch: CurveBranch
    samples: list[tuple[float, float, float]] = field(default_factory=list)
    truncated: bool = False

    @property
    def points(self) -> np.ndarray:
        return np.array([(s[1], s[2]) for s in self.samples]).reshape(-1, 2)


# =============================================================================
# Trajectories and diagnostics
# =============================================================================


@dataclass
class TrajectoryStats:
    """Step statistics of one integration."""

    steps: int = 0
    rejected_steps: int = 0
    nfev: int = 0
    min_node_distance: float = float("inf")


@dataclass
class LoopAnnotation:
    """Signed winding of a particle around a node over one close approach."""

    node_id: int
    t_start: float
    t_end: float
    winding: float


@dataclass
class Trajectory:
    """A Bohmian particle path.

    Attributes:
        ic: (x0, y0, t0)
        samples: (t, x, y) with strictly increasing t
        stats: Integrator statistics
        loop_annotations: Windings around tracked nodes
    """

    ic: tuple[float, float, float]
    samples: list[tuple[float, float, float]] = field(default_factory=list)
    stats: TrajectoryStats = field(default_factory=TrajectoryStats)
    loop_annotations: list[LoopAnnotation] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def positions(self) -> np.ndarray:
        return np.array([(s[1], s[2]) for s in self.samples]).reshape(-1, 2)

    @property
    def final(self) -> tuple[float, float, float]:
        return self.samples[-1]

    def position_at(self, t: float) -> np.ndarray:
        times = self.times
        pos = self.positions
        return np.array([np.interp(t, times, pos[:, 0]), np.interp(t, times, pos[:, 1])])


@dataclass
class ChaosReport:
    """Stretching-number verdict for one initial condition.

    Attributes:
        ic: (x0, y0, t0)
        horizon: Integrated time span
        stretching_number: Mean log growth of a tangent vector per unit time
        classification: Ordered, chaotic or undetermined
        unit_stretching: Log growth over each renormalization interval
        confidence: Bootstrap interval of the mean
    """

    ic: tuple[float, float, float]
    horizon: float
    stretching_number: float
    classification: ChaosClass
    unit_stretching: list[float] = field(default_factory=list)
    confidence: tuple[float, float] = (float("nan"), float("nan"))
