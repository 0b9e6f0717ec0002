"""Numerical core of bohmlab."""

from bohmlab.core.errors import (
    BohmlabError,
    DegenerateState,
    DegenerateTime,
    LostNode,
    NodeSingularity,
    NoXPointFound,
    ScenarioError,
    StepFailure,
)
from bohmlab.core.models import (
    AsymptoticCurve,
    ChaosClass,
    ChaosReport,
    CurveBranch,
    EventKind,
    FieldSample,
    LoopAnnotation,
    Mode,
    NodeEvent,
    NodeKind,
    NodeRecord,
    NodeStatus,
    NodeTrack,
    OscillatorParams,
    QuantumPotentialForm,
    StationaryType,
    StructureClass,
    StructureTag,
    SuperpositionSpec,
    Trajectory,
    TrajectoryStats,
    XPointRecord,
)

__all__ = [
    # Errors
    "BohmlabError",
    "DegenerateState",
    "DegenerateTime",
    "LostNode",
    "NodeSingularity",
    "NoXPointFound",
    "ScenarioError",
    "StepFailure",
    # Models
    "AsymptoticCurve",
    "ChaosClass",
    "ChaosReport",
    "CurveBranch",
    "EventKind",
    "FieldSample",
    "LoopAnnotation",
    "Mode",
    "NodeEvent",
    "NodeKind",
    "NodeRecord",
    "NodeStatus",
    "NodeTrack",
    "OscillatorParams",
    "QuantumPotentialForm",
    "StationaryType",
    "StructureClass",
    "StructureTag",
    "SuperpositionSpec",
    "Trajectory",
    "TrajectoryStats",
    "XPointRecord",
]
