"""Bohmian trajectories with node-aware step control, and loop counting.

The guidance equation dr/dt = Im(grad psi / psi) is integrated with scipy's
DOP853 stepper driven one step at a time. Before every step the largest
allowed step is lowered to

    node_step_factor * (distance to the nearest node) / |v|

so vortex loops around nodes are resolved. The node distance comes from
node tracks when given, otherwise from the local estimate |psi| / |grad psi|.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy.integrate import DOP853

from bohmlab.config import Settings, get_settings
from bohmlab.core.errors import NodeSingularity, StepFailure
from bohmlab.core.models import (
    LoopAnnotation,
    NodeTrack,
    SuperpositionSpec,
    Trajectory,
    TrajectoryStats,
)
from bohmlab.core.wavefield import eval_field, velocity

logger = logging.getLogger(__name__)

MIN_STEP = 1e-12
# function evaluations of scipy's DOP853: per step attempt, at start-up, per dense output
_STAGE_EVALS = 12
_STARTUP_EVALS = 2
_DENSE_EVALS = 3


def _track_distance(tracks: Sequence[NodeTrack], t: float, x: float, y: float) -> float:
    best = math.inf
    for track in tracks:
        nx, ny = track.position_at(t)
        if np.isfinite(nx) and np.isfinite(ny):
            best = min(best, math.hypot(x - nx, y - ny))
    return best


def _local_distance(spec: SuperpositionSpec, t: float, x: float, y: float) -> float:
    sample = eval_field(spec, x, y, t)
    slope = float(np.linalg.norm(np.abs(sample.grad)))
    return abs(sample.psi) / slope if slope > 0 else math.inf


def integrate(
    spec: SuperpositionSpec,
    ic: tuple[float, float, float],
    t_end: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    sample_dt: float | None = None,
    node_tracks: Sequence[NodeTrack] | None = None,
    settings: Settings | None = None,
) -> Trajectory:
    """Integrate one Bohmian trajectory.

    Args:
        spec: The state
        ic: (x0, y0, t0)
        t_end: Final time, > t0
        rel_tol: Relative tolerance of the embedded error estimate
        abs_tol: Absolute tolerance
        sample_dt: Output spacing from dense output; every accepted step if None
        node_tracks: Tracks used for the node-distance step cap
        settings: Numerical defaults, process settings if omitted

    Returns:
        The trajectory with step statistics

    Raises:
        ValueError: If t_end <= t0
        NodeSingularity: If the initial point is a node
        StepFailure: If the step size underflows, typically at a node
    """
    settings = settings or get_settings()
    x0, y0, t0 = ic
    if not t_end > t0:
        raise ValueError(f"t_end must exceed t0, got t0={t0}, t_end={t_end}")
    velocity(spec, x0, y0, t0, settings.psi_floor)

    def rhs(t: float, z: np.ndarray) -> np.ndarray:
        return np.array(velocity(spec, z[0], z[1], t, settings.psi_floor))

    def node_distance(t: float, z: np.ndarray) -> float:
        if node_tracks:
            return _track_distance(node_tracks, t, z[0], z[1])
        return _local_distance(spec, t, z[0], z[1])

    trajectory = Trajectory(ic=(x0, y0, t0), samples=[(t0, x0, y0)])
    stats = TrajectoryStats()
    trajectory.stats = stats

    solver = DOP853(rhs, t0, np.array([x0, y0], dtype=float), t_end, rtol=rel_tol, atol=abs_tol)
    sample_index = 1
    next_sample = t0 + sample_dt if sample_dt else None
    dense_calls = 0

    while solver.status == "running":
        t_old = float(solver.t)
        z_old = solver.y.copy()
        distance = node_distance(t_old, z_old)
        stats.min_node_distance = min(stats.min_node_distance, distance)
        speed = float(np.linalg.norm(solver.f))
        cap = settings.node_step_factor * distance / speed if speed > 0 else math.inf
        if cap < MIN_STEP:
            raise StepFailure("step cap underflow next to a node", t_old, (z_old[0], z_old[1]), trajectory)
        solver.max_step = min(cap, t_end - t0)

        try:
            message = solver.step()
        except NodeSingularity as exc:
            raise StepFailure(f"step landed on a node: {exc}", t_old, (z_old[0], z_old[1]), trajectory) from exc
        if solver.status == "failed":
            raise StepFailure(str(message), t_old, (z_old[0], z_old[1]), trajectory)
        if solver.t - t_old < MIN_STEP and solver.t < t_end:
            raise StepFailure("step size underflow", t_old, (z_old[0], z_old[1]), trajectory)
        stats.steps += 1

        if next_sample is None:
            trajectory.samples.append((float(solver.t), float(solver.y[0]), float(solver.y[1])))
            continue
        dense = None
        while next_sample <= solver.t + 1e-15 and next_sample < t_end:
            if dense is None:
                dense = solver.dense_output()
                dense_calls += 1
            z = dense(next_sample)
            trajectory.samples.append((float(next_sample), float(z[0]), float(z[1])))
            sample_index += 1
            next_sample = t0 + sample_index * sample_dt
        if solver.status == "finished" and trajectory.samples[-1][0] < t_end:
            trajectory.samples.append((float(t_end), float(solver.y[0]), float(solver.y[1])))

    stats.nfev = int(solver.nfev)
    attempts = (stats.nfev - _STARTUP_EVALS - _DENSE_EVALS * dense_calls) // _STAGE_EVALS
    stats.rejected_steps = max(0, attempts - stats.steps)
    logger.debug(
        "Trajectory from (%.6g, %.6g, %.6g): %d steps, min node distance %.3g",
        x0,
        y0,
        t0,
        stats.steps,
        stats.min_node_distance,
    )
    return trajectory


def count_loops(
    traj: Trajectory,
    node_track: NodeTrack,
    loop_radius: float | None = None,
) -> list[LoopAnnotation]:
    """Signed windings of a particle around a node.

    The angle of (particle - node) is unwrapped over every maximal run of
    samples closer than ``loop_radius`` and divided by 2 pi. Samples must be
    dense enough that the angle changes by less than pi between neighbours.
    """
    radius = get_settings().loop_radius if loop_radius is None else loop_radius
    times = traj.times
    if len(times) < 2:
        return []
    relative = traj.positions - node_track.position_at(times)
    distance = np.hypot(relative[:, 0], relative[:, 1])
    inside = np.isfinite(distance) & (distance < radius)

    edges = np.diff(inside.astype(int))
    starts = list(np.nonzero(edges == 1)[0] + 1)
    ends = list(np.nonzero(edges == -1)[0] + 1)
    if inside[0]:
        starts.insert(0, 0)
    if inside[-1]:
        ends.append(len(inside))

    loops: list[LoopAnnotation] = []
    for start, end in zip(starts, ends):
        if end - start < 2:
            continue
        angle = np.unwrap(np.arctan2(relative[start:end, 1], relative[start:end, 0]))
        loops.append(
            LoopAnnotation(
                node_id=node_track.id,
                t_start=float(times[start]),
                t_end=float(times[end - 1]),
                winding=float((angle[-1] - angle[0]) / (2 * math.pi)),
            )
        )
    return loops


def total_loops(annotations: Sequence[LoopAnnotation]) -> float:
    """Sum of absolute windings."""
    return float(sum(abs(a.winding) for a in annotations))


def annotate_loops(
    traj: Trajectory,
    tracks: Sequence[NodeTrack],
    loop_radius: float | None = None,
) -> Trajectory:
    """Attach loop annotations for every given track, in track order."""
    traj.loop_annotations = [
        loop for track in tracks for loop in count_loops(traj, track, loop_radius)
    ]
    return traj
