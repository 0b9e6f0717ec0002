"""X-points: saddles of the frozen-time flow in a node's co-moving frame.

With physical time frozen at t, the relative field v(x, y, t) - v_node is
an autonomous planar flow. Its saddles near a node are the X-points; their
stable and unstable branches are integrated in a fictitious time s.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy import ndimage, optimize
from scipy.integrate import DOP853

from bohmlab.config import get_settings
from bohmlab.core.errors import BohmlabError, NodeSingularity, NoXPointFound
from bohmlab.core.models import (
    AsymptoticCurve,
    CurveBranch,
    NodeKind,
    NodeRecord,
    QuantumPotentialForm,
    StationaryType,
    SuperpositionSpec,
    XPointRecord,
)
from bohmlab.core.nodes import node_census
from bohmlab.core.nodes import node_velocity as relocated_velocity
from bohmlab.core.wavefield import evaluate_grid, flow, potentials, velocity

logger = logging.getLogger(__name__)

SEED_ANGLES = 24
SEED_RADII = (0.05, 0.1, 0.2, 0.4)
RESIDUAL_TOL = 1e-10
DEDUP_TOL = 1e-6
SELF_TOL = 1e-3


def classify_stationary_point(jacobian: np.ndarray, tol: float = 1e-12) -> StationaryType:
    """Linear type of a planar stationary point from trace and determinant."""
    det = float(np.linalg.det(jacobian))
    trace = float(np.trace(jacobian))
    if abs(det) <= tol:
        return StationaryType.DEGENERATE
    if det < 0:
        return StationaryType.SADDLE
    discriminant = trace**2 - 4 * det
    if abs(trace) <= tol:
        return StationaryType.CENTER
    if discriminant >= 0:
        return StationaryType.STABLE_NODE if trace < 0 else StationaryType.UNSTABLE_NODE
    return StationaryType.STABLE_FOCUS if trace < 0 else StationaryType.UNSTABLE_FOCUS


def frame_velocity(
    spec: SuperpositionSpec,
    node: NodeRecord,
    node_velocity: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Velocity of the co-moving frame: zero for fixed nodes, else given or re-located."""
    if node.kind == NodeKind.FIXED:
        return 0.0, 0.0
    if node_velocity is not None:
        return node_velocity
    return relocated_velocity(spec, node)


def comoving_velocity(
    spec: SuperpositionSpec,
    node: NodeRecord,
    node_velocity: tuple[float, float] | None,
    x: float,
    y: float,
    t: float,
) -> tuple[float, float]:
    """Particle velocity relative to a node's frame.

    Raises:
        NodeSingularity: Near any node
    """
    vx, vy = velocity(spec, x, y, t)
    ux, uy = frame_velocity(spec, node, node_velocity)
    return vx - ux, vy - uy


def _saddle_record(
    node: NodeRecord,
    point: np.ndarray,
    t: float,
    frame: tuple[float, float],
    jacobian: np.ndarray,
) -> XPointRecord:
    values, vectors = np.linalg.eig(jacobian)
    values = values.real
    vectors = vectors.real
    order = np.argsort(values)[::-1]
    unstable, stable = order
    eigvecs = tuple(vectors[:, index] / np.linalg.norm(vectors[:, index]) for index in (unstable, stable))
    return XPointRecord(
        frame_node_id=node.id,
        position=(float(point[0] - node.x), float(point[1] - node.y)),
        absolute=(float(point[0]), float(point[1])),
        t=t,
        node_velocity=frame,
        jacobian=jacobian,
        eigenvalues=(float(values[unstable]), float(values[stable])),
        eigvecs=eigvecs,  # type: ignore[arg-type]
    )


def _other_nodes(
    spec: SuperpositionSpec,
    node: NodeRecord,
    t: float,
    nodes: Sequence[tuple[float, float]] | None,
) -> np.ndarray:
    if nodes is None:
        try:
            nodes = [record.position for record in node_census(spec, t)]
        except (BohmlabError, ValueError) as e:
            logger.debug("No census at t=%.6g, X-point ownership not checked: %s", t, e)
            return np.empty((0, 2))
    points = np.asarray(nodes, dtype=float).reshape(-1, 2)
    points = points[np.all(np.isfinite(points), axis=1)]
    if len(points):
        distances = np.hypot(points[:, 0] - node.x, points[:, 1] - node.y)
        nearest = int(np.argmin(distances))
        if distances[nearest] < SELF_TOL:
            points = np.delete(points, nearest, axis=0)
    return points


def owns(
    node_position: tuple[float, float],
    point: tuple[float, float],
    others: np.ndarray,
    ratio: float,
) -> bool:
    """Whether a saddle belongs to the frame node rather than a neighbour.

    The saddle is kept unless some other node is closer by more than
    ``ratio``; X-points sitting between two close nodes belong to both.
    """
    if not len(others):
        return True
    own = math.dist(node_position, point)
    nearest = float(np.min(np.hypot(others[:, 0] - point[0], others[:, 1] - point[1])))
    return own <= ratio * nearest


def find_xpoints(
    spec: SuperpositionSpec,
    node: NodeRecord,
    t: float,
    search_radius: float | None = None,
    node_velocity: tuple[float, float] | None = None,
    nodes: Sequence[tuple[float, float]] | None = None,
) -> list[XPointRecord]:
    """Saddles of the frozen relative flow around a node.

    Newton-type solves (MINPACK hybrid method with the analytic Jacobian)
    start from 24 seeds on each of the rings 0.05, 0.1, 0.2 and 0.4 times
    the search radius. Converged points inside the radius with det J < 0
    are kept and deduplicated. Saddles owned by another node (see
    :func:`owns`) are dropped.

    Args:
        spec: The state
        node: Frame node, positioned at time t
        t: Frozen time
        search_radius: Search disc radius, settings default if omitted
        node_velocity: Frame velocity; re-located numerically if omitted
        nodes: Positions of all nodes at t, the frame node included;
            taken from the census if omitted

    Returns:
        X-points ordered by angle around the node

    Raises:
        NoXPointFound: If no seed converged to a saddle of this node
    """
    settings = get_settings()
    radius = settings.xpoint_search_radius if search_radius is None else search_radius
    others = _other_nodes(spec, node, t, nodes)
    frame = frame_velocity(spec, node, node_velocity)
    shift = np.array(frame)

    def relative(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v, jac = flow(spec, p[0], p[1], t)
        return v - shift, jac

    centre = np.array(node.position)
    found: list[XPointRecord] = []
    for ring in SEED_RADII:
        for step in range(SEED_ANGLES):
            angle = 2 * math.pi * step / SEED_ANGLES
            seed = centre + ring * radius * np.array([math.cos(angle), math.sin(angle)])
            try:
                solution = optimize.root(
                    relative, seed, jac=True, method="hybr", options={"xtol": 1e-13}
                )
                point = solution.x
                residual, jac = relative(point)
            except NodeSingularity:
                continue
            if not np.all(np.isfinite(point)) or np.linalg.norm(residual) > RESIDUAL_TOL:
                continue
            if np.linalg.norm(point - centre) > radius:
                continue
            if classify_stationary_point(jac) != StationaryType.SADDLE:
                continue
            if any(np.linalg.norm(point - np.array(xp.absolute)) < DEDUP_TOL for xp in found):
                continue
            if not owns(node.position, (point[0], point[1]), others, settings.xpoint_owner_ratio):
                logger.debug("Saddle at (%.6g, %.6g) belongs to another node", point[0], point[1])
                continue
            found.append(_saddle_record(node, point, t, frame, jac))

    if not found:
        raise NoXPointFound(f"No X-point within {radius} of node {node.id} at t={t:.6g}")
    found.sort(key=lambda xp: math.atan2(xp.position[1], xp.position[0]))
    logger.debug("Node %d at t=%.6g: %d X-points", node.id, t, len(found))
    return found


def frozen_flow(
    spec: SuperpositionSpec,
    node_position: tuple[float, float],
    frame: tuple[float, float],
    t: float,
    start: tuple[float, float],
    s_span: float,
    stop_radius: float = math.inf,
    max_step: float | None = None,
) -> tuple[list[tuple[float, float, float]], bool]:
    """Integrate the frozen relative flow in fictitious time.

    Coordinates are relative to the node. Negative ``s_span`` integrates
    backwards.

    Returns:
        (samples as (s, u, v), truncated) where truncated marks a stop caused
        by a node singularity or a failed step
    """
    origin = np.array(node_position)
    shift = np.array(frame)

    def rhs(_s: float, p: np.ndarray) -> np.ndarray:
        x, y = origin + p
        vx, vy = velocity(spec, x, y, t)
        return np.array([vx, vy]) - shift

    solver = DOP853(
        rhs,
        0.0,
        np.array(start, dtype=float),
        t_bound=s_span,
        rtol=1e-10,
        atol=1e-12,
        max_step=abs(s_span) / 200 if max_step is None else max_step,
    )
    samples = [(0.0, float(start[0]), float(start[1]))]
    truncated = False
    while solver.status == "running":
        try:
            solver.step()
        except NodeSingularity:
            truncated = True
            break
        if solver.status == "failed":
            truncated = True
            break
        samples.append((float(solver.t), float(solver.y[0]), float(solver.y[1])))
        if math.hypot(*solver.y) > stop_radius:
            break
    return samples, truncated


def asymptotic_curves(
    spec: SuperpositionSpec,
    xp: XPointRecord,
    t_frozen: float | None = None,
    s_span: float = 10.0,
    epsilon: float = 1e-4,
    search_radius: float | None = None,
) -> list[AsymptoticCurve]:
    """The four asymptotic branches of an X-point.

    Unstable branches start at +-epsilon along the unstable eigenvector and
    run forward in s; stable branches start along the stable eigenvector and
    run backward. Integration stops at |s| = s_span or on leaving twice the
    search radius around the node.
    """
    t = xp.t if t_frozen is None else t_frozen
    radius = get_settings().xpoint_search_radius if search_radius is None else search_radius
    base = np.array(xp.position)
    unstable, stable = xp.eigvecs
    plan = (
        (CurveBranch.UNSTABLE_PLUS, unstable, 1.0, s_span),
        (CurveBranch.UNSTABLE_MINUS, unstable, -1.0, s_span),
        (CurveBranch.STABLE_PLUS, stable, 1.0, -s_span),
        (CurveBranch.STABLE_MINUS, stable, -1.0, -s_span),
    )
    curves: list[AsymptoticCurve] = []
    for branch, direction, sign, span in plan:
        start = base + sign * epsilon * np.asarray(direction)
        samples, truncated = frozen_flow(
            spec,
            xp.node_position,
            xp.node_velocity,
            t,
            (float(start[0]), float(start[1])),
            span,
            stop_radius=2 * radius,
        )
        if truncated:
            logger.warning("Branch %s of X-point at %s truncated near a node", branch.value, xp.absolute)
        curves.append(AsymptoticCurve(xpoint=xp, branch=branch, samples=samples, truncated=truncated))
    return curves


def xpoint_potential_check(
    spec: SuperpositionSpec,
    xp: XPointRecord,
    t: float | None = None,
    quantity: str = "Q",
    half_width: float = 0.3,
    points: int = 41,
    exclusion: float = 0.05,
    near: float = 0.15,
    form: QuantumPotentialForm = QuantumPotentialForm.AMPLITUDE,
) -> tuple[float, bool, float]:
    """Distance from an X-point to the nearest local maximum of Q or Vtot.

    The potential is scanned on a square grid centred on the X-point with a
    small disc around the frame node left out.

    Args:
        quantity: "Q" or "Vtot"

    Returns:
        (value at the X-point, offset < near, offset)
    """
    if quantity not in ("Q", "Vtot"):
        raise ValueError(f"quantity must be 'Q' or 'Vtot', got {quantity!r}")
    t = xp.t if t is None else t
    cx, cy = xp.absolute
    axis = np.linspace(-half_width, half_width, points)
    X, Y = np.meshgrid(cx + axis, cy + axis)
    values = evaluate_grid(spec, X, Y, t, form)[quantity]
    nx, ny = xp.node_position
    values = np.where(np.hypot(X - nx, Y - ny) < exclusion, np.nan, values)

    filled = np.where(np.isfinite(values), values, -np.inf)
    peaks = (ndimage.maximum_filter(filled, size=3, mode="nearest") == filled) & np.isfinite(values)
    peaks[0, :] = peaks[-1, :] = peaks[:, 0] = peaks[:, -1] = False

    if peaks.any():
        offset = float(np.min(np.hypot(X[peaks] - cx, Y[peaks] - cy)))
    else:
        offset = math.inf
    _, q, vtot = potentials(spec, cx, cy, t, form)
    value = q if quantity == "Q" else vtot
    return value, offset < near, offset
