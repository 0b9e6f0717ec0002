"""Nodal points: structure classification, analytic solvers, tracking, grid scan.

For three-mode states in which two modes share a quantum number (say m), psi
factors as psi_m(x) A(y, t) + psi_mk(x) B(y, t). The imaginary part of
psi * conj(w_k) then depends on y alone, giving a one-variable "row" equation
whose real roots are the rows of moving nodes; on each row a second
one-variable equation in x gives the nodes themselves. Both are solved as
Hermite series, so nodes far out on their way to infinity are still found.

Everything else is handled numerically by a vortex scan of the reduced field
followed by Newton refinement and continuation.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from bohmlab.config import Settings, get_settings
from bohmlab.core.eigenbasis import hermite_roots, reduced_series_roots, reduced_table
from bohmlab.core.errors import DegenerateState, DegenerateTime, LostNode
from bohmlab.core.models import (
    EventKind,
    NodeEvent,
    NodeKind,
    NodeRecord,
    NodeStatus,
    NodeTrack,
    StructureClass,
    StructureTag,
    SuperpositionSpec,
)
from bohmlab.core.wavefield import eval_reduced, mode_weights

logger = logging.getLogger(__name__)

Region = tuple[float, float, float, float]

SINE_FLOOR = 1e-12
EVENT_OFFSET = 1e-6
MIN_DT = 1e-9


# =============================================================================
# Classification
# =============================================================================


def _pairs(values: Sequence[int]) -> list[tuple[int, int]]:
    return [(i, j) for i in range(3) for j in range(i + 1, 3) if values[i] == values[j]]


def classify(spec: SuperpositionSpec) -> StructureClass:
    """Tag a three-mode state by its coinciding quantum numbers.

    Two equal m's take precedence over two equal n's when both occur. For
    the two-equal tags the fixed nodes are (roots of psi_shared) x (roots of
    psi of the lone mode along the other axis), m1 * n3 points in all.

    Raises:
        ValueError: If the state does not have exactly three modes
    """
    if spec.k != 3:
        raise ValueError(f"Structure classification needs k = 3 modes, got {spec.k}")
    m = [mode.m for mode in spec.modes]
    n = [mode.n for mode in spec.modes]
    w1 = math.sqrt(spec.params.omega1)
    w2 = math.sqrt(spec.params.omega2)

    if len(set(m)) == 1:
        return StructureClass(
            StructureTag.THREE_EQUAL_M, fixed_x_roots=list(hermite_roots(m[0]) / w1)
        )
    if len(set(n)) == 1:
        return StructureClass(
            StructureTag.THREE_EQUAL_N, fixed_y_roots=list(hermite_roots(n[0]) / w2)
        )

    m_pairs = _pairs(m)
    if m_pairs:
        i, j = m_pairs[0]
        k = 3 - i - j
        return StructureClass(
            StructureTag.TWO_EQUAL_M,
            fixed_x_roots=list(hermite_roots(m[i]) / w1),
            fixed_y_roots=list(hermite_roots(n[k]) / w2),
            shared=(i, j),
            lone=k,
        )
    n_pairs = _pairs(n)
    if n_pairs:
        i, j = n_pairs[0]
        k = 3 - i - j
        return StructureClass(
            StructureTag.TWO_EQUAL_N,
            fixed_x_roots=list(hermite_roots(m[k]) / w1),
            fixed_y_roots=list(hermite_roots(n[i]) / w2),
            shared=(i, j),
            lone=k,
        )
    if set(m) == {0, 1, 2} or set(n) == {0, 1, 2}:
        return StructureClass(StructureTag.ALL_DISTINCT_SMALL)
    return StructureClass(StructureTag.GENERAL_NUMERIC)


# =============================================================================
# Analytic two-equal solver
# =============================================================================


@dataclass
class _Axes:
    """Two-equal state seen with the shared quantum number on axis 'a'.

    For TWO_EQUAL_N the roles of x and y are exchanged; ``swap`` records it.
    """

    p: int  # shared level along a
    pk: int  # lone mode's level along a
    qi: int
    qj: int
    qk: int
    root_a: float
    root_b: float
    i: int
    j: int
    k: int
    swap: bool

    def to_xy(self, a: float, b: float) -> tuple[float, float]:
        return (b, a) if self.swap else (a, b)


def _axes(spec: SuperpositionSpec, structure: StructureClass) -> _Axes:
    if not structure.is_analytic or structure.shared is None or structure.lone is None:
        raise ValueError(f"No analytic node solver for structure {structure.tag.value}")
    i, j = structure.shared
    k = structure.lone
    swap = structure.tag == StructureTag.TWO_EQUAL_N
    a_levels = spec.n_values if swap else spec.m_values
    b_levels = spec.m_values if swap else spec.n_values
    omega_a = spec.params.omega2 if swap else spec.params.omega1
    omega_b = spec.params.omega1 if swap else spec.params.omega2
    return _Axes(
        p=int(a_levels[i]),
        pk=int(a_levels[k]),
        qi=int(b_levels[i]),
        qj=int(b_levels[j]),
        qk=int(b_levels[k]),
        root_a=math.sqrt(omega_a),
        root_b=math.sqrt(omega_b),
        i=i,
        j=j,
        k=k,
        swap=swap,
    )


def _row_weights(spec: SuperpositionSpec, axes: _Axes, t: float) -> tuple[float, float]:
    """Weights of h_qi and h_qj in the row equation Im(psi conj(w_k)) / psi_p = 0."""
    w = mode_weights(spec, t)
    if w[axes.k] == 0:
        raise DegenerateState("The lone mode has a zero coefficient; nodes are not isolated")
    alpha = float(np.imag(w[axes.i] * np.conj(w[axes.k])))
    beta = float(np.imag(w[axes.j] * np.conj(w[axes.k])))
    size_i = abs(w[axes.i] * w[axes.k])
    size_j = abs(w[axes.j] * w[axes.k])
    sine_i = abs(alpha) / size_i if size_i else 0.0
    sine_j = abs(beta) / size_j if size_j else 0.0
    if sine_i < SINE_FLOOR and sine_j < SINE_FLOOR:
        raise DegenerateTime(t, "both relative-phase sines vanish")
    return alpha, beta


def _row_series(axes: _Axes, alpha: float, beta: float) -> dict[int, float]:
    weights: dict[int, float] = {}
    for level, weight in ((axes.qi, alpha), (axes.qj, beta)):
        weights[level] = weights.get(level, 0.0) + weight
    return weights


def _row_roots(spec: SuperpositionSpec, axes: _Axes, t: float) -> np.ndarray:
    alpha, beta = _row_weights(spec, axes, t)
    return reduced_series_roots(_row_series(axes, alpha, beta))


def moving_node_y_equation(
    spec: SuperpositionSpec, t: float, structure: StructureClass | None = None
) -> list[float]:
    """Real roots of the row equation of moving nodes.

    With real positive coefficients this is
    a psi_n1(y) sin(phi1 - phi3) + b psi_n2(y) sin(phi2 - phi3) = 0; in general
    the weights are Im(w_i conj(w_k)). For a TWO_EQUAL_N state the returned
    values are x coordinates of node columns.

    Raises:
        DegenerateTime: If both weights vanish at t
        ValueError: If the state has no analytic solver
    """
    structure = structure or classify(spec)
    axes = _axes(spec, structure)
    return [float(eta / axes.root_b) for eta in _row_roots(spec, axes, t)]


@dataclass
class _Row:
    b: float
    a_roots: list[float] = field(default_factory=list)


def _solve_rows(spec: SuperpositionSpec, axes: _Axes, t: float) -> list[_Row]:
    w = mode_weights(spec, t)
    rows: list[_Row] = []
    for eta in _row_roots(spec, axes, t):
        lmax = max(axes.qi, axes.qj, axes.qk)
        h, _ = reduced_table(lmax, eta)
        shared = (w[axes.i] * h[axes.qi] + w[axes.j] * h[axes.qj]) * np.conj(w[axes.k])
        lone = abs(w[axes.k]) ** 2 * h[axes.qk]
        weights: dict[int, float] = {axes.p: float(np.real(shared))}
        weights[axes.pk] = weights.get(axes.pk, 0.0) + float(lone)
        if all(abs(v) == 0.0 for v in weights.values()):
            logger.warning("Row at eta=%.6g is degenerate at t=%.9g; skipped", eta, t)
            continue
        xi_roots = reduced_series_roots(weights)
        rows.append(_Row(b=float(eta / axes.root_b), a_roots=[float(r / axes.root_a) for r in xi_roots]))
    return rows


def fixed_nodes(spec: SuperpositionSpec, structure: StructureClass | None = None) -> list[tuple[float, float]]:
    """Time-independent isolated nodes, rows top to bottom, left to right."""
    structure = structure or classify(spec)
    return structure.fixed_nodes


def solve_moving_nodes(
    spec: SuperpositionSpec,
    t: float,
    structure: StructureClass | None = None,
) -> list[NodeRecord]:
    """All real moving nodes of a two-equal state at time t.

    Ids are provisional (0..N-1 in row order); use :func:`label_nodes` for
    the census numbering.

    Raises:
        DegenerateTime: If the row equation is an identity at t
    """
    structure = structure or classify(spec)
    axes = _axes(spec, structure)
    records: list[NodeRecord] = []
    for row in _solve_rows(spec, axes, t):
        for a in row.a_roots:
            records.append(
                NodeRecord(
                    id=len(records),
                    kind=NodeKind.MOVING,
                    position=axes.to_xy(a, row.b),
                    t=t,
                )
            )
    return records


def label_nodes(
    nodes: Sequence[tuple[float, float, NodeKind]],
    escape_radius: float | None = None,
    t: float = 0.0,
) -> list[NodeRecord]:
    """Number a node census sequentially.

    Rows (equal y) run top to bottom, nodes inside a row left to right, and
    nodes beyond the escape radius go last in their row.
    """
    radius = get_settings().escape_radius if escape_radius is None else escape_radius

    def key(item: tuple[float, float, NodeKind]) -> tuple[float, bool, float]:
        x, y, _ = item
        return (-round(y, 9), math.hypot(x, y) > radius, x)

    ordered = sorted(nodes, key=key)
    return [
        NodeRecord(
            id=index + 1,
            kind=kind,
            position=(x, y),
            t=t,
            status=NodeStatus.ESCAPED if math.hypot(x, y) > radius else NodeStatus.ACTIVE,
        )
        for index, (x, y, kind) in enumerate(ordered)
    ]


def node_census(
    spec: SuperpositionSpec,
    t: float,
    settings: Settings | None = None,
    region: Region = (-5.0, 5.0, -5.0, 5.0),
    resolution: int = 400,
) -> list[NodeRecord]:
    """Every node at time t, numbered by :func:`label_nodes`.

    Two-equal states use the analytic solvers and report all nodes; other
    states are scanned over ``region`` and every node counts as moving.

    Raises:
        ValueError: For states with nodal lines
    """
    settings = settings or get_settings()
    structure = classify(spec) if spec.k == 3 else StructureClass(StructureTag.GENERAL_NUMERIC)
    if structure.tag in (StructureTag.THREE_EQUAL_M, StructureTag.THREE_EQUAL_N):
        raise ValueError("Three-equal states have nodal lines, not isolated nodes")
    if structure.is_analytic:
        items = [(x, y, NodeKind.FIXED) for x, y in structure.fixed_nodes]
        items += [(r.x, r.y, NodeKind.MOVING) for r in solve_moving_nodes(spec, t, structure)]
    else:
        items = [(x, y, NodeKind.MOVING) for x, y in grid_scan_nodes(spec, t, region, resolution)]
    return label_nodes(items, settings.escape_radius, t)


# =============================================================================
# Event times
# =============================================================================


def _sign_change_roots(func, t0: float, t1: float, step: float) -> list[float]:
    grid = np.linspace(t0, t1, max(int(math.ceil((t1 - t0) / step)), 1) + 1)
    values = np.array([func(t) for t in grid])
    roots: list[float] = []
    for left, right, f_left, f_right in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if f_left == 0.0:
            roots.append(float(left))
        elif f_left * f_right < 0.0:
            roots.append(float(optimize.brentq(func, left, right, xtol=1e-14, rtol=1e-15)))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(set(roots))


@dataclass
class EventTimes:
    """Analytic special instants of a two-equal state inside a window.

    Attributes:
        escapes: A row passes through infinity (leading row weight vanishes)
        collisions: (t, fixed-row coordinate) where a row crosses a fixed row
    """

    escapes: list[float]
    collisions: list[tuple[float, float]]

    @property
    def all_times(self) -> list[float]:
        return sorted(set(self.escapes) | {t for t, _ in self.collisions})


def event_times(
    spec: SuperpositionSpec,
    t0: float,
    t1: float,
    structure: StructureClass | None = None,
    scan_step: float = 1e-3,
) -> EventTimes:
    """Escape and collision instants of the moving rows in [t0, t1]."""
    structure = structure or classify(spec)
    axes = _axes(spec, structure)

    def weights(t: float) -> tuple[float, float]:
        w = mode_weights(spec, t)
        return (
            float(np.imag(w[axes.i] * np.conj(w[axes.k]))),
            float(np.imag(w[axes.j] * np.conj(w[axes.k]))),
        )

    lead_index = 0 if axes.qi > axes.qj else 1
    escapes = _sign_change_roots(lambda t: weights(t)[lead_index], t0, t1, scan_step)

    collisions: list[tuple[float, float]] = []
    for eta in hermite_roots(axes.qk):
        h, _ = reduced_table(max(axes.qi, axes.qj), eta)

        def crossing(t: float, h=h) -> float:
            alpha, beta = weights(t)
            return alpha * h[axes.qi] + beta * h[axes.qj]

        for t_c in _sign_change_roots(crossing, t0, t1, scan_step):
            collisions.append((t_c, float(eta / axes.root_b)))
    collisions.sort()
    return EventTimes(escapes=escapes, collisions=collisions)


# =============================================================================
# Refinement and grid scan
# =============================================================================


def refine_node(
    spec: SuperpositionSpec,
    x0: float,
    y0: float,
    t: float,
    max_step: float | None = None,
) -> tuple[float, float] | None:
    """Newton refinement of a node on (Re F, Im F) of the reduced field.

    Returns:
        The refined (x, y), or None if the solve did not converge to a zero
    """

    def residual(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        value, fx, fy, _ = eval_reduced(spec, p[0], p[1], t)
        jac = np.array([[fx.real, fy.real], [fx.imag, fy.imag]])
        return np.array([value.real, value.imag]), jac

    start = np.array([x0, y0], dtype=float)
    solution = optimize.root(residual, start, jac=True, method="hybr", options={"xtol": 1e-14})
    p = solution.x
    if not np.all(np.isfinite(p)):
        return None
    value, _, _, scale = eval_reduced(spec, p[0], p[1], t)
    if abs(value) > 1e-12 * max(1.0, float(scale)):
        return None
    if max_step is not None and math.hypot(p[0] - x0, p[1] - y0) > max_step:
        return None
    return float(p[0]), float(p[1])


def _product_state_nodes(spec: SuperpositionSpec, region: Region) -> list[tuple[float, float]]:
    index = next(i for i, c in enumerate(spec.coefficients) if c != 0)
    mode = spec.modes[index]
    xs = hermite_roots(mode.m) / math.sqrt(spec.params.omega1)
    ys = hermite_roots(mode.n) / math.sqrt(spec.params.omega2)
    x0, x1, y0, y1 = region
    return [
        (float(x), float(y))
        for y in sorted(ys, reverse=True)
        for x in xs
        if x0 <= x <= x1 and y0 <= y <= y1
    ]


def _winding(phase: np.ndarray) -> np.ndarray:
    """Integer phase winding around every cell of a grid of angles."""

    def wrap(d: np.ndarray) -> np.ndarray:
        return (d + np.pi) % (2 * np.pi) - np.pi

    p00 = phase[:-1, :-1]
    p01 = phase[:-1, 1:]
    p11 = phase[1:, 1:]
    p10 = phase[1:, :-1]
    total = wrap(p01 - p00) + wrap(p11 - p01) + wrap(p10 - p11) + wrap(p00 - p10)
    return np.rint(total / (2 * np.pi)).astype(int)


def _changes_sign(values: np.ndarray) -> np.ndarray:
    corners = np.stack([values[:-1, :-1], values[:-1, 1:], values[1:, :-1], values[1:, 1:]])
    return (corners.min(axis=0) <= 0.0) & (corners.max(axis=0) >= 0.0)


def grid_scan_nodes(
    spec: SuperpositionSpec,
    t: float,
    region: Region = (-5.0, 5.0, -5.0, 5.0),
    resolution: int = 400,
    dedup_tol: float = 1e-6,
) -> list[tuple[float, float]]:
    """Locate every node in a rectangle by scanning for vortex cells.

    A cell is a candidate when Re F and Im F both change sign over its
    corners or the phase winds around it. Candidates are refined by Newton
    on the reduced field and deduplicated.

    Args:
        spec: The state
        t: Time
        region: (xmin, xmax, ymin, ymax)
        resolution: Cells per axis, at least 100

    Returns:
        Node positions inside the region, rows top to bottom, left to right
    """
    if resolution < 100:
        raise ValueError(f"resolution must be >= 100, got {resolution}")
    x0, x1, y0, y1 = region
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"Empty region {region}")
    if sum(1 for c in spec.coefficients if c != 0) == 1:
        return _product_state_nodes(spec, region)

    xs = np.linspace(x0, x1, resolution + 1)
    ys = np.linspace(y0, y1, resolution + 1)
    X, Y = np.meshgrid(xs, ys)
    value, _, _, _ = eval_reduced(spec, X, Y, t)
    candidates = (_changes_sign(value.real) & _changes_sign(value.imag)) | (
        _winding(np.angle(value)) != 0
    )

    found: list[tuple[float, float]] = []
    half = 0.5 * (xs[1] - xs[0]), 0.5 * (ys[1] - ys[0])
    for row, col in zip(*np.nonzero(candidates)):
        guess = (xs[col] + half[0], ys[row] + half[1])
        point = refine_node(spec, guess[0], guess[1], t)
        if point is None:
            continue
        px, py = point
        if not (x0 <= px <= x1 and y0 <= py <= y1):
            continue
        if any(math.hypot(px - qx, py - qy) < dedup_tol for qx, qy in found):
            continue
        found.append(point)
    return sorted(found, key=lambda p: (-p[1], p[0]))


# =============================================================================
# Node velocity
# =============================================================================


def node_velocity(
    spec: SuperpositionSpec,
    node: NodeRecord,
    h: float = 1e-5,
) -> tuple[float, float]:
    """Velocity of a node by re-locating it at t +- h.

    Fixed nodes have zero velocity.

    Raises:
        LostNode: If the node cannot be re-located on either side
    """
    if node.kind == NodeKind.FIXED:
        return 0.0, 0.0
    after = refine_node(spec, node.x, node.y, node.t + h, max_step=1e3 * h + 1e-3)
    before = refine_node(spec, node.x, node.y, node.t - h, max_step=1e3 * h + 1e-3)
    if after is None or before is None:
        raise LostNode(node.id, node.t)
    return (after[0] - before[0]) / (2 * h), (after[1] - before[1]) / (2 * h)


# =============================================================================
# Tracking
# =============================================================================


def _projective(points: np.ndarray) -> np.ndarray:
    """Map the plane to a torus so passages through infinity stay continuous."""
    return 2.0 * np.arctan(points)


def _match(previous: np.ndarray, current: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(previous) == 0 or len(current) == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    delta = _projective(previous)[:, None, :] - _projective(current)[None, :, :]
    delta = (delta + np.pi) % (2 * np.pi) - np.pi
    cost = np.sum(delta**2, axis=-1)
    return optimize.linear_sum_assignment(cost)


def _wrapped(before: np.ndarray, after: np.ndarray) -> bool:
    """True if a coordinate changed sign through infinity rather than zero."""
    raw = _projective(after) - _projective(before)
    return bool(np.any(np.abs(raw) > np.pi))


class _TrackBuilder:
    """Shared bookkeeping of the analytic and numeric trackers."""

    def __init__(self, settings: Settings, fixed: list[NodeRecord]) -> None:
        self.settings = settings
        self.fixed = fixed
        self.tracks: dict[int, NodeTrack] = {}
        self.contact: dict[int, int | None] = {}
        self.next_id = 1

    def status(self, x: float, y: float) -> NodeStatus:
        if math.hypot(x, y) > self.settings.escape_radius:
            return NodeStatus.ESCAPED
        return NodeStatus.ACTIVE

    def open(self, track_id: int, kind: NodeKind) -> NodeTrack:
        track = NodeTrack(id=track_id, kind=kind)
        self.tracks[track_id] = track
        self.contact[track_id] = None
        self.next_id = max(self.next_id, track_id + 1)
        return track

    def nearest_fixed(self, x: float, y: float) -> tuple[int | None, float]:
        best: tuple[int | None, float] = (None, math.inf)
        for record in self.fixed:
            distance = math.hypot(x - record.x, y - record.y)
            if distance < best[1]:
                best = (record.id, distance)
        return best

    def record(
        self,
        track: NodeTrack,
        t: float,
        x: float,
        y: float,
        event_times: Sequence[float] = (),
    ) -> None:
        status = self.status(x, y)
        if track.kind == NodeKind.MOVING:
            partner, distance = self.nearest_fixed(x, y)
            if distance < self.settings.collision_tol:
                status = NodeStatus.COLLIDED
                if self.contact[track.id] != partner:
                    when = min(event_times, key=lambda s: abs(s - t), default=t)
                    if abs(when - t) > 10 * EVENT_OFFSET:
                        when = t
                    track.events.append(
                        NodeEvent(when, EventKind.COLLISION_WITH_FIXED, partner, (x, y))
                    )
                    logger.info("Node %d meets fixed node %s at t=%.6f", track.id, partner, when)
                self.contact[track.id] = partner
            else:
                self.contact[track.id] = None
            if track.statuses and track.statuses[-1] == NodeStatus.ESCAPED and status != NodeStatus.ESCAPED:
                track.events.append(NodeEvent(t, EventKind.REAPPEARANCE, None, (x, y)))
        track.append(t, x, y, status)

    def escape(self, track: NodeTrack, t_before: float, t_after: float, escapes: Sequence[float]) -> None:
        inside = [s for s in escapes if t_before - EVENT_OFFSET <= s <= t_after + EVENT_OFFSET]
        when = inside[0] if inside else 0.5 * (t_before + t_after)
        track.events.append(NodeEvent(when, EventKind.ESCAPE_TO_INFINITY))
        logger.info("Node %d passes through infinity at t=%.6f", track.id, when)

    def lose(self, track: NodeTrack, t: float, position: tuple[float, float]) -> None:
        track.events.append(NodeEvent(t, EventKind.LOST, None, position))
        logger.warning("%s; track closed", LostNode(track.id, t))


def _time_grid(t0: float, t1: float, dt_max: float, forced: Sequence[float]) -> list[float]:
    grid = set(np.linspace(t0, t1, max(int(math.ceil((t1 - t0) / dt_max)), 1) + 1).tolist())
    for t_c in forced:
        for t in (t_c - EVENT_OFFSET, t_c + EVENT_OFFSET):
            if t0 < t < t1:
                grid.add(t)
    ordered = sorted(grid)
    # drop grid points that crowd a forced sample
    cleaned = [ordered[0]]
    for t in ordered[1:]:
        if t - cleaned[-1] > 0.5 * EVENT_OFFSET:
            cleaned.append(t)
    return cleaned


def _moving_positions(spec: SuperpositionSpec, structure: StructureClass, t: float) -> np.ndarray:
    records = solve_moving_nodes(spec, t, structure)
    return np.array([r.position for r in records], dtype=float).reshape(-1, 2)


def _track_analytic(
    spec: SuperpositionSpec,
    structure: StructureClass,
    t0: float,
    t1: float,
    dt_max: float,
    settings: Settings,
) -> list[NodeTrack]:
    census = node_census(spec, t0, settings)
    fixed = [r for r in census if r.kind == NodeKind.FIXED]
    builder = _TrackBuilder(settings, fixed)
    for record in fixed:
        builder.open(record.id, NodeKind.FIXED)
    moving_ids: list[int] = []
    previous = []
    for record in census:
        if record.kind == NodeKind.MOVING:
            builder.open(record.id, NodeKind.MOVING)
            moving_ids.append(record.id)
            previous.append(record.position)
    previous_pos = np.array(previous, dtype=float).reshape(-1, 2)

    events = event_times(spec, t0, t1, structure)
    collision_times = [t for t, _ in events.collisions]
    grid = _time_grid(t0, t1, dt_max, events.all_times)

    def emit(t: float, ids: list[int], positions: np.ndarray) -> None:
        for record in fixed:
            builder.record(builder.tracks[record.id], t, record.x, record.y)
        for track_id, (x, y) in zip(ids, positions):
            builder.record(builder.tracks[track_id], t, float(x), float(y), collision_times)

    emit(t0, moving_ids, previous_pos)
    t_prev = t0
    index = 1
    while index < len(grid):
        target = grid[index]
        t = target
        while True:
            current = _moving_positions(spec, structure, t)
            rows, cols = _match(previous_pos, current)
            jumps = [
                math.dist(previous_pos[r], current[c])
                for r, c in zip(rows, cols)
                if builder.status(*previous_pos[r]) == NodeStatus.ACTIVE
                and builder.status(*current[c]) == NodeStatus.ACTIVE
            ]
            if not jumps or max(jumps) <= settings.continuation_jump_max or t - t_prev < MIN_DT:
                break
            t = t_prev + 0.5 * (t - t_prev)

        new_ids = [0] * len(current)
        for r, c in zip(rows, cols):
            track_id = moving_ids[r]
            new_ids[c] = track_id
            if _wrapped(previous_pos[r], current[c]):
                builder.escape(builder.tracks[track_id], t_prev, t, events.all_times)
        matched = set(cols.tolist())
        for c in range(len(current)):
            if c not in matched:
                track = builder.open(builder.next_id, NodeKind.MOVING)
                new_ids[c] = track.id
                logger.info("New moving node %d appears at t=%.6f", track.id, t)
        matched_rows = set(rows.tolist())
        for r in range(len(previous_pos)):
            if r not in matched_rows:
                x, y = previous_pos[r]
                builder.lose(builder.tracks[moving_ids[r]], t, (float(x), float(y)))

        emit(t, new_ids, current)
        moving_ids, previous_pos, t_prev = new_ids, current, t
        if t == target:
            index += 1
    return [builder.tracks[key] for key in sorted(builder.tracks)]


def _track_numeric(
    spec: SuperpositionSpec,
    t0: float,
    t1: float,
    dt_max: float,
    settings: Settings,
    region: Region,
    resolution: int,
) -> list[NodeTrack]:
    start = grid_scan_nodes(spec, t0, region, resolution)
    census = label_nodes([(x, y, NodeKind.MOVING) for x, y in start], settings.escape_radius, t0)
    builder = _TrackBuilder(settings, [])
    alive: dict[int, tuple[float, float]] = {}
    for record in census:
        builder.record(builder.open(record.id, NodeKind.MOVING), t0, record.x, record.y)
        alive[record.id] = record.position

    grid = _time_grid(t0, t1, dt_max, [])
    t_prev = t0
    index = 1
    while index < len(grid) and alive:
        t = grid[index]
        while True:
            moved: dict[int, tuple[float, float] | None] = {}
            for track_id, (x, y) in alive.items():
                moved[track_id] = refine_node(spec, x, y, t, max_step=settings.continuation_jump_max)
            if all(p is not None for p in moved.values()) or t - t_prev < MIN_DT:
                break
            t = t_prev + 0.5 * (t - t_prev)
        for track_id, point in moved.items():
            if point is None:
                builder.lose(builder.tracks[track_id], t, alive[track_id])
                del alive[track_id]
                continue
            builder.record(builder.tracks[track_id], t, point[0], point[1])
            alive[track_id] = point
        t_prev = t
        if t == grid[index]:
            index += 1
    return [builder.tracks[key] for key in sorted(builder.tracks)]


def track_nodes(
    spec: SuperpositionSpec,
    t0: float,
    t1: float,
    dt_max: float = 0.01,
    settings: Settings | None = None,
    region: Region = (-5.0, 5.0, -5.0, 5.0),
    resolution: int = 400,
) -> list[NodeTrack]:
    """Follow every node of a state through [t0, t1].

    Two-equal states use the analytic row solver with projective matching,
    so rows passing through infinity keep their identity; escape and
    collision instants are computed in advance and bracketed by samples at
    +- 1e-6. Other states are found by grid scan at t0 and continued by
    Newton steps; a node that cannot be re-localized is logged and its track
    closed. The step is halved whenever a node inside the escape radius
    jumps more than ``continuation_jump_max``.

    Args:
        spec: The state
        t0: Start time
        t1: End time, > t0
        dt_max: Largest time step
        settings: Numerical defaults, process settings if omitted
        region: Scan rectangle for numeric tracking
        resolution: Scan resolution for numeric tracking

    Returns:
        Tracks sorted by id; ids follow the census numbering at t0

    Raises:
        ValueError: For t1 <= t0 or states with nodal lines
    """
    if not t1 > t0:
        raise ValueError(f"Need t0 < t1, got {t0}, {t1}")
    settings = settings or get_settings()
    structure = classify(spec) if spec.k == 3 else StructureClass(StructureTag.GENERAL_NUMERIC)
    if structure.tag in (StructureTag.THREE_EQUAL_M, StructureTag.THREE_EQUAL_N):
        raise ValueError("Three-equal states have nodal lines, not trackable points")
    if structure.is_analytic:
        return _track_analytic(spec, structure, t0, t1, dt_max, settings)
    return _track_numeric(spec, t0, t1, dt_max, settings, region, resolution)
