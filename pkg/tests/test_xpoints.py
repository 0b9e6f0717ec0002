"""Tests for X-point search and asymptotic curves."""

import math

import numpy as np
import pytest

from bohmlab.core.diagnostics import SpecialCaseOracle, special_case_spec
from bohmlab.core.errors import NoXPointFound
from bohmlab.core.models import (
    CurveBranch,
    NodeKind,
    NodeRecord,
    StationaryType,
    SuperpositionSpec,
)
from bohmlab.core.nodes import node_census
from bohmlab.core.wavefield import velocity
from bohmlab.core.xpoints import (
    asymptotic_curves,
    classify_stationary_point,
    comoving_velocity,
    find_xpoints,
    frame_velocity,
    frozen_flow,
    owns,
    xpoint_potential_check,
)

HALF_ROOT2 = math.sqrt(2.0) / 2


@pytest.fixture
def typical_spec() -> SuperpositionSpec:
    """The typical two-equal state."""
    return SuperpositionSpec.from_terms(
        [(3, 3, 1.0), (3, 4, 1.0), (4, 5, HALF_ROOT2)], 1.0, HALF_ROOT2
    )


@pytest.fixture
def fixed_node() -> NodeRecord:
    """Fixed node 17 of the typical state at t = 0.1."""
    return NodeRecord(id=17, kind=NodeKind.FIXED, position=(math.sqrt(1.5), 0.0), t=0.1)


@pytest.fixture
def census(typical_spec) -> dict[int, NodeRecord]:
    """Census of the typical state at t = 0.1 by node id."""
    return {node.id: node for node in node_census(typical_spec, 0.1)}


@pytest.fixture
def special_node() -> tuple[SuperpositionSpec, NodeRecord, tuple[float, float]]:
    """The moving node of the special case at t = 0.5 with its exact velocity."""
    t = 0.5
    node = NodeRecord(id=1, kind=NodeKind.MOVING, position=SpecialCaseOracle.node_path(t), t=t)
    return special_case_spec(), node, SpecialCaseOracle.node_path_velocity(t)


class TestClassifyStationaryPoint:
    """Tests for the linear classification of planar fixed points."""

    @pytest.mark.parametrize(
        ("matrix", "expected"),
        [
            ([[1.0, 0.0], [0.0, -1.0]], StationaryType.SADDLE),
            ([[-1.0, 0.0], [0.0, -2.0]], StationaryType.STABLE_NODE),
            ([[1.0, 0.0], [0.0, 3.0]], StationaryType.UNSTABLE_NODE),
            ([[0.0, 1.0], [-1.0, 0.0]], StationaryType.CENTER),
            ([[-0.1, 1.0], [-1.0, -0.1]], StationaryType.STABLE_FOCUS),
            ([[1.0, 1.0], [-1.0, 1.0]], StationaryType.UNSTABLE_FOCUS),
            ([[0.0, 0.0], [0.0, 0.0]], StationaryType.DEGENERATE),
        ],
    )
    def test_types(self, matrix, expected):
        """Trace and determinant decide the type."""
        assert classify_stationary_point(np.array(matrix)) == expected


class TestFrame:
    """Tests for the co-moving frame."""

    def test_fixed_frame_is_still(self, typical_spec, fixed_node):
        """Fixed nodes define a resting frame."""
        assert frame_velocity(typical_spec, fixed_node) == (0.0, 0.0)

    def test_comoving_subtracts_frame(self, special_node):
        """Relative velocity is the field velocity minus the node velocity."""
        spec, node, node_v = special_node
        x, y = node.x + 0.3, node.y - 0.2
        vx, vy = velocity(spec, x, y, node.t)
        rx, ry = comoving_velocity(spec, node, node_v, x, y, node.t)
        assert (rx, ry) == pytest.approx((vx - node_v[0], vy - node_v[1]))

    def test_relocated_frame_velocity(self, special_node):
        """Without a given velocity the frame is re-located numerically."""
        spec, node, node_v = special_node
        np.testing.assert_allclose(frame_velocity(spec, node), node_v, atol=1e-6)


class TestFindXPoints:
    """Tests for the saddle search."""

    def test_fixed_node_saddles(self, typical_spec, fixed_node):
        """Saddles next to fixed node 17 are true stationary points."""
        found = find_xpoints(typical_spec, fixed_node, 0.1, search_radius=0.5)
        assert found
        for xp in found:
            assert math.hypot(*xp.position) <= 0.5
            assert np.linalg.det(xp.jacobian) < 0
            assert np.hypot(*velocity(typical_spec, *xp.absolute, 0.1)) < 1e-9
            assert xp.eigenvalues[0] > 0 > xp.eigenvalues[1]

    def test_moving_node_saddle(self, special_node):
        """The moving node of the special case has an X-point in its frame."""
        spec, node, node_v = special_node
        found = find_xpoints(spec, node, node.t, search_radius=1.0, node_velocity=node_v)
        assert found
        for xp in found:
            rx, ry = comoving_velocity(spec, node, node_v, *xp.absolute, node.t)
            assert math.hypot(rx, ry) < 1e-9
            assert xp.position == pytest.approx(
                (xp.absolute[0] - node.x, xp.absolute[1] - node.y)
            )

    def test_jacobian_matches_differences(self, typical_spec, fixed_node):
        """The analytic Jacobian agrees with central differences of the velocity."""
        h = 1e-6
        for xp in find_xpoints(typical_spec, fixed_node, 0.1, search_radius=0.5):
            x, y = xp.absolute
            columns = []
            for dx, dy in ((h, 0.0), (0.0, h)):
                plus = np.array(velocity(typical_spec, x + dx, y + dy, 0.1))
                minus = np.array(velocity(typical_spec, x - dx, y - dy, 0.1))
                columns.append((plus - minus) / (2 * h))
            numeric = np.column_stack(columns)
            np.testing.assert_allclose(xp.jacobian, numeric, rtol=1e-4, atol=1e-4 * np.abs(numeric).max())

    def test_sorted_by_angle(self, typical_spec, fixed_node):
        """Results run counter-clockwise from the negative x axis."""
        found = find_xpoints(typical_spec, fixed_node, 0.1, search_radius=0.5)
        angles = [math.atan2(xp.position[1], xp.position[0]) for xp in found]
        assert angles == sorted(angles)

    def test_none_in_tiny_disc(self, special_node):
        """The vortex core holds no saddle."""
        spec, node, node_v = special_node
        with pytest.raises(NoXPointFound):
            find_xpoints(spec, node, node.t, search_radius=1e-3, node_velocity=node_v)

    def test_node_17_has_two_xpoints(self, typical_spec, census):
        """With the default radius node 17 owns exactly two saddles at t = 0.1."""
        found = find_xpoints(typical_spec, census[17], 0.1)
        assert len(found) == 2
        for xp in found:
            assert np.linalg.det(xp.jacobian) < 0
        assert any(math.dist(xp.absolute, (1.2247, 0.2531)) < 5e-3 for xp in found)
        assert all(math.dist(xp.absolute, (0.364, 0.0)) > 0.1 for xp in found)

    def test_node_14_frame_has_distinct_pair(self, typical_spec, census):
        """Node 14's moving frame has its own pair of saddles, close to but apart from node 17's."""
        fixed_pair = find_xpoints(typical_spec, census[17], 0.1)
        moving_pair = find_xpoints(typical_spec, census[14], 0.1)
        assert len(moving_pair) == 2
        assert all(xp.node_velocity != (0.0, 0.0) for xp in moving_pair)
        for moving in moving_pair:
            gaps = [math.dist(moving.absolute, fixed.absolute) for fixed in fixed_pair]
            assert min(gaps) > 1e-4
            assert min(gaps) < 0.5

    def test_saddle_near_other_node_dropped(self, typical_spec, census):
        """A saddle much closer to node 16 than to node 17 is not node 17's."""
        others = np.array([node.position for node in census if node.id != 17])
        assert not owns(census[17].position, (0.364, 0.0), others, 1.5)
        assert owns(census[17].position, (1.5117, 0.0), others, 1.5)

    def test_explicit_nodes_skip_census(self, typical_spec, fixed_node):
        """Without other nodes every saddle in the disc is kept."""
        alone = find_xpoints(typical_spec, fixed_node, 0.1, nodes=[fixed_node.position])
        assert any(math.dist(xp.absolute, (0.364, 0.0)) < 1e-2 for xp in alone)
        assert len(alone) == len(find_xpoints(typical_spec, fixed_node, 0.1)) + 1

    def test_saddles_persist(self, typical_spec):
        """Node 17's two saddles move continuously over [0.1, 1.5]."""
        node = NodeRecord(id=17, kind=NodeKind.FIXED, position=(math.sqrt(1.5), 0.0), t=0.1)
        previous = [xp.absolute for xp in find_xpoints(typical_spec, node, 0.1)]
        for step in range(2, 16):
            t = step / 10
            current = [xp.absolute for xp in find_xpoints(typical_spec, node, t)]
            assert len(current) >= 2
            followed = [min(current, key=lambda p: math.dist(p, q)) for q in previous]
            for old, new in zip(previous, followed):
                assert math.dist(old, new) < 0.3
            assert followed[0] != followed[1]
            previous = followed


class TestAsymptoticCurves:
    """Tests for the stable and unstable branches."""

    @pytest.fixture
    def xpoint(self, special_node):
        """The first X-point of the special case at t = 0.5."""
        spec, node, node_v = special_node
        return spec, find_xpoints(spec, node, node.t, search_radius=1.0, node_velocity=node_v)[0]

    def test_four_branches(self, xpoint):
        """Every X-point has four branches starting epsilon away."""
        spec, xp = xpoint
        curves = asymptotic_curves(spec, xp, s_span=2.0, epsilon=1e-4)
        assert {c.branch for c in curves} == set(CurveBranch)
        for curve in curves:
            start = curve.points[0]
            assert math.dist(start, xp.position) == pytest.approx(1e-4, rel=1e-9)

    def test_unstable_start_direction(self, xpoint):
        """The first step of an unstable branch follows the unstable eigenvector."""
        spec, xp = xpoint
        curve = next(
            c for c in asymptotic_curves(spec, xp, s_span=1.0) if c.branch == CurveBranch.UNSTABLE_PLUS
        )
        step = curve.points[1] - np.array(xp.position)
        direction = step / np.linalg.norm(step)
        assert abs(float(np.dot(direction, xp.eigvecs[0]))) == pytest.approx(1.0, abs=1e-3)

    def test_branch_directions(self, xpoint):
        """Unstable branches run forward in s and stable ones backward."""
        spec, xp = xpoint
        for curve in asymptotic_curves(spec, xp, s_span=1.0):
            s_values = [s for s, _, _ in curve.samples]
            if curve.branch.is_stable:
                assert s_values[-1] < 0
            else:
                assert s_values[-1] > 0

    def test_unstable_branch_leaves(self, xpoint):
        """Points on an unstable branch move away from the X-point."""
        spec, xp = xpoint
        curve = next(
            c for c in asymptotic_curves(spec, xp, s_span=1.0) if c.branch == CurveBranch.UNSTABLE_PLUS
        )
        distances = [math.dist(p, xp.position) for p in curve.points[:5]]
        assert distances == sorted(distances)

    def test_unstable_branch_retraced(self, xpoint):
        """Running an unstable branch backwards returns to the epsilon ball of its X-point."""
        spec, xp = xpoint
        curve = next(
            c for c in asymptotic_curves(spec, xp, s_span=1.0) if not c.branch.is_stable and not c.truncated
        )
        s_end, u, v = curve.samples[-1]
        back, truncated = frozen_flow(spec, xp.node_position, xp.node_velocity, xp.t, (u, v), -s_end)
        assert not truncated
        _, u0, v0 = back[-1]
        assert math.dist((u0, v0), curve.points[0]) < 1e-6
        assert math.dist((u0, v0), xp.position) < 1.01e-4

    def test_stable_curve_passes_partner(self, typical_spec):
        """A stable branch of one saddle of node 14 runs near the other without ending on it."""
        node = {record.id: record for record in node_census(typical_spec, 0.1)}[14]
        first, second = find_xpoints(typical_spec, node, 0.1)
        partner = np.array(second.position)
        for curve in asymptotic_curves(typical_spec, first, s_span=10.0):
            if not curve.branch.is_stable:
                continue
            gaps = np.linalg.norm(curve.points - partner, axis=1)
            assert gaps.min() > 1e-6


    def test_frozen_flow_stop_radius(self, typical_spec):
        """Integration halts once the stop radius is left."""
        samples, truncated = frozen_flow(
            typical_spec, (0.0, 0.0), (0.0, 0.0), 0.1, (3.0, 3.5), 50.0, stop_radius=4.0
        )
        assert not truncated
        assert len(samples) >= 2
        assert samples[0] == (0.0, 3.0, 3.5)


class TestPotentialCheck:
    """Tests for the quantum-potential maximum check."""

    def test_returns_finite_offset(self, special_node):
        """The check reports a value and a distance to the nearest maximum."""
        spec, node, node_v = special_node
        xp = find_xpoints(spec, node, node.t, search_radius=1.0, node_velocity=node_v)[0]
        value, near, offset = xpoint_potential_check(spec, xp)
        assert math.isfinite(value)
        assert near == (offset < 0.15)

    def test_unknown_quantity(self, typical_spec, fixed_node):
        """Only Q and Vtot can be checked."""
        xp = find_xpoints(typical_spec, fixed_node, 0.1, search_radius=0.5)[0]
        with pytest.raises(ValueError):
            xpoint_potential_check(typical_spec, xp, quantity="rho")

    def test_node_17_offsets(self, typical_spec, census):
        """Q maxima sit about 0.22 from node 17's saddles; Vtot has one within 0.15."""
        found = find_xpoints(typical_spec, census[17], 0.1)
        for xp in found:
            _, near, offset = xpoint_potential_check(typical_spec, xp, quantity="Q")
            assert 0.2 < offset < 0.25
            assert not near
        upper = min(found, key=lambda xp: math.dist(xp.absolute, (1.2247, 0.2531)))
        _, near, offset = xpoint_potential_check(typical_spec, upper, quantity="Vtot")
        assert near
        assert offset < 0.06
