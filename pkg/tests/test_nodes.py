"""Tests for nodal-point classification, solvers and tracking."""

import logging
import math

import numpy as np
import pytest

from bohmlab.config import Settings
from bohmlab.core import nodes as node_module
from bohmlab.core.diagnostics import SpecialCaseOracle, special_case_spec
from bohmlab.core.dynamics import integrate
from bohmlab.core.errors import DegenerateTime
from bohmlab.core.models import (
    EventKind,
    NodeKind,
    NodeRecord,
    NodeStatus,
    StructureTag,
    SuperpositionSpec,
)
from bohmlab.core.nodes import (
    classify,
    event_times,
    fixed_nodes,
    grid_scan_nodes,
    label_nodes,
    moving_node_y_equation,
    node_census,
    node_velocity,
    refine_node,
    solve_moving_nodes,
    track_nodes,
)
from bohmlab.core.wavefield import eval_field, eval_reduced

HALF_ROOT2 = math.sqrt(2.0) / 2
ESCAPE_TIME = math.pi / (1 + HALF_ROOT2)
# roots of H_5 scaled to omega2: sqrt((5 +- sqrt 10) / (2 omega2))
OUTER_ROW = math.sqrt((5 + math.sqrt(10)) / (2 * HALF_ROOT2))
INNER_ROW = math.sqrt((5 - math.sqrt(10)) / (2 * HALF_ROOT2))


@pytest.fixture
def typical_spec() -> SuperpositionSpec:
    """Psi_33 + Psi_34 + (sqrt 2 / 2) Psi_45 with omega2 = sqrt 2 / 2."""
    return SuperpositionSpec.from_terms(
        [(3, 3, 1.0), (3, 4, 1.0), (4, 5, HALF_ROOT2)], 1.0, HALF_ROOT2
    )


@pytest.fixture
def settings() -> Settings:
    """Default numerical settings, independent of the environment."""
    return Settings(_env_file=None)


@pytest.fixture(scope="module")
def typical_tracks():
    """Tracks of the typical state over [0.1, 2.5], computed once."""
    spec = SuperpositionSpec.from_terms(
        [(3, 3, 1.0), (3, 4, 1.0), (4, 5, HALF_ROOT2)], 1.0, HALF_ROOT2
    )
    tracks = track_nodes(spec, 0.1, 2.5, dt_max=0.01, settings=Settings(_env_file=None))
    return {track.id: track for track in tracks}


class TestClassify:
    """Tests for structure classification."""

    def test_typical_is_two_equal_m(self, typical_spec):
        """Two modes share m = 3; fixed nodes are 3 columns times 5 rows."""
        structure = classify(typical_spec)
        assert structure.tag == StructureTag.TWO_EQUAL_M
        np.testing.assert_allclose(structure.fixed_x_roots, [-1.224745, 0.0, 1.224745], atol=1e-6)
        np.testing.assert_allclose(
            sorted(structure.fixed_y_roots),
            [-OUTER_ROW, -INNER_ROW, 0.0, INNER_ROW, OUTER_ROW],
            atol=1e-10,
        )
        assert len(structure.fixed_nodes) == 15

    def test_fixed_nodes_order(self, typical_spec):
        """Fixed nodes run top row first, left to right."""
        nodes = fixed_nodes(typical_spec)
        assert nodes[0][1] == pytest.approx(OUTER_ROW, abs=1e-10)
        assert nodes[0][0] < nodes[1][0] < nodes[2][0]
        assert nodes[-1][1] == pytest.approx(-OUTER_ROW, abs=1e-10)

    def test_three_equal_m(self):
        """Three equal m give nodal lines and no isolated fixed nodes."""
        spec = SuperpositionSpec.from_terms([(2, 0, 1.0), (2, 1, 1.0), (2, 3, 1.0)], 1.0, 0.8)
        structure = classify(spec)
        assert structure.tag == StructureTag.THREE_EQUAL_M
        assert len(structure.fixed_x_roots) == 2
        assert structure.fixed_nodes == []

    def test_two_equal_n(self):
        """Shared n without shared m uses the exchanged-axis solver."""
        spec = SuperpositionSpec.from_terms([(0, 2, 1.0), (1, 2, 1.0), (3, 1, 1.0)], 1.0, 0.9)
        structure = classify(spec)
        assert structure.tag == StructureTag.TWO_EQUAL_N
        assert len(structure.fixed_nodes) == 3 * 2

    def test_all_distinct_small(self):
        """Quantum numbers {0, 1, 2} without coincidences."""
        spec = SuperpositionSpec.from_terms([(0, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)], 1.0, 1.0)
        assert classify(spec).tag == StructureTag.ALL_DISTINCT_SMALL

    def test_general_numeric(self):
        """Anything else falls back to the numeric path."""
        spec = SuperpositionSpec.from_terms([(1, 3, 1.0), (4, 0, 1.0), (6, 5, 1.0)], 1.0, 1.0)
        assert classify(spec).tag == StructureTag.GENERAL_NUMERIC

    def test_requires_three_modes(self):
        """Classification is only defined for k = 3."""
        spec = SuperpositionSpec.from_terms([(0, 0, 1.0), (1, 0, 1.0)], 1.0, 1.0)
        with pytest.raises(ValueError):
            classify(spec)


class TestMovingNodes:
    """Tests for the analytic moving-node solver."""

    def test_sixteen_moving_nodes(self, typical_spec):
        """At t = 0.1 there are 16 moving nodes, all true zeros of psi."""
        nodes = solve_moving_nodes(typical_spec, 0.1)
        assert len(nodes) == 16
        for node in nodes:
            value, _, _, scale = eval_reduced(typical_spec, node.x, node.y, 0.1)
            assert abs(value) <= 1e-10 * max(1.0, scale)
            assert abs(eval_field(typical_spec, node.x, node.y, 0.1).psi) < 1e-8

    def test_census_numbering(self, typical_spec, settings):
        """Census at t = 0.1 numbers 31 nodes; 17 is fixed, 20 and 21 are moving."""
        census = node_census(typical_spec, 0.1, settings)
        assert [node.id for node in census] == list(range(1, 32))
        by_id = {node.id: node for node in census}
        assert by_id[17].kind == NodeKind.FIXED
        assert by_id[17].position == pytest.approx((1.224745, 0.0), abs=1e-6)
        assert by_id[20].kind == NodeKind.MOVING
        assert math.dist(by_id[20].position, (1.2544, -1.1264)) < 2e-2
        assert by_id[21].x < -4.0
        assert by_id[14].position == pytest.approx((1.509, 0.253), abs=5e-3)

    def test_rows_converge_at_escape(self, typical_spec):
        """Just before the escape time the finite rows approach {0, +-1.456475}."""
        escapes = event_times(typical_spec, 1.8, 1.9).escapes
        assert len(escapes) == 1
        t_e = escapes[0]
        assert t_e == pytest.approx(ESCAPE_TIME, abs=1e-9)
        rows = [y for y in moving_node_y_equation(typical_spec, t_e - 1e-9) if abs(y) < 100]
        np.testing.assert_allclose(sorted(rows), [-1.456475, 0.0, 1.456475], atol=1e-6)

    def test_missing_first_mode_gives_hermite_rows(self):
        """With a = 0 the rows are the roots of psi_4 along y."""
        spec = SuperpositionSpec.from_terms(
            [(3, 3, 0.0), (3, 4, 1.0), (4, 5, HALF_ROOT2)], 1.0, HALF_ROOT2
        )
        rows = sorted(moving_node_y_equation(spec, 0.3))
        expected = np.polynomial.hermite.hermgauss(4)[0] / math.sqrt(HALF_ROOT2)
        np.testing.assert_allclose(rows, np.sort(expected), atol=1e-9)

    def test_degenerate_time(self, typical_spec):
        """At t = 0 all relative phases vanish and the row equation is empty."""
        with pytest.raises(DegenerateTime):
            moving_node_y_equation(typical_spec, 0.0)

    def test_exchanged_axes_mirror(self, typical_spec):
        """Swapping x and y gives a two-equal-n state with mirrored nodes."""
        swapped = typical_spec.transposed()
        assert classify(swapped).tag == StructureTag.TWO_EQUAL_N
        original = sorted(node.position for node in solve_moving_nodes(typical_spec, 0.4))
        mirrored = sorted((y, x) for x, y in (node.position for node in solve_moving_nodes(swapped, 0.4)))
        np.testing.assert_allclose(mirrored, original, atol=1e-9)

    def test_special_case_single_node(self):
        """The special case has one node on the closed-form hyperbola."""
        spec = special_case_spec()
        for t in (0.3, 0.7, 1.2, 2.0):
            nodes = solve_moving_nodes(spec, t)
            assert len(nodes) == 1
            np.testing.assert_allclose(nodes[0].position, SpecialCaseOracle.node_path(t), atol=1e-8)


class TestEventTimes:
    """Tests for analytic escape and collision instants."""

    def test_collision_with_top_row(self, typical_spec):
        """A moving row meets the fixed row y = 2.4024 near t = 1.47551."""
        events = event_times(typical_spec, 1.3, 1.6)
        hits = [(t, y) for t, y in events.collisions if abs(y - OUTER_ROW) < 1e-4]
        assert hits
        assert any(abs(t - 1.47551) < 2e-2 for t, _ in hits)

    def test_collision_with_middle_row(self, typical_spec):
        """A moving row meets the fixed row y = 0 at the escape time."""
        events = event_times(typical_spec, 1.8, 1.9)
        assert any(abs(t - ESCAPE_TIME) < 1e-3 and abs(y) < 1e-9 for t, y in events.collisions)


class TestTracking:
    """Tests for node tracking over the typical window."""

    def test_track_count(self, typical_tracks):
        """Every one of the 31 census nodes gets a track."""
        assert set(range(1, 32)) <= set(typical_tracks)

    def test_samples_increase(self, typical_tracks):
        """Track times increase; census tracks start at t0 and fixed ones reach t1."""
        for track in typical_tracks.values():
            times = track.times
            assert np.all(np.diff(times) > 0)
            if track.id <= 31:
                assert times[0] == pytest.approx(0.1)
            if track.kind == NodeKind.FIXED:
                assert times[-1] == pytest.approx(2.5)

    def test_fixed_tracks_do_not_move(self, typical_tracks):
        """Fixed-node tracks stay at their start position."""
        for track in typical_tracks.values():
            if track.kind == NodeKind.FIXED:
                assert np.ptp(track.positions, axis=0) == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_collisions_with_middle_row(self, typical_tracks):
        """Moving nodes 18, 19, 20 meet fixed nodes 15, 16, 17 at t = 1.84025."""
        partners = {}
        for track_id in (18, 19, 20):
            hits = [
                e
                for e in typical_tracks[track_id].events_of(EventKind.COLLISION_WITH_FIXED)
                if abs(e.t - ESCAPE_TIME) < 1e-3
            ]
            assert hits, f"node {track_id} has no collision near {ESCAPE_TIME}"
            partners[track_id] = hits[0].partner_fixed_id
            assert math.dist(hits[0].position, typical_tracks[hits[0].partner_fixed_id].samples[0][1:]) < 1e-3
        assert sorted(partners.values()) == [15, 16, 17]
        assert partners[20] == 17

    def test_quadruplet_escapes(self, typical_tracks):
        """Nodes 4 to 7 pass through infinity at t = pi / (1 + omega2)."""
        for track_id in (4, 5, 6, 7):
            escapes = typical_tracks[track_id].events_of(EventKind.ESCAPE_TO_INFINITY)
            assert any(abs(e.t - 1.840252) < 1e-3 for e in escapes)

    def test_collision_with_top_row(self, typical_tracks):
        """Some moving node meets fixed nodes 1, 2 or 3 near t = 1.47551."""
        hits = [
            e
            for track in typical_tracks.values()
            for e in track.events_of(EventKind.COLLISION_WITH_FIXED)
            if e.partner_fixed_id in (1, 2, 3)
        ]
        assert any(abs(e.t - 1.47551) < 2e-2 for e in hits)

    def test_node_21_turns_back(self, typical_tracks):
        """Node 21 comes in from far left, reaches x of about -3 and recedes."""
        track = typical_tracks[21]
        window = track.times < 1.8
        xs = track.positions[window, 0]
        peak = int(np.argmax(xs))
        assert -4.0 < xs[peak] < -2.0
        assert 0 < peak < len(xs) - 1

    def test_escaped_status_far_out(self, typical_tracks):
        """Samples beyond the escape radius are flagged escaped."""
        for track in typical_tracks.values():
            for (_, x, y), status in zip(track.samples, track.statuses):
                if math.hypot(x, y) > 12.0:
                    assert status == NodeStatus.ESCAPED

    def test_three_equal_rejected(self):
        """States with nodal lines cannot be tracked."""
        spec = SuperpositionSpec.from_terms([(2, 0, 1.0), (2, 1, 1.0), (2, 3, 1.0)], 1.0, 0.8)
        with pytest.raises(ValueError):
            track_nodes(spec, 0.1, 0.5)

    def test_empty_window_rejected(self, typical_spec):
        """t1 must exceed t0."""
        with pytest.raises(ValueError):
            track_nodes(typical_spec, 0.5, 0.5)

    def test_numeric_tracking(self, settings):
        """A four-mode state is tracked by scan and continuation."""
        spec = SuperpositionSpec.from_terms(
            [(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 2, 0.1)], 1.0, 1.0
        )
        tracks = track_nodes(spec, 0.4, 0.6, dt_max=0.02, settings=settings, region=(-4, 4, -4, 4), resolution=200)
        assert tracks
        assert any(track.times[-1] == pytest.approx(0.6) for track in tracks)
        for track in tracks:
            for t, x, y in track.samples:
                value, _, _, scale = eval_reduced(spec, x, y, t)
                assert abs(value) <= 1e-10 * max(1.0, scale)

    def test_trajectory_escapes_node_20(self, typical_spec, typical_tracks, settings):
        """A start next to node 20 stays in its vortex until t = 1.7 and has left it by t = 1.9."""
        trajectory = integrate(typical_spec, (1.25, -1.1195, 0.1), 1.9, settings=settings)
        node = typical_tracks[20]
        early = [(t, x, y) for t, x, y in trajectory.samples if t <= 1.7]
        for t, x, y in early:
            assert math.dist((x, y), node.position_at(t)) < 0.03
        t, x, y = trajectory.final
        assert t == pytest.approx(1.9)
        assert math.dist((x, y), node.position_at(t)) > 0.06

    def test_trajectory_keeps_clear_of_nodes(self, typical_spec, typical_tracks, settings):
        """No accepted step lands within 1e-6 of a tracked node."""
        trajectory = integrate(typical_spec, (1.25, -1.1195, 0.1), 1.9, settings=settings)
        times = trajectory.times
        points = trajectory.positions
        for track in typical_tracks.values():
            gaps = np.linalg.norm(track.position_at(times) - points, axis=1)
            gaps = gaps[np.isfinite(gaps)]
            assert gaps.size == 0 or gaps.min() > 1e-6


class TestLostNodes:
    """Tests for nodes that cannot be followed."""

    @pytest.fixture
    def warnings_seen(self, monkeypatch, caplog):
        """Let package warnings reach caplog even after the CLI configured logging."""
        monkeypatch.setattr(logging.getLogger("bohmlab"), "propagate", True)
        caplog.set_level(logging.WARNING, logger="bohmlab")
        return caplog

    def test_analytic_loss_is_recorded(self, monkeypatch, warnings_seen, settings):
        """A moving node without a successor gets a LOST event and a warning."""
        solve = node_module._moving_positions

        def vanishing(spec, structure, t):
            return solve(spec, structure, t) if t < 0.3 else np.empty((0, 2))

        monkeypatch.setattr(node_module, "_moving_positions", vanishing)
        (track,) = track_nodes(special_case_spec(), 0.1, 0.5, dt_max=0.05, settings=settings)
        (lost,) = track.events_of(EventKind.LOST)
        assert lost.t >= 0.3
        assert lost.position == pytest.approx(tuple(track.positions[-1]), abs=1e-12)
        assert "lost node 1" in warnings_seen.text
        assert track.times[-1] < 0.3

    def test_numeric_loss_is_recorded(self, monkeypatch, warnings_seen, settings):
        """A failed continuation closes the track with a LOST event."""
        refine = node_module.refine_node

        def failing(spec, x, y, t, *args, **kwargs):
            return refine(spec, x, y, t, *args, **kwargs) if t < 0.45 else None

        monkeypatch.setattr(node_module, "refine_node", failing)
        spec = SuperpositionSpec.from_terms(
            [(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 2, 0.1)], 1.0, 1.0
        )
        tracks = track_nodes(spec, 0.4, 0.6, dt_max=0.02, settings=settings, region=(-4, 4, -4, 4), resolution=200)
        assert tracks
        assert all(len(track.events_of(EventKind.LOST)) == 1 for track in tracks)
        assert any(track.events_of(EventKind.LOST)[0].t >= 0.45 for track in tracks)
        assert "track closed" in warnings_seen.text


class TestGridScan:
    """Tests for the vortex grid scan."""

    def test_typical_scan_matches_census(self, typical_spec, settings):
        """The scan on [-5, 5]^2 finds the 30 census nodes inside it."""
        found = grid_scan_nodes(typical_spec, 0.1, (-5.0, 5.0, -5.0, 5.0), resolution=400)
        census = node_census(typical_spec, 0.1, settings)
        inside = [n for n in census if abs(n.x) <= 5 and abs(n.y) <= 5]
        assert len(found) == 30
        assert len(inside) == 30
        for node in inside:
            assert min(math.dist(node.position, p) for p in found) < 1e-6

    @pytest.mark.parametrize("t", [0.15, 0.35, 0.55, 0.75, 0.95, 1.15, 1.35, 1.6, 2.0, 2.3])
    def test_scan_agrees_with_analytic_solver(self, typical_spec, t):
        """Away from collisions the scan and the analytic solver give the same point set."""
        found = grid_scan_nodes(typical_spec, t, (-5.0, 5.0, -5.0, 5.0), resolution=400)
        analytic = fixed_nodes(typical_spec) + [node.position for node in solve_moving_nodes(typical_spec, t)]
        for point in found:
            assert min(math.dist(point, p) for p in analytic) < 1e-6
        for p in analytic:
            if abs(p[0]) < 4.9 and abs(p[1]) < 4.9:
                assert min(math.dist(p, point) for point in found) < 1e-6

    def test_special_case_single_node(self):
        """The special case has exactly one node in [-4, 4]^2 at t = 0.5."""
        found = grid_scan_nodes(special_case_spec(), 0.5, (-4.0, 4.0, -4.0, 4.0))
        assert len(found) == 1
        np.testing.assert_allclose(found[0], SpecialCaseOracle.node_path(0.5), atol=1e-8)

    def test_product_state_crossings(self):
        """A single eigenstate reports the crossings of its nodal lines."""
        spec = SuperpositionSpec.from_terms([(2, 1, 1.0), (0, 0, 0.0)], 1.0, 1.0)
        found = grid_scan_nodes(spec, 0.3, (-3.0, 3.0, -3.0, 3.0))
        np.testing.assert_allclose(sorted(found), [(-HALF_ROOT2, 0.0), (HALF_ROOT2, 0.0)], atol=1e-12)

    def test_resolution_floor(self, typical_spec):
        """Coarser scans than 100 cells per axis are refused."""
        with pytest.raises(ValueError):
            grid_scan_nodes(typical_spec, 0.1, resolution=50)

    def test_refine_converges_to_node(self, typical_spec):
        """Newton refinement pulls a nearby guess onto a fixed node."""
        point = refine_node(typical_spec, 1.222, 0.002, 0.4)
        assert point is not None
        assert point == pytest.approx((math.sqrt(1.5), 0.0), abs=1e-10)


class TestNodeVelocity:
    """Tests for node velocities and labelling."""

    def test_special_case_velocity(self):
        """Differenced node velocity matches the hyperbola derivative."""
        spec = special_case_spec()
        t = 0.7
        x, y = SpecialCaseOracle.node_path(t)
        node = NodeRecord(id=1, kind=NodeKind.MOVING, position=(x, y), t=t)
        np.testing.assert_allclose(node_velocity(spec, node), SpecialCaseOracle.node_path_velocity(t), atol=1e-6)

    def test_fixed_node_is_still(self, typical_spec):
        """Fixed nodes have zero velocity."""
        node = NodeRecord(id=17, kind=NodeKind.FIXED, position=(math.sqrt(1.5), 0.0), t=0.3)
        assert node_velocity(typical_spec, node) == (0.0, 0.0)

    def test_label_order(self):
        """Rows top to bottom, left to right, escaped nodes last in their row."""
        nodes = [
            (0.5, 1.0, NodeKind.MOVING),
            (-20.0, 0.0, NodeKind.MOVING),
            (-1.0, 1.0, NodeKind.FIXED),
            (0.0, 0.0, NodeKind.FIXED),
            (2.0, 0.0, NodeKind.MOVING),
        ]
        labelled = label_nodes(nodes, escape_radius=12.0, t=0.2)
        assert [n.position for n in labelled] == [(-1.0, 1.0), (0.5, 1.0), (0.0, 0.0), (2.0, 0.0), (-20.0, 0.0)]
        assert [n.id for n in labelled] == [1, 2, 3, 4, 5]
        assert labelled[-1].status == NodeStatus.ESCAPED
