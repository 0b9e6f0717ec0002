"""Shipped scenarios.

``typical`` is the three-mode state with two equal m used for the node
census, collisions and X-point studies. ``fig1`` and ``fig13``
share the state psi_00 + psi_10 + psi_11 at omega1 = omega2 = 1; with
normalized eigenfunctions its equal-weight form has all coefficients 1.
"""

import math

from bohmlab.scenarios.base import Scenario, Tolerances
from bohmlab.scenarios.registry import PresetRegistry

HALF_ROOT2 = math.sqrt(2.0) / 2


@PresetRegistry.register("typical")
def typical() -> Scenario:
    """Psi_33 + Psi_34 + (sqrt 2 / 2) Psi_45 with omega2 = sqrt 2 / 2."""
    return Scenario(
        name="typical",
        modes=[(3, 3), (3, 4), (4, 5)],
        coefficients=[1.0, 1.0, HALF_ROOT2],
        omega1=1.0,
        omega2=HALF_ROOT2,
        t0=0.1,
        t1=2.5,
        dt=0.01,
        region=(-5.0, 5.0, -5.0, 5.0),
        resolution=201,
        initial_conditions=[
            (1.409, 0.253),
            (1.45, 0.01),
            (1.45, 0.1),
            (1.3, 0.01),
            (1.45, -0.05),
        ],
        xpoint_nodes=[14, 17],
        loop_nodes=[14, 17],
        chaos_horizon=100.0,
    )


@PresetRegistry.register("fig1")
def fig1() -> Scenario:
    """Single moving node with four trajectories passing near it."""
    return Scenario(
        name="fig1",
        modes=[(0, 0), (1, 0), (1, 1)],
        coefficients=[1.0, 1.0, 1.0],
        omega1=1.0,
        omega2=1.0,
        t0=0.01,
        t1=1.5,
        dt=0.005,
        region=(-4.0, 4.0, -4.0, 4.0),
        resolution=161,
        initial_conditions=[
            (-1.7252, -0.6045),
            (-1.6504, -0.6166),
            (-1.6225, -0.8510),
            (-1.6026, -1.2004),
        ],
        xpoint_time=0.5,
        xpoint_nodes=[1],
        loop_nodes=[1],
        chaos_horizon=50.0,
    )


@PresetRegistry.register("fig13")
def fig13() -> Scenario:
    """One periodic trajectory that retraces itself after t = pi."""
    return Scenario(
        name="fig13",
        modes=[(0, 0), (1, 0), (1, 1)],
        coefficients=[1.0, 1.0, 1.0],
        omega1=1.0,
        omega2=1.0,
        t0=0.0,
        t1=2 * math.pi,
        dt=0.01,
        region=(-4.0, 4.0, -4.0, 4.0),
        resolution=161,
        initial_conditions=[(1.0707, 1.8137)],
        tolerances=Tolerances(rel_tol=1e-11, abs_tol=1e-12),
        frames=[0.5, 1.0, 1.5],
        period=2 * math.pi,
        chaos_horizon=16 * math.pi,
    )
