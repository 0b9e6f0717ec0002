"""Exception hierarchy for bohmlab.

Argument errors (negative quantum numbers, bad frequencies) are plain
``ValueError``. Everything numerical derives from :class:`BohmlabError` so the
CLI can tell a bad scenario from a failed computation.
"""

from typing import Any


class BohmlabError(Exception):
    """Base class for numerical failures."""


class ScenarioError(BohmlabError):
    """Scenario file is missing, unparseable or inconsistent."""


class NodeSingularity(BohmlabError):
    """A field ratio was requested at (or numerically at) a nodal point."""

    def __init__(self, x: float, y: float, t: float, psi_abs: float) -> None:
        self.x = x
        self.y = y
        self.t = t
        self.psi_abs = psi_abs
        super().__init__(
            f"|psi|={psi_abs:.3e} at (x={x:.6g}, y={y:.6g}, t={t:.6g}) is below psi_floor"
        )


class DegenerateTime(BohmlabError):
    """The nodal equations reduce to identities at this instant."""

    def __init__(self, t: float, reason: str = "") -> None:
        self.t = t
        message = f"nodal equations degenerate at t={t:.9g}"
        super().__init__(f"{message}: {reason}" if reason else message)


class DegenerateState(BohmlabError):
    """A closed-form reconstruction divides by a vanishing quantity."""


class LostNode(BohmlabError):
    """Continuation failed to re-localize a tracked node."""

    def __init__(self, track_id: int, t: float) -> None:
        self.track_id = track_id
        self.t = t
        super().__init__(f"lost node {track_id} at t={t:.9g}")


class NoXPointFound(BohmlabError):
    """No seed of the X-point search converged to a saddle."""


class StepFailure(BohmlabError):
    """The trajectory integrator could not advance.

    Attributes:
        t: Time of the last accepted state
        state: Last accepted (x, y)
        partial: Trajectory built up to the failure, if any
    """

    def __init__(
        self,
        message: str,
        t: float,
        state: tuple[float, float],
        partial: Any = None,
    ) -> None:
        self.t = t
        self.state = state
        self.partial = partial
        super().__init__(
            f"{message} (last good state t={t:.9g}, x={state[0]:.9g}, y={state[1]:.9g})"
        )
