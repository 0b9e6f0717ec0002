"""Chaos indicator, periodicity checks and the closed-form special case.

The special case is psi = psi_00 + psi_10 + psi_11 with omega1 = omega2 = 1
(normalized eigenfunctions, equal coefficients). Its single node runs on the
hyperbola x_N y_N = 1/2 and its trajectories carry an algebraic integral of
motion, which makes it the reference for the whole numerical stack.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from bohmlab.config import Settings, get_settings
from bohmlab.core.dynamics import integrate
from bohmlab.core.errors import DegenerateState, DegenerateTime, NodeSingularity, StepFailure
from bohmlab.core.models import (
    ChaosClass,
    ChaosReport,
    Mode,
    OscillatorParams,
    SuperpositionSpec,
)
from bohmlab.core.nodes import grid_scan_nodes, refine_node, solve_moving_nodes
from bohmlab.core.wavefield import flow, velocity

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
DENOMINATOR_FLOOR = 1e-10


# =============================================================================
# Stretching number
# =============================================================================


def tangent_flow(
    spec: SuperpositionSpec,
    ic: tuple[float, float, float],
    t_end: float,
    tangent: tuple[float, float] = (1.0, 0.0),
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """Carry a tangent vector along a trajectory without renormalizing.

    Returns:
        (final position, final tangent vector)

    Raises:
        StepFailure: If the integration does not reach t_end
    """
    x0, y0, t0 = ic

    def rhs(t: float, z: np.ndarray) -> np.ndarray:
        v, jac = flow(spec, z[0], z[1], t)
        return np.concatenate([v, jac @ z[2:]])

    start = np.array([x0, y0, tangent[0], tangent[1]], dtype=float)
    try:
        result = solve_ivp(rhs, (t0, t_end), start, method="DOP853", rtol=rel_tol, atol=abs_tol)
    except NodeSingularity as exc:
        raise StepFailure(f"tangent flow reached a node: {exc}", exc.t, (exc.x, exc.y)) from exc
    if not result.success:
        last = result.y[:, -1]
        raise StepFailure(result.message, float(result.t[-1]), (float(last[0]), float(last[1])))
    final = result.y[:, -1]
    return final[:2], final[2:]


def _bootstrap_interval(
    values: np.ndarray, samples: int, seed: int, block: int = 5
) -> tuple[float, float]:
    usable = len(values) - len(values) % block
    if usable < 2 * block:
        return float("nan"), float("nan")
    means = values[:usable].reshape(-1, block).mean(axis=1)
    rng = np.random.default_rng(seed)
    draws = rng.choice(means, size=(samples, len(means)), replace=True).mean(axis=1)
    low, high = np.percentile(draws, [2.5, 97.5])
    return float(low), float(high)


def stretching_number(
    spec: SuperpositionSpec,
    ic: tuple[float, float, float],
    horizon: float,
    renorm_dt: float = 1.0,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-11,
    seed: int = 0,
    settings: Settings | None = None,
) -> ChaosReport:
    """Mean logarithmic stretching of a tangent vector per unit time.

    The linearized flow is integrated alongside the trajectory and the
    tangent vector is renormalized every ``renorm_dt``. The verdict uses a
    block bootstrap of the per-interval rates: chaotic if the whole 95% band
    lies above ``chaos_threshold``, ordered if it lies below, undetermined
    otherwise or when the integration fails.
    """
    settings = settings or get_settings()
    x, y, t = ic
    t_stop = t + horizon
    position = np.array([x, y], dtype=float)
    tangent = np.array([1.0, 1.0]) / SQRT2
    logs: list[float] = []
    spans: list[float] = []
    failed = False
    while t < t_stop - 1e-12:
        t_next = min(t + renorm_dt, t_stop)
        try:
            position, tangent = tangent_flow(
                spec, (position[0], position[1], t), t_next, (tangent[0], tangent[1]), rel_tol, abs_tol
            )
        except StepFailure as exc:
            logger.warning("Stretching number for %s stopped: %s", ic, exc)
            failed = True
            break
        size = float(np.linalg.norm(tangent))
        logs.append(math.log(size))
        spans.append(t_next - t)
        tangent = tangent / size
        t = t_next

    elapsed = float(sum(spans))
    value = float(sum(logs)) / elapsed if elapsed > 0 else float("nan")
    rates = np.array(logs) / np.array(spans) if spans else np.empty(0)
    low, high = _bootstrap_interval(rates, settings.bootstrap_samples, seed)

    if failed or not math.isfinite(low):
        verdict = ChaosClass.UNDETERMINED
    elif low > settings.chaos_threshold:
        verdict = ChaosClass.CHAOTIC
    elif high < settings.chaos_threshold:
        verdict = ChaosClass.ORDERED
    else:
        verdict = ChaosClass.UNDETERMINED
    return ChaosReport(
        ic=ic,
        horizon=elapsed,
        stretching_number=value,
        classification=verdict,
        unit_stretching=[float(r) for r in rates],
        confidence=(low, high),
    )


# =============================================================================
# Periodicity
# =============================================================================


def commensurate_period(params: OscillatorParams, max_denominator: int = 64) -> float | None:
    """Common period of every relative mode phase, or None if incommensurable.

    With omega1 / omega2 = p / q in lowest terms the relative phases are
    multiples of omega0 = omega2 / q, so the flow repeats after 2 pi / omega0.
    """
    ratio = params.omega1 / params.omega2
    fraction = Fraction(ratio).limit_denominator(max_denominator)
    if abs(float(fraction) - ratio) > 1e-12 * ratio:
        return None
    return 2 * math.pi * fraction.denominator / params.omega2


def periodicity_check(
    spec: SuperpositionSpec,
    ic: tuple[float, float, float],
    period: float | None = None,
    tol: float = 1e-4,
    rel_tol: float = 1e-11,
    abs_tol: float = 1e-12,
) -> tuple[bool, float]:
    """Integrate one period and measure the return distance.

    A return within ``tol`` shows T is a period; it says nothing about T
    being the smallest one.

    Raises:
        ValueError: If no period is given and the frequencies are incommensurable
    """
    if period is None:
        period = commensurate_period(spec.params)
        if period is None:
            raise ValueError("Frequencies are incommensurable; pass an explicit period")
    x0, y0, t0 = ic
    trajectory = integrate(spec, ic, t0 + period, rel_tol=rel_tol, abs_tol=abs_tol)
    _, x1, y1 = trajectory.final
    error = math.hypot(x1 - x0, y1 - y0)
    return error < tol, error


# =============================================================================
# Closed-form special case
# =============================================================================


def special_case_spec(scale: complex = 1.0) -> SuperpositionSpec:
    """psi_00 + psi_10 + psi_11 at omega1 = omega2 = 1, times ``scale``."""
    return SuperpositionSpec(
        modes=(Mode(0, 0), Mode(1, 0), Mode(1, 1)),
        coefficients=(scale, scale, scale),
        params=OscillatorParams(1.0, 1.0),
    )


def _require_special_case(spec: SuperpositionSpec) -> None:
    reference = {Mode(0, 0), Mode(1, 0), Mode(1, 1)}
    coefficients = dict(zip(spec.modes, spec.coefficients))
    if set(spec.modes) != reference or spec.params != OscillatorParams(1.0, 1.0):
        raise ValueError("Closed forms hold only for psi_00 + psi_10 + psi_11 at omega = 1")
    first = coefficients[Mode(0, 0)]
    if any(abs(c - first) > 1e-12 * abs(first) for c in coefficients.values()):
        raise ValueError("Closed forms assume equal coefficients")


@dataclass(frozen=True)
class SpecialCaseOracle:
    """Closed forms of the single-node special case.

    ``G`` is |psi|^2 up to a constant, the velocity is written with the sign
    convention of the closed form, and ``node_path`` gives the hyperbola.
    """

    @staticmethod
    def G(x: float, y: float, cos_t: float) -> float:
        return (
            1
            + 2 * x**2 * (1 + 2 * y**2)
            + 2 * SQRT2 * x * (1 + 2 * x * y) * cos_t
            + 4 * x * y * (2 * cos_t**2 - 1)
        )

    def velocity(self, x: float, y: float, t: float) -> tuple[float, float]:
        g = self.G(x, y, math.cos(t))
        vx = (SQRT2 * math.sin(t) + 2 * y * math.sin(2 * t)) / g
        vy = 2 * x * (SQRT2 * x * math.sin(t) + math.sin(2 * t)) / g
        return vx, vy

    @staticmethod
    def node_path(t: float) -> tuple[float, float]:
        c = math.cos(t)
        return -SQRT2 * c, -1.0 / (2 * SQRT2 * c)

    @staticmethod
    def node_path_velocity(t: float) -> tuple[float, float]:
        c = math.cos(t)
        s = math.sin(t)
        return SQRT2 * s, -s / (2 * SQRT2 * c**2)

    def reconstruct(self, x: float, y: float, vx: float, vy: float) -> tuple[float, float]:
        """Recover (cos t, sin t) from a phase-space point.

        Raises:
            DegenerateState: If either denominator vanishes
        """
        radial = y * vy - x * vx
        cubic = 2 * x**2 * y - x
        if abs(radial) < DENOMINATOR_FLOOR or abs(cubic) < DENOMINATOR_FLOOR:
            raise DegenerateState(
                f"reconstruction singular at x={x:.6g}, y={y:.6g} (y*vy - x*vx={radial:.3g}, 2x^2y - x={cubic:.3g})"
            )
        cos_t = (2 * x**2 * vx - vy) / (2 * SQRT2 * radial)
        sin_t = self.G(x, y, cos_t) * radial / (SQRT2 * cubic)
        return cos_t, sin_t


def convention_constant(
    spec: SuperpositionSpec, point: tuple[float, float, float] = (0.37, -0.81, 0.9)
) -> float:
    """Factor mapping the closed-form velocity onto the field velocity.

    Measured at one point; it must then hold everywhere.
    """
    _require_special_case(spec)
    x, y, t = point
    field_v = velocity(spec, x, y, t)
    closed_v = SpecialCaseOracle().velocity(x, y, t)
    index = int(np.argmax(np.abs(closed_v)))
    return field_v[index] / closed_v[index]


def integral_residual(spec: SuperpositionSpec, x: float, y: float, vx: float, vy: float) -> float:
    """sin^2 t + cos^2 t - 1 with both reconstructed from (x, y, vx, vy).

    Reversing the velocity flips the sign of sin t only, so field velocities
    can be passed directly.

    Raises:
        DegenerateState: Where the reconstruction is singular
    """
    _require_special_case(spec)
    cos_t, sin_t = SpecialCaseOracle().reconstruct(x, y, vx, vy)
    return sin_t**2 + cos_t**2 - 1.0


def node_hyperbola_residual(
    spec: SuperpositionSpec,
    t: float,
    region: tuple[float, float, float, float] = (-4.0, 4.0, -4.0, 4.0),
) -> float:
    """x_N y_N - 1/2 for the single node of the special case.

    The node is located by grid scan and Newton refinement; once it has left
    the scan region on its hyperbola arm the analytic solver supplies it.

    Raises:
        DegenerateTime: If sin t or cos t vanishes
    """
    _require_special_case(spec)
    if abs(math.sin(t)) < 1e-12 or abs(math.cos(t)) < 1e-12:
        raise DegenerateTime(t, "the node is at infinity or undefined")
    found = grid_scan_nodes(spec, t, region, resolution=200)
    if len(found) == 1:
        x_node, y_node = found[0]
    else:
        records = solve_moving_nodes(spec, t)
        if len(records) != 1:
            raise DegenerateTime(t, f"expected one node, found {len(records)}")
        refined = refine_node(spec, records[0].x, records[0].y, t)
        x_node, y_node = refined if refined is not None else records[0].position
    return x_node * y_node - 0.5
