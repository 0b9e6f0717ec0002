"""Superposition wavefield, Bohmian velocity and potentials.

Psi(x, y, t) = sum_i c_i exp(-i E_i t) psi_{m_i}(x) psi_{n_i}(y)

All functions accept scalars or broadcastable arrays for (x, y). The scalar
entry points (:func:`velocity`, :func:`velocity_jacobian`, :func:`potentials`)
raise :class:`NodeSingularity` below ``psi_floor``; :func:`evaluate_grid`
instead marks those points with NaN.
"""

import logging
import math

import numpy as np

from bohmlab.config import get_settings
from bohmlab.core.eigenbasis import eigen_table, mode_energy, reduced_table
from bohmlab.core.errors import NodeSingularity
from bohmlab.core.models import FieldSample, QuantumPotentialForm, SuperpositionSpec

logger = logging.getLogger(__name__)

GRID_COLUMNS = ("x", "y", "re_psi", "im_psi", "vx", "vy", "Q", "Vtot")


def mode_weights(spec: SuperpositionSpec, t: float) -> np.ndarray:
    """Time-dependent amplitudes c_i exp(-i E_i t)."""
    energies = np.array([mode_energy(mode, spec.params) for mode in spec.modes])
    return spec.coefficient_array * np.exp(-1j * energies * t)


def _broadcast(weights: np.ndarray, ndim: int) -> np.ndarray:
    return weights.reshape((-1,) + (1,) * ndim)


def eval_field(
    spec: SuperpositionSpec, x: float | np.ndarray, y: float | np.ndarray, t: float
) -> FieldSample:
    """Psi, gradient, Laplacian and Hessian at (x, y, t).

    Each mode is an exact eigenstate, so the Schrodinger residual of the
    assembled field vanishes identically.
    """
    x_arr, y_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    m = spec.m_values
    n = spec.n_values
    X, X1, X2 = eigen_table(int(m.max()), spec.params.omega1, x_arr)
    Y, Y1, Y2 = eigen_table(int(n.max()), spec.params.omega2, y_arr)
    w = _broadcast(mode_weights(spec, t), x_arr.ndim)

    psi = np.sum(w * X[m] * Y[n], axis=0)
    gx = np.sum(w * X1[m] * Y[n], axis=0)
    gy = np.sum(w * X[m] * Y1[n], axis=0)
    hxx = np.sum(w * X2[m] * Y[n], axis=0)
    hxy = np.sum(w * X1[m] * Y1[n], axis=0)
    hyy = np.sum(w * X[m] * Y2[n], axis=0)
    return FieldSample(
        psi=psi,
        grad=np.array([gx, gy]),
        lap=hxx + hyy,
        hess=np.array([hxx, hxy, hyy]),
    )


def eval_reduced(
    spec: SuperpositionSpec, x: float | np.ndarray, y: float | np.ndarray, t: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gaussian-free part F of psi, its gradient and its term scale.

    psi = C exp(-(xi^2 + eta^2)/2) F, so F has the same zeros as psi and
    Im(grad F / F) equals the Bohmian velocity. The scale sum_i |w_i h h| is
    the natural yardstick for rounding error in F.

    Returns:
        (F, dF/dx, dF/dy, scale)
    """
    x_arr, y_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    r1 = math.sqrt(spec.params.omega1)
    r2 = math.sqrt(spec.params.omega2)
    m = spec.m_values
    n = spec.n_values
    hx, dhx = reduced_table(int(m.max()), r1 * x_arr)
    hy, dhy = reduced_table(int(n.max()), r2 * y_arr)
    w = _broadcast(mode_weights(spec, t), x_arr.ndim)

    terms = w * hx[m] * hy[n]
    value = np.sum(terms, axis=0)
    fx = r1 * np.sum(w * dhx[m] * hy[n], axis=0)
    fy = r2 * np.sum(w * hx[m] * dhy[n], axis=0)
    scale = np.sum(np.abs(terms), axis=0)
    return value, fx, fy, scale


def _floor(psi_floor: float | None) -> float:
    return get_settings().psi_floor if psi_floor is None else psi_floor


def _checked_sample(
    spec: SuperpositionSpec, x: float, y: float, t: float, psi_floor: float | None
) -> FieldSample:
    sample = eval_field(spec, x, y, t)
    magnitude = abs(sample.psi)
    if not magnitude >= _floor(psi_floor):
        raise NodeSingularity(float(x), float(y), float(t), float(magnitude))
    return sample


def velocity(
    spec: SuperpositionSpec,
    x: float,
    y: float,
    t: float,
    psi_floor: float | None = None,
) -> tuple[float, float]:
    """Bohmian velocity v = Im(grad psi / psi).

    Raises:
        NodeSingularity: If |psi| < psi_floor
    """
    sample = _checked_sample(spec, x, y, t, psi_floor)
    v = np.imag(sample.grad / sample.psi)
    return float(v[0]), float(v[1])


def _jacobian_from(sample: FieldSample) -> np.ndarray:
    psi = sample.psi
    g = sample.grad
    hxx, hxy, hyy = sample.hess
    hess = np.array([[hxx, hxy], [hxy, hyy]])
    return np.imag(hess / psi - np.outer(g, g) / psi**2)


def velocity_jacobian(
    spec: SuperpositionSpec,
    x: float,
    y: float,
    t: float,
    psi_floor: float | None = None,
) -> np.ndarray:
    """Matrix J[i, j] = d v_i / d x_j, analytic from the Hessian of psi.

    Raises:
        NodeSingularity: If |psi| < psi_floor
    """
    return _jacobian_from(_checked_sample(spec, x, y, t, psi_floor))


def flow(
    spec: SuperpositionSpec,
    x: float,
    y: float,
    t: float,
    psi_floor: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Velocity and its Jacobian from a single field evaluation."""
    sample = _checked_sample(spec, x, y, t, psi_floor)
    return np.imag(sample.grad / sample.psi), _jacobian_from(sample)


def classical_potential(spec: SuperpositionSpec, x: float | np.ndarray, y: float | np.ndarray):
    """V = (omega1^2 x^2 + omega2^2 y^2) / 2."""
    p = spec.params
    return 0.5 * (p.omega1**2 * np.asarray(x) ** 2 + p.omega2**2 * np.asarray(y) ** 2)


def _quantum_potential(sample: FieldSample, form: QuantumPotentialForm):
    ratio = sample.lap / sample.psi
    if form == QuantumPotentialForm.COMPLEX:
        return -0.5 * np.real(ratio)
    # lap(R)/R = Re(lap psi / psi) + |v|^2 for psi = R exp(iS)
    v = np.imag(sample.grad / sample.psi)
    return -0.5 * np.real(ratio) - 0.5 * np.sum(v**2, axis=0)


def potentials(
    spec: SuperpositionSpec,
    x: float,
    y: float,
    t: float,
    form: QuantumPotentialForm = QuantumPotentialForm.AMPLITUDE,
    psi_floor: float | None = None,
) -> tuple[float, float, float]:
    """Classical, quantum and total potential (V, Q, V + Q).

    Raises:
        NodeSingularity: If |psi| < psi_floor (Q diverges at nodes)
    """
    sample = _checked_sample(spec, x, y, t, psi_floor)
    v_classical = float(classical_potential(spec, x, y))
    q = float(_quantum_potential(sample, QuantumPotentialForm(form)))
    return v_classical, q, v_classical + q


def density(spec: SuperpositionSpec, x, y, t: float):
    """Probability density |psi|^2."""
    return np.abs(eval_field(spec, x, y, t).psi) ** 2


def current(spec: SuperpositionSpec, x, y, t: float) -> np.ndarray:
    """Probability current Im(conj(psi) grad psi), equal to density times velocity."""
    sample = eval_field(spec, x, y, t)
    return np.imag(np.conj(sample.psi) * sample.grad)


def evaluate_grid(
    spec: SuperpositionSpec,
    X: np.ndarray,
    Y: np.ndarray,
    t: float,
    form: QuantumPotentialForm = QuantumPotentialForm.AMPLITUDE,
    psi_floor: float | None = None,
) -> dict[str, np.ndarray]:
    """All exported field quantities on a grid.

    Points with |psi| below the floor get NaN velocity and potentials.

    Returns:
        Mapping from the names in GRID_COLUMNS to arrays shaped like X
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    sample = eval_field(spec, X, Y, t)
    singular = np.abs(sample.psi) < _floor(psi_floor)
    if np.any(singular):
        logger.debug("%d grid points below psi_floor at t=%g", int(singular.sum()), t)
    safe_psi = np.where(singular, 1.0, sample.psi)
    safe = FieldSample(
        psi=safe_psi,
        grad=sample.grad,
        lap=sample.lap,
        hess=sample.hess,
    )
    v = np.imag(sample.grad / safe_psi)
    q = _quantum_potential(safe, QuantumPotentialForm(form))
    v_classical = classical_potential(spec, X, Y)
    nan = np.nan
    return {
        "x": X,
        "y": Y,
        "re_psi": np.real(sample.psi),
        "im_psi": np.imag(sample.psi),
        "vx": np.where(singular, nan, v[0]),
        "vy": np.where(singular, nan, v[1]),
        "Q": np.where(singular, nan, q),
        "Vtot": np.where(singular, nan, v_classical + q),
    }
