"""Hermite polynomials and 1-d oscillator eigenfunctions.

Units hbar = m = 1. The normalized eigenfunction of level l is

    psi_l(x) = (omega/pi)^(1/4) exp(-xi^2/2) H_l(xi) / sqrt(2^l l!),  xi = sqrt(omega) x

Everything is evaluated by three-term recurrences; derivatives are analytic.
The "reduced" functions h_l = H_l / sqrt(2^l l!) drop the Gaussian so that
zero sets can be located far from the origin without underflow.
"""

import math
from collections.abc import Mapping

import numpy as np
from numpy.polynomial import hermite as H
from scipy import optimize

from bohmlab.core.models import MAX_QUANTUM, Mode, OscillatorParams

ArrayLike = float | np.ndarray


def _check_level(n: int) -> None:
    if n < 0:
        raise ValueError(f"Hermite degree must be >= 0, got {n}")
    if n > MAX_QUANTUM:
        raise ValueError(f"Hermite degree {n} exceeds the supported maximum {MAX_QUANTUM}")


def _check_omega(omega: float) -> None:
    if not omega > 0:
        raise ValueError(f"Frequency must be positive, got {omega}")


def _unwrap(values: np.ndarray) -> ArrayLike:
    return float(values) if values.ndim == 0 else values


def hermite(n: int, xi: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
    """Physicists' Hermite polynomial H_n and its derivative.

    Args:
        n: Degree, n >= 0
        xi: Point or array of points

    Returns:
        (H_n(xi), H_n'(xi)), using H'_n = 2n H_{n-1}

    Raises:
        ValueError: If n is negative
    """
    _check_level(n)
    xi_arr = np.asarray(xi, dtype=float)
    previous = np.zeros_like(xi_arr)
    current = np.ones_like(xi_arr)
    for k in range(n):
        previous, current = current, 2.0 * xi_arr * current - 2.0 * k * previous
    return _unwrap(current), _unwrap(2.0 * n * previous)


def hermite_norm(n: int) -> float:
    """sqrt(2^n n!), the factor relating H_n to the reduced h_n."""
    return math.sqrt(2.0**n * math.factorial(n))


def reduced_table(lmax: int, xi: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Reduced Hermite functions h_0..h_lmax and their derivatives in xi.

    Returns:
        Arrays of shape (lmax + 1, *xi.shape)
    """
    _check_level(lmax)
    xi_arr = np.asarray(xi, dtype=float)
    h = np.empty((lmax + 1, *xi_arr.shape))
    dh = np.empty_like(h)
    h[0] = 1.0
    dh[0] = 0.0
    if lmax >= 1:
        h[1] = math.sqrt(2.0) * xi_arr
    for k in range(1, lmax):
        h[k + 1] = math.sqrt(2.0 / (k + 1)) * xi_arr * h[k] - math.sqrt(k / (k + 1)) * h[k - 1]
    for level in range(1, lmax + 1):
        dh[level] = math.sqrt(2.0 * level) * h[level - 1]
    return h, dh


def eigen_table(
    lmax: int, omega: float, x: ArrayLike
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized eigenfunctions 0..lmax with first and second derivatives.

    Returns:
        (values, d1, d2), each of shape (lmax + 1, *x.shape)
    """
    _check_omega(omega)
    root = math.sqrt(omega)
    x_arr = np.asarray(x, dtype=float)
    xi = root * x_arr
    h, dh = reduced_table(lmax, xi)
    envelope = (omega / math.pi) ** 0.25 * np.exp(-0.5 * xi**2)
    levels = np.arange(lmax + 1).reshape((-1,) + (1,) * xi.ndim)
    values = envelope * h
    d1 = root * envelope * (dh - xi * h)
    # H'' = 2 xi H' - 2 l H collapses the second derivative to a multiple of psi
    d2 = omega * values * (xi**2 - 1.0 - 2.0 * levels)
    return values, d1, d2


def eigen1d(l: int, omega: float, x: ArrayLike) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Normalized 1-d oscillator eigenfunction with two derivatives.

    Args:
        l: Level, l >= 0
        omega: Angular frequency, > 0
        x: Position or array of positions

    Returns:
        (psi_l(x), psi_l'(x), psi_l''(x))

    Raises:
        ValueError: On a negative level or non-positive frequency

    Example:
        ```python
        value, _, _ = eigen1d(0, 1.0, 0.0)  # pi ** -0.25
        ```
    """
    _check_level(l)
    values, d1, d2 = eigen_table(l, omega, x)
    return _unwrap(values[l]), _unwrap(d1[l]), _unwrap(d2[l])


def mode_energy(mode: Mode, params: OscillatorParams) -> float:
    return (0.5 + mode.m) * params.omega1 + (0.5 + mode.n) * params.omega2


def mode_phase(mode: Mode, params: OscillatorParams, t: ArrayLike) -> ArrayLike:
    """Phase [(1/2 + m) omega1 + (1/2 + n) omega2] t of one eigenstate."""
    return mode_energy(mode, params) * t


def hermite_roots(n: int) -> np.ndarray:
    """Sorted roots of H_n in the scaled variable xi."""
    _check_level(n)
    if n == 0:
        return np.empty(0)
    nodes, _ = H.hermgauss(n)
    return np.sort(nodes)


def oscillator_roots(n: int, omega: float) -> np.ndarray:
    """Sorted zeros of psi_n in physical units, x = xi / sqrt(omega)."""
    _check_omega(omega)
    return hermite_roots(n) / math.sqrt(omega)


def reduced_series_roots(
    weights: Mapping[int, float],
    *,
    imag_tol: float = 1e-7,
    trim_tol: float = 1e-13,
) -> np.ndarray:
    """Real roots of sum_l w_l h_l(xi).

    Roots come from the Hermite companion matrix and are polished by Newton
    iteration on the series. A leading weight that is negligible relative to
    the others is dropped, so a root on its way to infinity disappears
    instead of degrading the rest.

    Args:
        weights: Map from level to real weight
        imag_tol: Relative imaginary part below which a root counts as real
        trim_tol: Relative size below which trailing coefficients are dropped

    Returns:
        Sorted array of real roots in xi
    """
    if not weights:
        return np.empty(0)
    degree = max(weights)
    coef = np.zeros(degree + 1)
    for level, weight in weights.items():
        _check_level(level)
        coef[level] += weight / hermite_norm(level)
    scale = np.max(np.abs(coef))
    if scale == 0.0:
        return np.empty(0)
    coef = H.hermtrim(coef / scale, tol=trim_tol)
    if len(coef) <= 1:
        return np.empty(0)

    series = H.Hermite(coef)
    slope = series.deriv()
    raw = series.roots()
    raw = raw[np.abs(raw.imag) <= imag_tol * np.maximum(1.0, np.abs(raw.real))].real

    polished = [
        float(
            optimize.newton(
                series,
                root,
                fprime=slope,
                tol=1e-14 * max(1.0, abs(root)),
                maxiter=50,
                disp=False,
            )
        )
        for root in raw
    ]
    return np.sort(np.array(polished))
