"""Special functions underlying the kernel evaluations.

The single nontrivial primitive is the modified Bessel function of the
second kind ``K_nu(z)`` for real order and complex argument.  Three
evaluation regimes are used and selected internally:

* half-integer orders collapse to the exact closed form
  ``sqrt(pi/(2z)) e^{-z} * polynomial(1/z)`` and are fast-pathed;
* for ``|z| <= 6`` the ascending series is summed in extended precision
  (80-bit long double where the platform has it) through the reflection
  formula ``K_mu = pi (I_{-mu} - I_mu) / (2 sin pi mu)`` for the fractional
  base order, or through the logarithmic series at integer order, followed
  by stable upward recurrence in the order;
* for ``|z| > 6`` with ``Re z > 0`` the integral representation
  ``K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`` is evaluated by the
  trapezoidal rule with step halving, which converges geometrically for
  this integrand.

Accuracy is ten significant digits or better for ``Re z > 0``,
``|z| in [1e-4, 50]``, ``nu in [0, 6]`` (degrading near the imaginary
axis for large ``|z|``, and within ``1e-6`` of an integer order on the
non-integer path, neither of which the kernels use).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["DomainError", "bessel_K", "gamma_fn", "sphere_area"]

_LD = np.longdouble
_CLD = np.clongdouble
_EULER_GAMMA_LD = _LD("0.57721566490153286060651209008240243")
_PI_LD = _LD("3.14159265358979323846264338327950288")

_SERIES_RADIUS = 6.0
_SERIES_TERMS = 34
_INTEGER_TOL = 1e-6
_HALF_INT_TOL = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0 (Lanczos-class accuracy, >= 12 digits)."""
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    return math.gamma(x)


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N: 2 pi^(N/2) / Gamma(N/2).

    Defined for N >= 1 (the 0-sphere has measure 2, which the angular
    reduction of convolutions in the plane relies on).
    """
    if N < 1:
        raise DomainError(f"sphere_area requires N >= 1, got {N}")
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


def _validate_argument(z: np.ndarray) -> None:
    if np.any(z == 0):
        raise DomainError("bessel_K is singular at z = 0")
    on_cut = (z.real < 0) & (z.imag == 0)
    if np.any(on_cut):
        raise DomainError("bessel_K is not defined on the branch cut arg z = pi")


def _half_integer_n(nu: float) -> int | None:
    two_nu = 2.0 * nu
    nearest = round(two_nu)
    if abs(two_nu - nearest) < _HALF_INT_TOL and nearest % 2 == 1:
        return (nearest - 1) // 2
    return None


def _k_half_integer(n: int, z: np.ndarray) -> np.ndarray:
    """Closed form for K_{n+1/2}; exact for every z off the cut."""
    acc = np.zeros_like(z)
    inv2z = 1.0 / (2.0 * z)
    for j in range(n, -1, -1):
        c = math.factorial(n + j) // (math.factorial(j) * math.factorial(n - j))
        acc = acc * inv2z + c
    return np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) * acc


def _bessel_i_series(a: float, w: np.ndarray, w2: np.ndarray, real_dt, cplx_dt) -> np.ndarray:
    """I_a(z) = (z/2)^a * sum_m (z^2/4)^m / (m! Gamma(m+1+a))."""
    term = np.full(w.shape, cplx_dt(1.0 / math.gamma(1.0 + a)))
    acc = term.copy()
    a_r = real_dt(a)
    for m in range(1, _SERIES_TERMS):
        term = term * w2 / (real_dt(m) * (real_dt(m) + a_r))
        acc += term
    return np.exp(real_dt(a) * np.log(w)) * acc


def _k_series_fractional(mu, w, w2, real_dt, cplx_dt) -> tuple[np.ndarray, np.ndarray]:
    """(K_mu, K_{mu+1}) for fractional mu in (0,1) via the reflection formula."""
    s = np.sin(real_dt(_PI_LD) * real_dt(mu))
    pref = real_dt(_PI_LD) / (2 * s)
    args = (w, w2, real_dt, cplx_dt)
    k0 = pref * (_bessel_i_series(-mu, *args) - _bessel_i_series(mu, *args))
    k1 = pref * (_bessel_i_series(mu + 1.0, *args) - _bessel_i_series(-mu - 1.0, *args))
    return k0, k1


def _k_series_integer(w, w2, real_dt, cplx_dt) -> tuple[np.ndarray, np.ndarray]:
    """(K_0, K_1) from the logarithmic small-argument series."""
    logw = np.log(w)
    euler = real_dt(_EULER_GAMMA_LD)

    # K_0 = -(log w + gamma) I_0 + sum_{m>=1} H_m w^{2m} / (m!)^2
    term = np.full(w.shape, cplx_dt(1.0))
    i0 = term.copy()
    corr0 = np.zeros_like(term)
    h = real_dt(0.0)
    for m in range(1, _SERIES_TERMS):
        term = term * w2 / real_dt(m * m)
        i0 += term
        h += real_dt(1.0) / real_dt(m)
        corr0 += h * term
    k0 = -(logw + euler) * i0 + corr0

    # K_1 = 1/(2w) + log(w) I_1 - (w/2) sum_m [2H_m + 1/(m+1) - 2 gamma] w^{2m}/(m!(m+1)!)
    term = np.full(w.shape, cplx_dt(1.0))
    i1_sum = term.copy()
    corr1 = (real_dt(1.0) - 2 * euler) * term
    h = real_dt(0.0)
    for m in range(1, _SERIES_TERMS):
        term = term * w2 / (real_dt(m) * real_dt(m + 1))
        i1_sum += term
        h += real_dt(1.0) / real_dt(m)
        corr1 += (2 * h + real_dt(1.0) / real_dt(m + 1) - 2 * euler) * term
    i1 = w * i1_sum
    k1 = 1.0 / (2.0 * w) + logw * i1 - (w / 2.0) * corr1
    return k0, k1


def _k_series(nu: float, z: np.ndarray, extended: bool = False, fast: bool = False) -> np.ndarray:
    """Series evaluation of K_nu for |z| <= ~6, any real nu >= 0.

    Computes the two base orders below nu and recurs upward; upward
    recurrence in the order is stable for K.  The sum runs in 80-bit
    complex by default (the reflection difference cancels like e^{2 Re z});
    ``fast=True`` uses ordinary doubles, adequate away from the real axis
    or when a few digits can be spared.  With ``extended=True`` the
    long-double intermediate is returned uncast, for callers that must take
    real or imaginary parts before rounding.
    """
    if fast:
        real_dt, cplx_dt = np.float64, np.complex128
    else:
        real_dt, cplx_dt = _LD, _CLD
    w = z.astype(cplx_dt) / 2
    w2 = w * w
    n_int = round(nu)
    if abs(nu - n_int) < _INTEGER_TOL:
        k_lo, k_hi = _k_series_integer(w, w2, real_dt, cplx_dt)
        steps, target_lo = n_int, 0.0
    else:
        mu = nu - math.floor(nu)
        k_lo, k_hi = _k_series_fractional(mu, w, w2, real_dt, cplx_dt)
        steps, target_lo = math.floor(nu), mu
    order = real_dt(target_lo + 1.0)
    two_over_z = cplx_dt(2.0) / z.astype(cplx_dt)
    for _ in range(steps - 1):
        k_lo, k_hi = k_hi, k_lo + order * two_over_z * k_hi
        order += 1
    out = k_hi if steps >= 1 else k_lo
    return out if extended else out.astype(np.complex128)


def _truncation_length(nu: float, x: np.ndarray) -> float:
    """Smallest T with exp(-x(cosh T - 1)) cosh(nu T) below the target tail."""
    decades = 42.0
    t = np.arccosh(1.0 + decades / x)
    for _ in range(3):
        t = np.arccosh(1.0 + (decades + nu * t) / x)
    return float(np.max(t))


def _k_integral(nu: float, z: np.ndarray) -> np.ndarray:
    """Trapezoidal evaluation of the cosh integral representation (Re z > 0)."""
    if z.size > 4096:
        out = np.empty(z.shape, dtype=np.complex128)
        for start in range(0, z.size, 4096):
            sl = slice(start, start + 4096)
            out[sl] = _k_integral(nu, z[sl])
        return out
    x = np.maximum(z.real, 1e-12)
    t_max = min(_truncation_length(nu, x), 40.0)
    h = 0.35
    n = int(np.ceil(t_max / h))
    h = t_max / n
    t = np.arange(n + 1) * h
    zz = z[..., None]
    vals = np.exp(-zz * np.cosh(t)) * np.cosh(nu * t)
    vals[..., 0] *= 0.5
    acc = h * vals.sum(axis=-1)
    for _ in range(4):
        t_mid = (np.arange(n) + 0.5) * h
        mid = (np.exp(-zz * np.cosh(t_mid)) * np.cosh(nu * t_mid)).sum(axis=-1)
        refined = 0.5 * acc + 0.5 * h * mid
        err = np.max(np.abs(refined - acc) / np.maximum(np.abs(refined), 1e-300))
        acc = refined
        h *= 0.5
        n *= 2
        if err < 5e-14:
            break
    return acc


def bessel_K(nu: float, z) -> complex | np.ndarray:
    """Modified Bessel function of the second kind, real order, complex argument.

    Parameters
    ----------
    nu : real order (K_{-nu} = K_nu, so the sign is immaterial).
    z : complex scalar or array; must avoid 0 and the cut arg z = +-pi.

    Returns
    -------
    K_nu(z), scalar or array matching the input shape.
    """
    nu = abs(float(nu))
    z_arr = np.asarray(z, dtype=np.complex128)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    _validate_argument(z_arr)

    out = np.empty(z_arr.shape, dtype=np.complex128)
    n_half = _half_integer_n(nu)
    if n_half is not None:
        out[:] = _k_half_integer(n_half, z_arr)
    else:
        small = np.abs(z_arr) <= _SERIES_RADIUS
        # The integral representation needs Re z > 0; fall back to the series
        # (reduced accuracy) in the left half-plane.
        big = ~small & (z_arr.real > 0)
        rest = ~small & ~big
        if np.any(small):
            out[small] = _k_series(nu, z_arr[small])
        if np.any(big):
            out[big] = _k_integral(nu, z_arr[big])
        if np.any(rest):
            out[rest] = _k_series(nu, z_arr[rest])
    return out[0] if scalar else out
