"""Fundamental solutions of the fourth-order operator with positive stiffness.

The kernel ``G`` of ``Lap^2 + k^2`` on R^N is built by partial fractions of
the symbol: with the complex mass ``m = sqrt(k) e^{i pi/4}`` (so ``m^2 = ik``
and ``Re m = sqrt(k/2)``),

    1/(|xi|^4 + k^2) = (1/2ik) [ 1/(|xi|^2 - ik) - 1/(|xi|^2 + ik) ],

hence ``G(r) = -(1/k) Im g_m(r)`` where ``g_m`` is the fundamental solution
of ``-Lap + m^2``,

    g_m(r) = (2 pi)^{-N/2} (m/r)^nu K_nu(m r),      nu = (N-2)/2.

This construction is validated, not assumed: the test suite checks the
defining equation, the decay rate, the small-r constants and the L^p
classification against independent oracles.

Radial derivatives come from the exact dimension-shift recursion
``G'(r) = -2 pi r G_{N+2}(r)`` and its consequences; all evaluations are
radial (the gradient at x is the radial derivative times x/|x|).

Near r = 0 the imaginary part of ``g_m`` loses all relative accuracy to
cancellation (the singular leading term is real), so below ``r = 1e-6``
evaluation switches to the leading asymptotic form, and on ``r < 1e-3/|m|``
the series pipeline stays in extended precision end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .specfun import DomainError, _k_integral, _k_series, bessel_K, gamma_fn, sphere_area

__all__ = [
    "GreensParams",
    "AsymptoticForm",
    "LpVerdict",
    "UnboundedRatioError",
    "InconclusiveError",
    "mod_helmholtz_kernel",
    "greens_biharmonic",
    "greens_radial_derivative",
    "greens_laplacian",
    "greens_laplacian_radial_derivative",
    "small_r_asymptotic",
    "domination_constant",
    "lp_classify",
]

_ASYMPTOTIC_RADIUS = 1e-6
_EXTENDED_Z = 1e-3


class UnboundedRatioError(ArithmeticError):
    """The kernel/comparison-kernel ratio grows without bound on the grid."""


class InconclusiveError(ArithmeticError):
    """The requested exponent sits too close to the critical threshold."""


@dataclass(frozen=True)
class GreensParams:
    """Dimension and stiffness of Lap^2 + k^2, with derived quantities."""

    N: int
    k: float

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"dimension must be >= 2, got {self.N}")
        if not self.k > 0:
            raise DomainError(f"stiffness must be positive, got {self.k}")

    @property
    def nu(self) -> float:
        return (self.N - 2) / 2

    @property
    def m_plus(self) -> complex:
        return math.sqrt(self.k) * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))

    @property
    def decay_rate(self) -> float:
        return math.sqrt(self.k / 2)

    @property
    def lam(self) -> float:
        """The spectral parameter of the equivalent problem Lap^2 u - lam u = f."""
        return -self.k**2

    def shifted(self, by: int) -> "GreensParams":
        return replace(self, N=self.N + by)


@dataclass(frozen=True)
class AsymptoticForm:
    """Leading behaviour of the kernel as r -> 0.

    ``value(r) = leading_coeff * r**exponent``, or
    ``leading_coeff * ln(r)`` when ``log_flag`` is set.  ``remainder_order``
    is the power of r of the first correction (for even N >= 6 the
    correction additionally carries a logarithm).
    """

    leading_coeff: float
    exponent: float
    log_flag: bool
    remainder_order: float

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        if self.log_flag:
            return self.leading_coeff * np.log(r)
        return self.leading_coeff * r**self.exponent


@dataclass(frozen=True)
class LpVerdict:
    finite: bool
    value: float


def _as_radii(r) -> tuple[np.ndarray, bool]:
    arr = np.asarray(r, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0):
        raise DomainError("radius must be positive")
    return arr, scalar


def mod_helmholtz_kernel(N: int, m: complex, r) -> complex | np.ndarray:
    """Fundamental solution of -Lap + m^2 in R^N, evaluated at radius r.

    ``g(r) = (2 pi)^{-N/2} (m/r)^nu K_nu(m r)`` with ``nu = (N-2)/2``;
    for real m > 0 this is the positive kernel with decay rate m.
    Requires Re m > 0.
    """
    if N < 2:
        raise DomainError(f"dimension must be >= 2, got {N}")
    m = complex(m)
    if not m.real > 0:
        raise DomainError(f"complex mass must satisfy Re m > 0, got {m}")
    radii, scalar = _as_radii(r)
    nu = (N - 2) / 2
    vals = (2 * math.pi) ** (-N / 2) * (m / radii) ** nu * bessel_K(nu, m * radii)
    return vals[0] if scalar else vals


def _im_g_biharm(M: int, k: float, radii: np.ndarray) -> np.ndarray:
    """Im of the complex-mass kernel in dimension M, cancellation-aware.

    The singular leading term of g is real, so Im g loses a factor r^2 of
    relative accuracy; small arguments are therefore evaluated with the
    extended-precision series before the imaginary part is taken.
    """
    nu = (M - 2) / 2
    m = math.sqrt(k) * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    z = m * radii.astype(np.complex128)
    absz = np.abs(z)
    out = np.empty(radii.shape, dtype=float)
    pref = (2 * math.pi) ** (-M / 2)

    # The cancellation in Im g costs a factor |z|^-2 of relative accuracy.
    # Odd dimensions have an exact elementary closed form whose double
    # evaluation is fine down to |z| ~ 1e-5; even dimensions go through the
    # series, in plain doubles on the mid range (error ~ 1e-16/|z|^2, at
    # most ~1e-10 above |z| = 1e-3) and in 80-bit below.
    ext = absz <= (_EXTENDED_Z if M % 2 == 0 else 1e-5)
    mid = (~ext) & (absz <= 6.0) if M % 2 == 0 else np.zeros_like(ext)

    if np.any(ext):
        kv = _k_series(nu, z[ext], extended=True)
        g = pref * (np.clongdouble(m) / radii[ext].astype(np.longdouble)) ** np.longdouble(nu) * kv
        out[ext] = np.imag(g).astype(float)
    if np.any(mid):
        kv = _k_series(nu, z[mid], fast=True)
        g = pref * (m / radii[mid]) ** nu * kv
        out[mid] = np.imag(g)
    rest = ~(ext | mid)
    if np.any(rest):
        g = pref * (m / radii[rest]) ** nu * bessel_K(nu, z[rest])
        out[rest] = np.imag(g)
    return out


def greens_biharmonic(params: GreensParams, r) -> float | np.ndarray:
    """Radial fundamental solution G of Lap^2 + k^2 at radius r.

    ``G(r) = -(1/k) Im g_m(r)`` with the complex mass m of ``params``;
    real-valued, smooth away from the origin, oscillating with envelope
    ``exp(-sqrt(k/2) r)`` at infinity.  Below r = 1e-6 the leading
    asymptotic form is substituted to avoid catastrophic cancellation.
    """
    radii, scalar = _as_radii(r)
    out = np.empty(radii.shape, dtype=float)
    tiny = radii < _ASYMPTOTIC_RADIUS
    if np.any(tiny):
        out[tiny] = small_r_asymptotic(params).evaluate(radii[tiny])
    if np.any(~tiny):
        out[~tiny] = -_im_g_biharm(params.N, params.k, radii[~tiny]) / params.k
    return out[0] if scalar else out


def greens_radial_derivative(params: GreensParams, r) -> float | np.ndarray:
    """dG/dr via the dimension-shift recursion G' = -2 pi r G_{N+2}.

    The gradient at a point x is this value times x/|x|.
    """
    radii, scalar = _as_radii(r)
    vals = -2 * math.pi * radii * greens_biharmonic(params.shifted(2), radii)
    return vals[0] if scalar else vals


def greens_laplacian(params: GreensParams, r) -> float | np.ndarray:
    """Radial Laplacian of G: 4 pi^2 r^2 G_{N+4} - 2 pi N G_{N+2}."""
    radii, scalar = _as_radii(r)
    vals = 4 * math.pi**2 * radii**2 * greens_biharmonic(params.shifted(4), radii) \
        - 2 * math.pi * params.N * greens_biharmonic(params.shifted(2), radii)
    return vals[0] if scalar else vals


def greens_laplacian_radial_derivative(params: GreensParams, r) -> float | np.ndarray:
    """Radial derivative of the Laplacian of G.

    Differentiating the Laplacian recursion with G' = -2 pi r G_{N+2} gives

        (Lap G)' = -8 pi^3 r^3 G_{N+6} + (8 + 4N) pi^2 r G_{N+4}.

    Near r = 0 this behaves like ``r^{1-N} / |S^{N-1}|`` (both terms carry
    the same power of r), which is exactly the constant that makes the
    surface-flux of Lap G reproduce a unit point source.
    """
    radii, scalar = _as_radii(r)
    vals = -8 * math.pi**3 * radii**3 * greens_biharmonic(params.shifted(6), radii) \
        + (8 + 4 * params.N) * math.pi**2 * radii * greens_biharmonic(params.shifted(4), radii)
    return vals[0] if scalar else vals


def small_r_asymptotic(params: GreensParams) -> AsymptoticForm:
    """Case analysis of the kernel's leading behaviour at the origin.

    N >= 5: ``c r^{2-2nu}`` with ``c = 2^{nu-2} Gamma(nu-1) / (2 (2 pi)^{N/2})``
    (remainder r^{4-2nu}, plus a logarithm when nu is an integer);
    N = 4: logarithmic, ``-ln(r) / (8 pi^2)`` to leading order;
    N = 2, 3: bounded, with explicit k-dependent limit values.
    """
    N, k = params.N, params.k
    nu = params.nu
    if N >= 5:
        coeff = 2 ** (nu - 2) * gamma_fn(nu - 1) / (2 * (2 * math.pi) ** (N / 2))
        return AsymptoticForm(coeff, 2 - 2 * nu, False, 4 - 2 * nu)
    if N == 4:
        return AsymptoticForm(-1 / (8 * math.pi**2), 0.0, True, 0.0)
    if N == 3:
        return AsymptoticForm(1 / (4 * math.pi * math.sqrt(2 * k)), 0.0, False, 1.0)
    return AsymptoticForm(1 / (8 * k), 0.0, False, 2.0)


def _geometric_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def domination_constant(params: GreensParams, delta: float, r_max: float = 40.0) -> float:
    """Numerical domination constant sup |G| / g_delta over a graded grid.

    ``g_delta`` is the real-mass kernel of ``-Lap + delta``.  The
    comparison makes sense only while the comparison kernel decays no
    faster than the envelope of G, i.e. ``sqrt(delta) < sqrt(k/2)``
    (the source text phrases the constraint as ``delta < sqrt(k/2)``,
    which is dimensionally the same statement about decay rates only for
    k = 2; this routine takes delta itself and detects divergence).

    Raises :class:`UnboundedRatioError` when the grid supremum fails to
    stabilize (ratio still climbing at the outer edge or under refinement).
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")

    def grid_ratio(n: int, hi: float) -> np.ndarray:
        rr = _geometric_grid(1e-4, hi, n)
        g = np.abs(np.real(mod_helmholtz_kernel(params.N, math.sqrt(delta), rr)))
        G = np.abs(greens_biharmonic(params, rr))
        return G / g

    base = grid_ratio(800, r_max)
    fine = grid_ratio(1600, r_max)
    c_base, c_fine = float(base.max()), float(fine.max())

    tail = grid_ratio(400, 1.5 * r_max)
    if np.argmax(tail) >= len(tail) - 3 and tail[-1] > 1.01 * tail[-40]:
        raise UnboundedRatioError(
            f"|G|/g_delta still increasing at r = {1.5 * r_max:g} for delta = {delta}"
            f" (decay comparison fails: sqrt(delta) >= sqrt(k/2))"
        )
    if abs(c_fine - c_base) > 5e-3 * c_fine:
        raise UnboundedRatioError("grid supremum failed to stabilize under refinement")
    return c_fine


_SINGULAR_EXPONENT = {
    # (derivative kind) -> function of N giving (power e with |kernel| ~ r^e, log flag)
    "none": lambda N: ((4 - N, False) if N >= 5 else ((0, True) if N == 4 else (0, False))),
    "grad": lambda N: ((3 - N, False) if N >= 4 else (0, False)),
    "lap": lambda N: ((2 - N, False) if N >= 3 else (0, True)),
}

_KERNEL_FN = {
    "none": greens_biharmonic,
    "grad": greens_radial_derivative,
    "lap": greens_laplacian,
}


def lp_classify(params: GreensParams, p, derivative: str = "none") -> LpVerdict:
    """Decide membership of the kernel (or its grad/Laplacian) in L^p.

    Integrates ``|kernel|^p w_N r^{N-1}`` on a geometrically graded mesh
    with a shrinking inner cutoff; the verdict comes from the decay ratio
    of successive cutoff shells, cross-checked against the power predicted
    by the small-r asymptotics.  ``p`` may be infinite (sup-norm test).

    Raises :class:`InconclusiveError` when p is within 1e-3 of the
    critical threshold.
    """
    if derivative not in _KERNEL_FN:
        raise ValueError(f"derivative must be one of {sorted(_KERNEL_FN)}, got {derivative!r}")
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must satisfy p >= 1, got {p}")
    N = params.N
    e, log_flag = _SINGULAR_EXPONENT[derivative](N)
    kernel = _KERNEL_FN[derivative]

    if math.isinf(p):
        bounded = e > 0 or (e == 0 and not log_flag)
        if not bounded:
            return LpVerdict(False, math.inf)
        rr = _geometric_grid(1e-6, 40.0 / params.decay_rate, 2000)
        return LpVerdict(True, float(np.max(np.abs(kernel(params, rr)))))

    if e < 0:
        p_crit = -N / e
        if abs(p - p_crit) < 1e-3:
            raise InconclusiveError(
                f"p = {p} is within 1e-3 of the critical threshold {p_crit}"
            )

    w_N = sphere_area(N)
    nodes, weights = np.polynomial.legendre.leggauss(16)

    def panel_integral(a: float, b: float) -> float:
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        rr = mid + half * nodes
        phi = np.abs(kernel(params, rr)) ** p * w_N * rr ** (N - 1)
        return float(half * np.dot(weights, phi))

    # Outer part: panels from the anchor out to where the decaying envelope
    # is negligible after raising to the p-th power.
    anchor = 0.5
    r_out = max(20.0, 45.0 / (params.decay_rate * max(p, 1.0) ** 0.5))
    outer_edges = np.geomspace(anchor, r_out, 48)
    total = sum(panel_integral(a, b) for a, b in zip(outer_edges[:-1], outer_edges[1:]))

    # Inner cutoff shells anchor*2^-j; their decay ratio decides the verdict.
    shells = []
    hi = anchor
    for _ in range(40):
        lo = hi / 2
        shells.append(panel_integral(lo, hi))
        hi = lo
    shells = np.array(shells)
    ratios = shells[1:] / shells[:-1]
    measured = float(np.median(ratios[-6:]))

    predicted = 2.0 ** (-(e * p + N))
    if log_flag:
        converges = True  # power part is r^{N-1}; any log power is integrable
    else:
        converges = e * p + N > 0
        if abs(math.log2(max(measured, 1e-30)) - math.log2(predicted)) > 0.2:
            raise ArithmeticError(
                f"cutoff decay {measured:.4g} disagrees with predicted {predicted:.4g}"
            )
    if converges and measured < 0.999:
        tail = shells[-1] * measured / (1 - measured)
        value = (total + float(shells.sum()) + tail) ** (1.0 / p)
        return LpVerdict(True, value)
    return LpVerdict(False, math.inf)
