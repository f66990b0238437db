"""Fixed-point probe for the semilinear fourth-order problem.

The problem ``Lap^2 u + a(x) u = g(x, u)`` with ``a -> k^2`` at infinity is
rewritten against the constant-coefficient operator,

    u = T_k[ (k^2 - a) u + g(., u) ],

and iterated with relaxation.  This is a probe, not an existence argument:
divergence is a legitimate outcome and is reported through exceptions
carrying the iteration trace.  The linear solve ``T_k`` is either the
radial quadrature plan (any dimension) or the periodic spectral solver
(dimension <= 3), which gives two independent discretizations of the same
fixed-point map.

``check_hypotheses`` validates the structural assumptions numerically
(growth envelope of the nonlinearity, decay of ``k^2 - a``, subcritical
power), and ``regularity_report`` tabulates the decay and integrability
that a genuine solution must display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .greens import GreensParams
from .operators import Field, RadialProfile, build_convolution_plan
from .spectral import PeriodicGrid, solve_biharmonic_periodic

__all__ = [
    "NonlinearProblem",
    "SolveTrace",
    "HypothesisReport",
    "RegularityReport",
    "MaxIterExceededError",
    "BlowUpError",
    "check_hypotheses",
    "picard_solve",
    "regularity_report",
    "make_coefficient",
    "make_nonlinearity",
    "gaussian_biharmonic_image",
]

BLOWUP_NORM = 1e6


class MaxIterExceededError(RuntimeError):
    def __init__(self, message: str, trace: "SolveTrace"):
        super().__init__(message)
        self.trace = trace


class BlowUpError(RuntimeError):
    def __init__(self, message: str, trace: "SolveTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass
class NonlinearProblem:
    """Coefficients, nonlinearity and growth data of the semilinear problem.

    ``a`` and ``g`` are radial callables ``a(r)`` and ``g(r, u)``; the
    growth constants bound ``|g| <= b1 |u|^{delta+1} + b2 |u|^{sigma+1}``
    with exact rational ``sigma > delta > 0``.
    """

    N: int
    k: float
    a: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    b1_sup: float
    b2_sup: float
    delta: Fraction
    sigma: Fraction

    def __post_init__(self):
        self.delta = Fraction(self.delta)
        self.sigma = Fraction(self.sigma)
        if not (self.sigma > self.delta > 0):
            raise ValueError(f"need sigma > delta > 0, got sigma={self.sigma}, delta={self.delta}")
        if not self.k > 0:
            raise ValueError("k must be positive")

    @property
    def params(self) -> GreensParams:
        return GreensParams(self.N, self.k)

    def subcritical(self) -> bool:
        if self.N < 5:
            return True
        return self.sigma + 1 < Fraction(self.N + 4, self.N - 4)


@dataclass
class SolveTrace:
    """Successive-iterate residual norms of one fixed-point run."""

    iterates: list[float] = dataclass_field(default_factory=list)
    converged: bool = False
    relaxation: float = 1.0

    @property
    def final_residual(self) -> float:
        return self.iterates[-1] if self.iterates else math.inf


@dataclass(frozen=True)
class HypothesisEntry:
    name: str
    passed: bool
    detail: str


@dataclass
class HypothesisReport:
    entries: list[HypothesisEntry]

    @property
    def ok(self) -> bool:
        return all(e.passed for e in self.entries)

    def __str__(self) -> str:
        return "\n".join(
            f"[{'PASS' if e.passed else 'FAIL'}] {e.name}: {e.detail}" for e in self.entries
        )


def check_hypotheses(
    prob: NonlinearProblem,
    samples: np.ndarray,
    u_max: float = 5.0,
) -> HypothesisReport:
    """Numerically validate the structural hypotheses on a sample grid.

    The growth envelope is sampled for u in [-u_max, u_max] (the stated
    assumption bounds u >= 0 only; solutions may change sign, so both signs
    are checked here).  Failures become report entries, never exceptions.
    """
    samples = np.asarray(samples, dtype=float)
    entries: list[HypothesisEntry] = []

    entries.append(
        HypothesisEntry(
            "growth exponents",
            prob.sigma > prob.delta > 0,
            f"sigma={prob.sigma}, delta={prob.delta}",
        )
    )

    if prob.N >= 5:
        crit = Fraction(prob.N + 4, prob.N - 4)
        entries.append(
            HypothesisEntry(
                "subcritical power",
                prob.sigma + 1 < crit,
                f"sigma+1={prob.sigma + 1} vs (N+4)/(N-4)={crit}",
            )
        )
    else:
        entries.append(HypothesisEntry("subcritical power", True, f"no constraint for N={prob.N}"))

    u_grid = np.linspace(-u_max, u_max, 81)
    rr, uu = np.meshgrid(samples, u_grid, indexing="ij")
    bound = prob.b1_sup * np.abs(uu) ** (float(prob.delta) + 1) + prob.b2_sup * np.abs(uu) ** (
        float(prob.sigma) + 1
    )
    gvals = np.abs(prob.g(rr, uu))
    margin = float(np.max(gvals - bound))
    entries.append(
        HypothesisEntry(
            "growth envelope",
            margin <= 1e-10 * max(prob.b1_sup + prob.b2_sup, 1.0),
            f"max(|g| - bound) = {margin:.3e} on {len(samples)}x{len(u_grid)} samples",
        )
    )

    dev = prob.k**2 - prob.a(samples)
    linf = float(np.max(np.abs(dev)))
    from .specfun import sphere_area

    l2_sq = float(np.trapezoid(np.abs(dev) ** 2 * samples ** (prob.N - 1), samples)) * sphere_area(
        prob.N
    )
    tail = np.abs(dev[samples >= 0.5 * samples[-1]])
    decays = linf == 0.0 or (tail.size > 0 and float(np.max(tail)) <= max(1e-8, 1e-6 * linf))
    entries.append(
        HypothesisEntry(
            "coefficient decay",
            bool(np.isfinite(l2_sq)) and decays,
            f"||k^2-a||_inf ~ {linf:.3e}, ||k^2-a||_2 ~ {math.sqrt(max(l2_sq, 0.0)):.3e}, "
            f"tail sup {0.0 if tail.size == 0 else float(np.max(tail)):.3e}",
        )
    )

    return HypothesisReport(entries)


def _picard_radial(prob, u0: RadialProfile, relax, tol, max_iter) -> tuple[RadialProfile, SolveTrace]:
    plan = build_convolution_plan(prob.params, u0.support_radius, u0.nodes, "G", level=1)
    nodes = u0.nodes
    a_vals = np.asarray(prob.a(nodes), dtype=float)
    k2 = prob.k**2
    u = u0.values.copy()
    trace = SolveTrace(relaxation=relax)
    for _ in range(max_iter):
        rhs = (k2 - a_vals) * u + np.asarray(prob.g(nodes, u), dtype=float)
        v = plan.apply(u0.replace_values(rhs))
        u_next = (1 - relax) * u + relax * v
        diff = float(np.max(np.abs(u_next - u)))
        trace.iterates.append(diff)
        u = u_next
        if float(np.max(np.abs(u))) > BLOWUP_NORM:
            raise BlowUpError("iterate norm exceeded the blow-up threshold", trace)
        if diff < tol:
            trace.converged = True
            return u0.replace_values(u), trace
    raise MaxIterExceededError(f"no convergence within {max_iter} iterations", trace)


def _picard_spectral(prob, u0: Field, relax, tol, max_iter) -> tuple[Field, SolveTrace]:
    grid = PeriodicGrid(u0.dim, u0.halfwidth, u0.points_per_dim)
    rad = grid.radius()
    a_vals = np.asarray(prob.a(rad), dtype=float)
    k2 = prob.k**2
    u = u0.values.copy()
    trace = SolveTrace(relaxation=relax)
    for _ in range(max_iter):
        rhs = (k2 - a_vals) * u + np.asarray(prob.g(rad, u), dtype=float)
        v = solve_biharmonic_periodic(grid, grid.field_of(rhs), prob.k).values
        u_next = (1 - relax) * u + relax * v
        diff = float(np.max(np.abs(u_next - u)))
        trace.iterates.append(diff)
        u = u_next
        if float(np.max(np.abs(u))) > BLOWUP_NORM:
            raise BlowUpError("iterate norm exceeded the blow-up threshold", trace)
        if diff < tol:
            trace.converged = True
            return grid.field_of(u), trace
    raise MaxIterExceededError(f"no convergence within {max_iter} iterations", trace)


def picard_solve(
    prob: NonlinearProblem,
    u0: Union[RadialProfile, Field],
    relax: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 500,
):
    """Relaxed fixed-point iteration u <- (1-w) u + w T_k[(k^2-a)u + g(., u)].

    The backend follows the type of ``u0``: a radial profile iterates
    through the precomputed convolution plan, a field through the periodic
    spectral solver.  Stops when the successive-iterate max-norm drops
    below ``tol``; raises :class:`BlowUpError` past norm 1e6 and
    :class:`MaxIterExceededError` at the iteration cap, both carrying the
    trace.  No existence claim is attached to convergence.
    """
    if not 0 < relax <= 1:
        raise ValueError(f"relaxation must lie in (0, 1], got {relax}")
    if isinstance(u0, RadialProfile):
        return _picard_radial(prob, u0, relax, tol, max_iter)
    if isinstance(u0, Field):
        if prob.N != u0.dim:
            raise ValueError("field dimension must match the problem dimension")
        return _picard_spectral(prob, u0, relax, tol, max_iter)
    raise TypeError("u0 must be a RadialProfile or a Field")


@dataclass
class RegularityReport:
    """Tail decay table and norm estimates of a candidate solution."""

    tail_rows: list[tuple[float, float, float]]  # (R, sup|u| beyond R, sup|lap u| beyond R)
    norms: dict[str, float]

    def tails_decreasing(self) -> bool:
        sup_u = [row[1] for row in self.tail_rows]
        sup_lap = [row[2] for row in self.tail_rows]
        return all(a > b for a, b in zip(sup_u, sup_u[1:])) and all(
            a > b for a, b in zip(sup_lap, sup_lap[1:])
        )

    def __str__(self) -> str:
        lines = ["    R     sup|u|        sup|lap u|"]
        for R, su, sl in self.tail_rows:
            lines.append(f"  {R:5.2f}  {su:.6e}  {sl:.6e}")
        lines.append("  " + ", ".join(f"{k}={v:.6e}" for k, v in self.norms.items()))
        return "\n".join(lines)


def regularity_report(
    u: Union[RadialProfile, Field],
    params: GreensParams,
    radii: list[float],
) -> RegularityReport:
    """Tabulate tail suprema of u and lap u, plus integrability estimates.

    For radial input the Laplacian comes from the interpolating spline; for
    grid input everything is spectral.  Estimates only; nothing is raised.
    """
    from .specfun import sphere_area

    if isinstance(u, RadialProfile):
        rr = np.geomspace(u.nodes[0], u.nodes[-1], 1200)
        uu = u(rr)
        d1, d2 = u.radial_derivatives(rr)
        lap = d2 + (params.N - 1) / rr * d1
        w_n = sphere_area(params.N)
        meas = rr ** (params.N - 1)

        def lp(p):
            return float(np.trapezoid(np.abs(uu) ** p * meas, rr) * w_n) ** (1 / p)

        lap2 = _respline_laplacian(rr, lap, params.N)
        norms = {
            "L2": lp(2),
            "L4": lp(4),
            "Linf": float(np.max(np.abs(uu))),
            "H2_seminorm": float(np.trapezoid(lap**2 * meas, rr) * w_n) ** 0.5,
            "H4_seminorm": float(np.trapezoid(lap2**2 * meas, rr) * w_n) ** 0.5,
        }
        rows = []
        for R in radii:
            sel = rr >= R
            rows.append((R, float(np.max(np.abs(uu[sel]))), float(np.max(np.abs(lap[sel])))))
        return RegularityReport(rows, norms)

    if isinstance(u, Field):
        grid = PeriodicGrid(u.dim, u.halfwidth, u.points_per_dim)
        rad = grid.radius()
        fs = grid.freq_sq()
        u_hat = np.fft.fftn(u.values)
        lap = -np.real(np.fft.ifftn(fs * u_hat))
        lap2 = np.real(np.fft.ifftn(fs**2 * u_hat))
        cell = u.spacing**u.dim

        def lp(p):
            return float(np.sum(np.abs(u.values) ** p) * cell) ** (1 / p)

        norms = {
            "L2": lp(2),
            "L4": lp(4),
            "Linf": float(np.max(np.abs(u.values))),
            "H2_seminorm": float(np.sum(lap**2) * cell) ** 0.5,
            "H4_seminorm": float(np.sum(lap2**2) * cell) ** 0.5,
        }
        rows = []
        for R in radii:
            sel = rad >= R
            rows.append(
                (R, float(np.max(np.abs(u.values[sel]))), float(np.max(np.abs(lap[sel]))))
            )
        return RegularityReport(rows, norms)

    raise TypeError("u must be a RadialProfile or a Field")


def _respline_laplacian(rr: np.ndarray, lap: np.ndarray, N: int) -> np.ndarray:
    from scipy.interpolate import CubicSpline

    sp = CubicSpline(np.log(rr), lap)
    s = np.log(rr)
    d1 = sp(s, 1) / rr
    d2 = (sp(s, 2) - sp(s, 1)) / rr**2
    return d2 + (N - 1) / rr * d1


# ---------------------------------------------------------------------------
# built-in coefficient and nonlinearity families


def gaussian_biharmonic_image(N: int, r: np.ndarray, amplitude: float = 1.0) -> np.ndarray:
    """Lap^2 of amplitude * exp(-r^2), in closed form."""
    r2 = np.asarray(r, dtype=float) ** 2
    poly = 16 * r2**2 - (16 * N + 32) * r2 + 4 * N**2 + 8 * N
    return amplitude * poly * np.exp(-r2)


def make_coefficient(kind: str, k: float, **params) -> Callable[[np.ndarray], np.ndarray]:
    """Coefficient families: 'constant' (a = k^2) or 'gaussian_well'."""
    k2 = k**2
    if kind == "constant":
        return lambda r: np.full_like(np.asarray(r, dtype=float), k2)
    if kind == "gaussian_well":
        depth = float(params.get("depth", 0.1))
        width = float(params.get("width", 1.0))
        return lambda r: k2 - depth * np.exp(-((np.asarray(r, dtype=float) / width) ** 2))
    raise ValueError(f"unknown coefficient kind {kind!r}")


def make_nonlinearity(
    kind: str,
    N: int,
    k: float,
    a: Callable[[np.ndarray], np.ndarray],
    sigma: Fraction,
    eps: float = 0.0,
    amplitude: float = 1.0,
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Nonlinearity families.

    'power':        g(r, u) = eps |u|^sigma u exp(-r^2)
    'manufactured': g(r, u) = Lap^2 u* + a u*   (u-independent; u* = amplitude exp(-r^2))
    'manufactured_plus_power': their sum.
    """
    s = float(sigma)

    def power(r, u):
        return eps * np.abs(u) ** s * u * np.exp(-np.asarray(r, dtype=float) ** 2)

    def forcing(r, u):
        r = np.asarray(r, dtype=float)
        ustar = amplitude * np.exp(-(r**2))
        return gaussian_biharmonic_image(N, r, amplitude) + np.asarray(a(r), dtype=float) * ustar

    if kind == "power":
        return power
    if kind == "manufactured":
        return forcing
    if kind == "manufactured_plus_power":
        return lambda r, u: forcing(r, u) + power(r, u)
    raise ValueError(f"unknown nonlinearity kind {kind!r}")
