"""Convolution operators against the fundamental solution and its derivatives.

Two realizations are provided.

``convolve_radial`` evaluates ``u = f * kernel`` for radial data in any
dimension N >= 2 through the bipolar reduction

    u(r) = w_{N-1} int_0^inf f(rho) rho^{N-1}
           int_0^pi kernel(R(theta)) sin^{N-2}(theta) dtheta drho,

with ``R = sqrt(r^2 + rho^2 - 2 r rho cos theta)``.  The radial integral is
split at ``rho = r`` where the kernel is singular and geometrically graded
into it; the angular integral uses Gauss-Legendre panels geometrically
refined toward ``theta = 0``, where the integrand's complex singularity
approaches the contour as ``|rho - r| -> 0``.  A plan (quadrature nodes with
kernel-weighted weights baked in) can be built once and applied to many
sources, which the fixed-point solver relies on.

``apply_T_grid`` is the truncated direct convolution on a uniform tensor
grid (dimension <= 3), evaluated as an exact linear convolution with the
singular self-cell replaced by the analytic cell integral of the kernel's
leading small-r form.

The gradient kernel is the radial component of the vector convolution: for
radial sources, ``f * grad(G)`` points along ``x/|x|`` with magnitude
``int f(rho) G'(R) (r - rho cos theta)/R ...``, which is what the plan
assembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from . import greens
from .greens import GreensParams
from .specfun import sphere_area

__all__ = [
    "RadialProfile",
    "Field",
    "ConvolutionPlan",
    "DerivativeIdentityReport",
    "UnsupportedDimensionError",
    "QuadratureFailureError",
    "SupportViolationError",
    "build_convolution_plan",
    "convolve_radial",
    "apply_T_grid",
    "derivative_identity_check",
]

KERNEL_KINDS = ("G", "gradG", "lapG")


class UnsupportedDimensionError(ValueError):
    """Requested dimension outside what the operator supports."""


class QuadratureFailureError(ArithmeticError):
    """Panel refinement failed to stabilize to the requested tolerance."""


class SupportViolationError(ValueError):
    """Grid source not supported well inside the box."""


@dataclass
class RadialProfile:
    """A sampled radial function with cubic interpolation on log-spaced nodes.

    Evaluation below the first node returns the first value (radial data is
    flat at the origin at the resolution of the sampling); beyond the last
    node the function is treated as zero, and ``support_radius`` (>= last
    node) is the radius integrators may truncate at.
    """

    nodes: np.ndarray
    values: np.ndarray
    support_radius: float | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape:
            raise ValueError("nodes and values must be 1-d arrays of equal length")
        if len(self.nodes) < 4:
            raise ValueError("need at least 4 nodes for cubic interpolation")
        if np.any(self.nodes <= 0) or np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing and positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite")
        if self.support_radius is None:
            self.support_radius = float(self.nodes[-1])
        if self.support_radius < self.nodes[-1]:
            raise ValueError("support_radius must cover the last node")
        self._spline = CubicSpline(np.log(self.nodes), self.values)

    @classmethod
    def from_callable(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        r_max: float,
        n: int = 96,
        r_min: float = 1e-3,
    ) -> "RadialProfile":
        nodes = np.geomspace(r_min, r_max, n)
        return cls(nodes, np.asarray(fn(nodes), dtype=float))

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape, dtype=float)
        inner = r < self.nodes[0]
        mid = (~inner) & (r <= self.nodes[-1])
        out[inner] = self.values[0]
        out[mid] = self._spline(np.log(r[mid]))
        return out

    def radial_derivatives(self, r) -> tuple[np.ndarray, np.ndarray]:
        """(du/dr, d2u/dr2) from the log-space spline by the chain rule."""
        r = np.asarray(r, dtype=float)
        s = np.log(np.clip(r, self.nodes[0], self.nodes[-1]))
        d1 = self._spline(s, 1)
        d2 = self._spline(s, 2)
        return d1 / r, (d2 - d1) / r**2

    def replace_values(self, values: np.ndarray) -> "RadialProfile":
        return RadialProfile(self.nodes.copy(), np.asarray(values, dtype=float), self.support_radius)


@dataclass
class Field:
    """Samples of a function on a uniform periodic tensor grid [-L, L)^dim."""

    dim: int
    halfwidth: float
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise UnsupportedDimensionError(f"Field supports dim <= 3, got {self.dim}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.dim:
            raise ValueError("values rank must equal dim")
        m = self.values.shape[0]
        if any(s != m for s in self.values.shape) or m % 2 != 0:
            raise ValueError("values must be a cube with an even number of points per dim")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def points_per_dim(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return 2 * self.halfwidth / self.points_per_dim

    def coords1d(self) -> np.ndarray:
        return -self.halfwidth + self.spacing * np.arange(self.points_per_dim)

    def radius(self) -> np.ndarray:
        x = self.coords1d()
        axes = np.meshgrid(*([x] * self.dim), indexing="ij")
        return np.sqrt(sum(a**2 for a in axes))


# ---------------------------------------------------------------------------
# quadrature plumbing


_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEGGAUSS_CACHE[n]


def _graded_edges(a: float, b: float, toward_right: bool, depth: int) -> np.ndarray:
    """Edges of [a, b] geometrically refined (ratio 1/2) toward one endpoint."""
    w = b - a
    ladder = w * 0.5 ** np.arange(1, depth + 1)
    if toward_right:
        edges = np.concatenate(([a], b - ladder, [b]))
    else:
        edges = np.concatenate(([a], (a + ladder)[::-1], [b]))
        edges[-1] = b
    return np.unique(edges)


def _split_wide_panels(edges: np.ndarray, max_width: float) -> np.ndarray:
    out = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / max_width)))
        out.extend(a + (b - a) * np.arange(1, n + 1) / n)
    return np.array(out)


@dataclass
class _PlanRow:
    r: float
    rho_nodes: np.ndarray
    weights: np.ndarray


@dataclass
class ConvolutionPlan:
    """Precomputed quadrature for u = f * kernel at fixed output radii.

    Applying the plan is a weighted sum of source values at the stored
    nodes, so it is linear in the source and cheap to reuse.
    """

    params: GreensParams
    kernel: str
    r_eval: np.ndarray
    rows: list[_PlanRow] = dataclass_field(default_factory=list)

    def apply(self, f: Union[RadialProfile, Callable[[np.ndarray], np.ndarray]]) -> np.ndarray:
        out = np.empty(len(self.rows), dtype=float)
        for i, row in enumerate(self.rows):
            out[i] = float(np.dot(row.weights, np.asarray(f(row.rho_nodes), dtype=float)))
        return out


def _theta_grid(dist: float, n_gl: int, extra_depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Panel Gauss-Legendre grid on [0, pi], graded toward 0.

    ``dist`` is the normalized distance |rho - r|/sqrt(rho r) controlling
    how close the integrand's complex singularity sits to theta = 0.
    """
    depth = int(np.clip(math.ceil(math.log2(math.pi / max(dist, 1e-9))) + extra_depth, 6, 36))
    edges = math.pi * 0.5 ** np.arange(depth, -1, -1)
    edges = np.concatenate(([0.0], edges))
    gx, gw = _leggauss(n_gl)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + halfs[:, None] * gx).ravel()
    weights = (halfs[:, None] * gw).ravel()
    return nodes, weights


def _kernel_values(params: GreensParams, kernel: str, R: np.ndarray) -> np.ndarray:
    if kernel == "G":
        return greens.greens_biharmonic(params, R)
    if kernel == "gradG":
        return greens.greens_radial_derivative(params, R)
    if kernel == "lapG":
        return greens.greens_laplacian(params, R)
    raise ValueError(f"kernel must be one of {KERNEL_KINDS}, got {kernel!r}")


def _build_row(
    params: GreensParams,
    kernel: str,
    r: float,
    support: float,
    gl_rho: int,
    gl_theta: int,
    depth_rho: int,
    theta_extra: int,
    max_width: float,
) -> _PlanRow:
    N = params.N
    w_ang = sphere_area(N - 1) if N > 2 else 2.0

    # Radial panels: split at the kernel singularity rho = r and grade into
    # it from both sides; away from it keep panels below max_width.
    if r < support:
        left = _graded_edges(0.0, r, toward_right=True, depth=depth_rho)
        right = _graded_edges(r, support, toward_right=False, depth=depth_rho)
        edges = np.unique(np.concatenate([left, right]))
    else:
        edges = _graded_edges(0.0, support, toward_right=True, depth=depth_rho)
    edges = _split_wide_panels(edges, max_width)

    gx, gw = _leggauss(gl_rho)
    rho_nodes: list[np.ndarray] = []
    row_weights: list[np.ndarray] = []

    # Assemble all (rho, theta) pairs of the row, then evaluate the kernel
    # in one batched call.
    panel_data = []
    flat_R: list[np.ndarray] = []
    flat_geom: list[np.ndarray] = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        rho = mid + half * gx
        wrho = half * gw
        dist = min(abs(r - a), abs(r - b)) / max(math.sqrt(r * mid), 1e-12) if r > 0 else 1.0
        th, wth = _theta_grid(dist, gl_theta, theta_extra)
        sin_half_sq = np.sin(th / 2) ** 2
        sin_pow = np.sin(th) ** (N - 2)
        # Stable bipolar distance: (r - rho)^2 + 4 r rho sin^2(theta/2)
        # (the textbook cosine form cancels catastrophically as rho -> r).
        R = np.sqrt((r - rho[:, None]) ** 2 + 4 * r * rho[:, None] * sin_half_sq)
        R = np.maximum(R, 1e-13)
        if kernel == "gradG":
            radial_comp = (r - rho[:, None]) + 2 * rho[:, None] * sin_half_sq
            geom = radial_comp / R * sin_pow
        else:
            geom = np.broadcast_to(sin_pow, R.shape).copy()
        panel_data.append((rho, wrho, wth, R.shape))
        flat_R.append(R.ravel())
        flat_geom.append(geom.ravel())

    kern = _kernel_values(params, kernel, np.concatenate(flat_R))
    geom_all = np.concatenate(flat_geom)
    vals = kern * geom_all

    offset = 0
    for (rho, wrho, wth, shape), _ in zip(panel_data, flat_R):
        block = vals[offset : offset + shape[0] * shape[1]].reshape(shape)
        offset += shape[0] * shape[1]
        inner = block @ wth
        rho_nodes.append(rho)
        row_weights.append(w_ang * wrho * rho ** (N - 1) * inner)

    return _PlanRow(r, np.concatenate(rho_nodes), np.concatenate(row_weights))


_LEVELS = (
    dict(gl_rho=12, gl_theta=12, depth_rho=18, theta_extra=1),
    dict(gl_rho=16, gl_theta=16, depth_rho=22, theta_extra=2),
    dict(gl_rho=24, gl_theta=24, depth_rho=28, theta_extra=3),
)


def build_convolution_plan(
    params: GreensParams,
    support_radius: float,
    r_eval: Sequence[float],
    kernel: str = "G",
    level: int = 1,
) -> ConvolutionPlan:
    """Build the bipolar quadrature plan at one refinement level."""
    if params.N < 2:
        raise UnsupportedDimensionError(f"radial convolution needs N >= 2, got {params.N}")
    if kernel not in KERNEL_KINDS:
        raise ValueError(f"kernel must be one of {KERNEL_KINDS}, got {kernel!r}")
    r_eval = np.asarray(r_eval, dtype=float)
    if np.any(r_eval < 0):
        raise ValueError("evaluation radii must be nonnegative")
    cfg = _LEVELS[level]
    max_width = support_radius / (10 + 4 * level)
    plan = ConvolutionPlan(params, kernel, r_eval)
    for r in r_eval:
        plan.rows.append(
            _build_row(params, kernel, float(r), support_radius, max_width=max_width, **cfg)
        )
    return plan


def convolve_radial(
    params: GreensParams,
    f: Union[RadialProfile, Callable[[np.ndarray], np.ndarray]],
    r_eval: Sequence[float],
    kernel: str = "G",
    tol: float = 1e-8,
    support_radius: float | None = None,
) -> np.ndarray:
    """Convolve a compactly supported radial source with the chosen kernel.

    ``kernel="G"`` gives the solution operator for the fourth-order
    problem, ``"gradG"`` its radial derivative (the radial component of the
    gradient convolution), ``"lapG"`` its Laplacian.  Two quadrature levels
    are compared and a third is tried on disagreement; failure to reach
    ``tol`` relative to the output scale raises
    :class:`QuadratureFailureError`.
    """
    if support_radius is None:
        if isinstance(f, RadialProfile):
            support_radius = f.support_radius
        else:
            raise ValueError("support_radius is required for callable sources")

    results = []
    for level in range(len(_LEVELS)):
        plan = build_convolution_plan(params, support_radius, r_eval, kernel, level=level)
        results.append(plan.apply(f))
        if len(results) >= 2:
            scale = max(float(np.max(np.abs(results[-1]))), 1e-300)
            err = float(np.max(np.abs(results[-1] - results[-2])))
            if err <= tol * scale:
                return results[-1]
    raise QuadratureFailureError(
        f"quadrature did not stabilize to {tol:g} relative (last defect {err / scale:.3g})"
    )


# ---------------------------------------------------------------------------
# grid convolution


def _self_cell_average(params: GreensParams, h: float) -> float:
    """Analytic cell integral of the leading small-r kernel form, averaged.

    The cube cell is replaced by the ball of equal volume and the leading
    asymptotic form integrated exactly over it.
    """
    N = params.N
    asym = greens.small_r_asymptotic(params)
    v_N = math.pi ** (N / 2) / math.gamma(N / 2 + 1)
    a_eq = h * v_N ** (-1.0 / N)
    w_N = sphere_area(N)
    if asym.log_flag:
        integral = w_N * asym.leading_coeff * a_eq**N * (math.log(a_eq) - 1.0 / N) / N
        return integral / h**N
    if asym.exponent == 0:
        return asym.leading_coeff
    e = asym.exponent
    integral = w_N * asym.leading_coeff * a_eq ** (N + e) / (N + e)
    return integral / h**N


def apply_T_grid(params: GreensParams, f: Field) -> Field:
    """Truncated direct convolution of a grid source with the kernel.

    Exact linear (zero-padded) convolution; the singular self-cell uses the
    analytic cell integral of the leading small-r form.  The source must be
    supported well inside the box: |f| outside the half-box must be below
    1e-12 of its peak.
    """
    if f.dim != params.N:
        raise UnsupportedDimensionError(
            f"field dimension {f.dim} does not match operator dimension {params.N}"
        )
    m = f.points_per_dim
    h = f.spacing
    x = f.coords1d()
    axes = np.meshgrid(*([x] * f.dim), indexing="ij")
    outside = np.maximum.reduce([np.abs(a) for a in axes]) > f.halfwidth / 2
    peak = float(np.max(np.abs(f.values)))
    if peak > 0 and float(np.max(np.abs(f.values[outside]))) > 1e-12 * peak:
        raise SupportViolationError("source is not supported inside the half-box")

    d = h * np.arange(-(m - 1), m)
    daxes = np.meshgrid(*([d] * f.dim), indexing="ij")
    dist = np.sqrt(sum(a**2 for a in daxes))
    center = tuple([m - 1] * f.dim)
    dist[center] = 1.0  # placeholder, replaced by the cell average below
    kern = greens.greens_biharmonic(params, dist)
    kern[center] = _self_cell_average(params, h)

    conv = fftconvolve(f.values, kern, mode="same") * h**f.dim
    return Field(f.dim, f.halfwidth, conv)


# ---------------------------------------------------------------------------
# derivative identities


@dataclass(frozen=True)
class DerivativeIdentityReport:
    """Relative defects of the convolution derivative identities at a point."""

    r: float
    grad_defect: float
    lap_defect: float
    tolerance: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.grad_defect < self.tolerance and self.lap_defect < self.tolerance


def derivative_identity_check(
    params: GreensParams,
    f: Union[RadialProfile, Callable[[np.ndarray], np.ndarray]],
    r0: float,
    support_radius: float | None = None,
    fd_step: float = 0.05,
    tolerance: float = 1e-4,
) -> DerivativeIdentityReport:
    """Compare finite differences of f*G against the gradient/Laplacian kernels.

    Differentiating through the convolution must agree with convolving
    against the differentiated kernel; the report carries the relative
    defects of both identities at radius ``r0`` (failures are reported,
    not raised).
    """
    if support_radius is None:
        if isinstance(f, RadialProfile):
            support_radius = f.support_radius
        else:
            raise ValueError("support_radius is required for callable sources")
    if r0 <= 2 * fd_step:
        raise ValueError("evaluation radius must exceed twice the step")

    h = fd_step
    stencil = r0 + h * np.arange(-2, 3)
    u = convolve_radial(params, f, stencil, "G", support_radius=support_radius)
    du_fd = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
    d2u_fd = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h**2)
    lap_fd = d2u_fd + (params.N - 1) / r0 * du_fd

    s_grad = convolve_radial(params, f, [r0], "gradG", support_radius=support_radius)[0]
    s_lap = convolve_radial(params, f, [r0], "lapG", support_radius=support_radius)[0]

    scale_g = max(abs(du_fd), abs(s_grad), abs(u[2]) / max(r0, 1.0), 1e-300)
    scale_l = max(abs(lap_fd), abs(s_lap), abs(u[2]), 1e-300)
    if float(np.max(np.abs(u))) == 0.0 and s_grad == 0.0 and s_lap == 0.0:
        return DerivativeIdentityReport(r0, 0.0, 0.0, tolerance)
    return DerivativeIdentityReport(
        r0,
        abs(du_fd - s_grad) / scale_g,
        abs(lap_fd - s_lap) / scale_l,
        tolerance,
    )
