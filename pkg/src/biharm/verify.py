"""Named verification suites for the kernel properties.

Each suite returns ``(passed, lines)`` so the command-line front end can
print a report and exit accordingly.  The checks are quantitative versions
of the kernel's defining properties: the fourth-order equation, the
dimension-shift recursion, the decay rate, the small-r constants and the
L^p classification.
"""

from __future__ import annotations

import math

import numpy as np

from . import greens
from .greens import GreensParams

__all__ = ["run_suite", "SUITES"]


def _local_pde_residual(params: GreensParams, r: float) -> float:
    h = 3e-3 * min(r, 2.0 / math.sqrt(params.k))
    stencil = r + h * np.arange(-2, 3)
    v = greens.greens_laplacian(params, stencil)
    d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h**2)
    d1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
    lap2 = d2 + (params.N - 1) / r * d1
    g = greens.greens_biharmonic(params, r)
    scale = max(abs(d2), abs((params.N - 1) / r * d1), params.k**2 * abs(g))
    return abs(lap2 + params.k**2 * g) / scale


def verify_pde(params: GreensParams, tol: float = 1e-4) -> tuple[bool, list[str]]:
    """Lap^2 G + k^2 G = 0 away from the origin, composed by differencing
    the analytic Laplacian and scaled by the largest term."""
    radii = np.geomspace(0.05, 10.0, 16)
    worst = max(_local_pde_residual(params, float(r)) for r in radii)
    ok = worst <= tol
    return ok, [f"pde: worst scaled residual {worst:.3e} (tol {tol:g})"]


def verify_recursion(params: GreensParams, tol: float = 1e-6) -> tuple[bool, list[str]]:
    """Radial derivative identity against a 5-point finite difference."""
    radii = np.geomspace(0.05, 10.0, 16)
    worst = 0.0
    for r in radii:
        r = float(r)
        h = 1e-5 * max(r, 1.0)
        stencil = r + h * np.arange(-2, 3)
        v = greens.greens_biharmonic(params, stencil)
        fd = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
        an = greens.greens_radial_derivative(params, r)
        scale = max(abs(an), math.sqrt(params.k) * abs(v[2]), abs(v[2]) / r)
        worst = max(worst, abs(fd - an) / scale)
    ok = worst <= tol
    return ok, [f"recursion: worst relative defect {worst:.3e} (tol {tol:g})"]


def verify_decay(params: GreensParams) -> tuple[bool, list[str]]:
    """Envelope decay at rate sqrt(k/2).

    Checks (i) collapse of |G| and |G'| by 1e-6 between r = 1/sqrt(k) and
    r = 25/sqrt(k), and (ii) that exp(sqrt(k/2) r) |G| stays below the
    theoretical envelope constant times r^{-(N-1)/2} on the far field, so
    the weighted kernel indeed tends to zero.
    """
    k = params.k
    rk = 1.0 / math.sqrt(k)
    lines = []
    ok = True
    for name, fn in (("|G|", greens.greens_biharmonic), ("|G'|", greens.greens_radial_derivative)):
        near = abs(fn(params, rk))
        far = abs(fn(params, 25 * rk))
        ratio = far / near
        ok &= ratio < 1e-6
        lines.append(f"decay {name}: |at 25/sqrt(k)| / |at 1/sqrt(k)| = {ratio:.3e} (< 1e-6)")

    nu = params.nu
    c_env = (
        (2 * math.pi) ** (-params.N / 2)
        * k ** (nu / 2)
        * math.sqrt(math.pi / (2 * math.sqrt(k)))
        / k
    )
    rr = np.geomspace(15 * rk, 40 * rk, 40)
    weighted = np.exp(params.decay_rate * rr) * np.abs(greens.greens_biharmonic(params, rr))
    bound = 1.5 * c_env * rr ** (-(params.N - 1) / 2)
    worst = float(np.max(weighted / bound))
    ok &= worst <= 1.0
    lines.append(f"decay envelope: max weighted/bound = {worst:.3f} (<= 1)")
    return ok, lines


def verify_asympt(params: GreensParams) -> tuple[bool, list[str]]:
    """Small-r leading constants, case by case in the dimension."""
    N, k = params.N, params.k
    form = greens.small_r_asymptotic(params)
    lines = []
    if N >= 5:
        r = 1e-3 / math.sqrt(k)
        ratio = float(greens.greens_biharmonic(params, r) / form.evaluate(r))
        ok = abs(ratio - 1) < 0.01
        lines.append(f"asympt: G/leading = {ratio:.6f} at r = 1e-3/sqrt(k) (within 1%)")
    elif N == 4:
        r1, r2 = 1e-4, 1e-3
        g1 = float(greens.greens_biharmonic(params, r1))
        g2 = float(greens.greens_biharmonic(params, r2))
        ratio = (g2 / g1) / (math.log(r2) / math.log(r1))
        ok = abs(ratio - 1) < 0.05
        lines.append(f"asympt: log-growth ratio {ratio:.4f} (within 5%)")
    else:
        r = 1e-5
        g = float(greens.greens_biharmonic(params, 2 * r))
        ok = abs(g / form.leading_coeff - 1) < 1e-3
        lines.append(f"asympt: G(2e-5)/limit = {g / form.leading_coeff:.8f} (within 1e-3)")
    return ok, lines


# (2.24)-style table: finite critical exponent per derivative kind, or None
# when every finite p is admissible; the boolean tells whether p = infinity
# is included.
def _lp_table(N: int, kind: str) -> tuple[float | None, bool]:
    if kind == "none":
        if N >= 5:
            return N / (N - 4), False
        return (None, False) if N == 4 else (None, True)
    if kind == "grad":
        if N > 3:
            return N / (N - 3), False
        return (None, False) if N == 3 else (None, True)
    if N >= 3:
        return N / (N - 2), False
    return None, False


def verify_lp(params: GreensParams) -> tuple[bool, list[str]]:
    """Integrability verdicts against the classification table.

    Finite thresholds are straddled by +-0.5; unbounded rows are probed at
    a large finite exponent, and at p = infinity where the table includes
    it.
    """
    lines = []
    ok = True
    for kind in ("none", "grad", "lap"):
        p_crit, inf_included = _lp_table(params.N, kind)
        cases: list[tuple[float, bool]] = []
        if p_crit is not None:
            cases.append((max(1.0, p_crit - 0.5), True))
            cases.append((p_crit + 0.5, False))
        else:
            cases.append((6.0, True))
            if inf_included:
                cases.append((math.inf, True))
        for p, expect_finite in cases:
            verdict = greens.lp_classify(params, p, kind)
            good = verdict.finite == expect_finite
            ok &= good
            lines.append(
                f"lp {kind} p={p:g}: {'finite' if verdict.finite else 'divergent'} "
                f"(expected {'finite' if expect_finite else 'divergent'})"
            )
    return ok, lines


SUITES = {
    "pde": verify_pde,
    "recursion": verify_recursion,
    "decay": verify_decay,
    "asympt": verify_asympt,
    "lp": verify_lp,
}


def run_suite(name: str, params: GreensParams) -> tuple[bool, list[str]]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
    return SUITES[name](params)
