"""Exact arithmetic over Lebesgue exponents.

Everything in this module is exact: exponents are rationals (or the
distinguished value infinity), intervals carry open/closed endpoint flags,
and all comparisons are rational comparisons.  No floating point enters,
because the admissibility tables distinguish strict from non-strict
inequalities and those distinctions are meaningless under rounding.

The module provides

* the Hoelder conjugate,
* the three convolution-admissibility tables for the kernel, its gradient
  and its Laplacian,
* the critical H^2 embedding exponent,
* the admissible second-order-regularity interval for a source in
  ``L^p \\cap L^q``,
* the integrability bootstrap that upgrades a finite-energy solution to
  ``W^{2,s}`` for every ``s`` up to and including infinity, recorded step
  by step as a :class:`BootstrapTrace`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

__all__ = [
    "Exponent",
    "ExponentInterval",
    "BootstrapStep",
    "BootstrapTrace",
    "EmptyIntervalError",
    "HypothesisViolatedError",
    "NonTerminationError",
    "INF",
    "conjugate",
    "young_T",
    "young_grad",
    "young_lap",
    "sobolev_h2_critical",
    "thm43_interval",
    "initial_p_interval",
    "bootstrap_chain",
]


class EmptyIntervalError(ValueError):
    """An interval intersection came out empty where a nonempty one is required."""


class HypothesisViolatedError(ValueError):
    """The growth/dimension hypotheses exclude the requested configuration."""


class NonTerminationError(RuntimeError):
    """The bootstrap exceeded its step cap (must not happen under the hypotheses)."""

    def __init__(self, message: str, trace: "BootstrapTrace"):
        super().__init__(message)
        self.trace = trace


RationalLike = Union[int, Fraction, str]


def _as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational (int/Fraction/str), got {type(x).__name__}")


@dataclass(frozen=True, order=False)
class Exponent:
    """A Lebesgue exponent: a positive rational or infinity.

    ``value is None`` encodes infinity.  Ordering treats infinity as the
    greatest element.  Genuine Lebesgue exponents satisfy ``value >= 1``;
    endpoints of intermediate intervals (e.g. ``2/(sigma+1)``) may dip
    below 1, so only positivity is enforced here and the ``>= 1``
    precondition is checked by the operations that need it.
    """

    value: Optional[Fraction]

    def __post_init__(self):
        if self.value is not None:
            object.__setattr__(self, "value", _as_fraction(self.value))
            if self.value <= 0:
                raise ValueError(f"exponent must be positive, got {self.value}")

    @classmethod
    def of(cls, x: Union["Exponent", RationalLike]) -> "Exponent":
        if isinstance(x, Exponent):
            return x
        return cls(_as_fraction(x))

    @classmethod
    def infinity(cls) -> "Exponent":
        return cls(None)

    @property
    def is_inf(self) -> bool:
        return self.value is None

    def __lt__(self, other: "Exponent") -> bool:
        other = Exponent.of(other)
        if self.is_inf:
            return False
        if other.is_inf:
            return True
        return self.value < other.value

    def __le__(self, other: "Exponent") -> bool:
        return self == Exponent.of(other) or self < other

    def __gt__(self, other: "Exponent") -> bool:
        return Exponent.of(other) < self

    def __ge__(self, other: "Exponent") -> bool:
        return Exponent.of(other) <= self

    def __str__(self) -> str:
        return "inf" if self.is_inf else str(self.value)

    def __repr__(self) -> str:
        return f"Exponent({self})"

    def __float__(self) -> float:
        return float("inf") if self.is_inf else float(self.value)


INF = Exponent.infinity()


def _midpoint(a: Exponent, b: Exponent) -> Exponent:
    if a.is_inf or b.is_inf:
        raise ValueError("midpoint needs finite endpoints")
    return Exponent((a.value + b.value) / 2)


@dataclass(frozen=True)
class ExponentInterval:
    """An interval of exponents with explicit endpoint openness.

    ``hi == INF`` with ``hi_closed=True`` means "up to and including
    infinity" (the kernel table's supercritical branch); with
    ``hi_closed=False`` it means all finite exponents above ``lo``.
    """

    lo: Exponent
    hi: Exponent
    lo_closed: bool = True
    hi_closed: bool = True

    @classmethod
    def make(cls, lo, hi, lo_closed=True, hi_closed=True) -> "ExponentInterval":
        return cls(Exponent.of(lo), Exponent.of(hi), lo_closed, hi_closed)

    @classmethod
    def point(cls, x) -> "ExponentInterval":
        x = Exponent.of(x)
        return cls(x, x, True, True)

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    def contains(self, x: Union[Exponent, RationalLike]) -> bool:
        x = Exponent.of(x)
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return self.lo <= x <= self.hi

    def intersect(self, other: "ExponentInterval") -> "ExponentInterval":
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        return ExponentInterval(lo, hi, lo_closed, hi_closed)

    def issubset(self, other: "ExponentInterval") -> bool:
        if self.is_empty():
            return True
        if other.is_empty():
            return False
        lo_ok = other.lo < self.lo or (
            other.lo == self.lo and (other.lo_closed or not self.lo_closed)
        )
        hi_ok = self.hi < other.hi or (
            self.hi == other.hi and (other.hi_closed or not self.hi_closed)
        )
        return lo_ok and hi_ok

    def __str__(self) -> str:
        lb = "[" if self.lo_closed else "("
        rb = "]" if self.hi_closed else ")"
        return f"{lb}{self.lo}, {self.hi}{rb}"


def conjugate(p: Union[Exponent, RationalLike]) -> Exponent:
    """Hoelder conjugate p' with 1/p + 1/p' = 1, exactly.

    1 maps to infinity and infinity maps to 1; conjugation is an involution.
    """
    p = Exponent.of(p)
    if p.is_inf:
        return Exponent.of(1)
    if p.value < 1:
        raise ValueError(f"conjugate requires p >= 1, got {p}")
    if p.value == 1:
        return INF
    return Exponent(p.value / (p.value - 1))


def _three_case_table(N: int, p: Exponent, denom_coeff: int, top_closed: bool) -> ExponentInterval:
    """Shared shape of the convolution admissibility tables.

    Branches on p versus N/denom_coeff; below the threshold the top is
    N p/(N - denom_coeff p), closed or open per ``top_closed``.
    """
    if N < 2:
        raise ValueError(f"dimension must be >= 2, got {N}")
    if not p.is_inf and p.value < 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    threshold = Fraction(N, denom_coeff)
    if p.is_inf or p.value > threshold:
        return ExponentInterval(p, INF, True, True)
    if p.value == threshold:
        return ExponentInterval(p, INF, True, False)
    top = Exponent(Fraction(N) * p.value / (N - denom_coeff * p.value))
    return ExponentInterval(p, top, True, top_closed)


def young_T(N: int, p: Union[Exponent, RationalLike]) -> ExponentInterval:
    """Admissible target exponents for convolution with the kernel itself.

    [p, inf] above N/4, [p, inf) at N/4, and [p, Np/(N-4p)] closed below;
    the endpoint is attained in the subcritical branch.
    """
    return _three_case_table(N, Exponent.of(p), 4, top_closed=True)


def young_grad(N: int, p: Union[Exponent, RationalLike]) -> ExponentInterval:
    """Admissible targets for convolution with the kernel gradient.

    Same three-case shape with threshold N/3, but the finite top endpoint
    is open, unlike the zeroth-order table.
    """
    return _three_case_table(N, Exponent.of(p), 3, top_closed=False)


def young_lap(N: int, p: Union[Exponent, RationalLike]) -> ExponentInterval:
    """Admissible targets for convolution with the kernel Laplacian (threshold N/2, open top)."""
    return _three_case_table(N, Exponent.of(p), 2, top_closed=False)


def sobolev_h2_critical(N: int) -> Exponent:
    """Largest r with H^2 contained in L^r: 2N/(N-4) for N >= 5, infinity below."""
    if N < 2:
        raise ValueError(f"dimension must be >= 2, got {N}")
    if N <= 4:
        return INF
    return Exponent(Fraction(2 * N, N - 4))


def _check_p_admissible(N: int, p: Exponent) -> None:
    lo = Fraction(2 * N, N + 4)
    if p.is_inf or not (lo < p.value <= 2):
        raise ValueError(f"p must lie in (2N/(N+4), 2] = ({lo}, 2], got {p}")


def thm43_interval(
    N: int, p: Union[Exponent, RationalLike], q: Union[Exponent, RationalLike]
) -> ExponentInterval:
    """Second-order regularity interval for a source in L^p \\cap L^q.

    Returns the admissible s with the solution in W^{2,s}: [p, inf] for
    q > N/2, [p, inf) at q = N/2, and [p, Nq/(N-2q)) open below.
    """
    p = Exponent.of(p)
    q = Exponent.of(q)
    _check_p_admissible(N, p)
    if q < p:
        raise ValueError(f"q must satisfy q >= p, got q={q} < p={p}")
    half = Fraction(N, 2)
    if q.is_inf or q.value > half:
        return ExponentInterval(p, INF, True, True)
    if q.value == half:
        return ExponentInterval(p, INF, True, False)
    top = Exponent(Fraction(N) * q.value / (N - 2 * q.value))
    return ExponentInterval(p, top, True, False)


def _f_range(N: int, sigma: Fraction, u_sup: Exponent, u_sup_closed: bool) -> ExponentInterval:
    """Exponent range for the nonlinearity, given u in L^r for r in [2, u_sup].

    The growth bound forces (sigma+1) p in [2, u_sup]; the top endpoint
    inherits the attainability of u_sup.
    """
    lo = Exponent(Fraction(2) / (sigma + 1))
    if u_sup.is_inf:
        return ExponentInterval(lo, INF, True, u_sup_closed)
    return ExponentInterval(lo, Exponent(u_sup.value / (sigma + 1)), True, u_sup_closed)


def initial_p_interval(N: int, sigma: RationalLike) -> ExponentInterval:
    """Admissible starting exponents for the bootstrap.

    Intersects the nonlinearity range [2/(sigma+1), r_crit/(sigma+1)] coming
    from finite energy with the operator window (2N/(N+4), 2].  Emptiness
    signals a violated growth hypothesis (supercritical sigma).
    """
    sigma = _as_fraction(sigma)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if N < 2:
        raise ValueError(f"dimension must be >= 2, got {N}")
    r_crit = sobolev_h2_critical(N)
    f_range = _f_range(N, sigma, r_crit, u_sup_closed=not r_crit.is_inf)
    window = ExponentInterval.make(Fraction(2 * N, N + 4), 2, lo_closed=False, hi_closed=True)
    inter = f_range.intersect(window)
    if inter.is_empty():
        raise EmptyIntervalError(
            f"no admissible starting exponent for N={N}, sigma={sigma}: "
            f"{f_range} and {window} are disjoint"
        )
    return inter


@dataclass(frozen=True)
class BootstrapStep:
    tag: str
    interval: ExponentInterval
    space: str = ""


@dataclass
class BootstrapTrace:
    """Ordered record of one bootstrap run.

    ``step_count`` counts regularity-theorem applications; ``terminated``
    means the final interval reaches s = infinity inclusively.
    """

    steps: list[BootstrapStep] = field(default_factory=list)
    terminated: bool = False
    step_count: int = 0

    def add(self, tag: str, interval: ExponentInterval, space: str = "") -> None:
        self.steps.append(BootstrapStep(tag, interval, space))

    @property
    def final_interval(self) -> ExponentInterval:
        return self.steps[-1].interval

    def to_csv_rows(self) -> list[tuple]:
        """Rows (step, space, lo, lo_closed, hi, hi_closed, tag)."""
        rows = []
        for i, s in enumerate(self.steps):
            iv = s.interval
            rows.append(
                (i, s.space, str(iv.lo), int(iv.lo_closed), str(iv.hi), int(iv.hi_closed), s.tag)
            )
        return rows

    def to_text(self) -> str:
        lines = []
        for i, s in enumerate(self.steps):
            lines.append(f"step {i:2d} [{s.space:>7s}]: {s.tag:<58s} range {s.interval}")
        tail = "terminated: s = inf reached" if self.terminated else "NOT terminated"
        lines.append(f"{tail} after {self.step_count} regularity application(s)")
        return "\n".join(lines)


_DEFAULT_STEP_CAP = 64


def bootstrap_chain(
    N: int, sigma: RationalLike, max_steps: int = _DEFAULT_STEP_CAP
) -> BootstrapTrace:
    """Replay the integrability bootstrap with exact rationals.

    Starting from finite energy (hence u in L^r for r in [2, r_crit]),
    derive the source exponent range from the growth bound, fix the working
    exponent p at the top of the admissible window, and repeatedly apply
    the second-order regularity interval with the largest admissible q.
    Open upper endpoints are approached through midpoints between the last
    known-admissible value and the bound; each choice is recorded.  The
    chain ends when the regularity interval contains infinity.

    Raises :class:`HypothesisViolatedError` if the starting window is empty
    and :class:`NonTerminationError` if the step cap is hit (which the
    subcriticality hypothesis rules out).
    """
    sigma = _as_fraction(sigma)
    trace = BootstrapTrace()

    r_crit = sobolev_h2_critical(N)
    u_sup, u_sup_closed = r_crit, not r_crit.is_inf
    trace.add(
        f"finite energy: u in L^r for r in [2, {u_sup}]"
        + ("" if u_sup_closed else ")"),
        ExponentInterval(Exponent.of(2), u_sup, True, u_sup_closed),
        space="L^r",
    )

    try:
        start = initial_p_interval(N, sigma)
    except EmptyIntervalError as exc:
        raise HypothesisViolatedError(
            f"sigma={sigma} violates the subcriticality hypothesis for N={N}: {exc}"
        ) from exc

    # p is fixed once; the window's top is attained by construction.
    p = start.hi if start.hi_closed else _midpoint(start.lo, start.hi)
    trace.add(f"fixed p = {p} in admissible window {start}", ExponentInterval.point(p), space="p")

    prev_q: Optional[Exponent] = None
    prev_s: Optional[Exponent] = None
    for _ in range(max_steps):
        f_rng = _f_range(N, sigma, u_sup, u_sup_closed)
        q_rng = f_rng.intersect(ExponentInterval(p, INF, True, True))
        half = Exponent(Fraction(N, 2))

        if q_rng.hi.is_inf:
            # Arbitrarily large finite q are admissible: the supercritical
            # branch applies regardless of the endpoint flag at infinity.
            q: Exponent = INF
            branch = "q > N/2"
        elif q_rng.hi_closed:
            q = q_rng.hi
            branch = "attained top"
        else:
            anchor = q_rng.lo
            if prev_q is not None and q_rng.contains(prev_q) and prev_q > anchor:
                anchor = prev_q
            q = _midpoint(anchor, q_rng.hi)
            branch = "open top, midpoint"

        w = thm43_interval(N, p, q)
        trace.step_count += 1
        trace.add(
            f"regularity with q = {q} ({branch}, lambda as stated), source range {f_rng}",
            w,
            space="W^{2,s}",
        )

        if w.hi.is_inf and w.hi_closed:
            trace.terminated = True
            trace.add(
                "conclusion: u in W^{2,s} for all 2 <= s <= inf",
                ExponentInterval(Exponent.of(2), INF, True, True),
                space="W^{2,s}",
            )
            return trace

        if w.hi.is_inf:
            # q = N/2 branch: some s > N/2 is admissible, hence boundedness.
            u_sup, u_sup_closed = INF, True
            trace.add(
                "embedding: s > N/2 available, so u is bounded",
                ExponentInterval(Exponent.of(2), INF, True, True),
                space="L^r",
            )
            prev_q = None
            prev_s = None
            continue

        anchor_s = Exponent.of(2)
        if prev_s is not None and prev_s > anchor_s and prev_s < w.hi:
            anchor_s = prev_s
        s = _midpoint(anchor_s, w.hi)
        if s == half:
            s = _midpoint(s, w.hi)
        prev_s = s
        prev_q = q

        if s > half:
            u_sup, u_sup_closed = INF, True
            trace.add(
                f"embedding: W^{{2,{s}}} with s > N/2, so u is bounded",
                ExponentInterval(Exponent.of(2), INF, True, True),
                space="L^r",
            )
        else:
            new_sup = Exponent(Fraction(N) * s.value / (N - 2 * s.value))
            u_sup, u_sup_closed = new_sup, True
            trace.add(
                f"embedding: W^{{2,{s}}} into L^{new_sup}",
                ExponentInterval(Exponent.of(2), new_sup, True, True),
                space="L^r",
            )

    raise NonTerminationError(
        f"bootstrap did not terminate within {max_steps} steps for N={N}, sigma={sigma}",
        trace,
    )
