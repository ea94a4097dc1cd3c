"""Diagnostics that confront simulated fields with predicted front behaviour.

The tools here close the loop between the solver and the tail calculus:

* :func:`level_set_position` extracts interpolated level-line crossings from a
  sampled field, with explicit markers when the level is never attained or is
  attained all the way to the grid edge;
* :func:`front_trace` / :func:`sandwich_check` track a level line through a
  trajectory and test it against the two-arm band ``r((1-eps) t) <= x(t) <=
  r((1+eps) t)`` predicted by a front law, reporting engagement, violations,
  and inconclusive samples instead of silently passing;
* :class:`SubSolution` / :func:`build_subsolution` / :func:`verify_subsolution`
  assemble the indicator-plus-growing-tail lower barrier and measure the
  one-sided residual of the shifted linear operator on every regime of its
  support, returning the first time from which the residual stays below
  tolerance;
* :func:`lambda0_for` finds the largest plateau height whose saturation stays
  below a given margin, the admissibility bound for the barrier height;
* :func:`verify_upper_envelope` checks the complementary upper barrier: the
  linear evolution stays under a frozen multiple of ``e^{(kappa(1+delta)-m) t}``
  times the declared tail;
* :func:`comparison_test` evolves an ordered pair of initial conditions and
  measures the worst order violation.

All verdict-producing routines return result objects with row tuples ready
for delimited output; none of them write files.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Sequence

import numpy as np

from .convolution import (
    Constant,
    Grid,
    GridFunction,
    Zero,
    _rescaled_profile,
)
from .dynamics import (
    Model,
    Trajectory,
    apply_G,
    evolve,
    kernel_apply,
    series_solution,
)
from .frontlaw import FrontLaw
from .tails import (
    BoundedBelow,
    HFunction,
    Side,
    TailProfile,
    TwoSidedTail,
    construct_h,
)

ArrayF = np.ndarray

__all__ = [
    "AnalysisError",
    "LevelSetError",
    "level_set_position",
    "FrontTrace",
    "front_trace",
    "SandwichRow",
    "SandwichReport",
    "sandwich_check",
    "SubSolution",
    "build_subsolution",
    "SubsolutionRow",
    "SubsolutionResult",
    "verify_subsolution",
    "lambda0_for",
    "EnvelopeRow",
    "EnvelopeResult",
    "verify_upper_envelope",
    "ComparisonResult",
    "comparison_test",
]

#: A front within this many cells of the grid edge is too close to trust.
EDGE_GUARD_CELLS = 10

#: Relative slack used when comparing measured positions against bounds.
BAND_SLACK = 1e-9

#: Marker for a level never attained anywhere on the grid.
BELOW_LEVEL = "below-level"

#: Marker for a level attained all the way to the last node on that side.
BEYOND_GRID = "beyond-grid"


class AnalysisError(ValueError):
    """Raised for invalid diagnostic inputs or failed preconditions."""


class LevelSetError(AnalysisError):
    """Level-line extraction failed; ``marker`` states how.

    ``marker`` is :data:`BELOW_LEVEL` when the field never reaches the level
    and :data:`BEYOND_GRID` when it still exceeds the level at the outermost
    node on the requested side (the crossing lies off the grid).
    """

    def __init__(self, message: str, *, marker: str):
        super().__init__(message)
        self.marker = marker


# ---------------------------------------------------------------------- #
# level-line extraction
# ---------------------------------------------------------------------- #
def level_set_position(u: GridFunction, level: float, side: Side = Side.RIGHT) -> float:
    """Outermost crossing of ``u`` through ``level`` on the given side.

    Returns the linearly interpolated coordinate where the field drops
    through ``level``: the rightmost such crossing for ``Side.RIGHT``, the
    leftmost for ``Side.LEFT``.  Exact (to rounding) for piecewise-linear
    data; within one cell for jump data.

    Raises :class:`LevelSetError` with marker :data:`BELOW_LEVEL` when the
    field is everywhere below the level, and with :data:`BEYOND_GRID` when
    the level is still exceeded at the outermost node on that side.
    """
    if not (level > 0.0 and math.isfinite(level)):
        raise AnalysisError(f"level must be positive and finite, got {level}")
    v = u.values
    above = np.nonzero(v >= level)[0]
    if above.size == 0:
        raise LevelSetError(
            f"field never reaches level {level:.6g} (max {float(v.max()):.6g})",
            marker=BELOW_LEVEL,
        )
    x = u.grid.x
    dx = u.grid.dx
    if side is Side.RIGHT:
        j = int(above[-1])
        if j == u.grid.n_points - 1:
            raise LevelSetError(
                f"level {level:.6g} still attained at the last node x = {x[-1]:.6g}",
                marker=BEYOND_GRID,
            )
        drop = v[j] - v[j + 1]
        return float(x[j] + dx * (v[j] - level) / drop)
    i = int(above[0])
    if i == 0:
        raise LevelSetError(
            f"level {level:.6g} still attained at the first node x = {x[0]:.6g}",
            marker=BEYOND_GRID,
        )
    rise = v[i] - v[i - 1]
    return float(x[i] - dx * (v[i] - level) / rise)


@dataclasses.dataclass(frozen=True)
class FrontTrace:
    """Level-line positions of a trajectory, one sample per snapshot.

    Positions are coordinates (the left front is typically negative).  A
    sample that could not be extracted holds ``nan`` (level never attained)
    or ``+/-inf`` (attained beyond the grid edge), with the corresponding
    marker string recorded in ``right_markers`` / ``left_markers``.
    """

    level: float
    grid: Grid
    times: tuple
    right: tuple
    left: tuple
    right_markers: tuple
    left_markers: tuple

    def __post_init__(self) -> None:
        n = len(self.times)
        for name in ("right", "left", "right_markers", "left_markers"):
            if len(getattr(self, name)) != n:
                raise AnalysisError(f"{name} must have one entry per time sample")


def front_trace(trajectory: Trajectory, level: float) -> FrontTrace:
    """Extract both level-line fronts from every snapshot of a trajectory."""
    times: list = []
    right: list = []
    left: list = []
    rmark: list = []
    lmark: list = []
    grid = trajectory.fields[0].grid
    for t, field in zip(trajectory.times, trajectory.fields):
        times.append(float(t))
        try:
            right.append(level_set_position(field, level, Side.RIGHT))
            rmark.append(None)
        except LevelSetError as err:
            right.append(math.nan if err.marker == BELOW_LEVEL else math.inf)
            rmark.append(err.marker)
        try:
            left.append(level_set_position(field, level, Side.LEFT))
            lmark.append(None)
        except LevelSetError as err:
            left.append(math.nan if err.marker == BELOW_LEVEL else -math.inf)
            lmark.append(err.marker)
    return FrontTrace(
        level=level,
        grid=grid,
        times=tuple(times),
        right=tuple(right),
        left=tuple(left),
        right_markers=tuple(rmark),
        left_markers=tuple(lmark),
    )


# ---------------------------------------------------------------------- #
# sandwich verification
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True)
class SandwichRow:
    """One time sample of the two-arm band check.

    ``r_lower`` / ``r_upper`` are the predicted right-front bounds
    ``r((1-eps) t)`` and ``r((1+eps) t)`` (``nan`` when the law is not yet
    valid at the shrunken time).  ``verdict`` is ``"pass"``, ``"fail"`` or
    ``"inconclusive"``.
    """

    t: float
    x_right: float
    x_left: float
    r_lower: float
    r_upper: float
    verdict: str


@dataclasses.dataclass(frozen=True)
class SandwichReport:
    """Outcome of :func:`sandwich_check`.

    ``engaged_at`` is the first sample time with a clean pass; ``violations``
    lists sample times with a clean failure after engagement.  ``passed``
    requires engagement and no subsequent violations.
    """

    eps: float
    level: float
    rows: tuple
    engaged_at: float | None
    violations: tuple

    @property
    def passed(self) -> bool:
        return self.engaged_at is not None and not self.violations


def _arm_verdict(
    position: float,
    marker: str | None,
    lower: float,
    upper: float,
    near_edge: bool,
) -> str:
    if marker is not None or near_edge:
        return "inconclusive"
    if math.isnan(lower) or math.isnan(upper):
        return "inconclusive"
    slack = BAND_SLACK * (1.0 + max(abs(lower), abs(upper)))
    if lower - slack <= position <= upper + slack:
        return "pass"
    return "fail"


def sandwich_check(trace: FrontTrace, law: FrontLaw, eps: float) -> SandwichReport:
    """Test a measured front against the band ``[r((1-eps)t), r((1+eps)t)]``.

    Each sample is judged per arm: the right front must lie in the band
    above; when the law's left side decays, the left front must lie in the
    mirrored band ``[-l((1+eps)t), -l((1-eps)t)]``.  A sample is
    ``"inconclusive"`` — never a silent pass — when the front was not
    extractable (level unattained or beyond the grid), when it sits within
    ``EDGE_GUARD_CELLS`` cells of the grid edge, or when the shrunken time
    falls at or below the law's earliest valid time.
    """
    if not (0.0 < eps < 1.0):
        raise AnalysisError(f"eps must lie in (0, 1), got {eps}")
    guard = EDGE_GUARD_CELLS * trace.grid.dx
    x_hi = float(trace.grid.x[-1])
    x_lo = float(trace.grid.x[0])
    rows: list = []
    engaged_at: float | None = None
    violations: list = []
    for t, xr, xl, mr, ml in zip(
        trace.times, trace.right, trace.left, trace.right_markers, trace.left_markers
    ):
        t_lo = (1.0 - eps) * t
        t_hi = (1.0 + eps) * t
        if t_lo > law.tau_for(Side.RIGHT):
            r_lower = law.position(t_lo, Side.RIGHT)
            r_upper = law.position(t_hi, Side.RIGHT)
        else:
            r_lower = math.nan
            r_upper = math.nan
        right_verdict = _arm_verdict(xr, mr, r_lower, r_upper, xr > x_hi - guard)
        verdicts = [right_verdict]
        if not law.left_is_infinite:
            if t_lo > law.tau_for(Side.LEFT):
                l_lower = -law.position(t_hi, Side.LEFT)
                l_upper = -law.position(t_lo, Side.LEFT)
            else:
                l_lower = math.nan
                l_upper = math.nan
            verdicts.append(_arm_verdict(xl, ml, l_lower, l_upper, xl < x_lo + guard))
        if "fail" in verdicts:
            verdict = "fail"
        elif "inconclusive" in verdicts:
            verdict = "inconclusive"
        else:
            verdict = "pass"
        rows.append(
            SandwichRow(
                t=float(t),
                x_right=float(xr),
                x_left=float(xl),
                r_lower=float(r_lower),
                r_upper=float(r_upper),
                verdict=verdict,
            )
        )
        if verdict == "pass" and engaged_at is None:
            engaged_at = float(t)
        elif verdict == "fail" and engaged_at is not None:
            violations.append(float(t))
    return SandwichReport(
        eps=eps,
        level=trace.level,
        rows=tuple(rows),
        engaged_at=engaged_at,
        violations=tuple(violations),
    )


# ---------------------------------------------------------------------- #
# sub-solution barrier
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True, eq=False)
class SubSolution:
    """Indicator-plus-growing-tail lower barrier.

    The barrier at time ``t`` equals the plateau height ``lam`` on the moving
    interval between the front-law positions evaluated at the shrunken time
    ``(1 - eps) t``, and ``lam * shape(x) * exp(beta (1 - eps) t)`` outside
    it; the shrunken-time evaluation makes the tail continuous across the
    plateau edge.  Admissible parameters: ``0 < eps < 1`` and
    ``0 < delta < eps * beta`` (the saturation margin consumed by the
    nonlinearity), with ``lam`` small enough that the saturation stays below
    ``delta`` on ``[0, lam]`` — see :func:`lambda0_for`.

    Both decaying sides of ``shape`` must admit a slowly-varying gauge
    (constructed here, and required by the residual argument); light-tailed
    shapes are rejected at construction by the gauge builder.
    """

    shape: TwoSidedTail
    beta: float
    lam: float
    eps: float
    delta: float

    def __post_init__(self) -> None:
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise AnalysisError(f"beta must be positive and finite, got {self.beta}")
        if not (0.0 < self.eps < 1.0):
            raise AnalysisError(f"eps must lie in (0, 1), got {self.eps}")
        if not (0.0 < self.delta < self.eps * self.beta):
            raise AnalysisError(
                f"delta must lie in (0, eps * beta) = (0, {self.eps * self.beta:.6g}), "
                f"got {self.delta}"
            )
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise AnalysisError(f"lam must be positive and finite, got {self.lam}")
        object.__setattr__(self, "_law", FrontLaw(self.shape, self.beta))
        object.__setattr__(self, "_h_right", construct_h(self.shape.right))
        h_left: HFunction | None = None
        if not self.shape.left_is_bounded_below:
            h_left = construct_h(self.shape.left)
        object.__setattr__(self, "_h_left", h_left)

    @property
    def law(self) -> FrontLaw:
        return self._law

    @property
    def gauge_right(self) -> HFunction:
        return self._h_right

    @property
    def gauge_left(self) -> HFunction | None:
        return self._h_left

    @property
    def growth_exponent(self) -> float:
        """Tail growth rate ``beta * (1 - eps)``."""
        return self.beta * (1.0 - self.eps)

    @property
    def tau(self) -> float:
        """Earliest time with both plateau edges defined."""
        return self._law.tau / (1.0 - self.eps)

    def plateau_edges(self, t: float) -> tuple:
        """Coordinates ``(left_edge, right_edge)`` of the plateau at time t.

        ``left_edge`` is ``-inf`` when the left side of the shape is bounded
        below (the plateau then extends to the left indefinitely).
        """
        if not (t > self.tau):
            raise AnalysisError(
                f"time {t} is not above the earliest barrier time {self.tau:.6g}"
            )
        s = (1.0 - self.eps) * t
        right = self._law.position(s, Side.RIGHT)
        left_mag = self._law.position(s, Side.LEFT)
        return (-left_mag, right)


def build_subsolution(sub: SubSolution, t: float, grid: Grid) -> GridFunction:
    """Sample the barrier at time ``t`` on ``grid``.

    Node values are the plateau height on the open plateau interval and the
    grown tail outside it; the boundary extensions carry the same grown tail
    analytically, so convolutions see the barrier exactly.  Raises
    :class:`AnalysisError` when ``t`` is not above the barrier's earliest
    time, when a finite plateau edge comes within :data:`EDGE_GUARD_CELLS`
    cells of the grid edge, or when the tail prefactor overflows.
    """
    left_edge, right_edge = sub.plateau_edges(t)
    guard = EDGE_GUARD_CELLS * grid.dx
    if right_edge > grid.half_width - guard:
        raise AnalysisError(
            f"plateau edge {right_edge:.6g} is within {EDGE_GUARD_CELLS} cells of "
            f"the grid edge {grid.half_width:.6g}; enlarge the grid"
        )
    if math.isfinite(left_edge) and left_edge < -(grid.half_width - guard):
        raise AnalysisError(
            f"plateau edge {left_edge:.6g} is within {EDGE_GUARD_CELLS} cells of "
            f"the grid edge {-grid.half_width:.6g}; enlarge the grid"
        )
    log_factor = math.log(sub.lam) + sub.growth_exponent * t
    if log_factor > 690.0:
        raise AnalysisError(
            f"tail prefactor exp({log_factor:.1f}) overflows; sample at smaller times"
        )
    factor = math.exp(log_factor)
    x = grid.x
    vals = np.full(grid.n_points, sub.lam)
    right_mask = x >= right_edge
    if np.any(right_mask):
        with np.errstate(under="ignore"):
            vals[right_mask] = np.exp(
                log_factor + sub.shape.right.log_value(x[right_mask])
            )
    if math.isfinite(left_edge):
        left_mask = x <= left_edge
        if np.any(left_mask):
            with np.errstate(under="ignore"):
                vals[left_mask] = np.exp(
                    log_factor + sub.shape.left.log_value(x[left_mask])
                )
        left_ext = _rescaled_profile(sub.shape.left, factor)
    else:
        left_ext = Constant(sub.lam)
    right_ext = _rescaled_profile(sub.shape.right, factor)
    return GridFunction(grid, vals, right_ext=right_ext, left_ext=left_ext)


@dataclasses.dataclass(frozen=True)
class SubsolutionRow:
    """Largest one-sided residual over one support regime at one time."""

    t: float
    max_residual: float
    regime: str


@dataclasses.dataclass(frozen=True)
class SubsolutionResult:
    """Outcome of :func:`verify_subsolution`.

    ``t0_emp`` is the first sampled time from which both residuals stay at
    or below ``tol`` through the last sample; ``max_residual`` and
    ``max_nonlinear`` are the largest shifted-linear and nonlinear residuals
    over that trailing range.  ``rows`` holds per-regime maxima for every
    sampled time; ``per_time`` holds ``(t, linear_max, nonlinear_max)``.
    """

    t0_emp: float
    max_residual: float
    max_nonlinear: float
    tol: float
    rows: tuple
    per_time: tuple


def _interp_at(x: ArrayF, values: ArrayF, position: float) -> float:
    """Linear interpolation of node values at an off-node position."""
    return float(np.interp(position, x, values))


def _saturation_max(
    model: Model, lam: float, *, seed: int, n_random: int
) -> float:
    """Largest sampled saturation over fields with values in ``[0, lam]``.

    Samples the constant ladder ``lam * (1/32, 2/32, ..., 1)`` plus
    ``n_random`` uniform random fields scaled to ``[0, lam]``.
    """
    grid = model.kernel.grid
    ladder = lam * np.linspace(0.0, 1.0, 33)[1:]
    worst = float(np.max(model.saturation_on_constant(ladder)))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        field = GridFunction(grid, lam * rng.uniform(size=grid.n_points))
        worst = max(worst, float(apply_G(model, field).max()))
    return worst


def verify_subsolution(
    sub: SubSolution,
    model: Model,
    t_range: Sequence[float],
    grid: Grid,
    *,
    tol: float | None = None,
    seed: int = 0,
    n_random: int = 20,
) -> SubsolutionResult:
    """Measure the barrier residuals over sampled times and locate t0.

    For each time the shifted-linear residual ``dg/dt - kappa (a*g) +
    (m + delta) g`` (which the barrier must keep non-positive) is evaluated
    at every node and split by regime — plateau, shoulder (within one gauge
    width inside each finite edge), and far tail — plus both one-sided limits
    at each finite edge, where the time derivative jumps.  The nonlinear
    residual ``dg/dt - kappa (a*g) + m g + g G[g]`` is tracked alongside.

    ``t0_emp`` is the first sampled time from which both residual maxima
    stay at or below ``tol`` (default ``1e-8 * lam``) through the final
    sample.  Raises :class:`AnalysisError` when no sampled time qualifies
    (the message carries the residual curve), when the saturation exceeds
    ``delta`` somewhere on ``[0, lam]``, when the model's growth rate
    differs from the barrier's, or when ``grid`` is not the model's kernel
    grid.
    """
    if grid != model.kernel.grid:
        raise AnalysisError("grid must be the model's kernel grid")
    if abs(model.beta - sub.beta) > 1e-12 * (1.0 + abs(sub.beta)):
        raise AnalysisError(
            f"barrier growth rate {sub.beta:.6g} does not match the model's "
            f"kappa - m = {model.beta:.6g}"
        )
    worst_g = _saturation_max(model, sub.lam, seed=seed, n_random=n_random)
    if worst_g > sub.delta + 1e-12:
        raise AnalysisError(
            f"saturation reaches {worst_g:.6g} > delta = {sub.delta:.6g} on "
            f"[0, {sub.lam:.6g}]; lower the plateau height (see lambda0_for)"
        )
    if tol is None:
        tol = 1e-8 * sub.lam
    ts = sorted(float(t) for t in t_range)
    if not ts:
        raise AnalysisError("t_range must contain at least one time")
    rate = sub.growth_exponent
    shift = model.m + sub.delta
    x = grid.x
    rows: list = []
    per_time: list = []
    for t in ts:
        g = build_subsolution(sub, t, grid)
        left_edge, right_edge = sub.plateau_edges(t)
        off_plateau = (x >= right_edge)
        if math.isfinite(left_edge):
            off_plateau |= x <= left_edge
        conv = kernel_apply(model.kernel, g)
        dgdt = np.where(off_plateau, rate * g.values, 0.0)
        lin = dgdt - model.kappa * conv + shift * g.values
        nl = dgdt - model.kappa * conv + model.m * g.values + g.values * apply_G(model, g)

        regimes: list = []
        h_r = min(sub.gauge_right(right_edge), 0.5 * right_edge)
        shoulder_r = (x >= right_edge - h_r) & (x < right_edge)
        far_r = x >= right_edge
        plateau = ~off_plateau & ~shoulder_r
        regimes.append(("shoulder-right", shoulder_r))
        regimes.append(("far-right", far_r))
        if math.isfinite(left_edge):
            mag = -left_edge
            h_l = min(sub.gauge_left(mag), 0.5 * mag)
            shoulder_l = (x > left_edge) & (x <= left_edge + h_l)
            far_l = x <= left_edge
            plateau &= ~shoulder_l
            regimes.append(("shoulder-left", shoulder_l))
            regimes.append(("far-left", far_l))
        regimes.insert(0, ("plateau", plateau))

        t_max = -math.inf
        for name, mask in regimes:
            if not np.any(mask):
                continue
            m_res = float(lin[mask].max())
            rows.append(SubsolutionRow(t=t, max_residual=m_res, regime=name))
            t_max = max(t_max, m_res)
        conv_r = _interp_at(x, conv, right_edge)
        edge_pairs = [("boundary-right", conv_r)]
        if math.isfinite(left_edge):
            edge_pairs.append(("boundary-left", _interp_at(x, conv, left_edge)))
        for name, conv_edge in edge_pairs:
            plateau_limit = -model.kappa * conv_edge + shift * sub.lam
            tail_limit = plateau_limit + rate * sub.lam
            m_res = max(plateau_limit, tail_limit)
            rows.append(SubsolutionRow(t=t, max_residual=m_res, regime=name))
            t_max = max(t_max, m_res)
        per_time.append((t, t_max, float(nl.max())))

    t0_emp: float | None = None
    for t, lin_max, nl_max in reversed(per_time):
        if lin_max <= tol and nl_max <= tol:
            t0_emp = t
        else:
            break
    if t0_emp is None:
        curve = ", ".join(f"t={t:g}: {m:.3e}" for t, m, _ in per_time)
        raise AnalysisError(
            f"no sampled time achieves residual <= {tol:.3e}; residual curve: {curve}"
        )
    suffix = [(lm, nm) for t, lm, nm in per_time if t >= t0_emp]
    return SubsolutionResult(
        t0_emp=t0_emp,
        max_residual=max(lm for lm, _ in suffix),
        max_nonlinear=max(nm for _, nm in suffix),
        tol=tol,
        rows=tuple(rows),
        per_time=tuple(per_time),
    )


def lambda0_for(
    model: Model,
    delta: float,
    *,
    seed: int = 0,
    n_random: int = 20,
    iterations: int = 60,
) -> float:
    """Largest plateau height with saturation at most ``delta`` on [0, lam].

    Bisects on the sampled implication "values in ``[0, lam]`` imply
    saturation at most ``delta``", probing a constant ladder plus random
    fields whose patterns are drawn once and rescaled per query (the
    saturation is monotone in the field for every admissible reaction, so
    the feasible set is an interval).  Returns ``theta`` when even the
    saturated state stays within ``delta``.
    """
    if not (delta > 0.0 and math.isfinite(delta)):
        raise AnalysisError(f"delta must be positive and finite, got {delta}")
    grid = model.kernel.grid
    rng = np.random.default_rng(seed)
    patterns = [rng.uniform(size=grid.n_points) for _ in range(n_random)]
    ladder = np.linspace(0.0, 1.0, 33)[1:]

    def feasible(lam: float) -> bool:
        if lam == 0.0:
            return True
        if float(np.max(model.saturation_on_constant(lam * ladder))) > delta + 1e-12:
            return False
        for pat in patterns:
            field = GridFunction(grid, lam * pat)
            if float(apply_G(model, field).max()) > delta + 1e-12:
                return False
        return True

    hi = model.theta
    if feasible(hi):
        return hi
    lo = 0.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------- #
# linear upper envelope
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True)
class EnvelopeRow:
    """One checked node: field value vs. frozen envelope bound."""

    t: float
    x: float
    w: float
    bound: float
    ok: bool


@dataclasses.dataclass(frozen=True)
class EnvelopeResult:
    """Outcome of :func:`verify_upper_envelope`.

    ``c_emp`` is the constant fitted at the first checked time and frozen
    (never below 1); ``rate`` is the envelope growth exponent
    ``kappa (1 + delta) - m``.  ``violations`` lists ``(t, x)`` pairs where
    the later fields exceeded the frozen envelope.
    """

    passed: bool
    c_emp: float
    rate: float
    x_min: float
    rows: tuple
    violations: tuple


def _series_order(kappa_t: float) -> int:
    """Smallest series order whose first omitted term is below roundoff.

    Mirrors the truncation criterion the series evaluator enforces: the
    first excluded term of ``exp(kappa t)`` must sit below ``1e-16`` of the
    largest included term.
    """
    if kappa_t <= 0.0:
        return 0
    log_x = math.log(kappa_t)
    log_peak = -math.inf
    log_term = 0.0  # term k = 0
    k = 0
    while True:
        log_peak = max(log_peak, log_term)
        next_term = log_term + log_x - math.log(k + 1)
        if k + 1 > kappa_t and next_term < log_peak + math.log(1e-16):
            return k
        log_term = next_term
        k += 1
        if k > 100_000:  # pragma: no cover - guard rail
            raise AnalysisError(f"series order search diverged for kappa t = {kappa_t}")


def verify_upper_envelope(
    model: Model,
    u0: GridFunction,
    b: TailProfile,
    delta: float,
    times: Sequence[float],
    x_min: float,
) -> EnvelopeResult:
    """Check the linear evolution against a frozen exponential-tail envelope.

    Precondition (checked on grid nodes, else :class:`AnalysisError`): for
    decaying data, ``max(a(x), u0(x)) <= b(|x|)`` for ``|x| > x_min``; for
    plateau-left data, ``max(A(x), u0(x)) <= b(x)`` for ``x > x_min`` with
    ``A`` the kernel's right tail integral.  The linear solution ``w`` is
    evaluated by series at each requested time; the constant ``C`` is fitted
    at the first time as the largest ratio ``w / (e^{rate t} b)`` over the
    checked nodes (floored at 1) and frozen, then every later time must
    satisfy ``w <= C e^{rate t} b`` with relative slack on those same nodes.
    """
    if b.side is not Side.RIGHT:
        raise AnalysisError("envelope tail must be a right-sided profile")
    if not (delta > 0.0 and math.isfinite(delta)):
        raise AnalysisError(f"delta must be positive and finite, got {delta}")
    ts = [float(t) for t in times]
    if len(ts) < 2 or any(b_ <= a_ for a_, b_ in zip(ts, ts[1:])) or ts[0] < 0.0:
        raise AnalysisError("times must be at least two increasing values >= 0")
    grid = model.kernel.grid
    if u0.grid != grid:
        raise AnalysisError("initial data must live on the model's kernel grid")
    x = grid.x
    if not (0.0 <= x_min < grid.half_width):
        raise AnalysisError(f"x_min must lie in [0, {grid.half_width}), got {x_min}")
    if x_min <= b.domain_start:
        raise AnalysisError(
            f"x_min = {x_min} must exceed the tail's domain start {b.domain_start:.6g}"
        )

    plateau_left = isinstance(u0.left_ext, Constant) and u0.left_ext.level > 0.0
    if plateau_left:
        mask = x > x_min
        dominated = np.maximum(
            np.asarray(model.kernel.survival(x[mask]), dtype=float),
            u0.values[mask],
        )
    else:
        mask = np.abs(x) > x_min
        dominated = np.maximum(model.kernel.density.values[mask], u0.values[mask])
    log_b = b.log_value(np.abs(x[mask]))
    with np.errstate(divide="ignore"):
        log_dom = np.log(dominated)
    excess = log_dom - log_b
    if float(np.max(excess)) > math.log1p(1e-9):
        i = int(np.argmax(excess))
        raise AnalysisError(
            "envelope precondition fails: kernel/initial data exceed the tail at "
            f"x = {float(x[mask][i]):.6g} by factor {math.exp(float(excess[i])):.6g}"
        )

    rate = model.kappa * (1.0 + delta) - model.m
    xs = x[mask]
    rows: list = []
    violations: list = []
    c_emp = 1.0
    for idx, t in enumerate(ts):
        w = series_solution(model, u0, t, _series_order(model.kappa * t))
        wv = w.values[mask]
        with np.errstate(divide="ignore"):
            log_w = np.log(wv)
        if idx == 0:
            finite = np.isfinite(log_w)
            if np.any(finite):
                fitted = math.exp(float(np.max(log_w[finite] - rate * t - log_b[finite])))
                c_emp = max(1.0, fitted)
        log_bound = math.log(c_emp) + rate * t + log_b
        ok = log_w <= log_bound + math.log1p(1e-9)
        with np.errstate(over="ignore"):
            bounds = np.exp(log_bound)
        for xi, wi, bi, oki in zip(xs, wv, bounds, ok):
            rows.append(
                EnvelopeRow(t=t, x=float(xi), w=float(wi), bound=float(bi), ok=bool(oki))
            )
            if not oki:
                violations.append((t, float(xi)))
    return EnvelopeResult(
        passed=not violations,
        c_emp=c_emp,
        rate=rate,
        x_min=x_min,
        rows=tuple(rows),
        violations=tuple(violations),
    )


# ---------------------------------------------------------------------- #
# pairwise order
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True)
class ComparisonResult:
    """Worst order violation between two evolved fields.

    ``max_violation`` is the largest value of (lower field - upper field)
    over all compared snapshots; ``time`` and ``location`` point at it.
    """

    passed: bool
    max_violation: float
    time: float
    location: float
    tol: float


def comparison_test(
    model: Model,
    u0: GridFunction,
    v0: GridFunction,
    T: float,
    dt: float,
    *,
    snapshot_times: Sequence[float] | None = None,
    tol: float = 1e-9,
    boundary_margin: float | None = None,
) -> ComparisonResult:
    """Evolve an ordered pair and measure how well the order is preserved.

    ``u0 <= v0`` is required at construction; both fields are advanced with
    identical steps and compared at every snapshot (by default nine evenly
    spaced times including 0 and T).  The result reports the worst violation
    rather than raising, so callers can assert at their own tolerance.
    Domain-exhaustion during either evolution propagates to the caller;
    ``boundary_margin`` is forwarded to both evolutions (pass 0.0 when the
    upper field legitimately fills the grid, e.g. the saturated state).
    """
    if u0.grid != v0.grid:
        raise AnalysisError("both initial conditions must share one grid")
    gap = float(np.max(u0.values - v0.values))
    if gap > 1e-12:
        raise AnalysisError(
            f"initial order violated: lower field exceeds upper by {gap:.3e}"
        )
    if snapshot_times is None:
        snapshot_times = list(np.linspace(0.0, T, 9))
    traj_u = evolve(
        model, u0, T, dt, snapshot_times=snapshot_times, boundary_margin=boundary_margin
    )
    traj_v = evolve(
        model, v0, T, dt, snapshot_times=snapshot_times, boundary_margin=boundary_margin
    )
    worst = -math.inf
    at_t = 0.0
    at_x = 0.0
    for t, fu, fv in zip(traj_u.times, traj_u.fields, traj_v.fields):
        diff = fu.values - fv.values
        i = int(np.argmax(diff))
        if diff[i] > worst:
            worst = float(diff[i])
            at_t = float(t)
            at_x = float(fu.grid.x[i])
    return ComparisonResult(
        passed=worst <= tol,
        max_violation=worst,
        time=at_t,
        location=at_x,
        tol=tol,
    )
