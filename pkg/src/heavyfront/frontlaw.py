"""Front-position law: inversion of tail decay against exponential growth.

A decaying tail shape b and a growth rate beta > 0 predict an invasion front
radius r(t) through log b(r(t)) = -beta t: the position where the tail's
smallness exactly offsets the accumulated exponential growth.  This module
provides the inversion (bracketed root-finding in log-position space, exact
to near machine precision), the closed-form table for the families that admit
one, enclosure regions at stretched times t(1 -+ eps), and the sampled-time
checks used by the acceptance battery: superlinear escape, linear-shift
absorption, and the six-term enclosure chain tying log-equivalent tails
together.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Mapping, Sequence

from scipy import optimize as _sci_optimize

from .tails import (
    BoundedBelow,
    Family,
    Side,
    TailError,
    TailProfile,
    TwoSidedTail,
    Verdict,
    classify_tail,
    log_equivalent,
)

#: Positions are tracked up to this magnitude; brackets beyond it overflow.
POSITION_CAP = 1.0e300
_U_CAP = math.log(POSITION_CAP)


class FrontLawError(ValueError):
    """Invalid front-law request: bad domain, overflow, or failed check."""


class RegionSign(enum.Enum):
    """Which time stretch builds the region: shrunken (-) or inflated (+)."""

    MINUS = "minus"
    PLUS = "plus"


class RegionKind(enum.Enum):
    TWO_SIDED = "two_sided"
    LEFT_INFINITE = "left_infinite"


@dataclasses.dataclass(frozen=True)
class Region:
    """Spatial enclosure [left, right] at a given time.

    ``left`` is ``-inf`` exactly when the underlying shape does not decay on
    the left (positive plateau or no left model at all): the front never
    detaches from the saturated side.
    """

    kind: RegionKind
    left: float
    right: float

    def __post_init__(self) -> None:
        if self.kind is RegionKind.LEFT_INFINITE and self.left != -math.inf:
            raise FrontLawError("left-infinite region must have left = -inf")
        if self.left >= self.right:
            raise FrontLawError(f"degenerate region [{self.left}, {self.right}]")

    def contains(self, x: float) -> bool:
        return self.left <= x <= self.right


@dataclasses.dataclass(eq=False)
class FrontLaw:
    """Inverts log b(r) = -beta t on the monotone region of each side.

    ``b`` may be a single right-sided profile (the left front is then treated
    as infinite, matching the positive-plateau convention) or a two-sided
    shape whose left side is a decaying profile or a positive floor.
    ``tau`` is the earliest time at which every decaying side admits a root
    beyond its monotone-start: the smallest t with e^{-beta t} below the
    boundary value b(rho+).
    """

    b: TailProfile | TwoSidedTail
    beta: float

    def __post_init__(self) -> None:
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise FrontLawError(f"beta must be positive and finite, got {self.beta}")
        if isinstance(self.b, TailProfile):
            if self.b.side is not Side.RIGHT:
                raise FrontLawError("a single-profile front law must use a right-sided profile")
            right, left = self.b, None
        else:
            right = self.b.right
            left = None if self.b.left_is_bounded_below else self.b.left.reflected()
        self._right = right
        self._left = left  # reflected to a right-sided profile, or None
        self._tau = {Side.RIGHT: self._side_tau(right)}
        if left is not None:
            self._tau[Side.LEFT] = self._side_tau(left)
        self._brackets: dict[Side, float] = {}

    # -- construction helpers ------------------------------------------- #
    @staticmethod
    def _feasible_start(profile: TailProfile) -> float:
        lo = profile.domain_start
        start = max(profile.rho, 0.0)
        if math.isfinite(lo):
            start = max(start, lo + 1e-9 * (1.0 + abs(lo)))
        return max(start, 1e-12)

    def _side_tau(self, profile: TailProfile) -> float:
        r0 = self._feasible_start(profile)
        log_edge = float(profile.log_value(r0))
        if log_edge < 0.0 and r0 <= 1e-12 and profile.domain_start < 1e-300:
            # The start was floored, not set by rho or the domain edge: probe
            # essentially at the origin so the boundary value is the limit.
            log_edge = float(profile.log_value(1e-300))
        tau = max(0.0, -log_edge) / self.beta
        return 0.0 if tau < 1e-100 else tau

    # -- public surface -------------------------------------------------- #
    @property
    def tau(self) -> float:
        """Earliest time valid for every decaying side of the shape."""
        return max(self._tau.values())

    def tau_for(self, side: Side) -> float:
        if side not in self._tau:
            return 0.0
        return self._tau[side]

    @property
    def left_is_infinite(self) -> bool:
        return self._left is None

    def position(self, t: float, side: Side = Side.RIGHT) -> float:
        """Front radius on the given side at time t (inf if that side

        does not decay).  The left radius is returned as a positive
        magnitude; the corresponding coordinate is its negation.
        """
        if side is Side.LEFT and self._left is None:
            return math.inf
        profile = self._right if side is Side.RIGHT else self._left
        tau = self._tau[side]
        if not (t > tau):
            raise FrontLawError(f"time {t} not above the earliest valid time {tau}")
        return self._invert(profile, side, t)

    # -- inversion core --------------------------------------------------- #
    def _invert(self, profile: TailProfile, side: Side, t: float) -> float:
        target = -self.beta * t

        def g(u: float) -> float:
            return float(profile.log_value(math.exp(u))) - target

        u_floor = -math.inf
        lo_dom = profile.domain_start
        start = self._feasible_start(profile)
        if math.isfinite(lo_dom):
            u_floor = math.log(max(start, 1e-300))
        u_lo = self._brackets.get(side, math.log(start))
        u_lo = max(u_lo, math.log(start))
        # expand downward until the decay has not yet overtaken the target
        step = 1.0
        while g(u_lo) < 0.0:
            if u_lo <= u_floor + 1e-12 or u_lo < -_U_CAP:
                raise FrontLawError(
                    f"no bracket: b exceeds e^(-beta t) nowhere above the monotone start (t={t})"
                )
            u_lo = max(u_lo - step, u_floor if math.isfinite(u_floor) else u_lo - step)
            step *= 2.0
        # expand upward until the decay overshoots the target
        u_hi = min(u_lo + 1.0, _U_CAP)
        step = 1.0
        while g(u_hi) > 0.0:
            if u_hi >= _U_CAP:
                raise FrontLawError(
                    f"bracket expansion exceeded the position cap {POSITION_CAP:.1e} (t={t})"
                )
            step *= 2.0
            u_hi = min(u_lo + step, _U_CAP)
        root = float(
            _sci_optimize.brentq(g, u_lo, u_hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
        )
        # idempotent cache fill: seed the next search near this root
        self._brackets[side] = root - 2.0
        return math.exp(root)


def front_position(law: FrontLaw, t: float, side: Side = Side.RIGHT) -> float:
    """Front radius at time t; ``inf`` when the requested side never decays."""
    return law.position(t, side)


def front_region(law: FrontLaw, t: float, eps: float, sign: RegionSign) -> Region:
    """Enclosure at stretched time t(1-eps) (MINUS) or t(1+eps) (PLUS)."""
    if not (0.0 < eps < 1.0):
        raise FrontLawError(f"eps must lie in (0,1), got {eps}")
    te = t * (1.0 - eps) if sign is RegionSign.MINUS else t * (1.0 + eps)
    right = law.position(te, Side.RIGHT)
    if law.left_is_infinite:
        return Region(RegionKind.LEFT_INFINITE, -math.inf, right)
    return Region(RegionKind.TWO_SIDED, -law.position(te, Side.LEFT), right)


# ---------------------------------------------------------------------- #
# closed forms
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True)
class ClosedFormFront:
    """Closed-form front radius; ``asymptotic_only`` marks large-t formulas."""

    value: float
    asymptotic_only: bool = False

    def __float__(self) -> float:
        return self.value


def closed_form_front(
    family: Family, params: Mapping[str, float], beta: float, t: float
) -> ClosedFormFront:
    """Table of exact front radii for the families that admit one.

    Power: r = (scale e^{beta t})^{1/q} - shift.
    LogPowerExp (mu = nu = 0): r = exp(((beta t + log scale)/p)^{1/q}).
    StretchedExp (mu = nu = 0): r = (beta t + log scale)^{1/alpha}.
    XOverLog: only the asymptotic r ~ beta t (log t)^q exists; the result is
    marked asymptotic-only and must not be used as an exact value.
    """
    if beta <= 0.0 or t <= 0.0:
        raise FrontLawError("closed forms require beta > 0 and t > 0")
    scale = float(params.get("scale", 1.0))
    log_scale = math.log(scale)
    if family is Family.POWER:
        if params.get("mu", 0.0):
            raise FrontLawError("no closed form for the log-corrected power variant")
        q = float(params["q"])
        return ClosedFormFront(math.exp((beta * t + log_scale) / q) - float(params.get("shift", 0.0)))
    if family is Family.LOG_POWER_EXP:
        if params.get("mu", 0.0) or params.get("nu", 0.0):
            raise FrontLawError("no closed form for modified log-power-exponential variants")
        p, q = float(params["p"]), float(params["q"])
        return ClosedFormFront(math.exp(((beta * t + log_scale) / p) ** (1.0 / q)))
    if family is Family.STRETCHED_EXP:
        if params.get("mu", 0.0) or params.get("nu", 0.0):
            raise FrontLawError("no closed form for modified stretched-exponential variants")
        alpha = float(params["alpha"])
        return ClosedFormFront((beta * t + log_scale) ** (1.0 / alpha))
    if family is Family.X_OVER_LOG:
        if t <= 1.0:
            raise FrontLawError("the asymptotic form needs t > 1")
        q = float(params["q"])
        return ClosedFormFront(beta * t * math.log(t) ** q, asymptotic_only=True)
    raise FrontLawError(f"family {family.name} has no closed-form front")


def closed_form_for_profile(profile: TailProfile, beta: float, t: float) -> ClosedFormFront:
    """Dispatch the closed-form table from a profile's own parameters."""
    params = {
        "q": profile.q,
        "p": profile.p,
        "alpha": profile.alpha,
        "mu": profile.mu,
        "nu": profile.nu,
        "shift": profile.shift,
        "scale": profile.scale,
    }
    return closed_form_front(profile.family, params, beta, t)


# ---------------------------------------------------------------------- #
# sampled-time checks
# ---------------------------------------------------------------------- #
def _time_ladder(t0: float, horizon: float, factor: float = 2.0) -> list[float]:
    if horizon <= t0:
        raise FrontLawError(f"horizon {horizon} must exceed the first sample {t0}")
    ts = [t0]
    while ts[-1] * factor < horizon:
        ts.append(ts[-1] * factor)
    ts.append(horizon)
    return ts


@dataclasses.dataclass(frozen=True)
class SuperlinearResult:
    """Sampled evidence that the front escapes every linear trajectory."""

    verdict: Verdict
    speed: float
    first_positive_t: float | None
    samples: tuple  # (t, r(t) - k t) pairs

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.TRUE


def check_superlinear(law: FrontLaw, k: float, T: float) -> SuperlinearResult:
    """Does r(t) - k t grow without bound on a doubling time ladder up to T?

    The verdict is TRUE when the gap is eventually increasing with growing
    increments and ends positive; a light tail with k above its linear speed
    produces a decreasing gap and a FALSE verdict.  The first positive time
    is refined by bisection between the bracketing samples.
    """
    if k <= 0.0:
        raise FrontLawError("speed k must be positive")
    t0 = max(law.tau_for(Side.RIGHT) * 1.001 + 1e-9, 0.25)
    ts = _time_ladder(t0, T)
    gap = lambda t: law.position(t, Side.RIGHT) - k * t
    gaps = [gap(t) for t in ts]
    diffs = [b - a for a, b in zip(gaps[:-1], gaps[1:])]
    suffix = 0
    for d in reversed(diffs):
        if d > 0.0:
            suffix += 1
        else:
            break
    accelerating = suffix >= 2 and diffs[-1] > diffs[-2] > 0.0
    if accelerating and gaps[-1] > 0.0:
        verdict = Verdict.TRUE
    elif gaps[-1] <= 0.0 or suffix == 0:
        verdict = Verdict.FALSE
    else:
        verdict = Verdict.UNDETERMINED

    first_positive: float | None = None
    for (ta, ga), (tb, gb) in zip(zip(ts[:-1], gaps[:-1]), zip(ts[1:], gaps[1:])):
        if ga <= 0.0 < gb:
            first_positive = float(_sci_optimize.brentq(gap, ta, tb, xtol=1e-10, rtol=1e-12))
            break
    if first_positive is None and gaps and gaps[0] > 0.0:
        first_positive = ts[0]
    return SuperlinearResult(
        verdict=verdict,
        speed=k,
        first_positive_t=first_positive,
        samples=tuple(zip(ts, gaps)),
    )


@dataclasses.dataclass(frozen=True)
class LinearShiftResult:
    """Earliest sampled time from which the shrunken-time front stays a

    linear shift ahead: r(t - eps1 t) >= r(t - eps2 t) + k t from tau_emp on.
    """

    tau_emp: float
    samples: tuple  # (t, margin) pairs


def check_linear_shift(
    law: FrontLaw,
    eps1: float,
    eps2: float,
    k: float,
    *,
    horizon: float = 1.0e3,
) -> LinearShiftResult:
    """Certify r(t(1-eps1)) >= r(t(1-eps2)) + k t on a sampled ladder.

    Needs 0 < eps1 < eps2 < 1 and a convex tail; the reported tau_emp is the
    bisection-refined crossing time when the margin changes sign inside the
    ladder, else the first sample.
    """
    if not (0.0 < eps1 < eps2 < 1.0):
        raise FrontLawError(f"need 0 < eps1 < eps2 < 1, got eps1={eps1}, eps2={eps2}")
    cls = classify_tail(law._right)
    if cls.tail_convex.is_false:
        raise FrontLawError("linear-shift check requires a convex tail")

    margin = lambda t: (
        law.position(t * (1.0 - eps1), Side.RIGHT)
        - law.position(t * (1.0 - eps2), Side.RIGHT)
        - k * t
    )
    t0 = max(law.tau_for(Side.RIGHT) / (1.0 - eps2) * 1.01 + 1e-6, 0.5)
    ts = _time_ladder(t0, horizon, factor=1.5)
    margins = [margin(t) for t in ts]
    ok = [m >= 0.0 for m in margins]
    if not ok[-1]:
        raise FrontLawError(
            "no linear-shift threshold within the horizon; sampled margins: "
            + ", ".join(f"({t:.3g}, {m:.3g})" for t, m in zip(ts, margins))
        )
    # last failing sample, if any, brackets the crossing
    fail_idx = [i for i, good in enumerate(ok) if not good]
    if not fail_idx:
        tau_emp = ts[0]
    else:
        i = fail_idx[-1]
        if not all(ok[i + 1 :]):
            raise FrontLawError("linear-shift margin is not eventually monotone on the ladder")
        tau_emp = float(_sci_optimize.brentq(margin, ts[i], ts[i + 1], xtol=1e-10, rtol=1e-12))
    return LinearShiftResult(tau_emp=tau_emp, samples=tuple(zip(ts, margins)))


@dataclasses.dataclass(frozen=True)
class SandwichEquivalenceResult:
    """Sampled certification of the six-term enclosure chain."""

    tau_emp: float
    verdict: Verdict
    samples: tuple  # (t, chain_ok) pairs
    chains: tuple  # (t, six positions) rows

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.TRUE


def check_sandwich_equivalence(
    b1: TailProfile,
    b2: TailProfile,
    beta: float,
    eps_triple: Sequence[float],
    *,
    horizon: float = 400.0,
) -> SandwichEquivalenceResult:
    """For log-equivalent shapes, enclosures at widened tolerances nest.

    Verifies, on a sampled ladder, the six-term chain of front radii

        r2(t(1-e2)) <= r1(t(1-e)) <= r2(t(1-e1))
                    <= r2(t(1+e1)) <= r1(t(1+e)) <= r2(t(1+e2))

    for eps_triple = (e1, e, e2) with e1 < e < e2, and returns the earliest
    sampled time from which the whole chain holds through the horizon.
    """
    e1, e, e2 = (float(v) for v in eps_triple)
    if not (0.0 < e1 < e < e2 < 1.0):
        raise FrontLawError(f"need 0 < eps1 < eps < eps2 < 1, got {eps_triple}")
    for prof, name in ((b1, "b1"), (b2, "b2")):
        if classify_tail(prof).tail_decreasing.is_false:
            raise FrontLawError(f"{name} is not tail-decreasing")
    equiv = log_equivalent(b1, b2)
    if equiv.verdict is not Verdict.TRUE:
        raise TailError(
            f"sandwich equivalence requires log-equivalent shapes (verdict: {equiv.verdict.value})"
        )
    law1 = FrontLaw(b1, beta)
    law2 = FrontLaw(b2, beta)

    def chain(t: float) -> tuple:
        return (
            law2.position(t * (1.0 - e2)),
            law1.position(t * (1.0 - e)),
            law2.position(t * (1.0 - e1)),
            law2.position(t * (1.0 + e1)),
            law1.position(t * (1.0 + e)),
            law2.position(t * (1.0 + e2)),
        )

    tau0 = max(law1.tau, law2.tau) / (1.0 - e2)
    t0 = max(1.01 * tau0 + 1e-6, 1.0)
    ts = _time_ladder(t0, horizon, factor=1.5)
    rows = []
    oks = []
    for t in ts:
        vals = chain(t)
        slack = 1e-12 * vals[-1]
        oks.append(all(a <= b + slack for a, b in zip(vals[:-1], vals[1:])))
        rows.append((t, vals))
    suffix = 0
    for good in reversed(oks):
        if good:
            suffix += 1
        else:
            break
    if suffix == 0:
        raise FrontLawError(
            "enclosure chain broken at every sampled time up to the horizon "
            f"(last sampled t={ts[-1]:.3g})"
        )
    tau_emp = ts[len(ts) - suffix]
    verdict = Verdict.TRUE if suffix >= 2 or len(ts) == 1 else Verdict.UNDETERMINED
    return SandwichEquivalenceResult(
        tau_emp=tau_emp,
        verdict=verdict,
        samples=tuple(zip(ts, oks)),
        chains=tuple(rows),
    )
