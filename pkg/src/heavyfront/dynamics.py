"""Time evolution of the nonlocal growth-dispersal equation.

The equation integrated here is

    du/dt = kappa (a * u) - m u - u G[u],

where ``a`` is a unit-mass dispersal kernel, ``kappa`` and ``m`` are gain and
loss rates with ``beta = kappa - m > 0``, and ``G`` is a saturation term with
G[0] = 0 and G[theta] = beta, making 0 unstable and theta stable.  The module
provides the right-hand side in both algebraic forms, a fixed-step RK4
integrator with range and boundary monitors, the linearized solver, the
iterated-convolution series that serves as its independent oracle, kernel
truncation to finite first moment, and a report-style assumption checker.

Boundary handling: a field's declared extensions are sampled onto one grid
width of padding on each side, so the discrete convolution sees exactly the
mass the extension models (the kernel itself carries no mass beyond the
grid, so wider padding would contribute nothing).  A constant left plateau is
advanced alongside the grid values by the matching scalar equation, keeping
saturated or constant far fields exact instead of frozen.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .convolution import (
    Constant,
    Grid,
    GridError,
    GridFunction,
    Kernel,
    Zero,
    cell_average,
    suffix_sums,
)
from .tails import Side, TailProfile

ArrayF = np.ndarray

#: Absolute tolerance for the invariant range [0, theta].
RANGE_TOL = 1e-9
#: Fixed-step stability convention: dt * (kappa + m + beta) must not exceed this.
STABILITY_LIMIT = 0.5
#: Level-set fraction of theta used by the boundary monitor.
MONITOR_LEVEL_FRACTION = 0.01


class DynamicsError(ValueError):
    """Invalid model, field, or integration request."""


class IntegrationError(DynamicsError):
    """The integration violated an invariant; diagnostics attached."""

    def __init__(self, message: str, *, time: float, diagnostics: Mapping | None = None):
        super().__init__(message)
        self.time = time
        self.diagnostics = dict(diagnostics or {})


class DomainExhausted(DynamicsError):
    """The monitored level set reached the grid margin; partial results kept."""

    def __init__(self, message: str, *, time: float, trajectory: "Trajectory",
                 last_field: GridFunction):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory
        self.last_field = last_field


# ---------------------------------------------------------------------- #
# reactions
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True)
class LocalReaction:
    """Pointwise reaction u -> f(u) with its continuous ratio f(u)/u.

    ``ratio`` must be the closed-form extension of f(v)/v to v = 0 (the
    saturation term is G[v] = beta - ratio(v), and G[0] = 0 requires
    ratio(0) to equal the growth slope).
    """

    f: Callable[[ArrayF], ArrayF]
    ratio: Callable[[ArrayF], ArrayF]
    label: str = "local"


@dataclasses.dataclass(frozen=True)
class NonlocalLogisticReaction:
    """Saturation through dispersed occupancy: F[v] = gamma v (theta - a_minus*v)^k.

    The induced G[v] = gamma_cap (theta - a_minus*v)^k subtracted from beta is
    continuous at v = 0 by construction; ``gamma`` defaults to beta/theta^k so
    that G[0] = 0 and G[theta] = beta hold exactly.
    """

    a_minus: Kernel
    k: float = 1.0
    gamma: float | None = None
    label: str = "nonlocal-logistic"

    def __post_init__(self) -> None:
        if self.k < 1.0:
            raise DynamicsError(f"nonlocal reaction requires power k >= 1, got {self.k}")
        if self.gamma is not None and self.gamma <= 0.0:
            raise DynamicsError(f"gamma must be positive, got {self.gamma}")


Reaction = LocalReaction | NonlocalLogisticReaction


def local_logistic(beta: float, theta: float) -> LocalReaction:
    """f(v) = beta v (1 - v/theta); the saturation term is beta v / theta."""
    return LocalReaction(
        f=lambda v: beta * v * (1.0 - v / theta),
        ratio=lambda v: beta * (1.0 - v / theta),
        label="logistic",
    )


def local_cubic(beta: float, theta: float) -> LocalReaction:
    """f(v) = beta v (1 - (v/theta)^2); saturates more steeply near theta."""
    return LocalReaction(
        f=lambda v: beta * v * (1.0 - (v / theta) ** 2),
        ratio=lambda v: beta * (1.0 - (v / theta) ** 2),
        label="cubic",
    )


# ---------------------------------------------------------------------- #
# model
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(eq=False)
class Model:
    """Rates, carrying level, kernel, and reaction for one equation instance.

    ``first_moment`` may be supplied when the kernel has one (it is used only
    for reporting).  Construction samples the saturation bounds G[0] = 0 <=
    G[c] <= G[theta] = beta on constant fields; ``strict_reaction=False``
    skips that gate so deliberately broken reactions can be built and then
    surfaced by ``check_assumptions``.
    """

    kappa: float
    m: float
    theta: float
    kernel: Kernel
    reaction: Reaction
    first_moment: float | None = None
    strict_reaction: bool = True

    def __post_init__(self) -> None:
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise DynamicsError(f"kappa must be positive and finite, got {self.kappa}")
        if not (self.m > 0.0 and math.isfinite(self.m)):
            raise DynamicsError(f"m must be positive and finite, got {self.m}")
        if self.beta <= 0.0:
            raise DynamicsError(
                f"growth requires kappa > m (beta = {self.beta:.6g} <= 0)"
            )
        if not (self.theta > 0.0 and math.isfinite(self.theta)):
            raise DynamicsError(f"theta must be positive and finite, got {self.theta}")
        if isinstance(self.reaction, NonlocalLogisticReaction):
            if self.reaction.a_minus.grid != self.kernel.grid:
                raise DynamicsError("reaction kernel must share the model grid")
        if self.strict_reaction:
            self._validate_reaction_bounds()

    @property
    def beta(self) -> float:
        return self.kappa - self.m

    @property
    def gamma(self) -> float:
        """Prefactor of the nonlocal saturation (beta/theta^k unless set)."""
        reaction = self.reaction
        if not isinstance(reaction, NonlocalLogisticReaction):
            raise DynamicsError("gamma is defined only for the nonlocal reaction")
        if reaction.gamma is not None:
            return reaction.gamma
        return self.beta / self.theta**reaction.k

    def saturation_on_constant(self, c) -> float | ArrayF:
        """G evaluated on the spatially constant field c (a * c = c exactly)."""
        arr = np.asarray(c, dtype=float)
        if isinstance(self.reaction, LocalReaction):
            out = self.beta - np.asarray(self.reaction.ratio(arr), dtype=float)
        else:
            base = np.maximum(self.theta - arr, 0.0)
            out = self.beta - self.gamma * base**self.reaction.k
        return float(out) if arr.ndim == 0 else out

    def _validate_reaction_bounds(self) -> None:
        cs = self.theta * np.concatenate(([0.0, 1e-6], np.linspace(0.05, 1.0, 20)))
        g = np.asarray(self.saturation_on_constant(cs), dtype=float)
        tol = 1e-9 * max(1.0, self.beta)
        if abs(g[0]) > tol:
            raise DynamicsError(f"reaction violates G[0] = 0 (got {g[0]:.3g})")
        if abs(g[-1] - self.beta) > tol:
            raise DynamicsError(
                f"reaction violates G[theta] = beta (got {g[-1]:.3g} vs {self.beta:.3g})"
            )
        if np.any(g < -tol) or np.any(g > self.beta + tol):
            raise DynamicsError(
                "reaction violates 0 <= G <= beta on constant fields "
                f"(range [{g.min():.3g}, {g.max():.3g}])"
            )


# ---------------------------------------------------------------------- #
# padded convolution operator
# ---------------------------------------------------------------------- #
class _ConvOperator:
    """Discrete convolution against a fixed kernel with declared boundary pads.

    The grid values are convolved by FFT; the pads (one grid width each side,
    beyond which the gridded kernel has no support) are folded in as
    precomputed responses: a fixed response for analytic tail pads and a unit
    response scaled by the current plateau level for a constant left pad.
    """

    def __init__(self, kernel: Kernel, field: GridFunction):
        grid = kernel.grid
        if field.grid != grid:
            raise GridError("field and kernel grids differ")
        n = grid.n_points
        dx = grid.dx
        self.grid = grid
        self._spec_core = np.fft.rfft(kernel.density.values, 2 * n)
        z_left = grid.x[0] - dx * np.arange(n // 2, 0, -1)
        z_right = grid.x[-1] + dx * np.arange(1, n // 2 + 1)

        self.left_level0 = 0.0
        left_fixed = np.zeros(n // 2)
        if isinstance(field.left_ext, Constant):
            self.left_level0 = field.left_ext.level
        else:  # decaying left tail: fixed analytic samples
            left_fixed = np.asarray(field.left_ext.value(z_left), dtype=float)
        if isinstance(field.right_ext, Zero):
            right_fixed = np.zeros(n // 2)
        else:
            right_fixed = np.asarray(field.right_ext.value(z_right), dtype=float)

        kern = kernel.density.values
        self._unit_left = self._pad_response(kern, np.ones(n // 2), left=True)
        fixed = self._pad_response(kern, left_fixed, left=True)
        fixed += self._pad_response(kern, right_fixed, left=False)
        self._fixed = fixed

    def _pad_response(self, kern: ArrayF, pad: ArrayF, *, left: bool) -> ArrayF:
        n = self.grid.n_points
        if not np.any(pad):
            return np.zeros(n)
        ext = np.zeros(2 * n)
        if left:
            ext[: n // 2] = pad
        else:
            ext[3 * n // 2 :] = pad
        nfft = 4 * n
        full = np.fft.irfft(np.fft.rfft(kern, nfft) * np.fft.rfft(ext, nfft), nfft)
        return full[n : 2 * n] * self.grid.dx

    def apply(self, values: ArrayF, left_level: float) -> ArrayF:
        n = self.grid.n_points
        full = np.fft.irfft(self._spec_core * np.fft.rfft(values, 2 * n), 2 * n)
        out = full[n // 2 : n // 2 + n] * self.grid.dx
        out += self._fixed
        if left_level != 0.0:
            out += left_level * self._unit_left
        return out


def kernel_apply(kernel: Kernel, field: GridFunction) -> ArrayF:
    """(a * u) on the grid, honoring the field's boundary extensions."""
    op = _ConvOperator(kernel, field)
    return op.apply(field.values, op.left_level0)


# ---------------------------------------------------------------------- #
# saturation and right-hand side
# ---------------------------------------------------------------------- #
def _saturation_values(
    model: Model, values: ArrayF, conv_minus: ArrayF | None
) -> ArrayF:
    if isinstance(model.reaction, LocalReaction):
        return model.beta - np.asarray(model.reaction.ratio(values), dtype=float)
    assert conv_minus is not None
    base = np.maximum(model.theta - conv_minus, 0.0)
    return model.beta - model.gamma * base**model.reaction.k


def _check_range(values: ArrayF, theta: float, what: str) -> None:
    lo = float(values.min())
    hi = float(values.max())
    if lo < -RANGE_TOL or hi > theta + RANGE_TOL:
        raise DynamicsError(
            f"{what} must lie in [0, theta] within {RANGE_TOL:.0e} "
            f"(range [{lo:.6g}, {hi:.6g}], theta = {theta:.6g})"
        )


def apply_G(model: Model, v: GridFunction) -> ArrayF:
    """Saturation-rate values G[v] on the grid for a field in [0, theta]."""
    _check_range(v.values, model.theta, "saturation input")
    conv_minus = None
    if isinstance(model.reaction, NonlocalLogisticReaction):
        conv_minus = kernel_apply(model.reaction.a_minus, v)
    return _saturation_values(model, v.values, conv_minus)


def rhs(model: Model, u: GridFunction) -> ArrayF:
    """kappa (a*u) - m u - u G[u] as node values on the grid."""
    conv = kernel_apply(model.kernel, u)
    g = apply_G(model, u)
    return model.kappa * conv - model.m * u.values - u.values * g


def rhs_reaction_form(model: Model, u: GridFunction) -> ArrayF:
    """The same right-hand side written kappa (a*u - u) + u (beta - G[u])."""
    conv = kernel_apply(model.kernel, u)
    g = apply_G(model, u)
    return model.kappa * (conv - u.values) + u.values * (model.beta - g)


# ---------------------------------------------------------------------- #
# trajectories
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(eq=False)
class Trajectory:
    """Snapshots of one integration at strictly increasing output times."""

    times: tuple
    fields: tuple
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.times) != len(self.fields):
            raise DynamicsError("times and fields must pair up")
        if any(b <= a for a, b in zip(self.times[:-1], self.times[1:])):
            raise DynamicsError("snapshot times must be strictly increasing")

    @property
    def final(self) -> GridFunction:
        return self.fields[-1]

    def masses(self) -> ArrayF:
        return np.array([f.mass for f in self.fields])


def _normalize_snapshot_times(T: float, snapshot_times: Sequence[float] | None) -> list:
    if T <= 0.0:
        raise DynamicsError(f"horizon must be positive, got {T}")
    times = {0.0, float(T)}
    for t in snapshot_times or ():
        tf = float(t)
        if not (0.0 <= tf <= T + 1e-12):
            raise DynamicsError(f"snapshot time {tf} outside [0, {T}]")
        times.add(min(tf, float(T)))
    return sorted(times)


def _check_stability(model: Model, dt: float) -> None:
    if dt <= 0.0:
        raise DynamicsError(f"step size must be positive, got {dt}")
    rate = model.kappa + model.m + model.beta
    if dt * rate > STABILITY_LIMIT + 1e-12:
        raise DynamicsError(
            f"step size {dt} too large: dt * (kappa + m + beta) = {dt * rate:.3g} "
            f"exceeds the stability limit {STABILITY_LIMIT}"
        )


def _package(
    u0: GridFunction, values: ArrayF, left_level: float, *, initial: bool = False
) -> GridFunction:
    clipped = np.maximum(values, 0.0)
    left_ext = u0.left_ext
    if isinstance(left_ext, Constant) and left_ext.level > 0.0:
        left_ext = Constant(left_level)
    elif isinstance(left_ext, TailProfile) and not initial:
        left_ext = Constant(0.0)
    # A declared tail extension models the seed only; evolved edge values
    # outgrow it, so later snapshots expose plain grid values on either side.
    right_ext = u0.right_ext if initial or isinstance(u0.right_ext, Zero) else Zero()
    return GridFunction(
        grid=u0.grid,
        values=clipped,
        right_ext=right_ext,
        left_ext=left_ext,
        aliasing_warning=u0.aliasing_warning,
    )


class _Integrator:
    """Shared fixed-step RK4 core for the nonlinear and linearized equations."""

    def __init__(self, model: Model, u0: GridFunction, *, linear: bool):
        self.model = model
        self.u0 = u0
        self.linear = linear
        self.op = _ConvOperator(model.kernel, u0)
        self.op_minus = None
        if not linear and isinstance(model.reaction, NonlocalLogisticReaction):
            self.op_minus = _ConvOperator(model.reaction.a_minus, u0)
        self.plateau = isinstance(u0.left_ext, Constant) and u0.left_ext.level > 0.0

    def deriv(self, values: ArrayF, level: float) -> tuple:
        model = self.model
        conv = self.op.apply(values, level)
        if self.linear:
            dvals = model.kappa * conv - model.m * values
            dlevel = model.beta * level
            return dvals, dlevel
        conv_minus = None
        if self.op_minus is not None:
            conv_minus = self.op_minus.apply(values, level)
        g = _saturation_values(model, values, conv_minus)
        dvals = model.kappa * conv - model.m * values - values * g
        if self.plateau:
            g_level = float(self.model.saturation_on_constant(level))
            dlevel = model.beta * level - level * g_level
        else:
            dlevel = 0.0
        return dvals, dlevel

    def step(self, values: ArrayF, level: float, h: float) -> tuple:
        k1, l1 = self.deriv(values, level)
        k2, l2 = self.deriv(values + 0.5 * h * k1, level + 0.5 * h * l1)
        k3, l3 = self.deriv(values + 0.5 * h * k2, level + 0.5 * h * l2)
        k4, l4 = self.deriv(values + h * k3, level + h * l3)
        new_vals = values + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        new_level = level + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        return new_vals, new_level


def _monitor_breach(
    values: ArrayF, grid: Grid, level: float, margin: float, *, check_left: bool
) -> str | None:
    above = np.nonzero(values >= level)[0]
    if above.size == 0:
        return None
    x_hi = grid.x[int(above[-1])]
    if x_hi > grid.half_width - margin:
        return f"level set reached x = {x_hi:.6g} near the right edge"
    if check_left:
        x_lo = grid.x[int(above[0])]
        if x_lo < -grid.half_width + margin:
            return f"level set reached x = {x_lo:.6g} near the left edge"
    return None


def evolve(
    model: Model,
    u0: GridFunction,
    T: float,
    dt: float,
    *,
    snapshot_times: Sequence[float] | None = None,
    boundary_margin: float | None = None,
) -> Trajectory:
    """Fixed-step RK4 integration of the nonlinear equation.

    The trajectory must stay in [0, theta] within 1e-9 (boundedness is a
    verified property, not an enforced clamp); the run halts with
    ``DomainExhausted`` when the theta/100 level set comes within the margin
    (default ten cells) of a grid edge whose extension does not model it.
    """
    _check_range(u0.values, model.theta, "initial data")
    _check_stability(model, dt)
    grid = u0.grid
    margin = 10.0 * grid.dx if boundary_margin is None else float(boundary_margin)
    monitor_level = MONITOR_LEVEL_FRACTION * model.theta
    out_times = _normalize_snapshot_times(T, snapshot_times)

    integ = _Integrator(model, u0, linear=False)
    values = u0.values.copy()
    level = integ.op.left_level0
    check_left = not (integ.plateau and level >= monitor_level)

    times: list = [out_times[0]] if out_times[0] == 0.0 else []
    fields: list = [_package(u0, values, level, initial=True)] if times else []
    raw_min: list = [float(values.min())] if times else []
    raw_max: list = [float(values.max())] if times else []
    levels: list = [level] if times else []
    t = 0.0
    for target in out_times:
        if target <= 0.0:
            continue
        span = target - t
        n_steps = max(1, int(math.ceil(span / dt - 1e-12)))
        h = span / n_steps
        for _ in range(n_steps):
            values, level = integ.step(values, level, h)
            t += h
            lo = float(values.min())
            hi = float(values.max())
            if lo < -RANGE_TOL or hi > model.theta + RANGE_TOL:
                raise IntegrationError(
                    f"solution left [0, theta] at t = {t:.6g} "
                    f"(range [{lo:.6g}, {hi:.6g}])",
                    time=t,
                    diagnostics={
                        "min": lo,
                        "max": hi,
                        "argmin": float(grid.x[int(values.argmin())]),
                        "argmax": float(grid.x[int(values.argmax())]),
                    },
                )
            breach = _monitor_breach(values, grid, monitor_level, margin, check_left=check_left)
            if breach is not None:
                partial = Trajectory(
                    times=tuple(times),
                    fields=tuple(fields),
                    diagnostics={"raw_min": raw_min, "raw_max": raw_max, "plateau_level": levels},
                ) if times else Trajectory((0.0,), (_package(u0, u0.values, integ.op.left_level0, initial=True),))
                raise DomainExhausted(
                    f"domain exhausted at t = {t:.6g}: {breach}",
                    time=t,
                    trajectory=partial,
                    last_field=_package(u0, values, level),
                )
        t = target
        times.append(t)
        fields.append(_package(u0, values, level))
        raw_min.append(float(values.min()))
        raw_max.append(float(values.max()))
        levels.append(level)
    return Trajectory(
        times=tuple(times),
        fields=tuple(fields),
        diagnostics={
            "raw_min": raw_min,
            "raw_max": raw_max,
            "plateau_level": levels,
            "step_limit": dt,
        },
    )


def solve_linear(
    model: Model,
    u0: GridFunction,
    T: float,
    dt: float,
    *,
    snapshot_times: Sequence[float] | None = None,
) -> Trajectory:
    """RK4 integration of the linearization dw/dt = kappa (a*w) - m w.

    Growth is global and unbounded, so no level-set monitor applies; the
    grid-mass identity  integral(w(t)) = e^(beta t) integral(u0)  is recorded
    per snapshot in ``diagnostics["mass_rel_err"]`` (meaningful for data
    whose mass is captured by the grid).
    """
    _check_stability(model, dt)
    out_times = _normalize_snapshot_times(T, snapshot_times)
    integ = _Integrator(model, u0, linear=True)
    values = u0.values.copy()
    level = integ.op.left_level0
    mass0 = float(np.sum(values) * u0.grid.dx)

    times: list = []
    fields: list = []
    mass_err: list = []
    t = 0.0
    for target in out_times:
        if target > 0.0:
            span = target - t
            n_steps = max(1, int(math.ceil(span / dt - 1e-12)))
            h = span / n_steps
            for _ in range(n_steps):
                values, level = integ.step(values, level, h)
                t += h
                floor = -RANGE_TOL * max(1.0, float(values.max()))
                if float(values.min()) < floor:
                    raise IntegrationError(
                        f"linear solution went negative at t = {t:.6g} "
                        f"(min {values.min():.6g})",
                        time=t,
                    )
            t = target
        times.append(t)
        fields.append(_package(u0, values, level, initial=(t == 0.0)))
        mass = float(np.sum(values) * u0.grid.dx)
        expected = mass0 * math.exp(model.beta * t)
        mass_err.append(abs(mass - expected) / max(abs(expected), 1e-300))
    return Trajectory(
        times=tuple(times),
        fields=tuple(fields),
        diagnostics={"mass_rel_err": mass_err, "plateau_level_final": level},
    )


# ---------------------------------------------------------------------- #
# iterated-convolution series (independent linear oracle)
# ---------------------------------------------------------------------- #
def series_solution(model: Model, u0: GridFunction, t: float, n_max: int) -> GridFunction:
    """e^(-m t) * sum_{n<=n_max} (kappa t)^n / n! * (n-fold kernel power * u0).

    An independent route to the linearized solution: no time stepping, only
    iterated convolution.  The truncation must satisfy
    (kappa t)^n_max / n_max! < 1e-16 * (largest series term).
    """
    if t < 0.0:
        raise DynamicsError(f"time must be >= 0, got {t}")
    if n_max < 0:
        raise DynamicsError(f"n_max must be >= 0, got {n_max}")
    x = model.kappa * t
    if x > 0.0:
        log_terms = [k * math.log(x) - math.lgamma(k + 1) for k in range(n_max + 2)]
        log_peak = max(log_terms[:-1])
        if log_terms[-1] >= log_peak + math.log(1e-16):
            need = n_max
            log_term = log_terms[-1]
            while log_term >= log_peak + math.log(1e-16) and need < 10_000:
                need += 1
                log_term += math.log(x) - math.log(need + 1)
            raise DynamicsError(
                f"n_max = {n_max} leaves a truncation tail above 1e-16 of the "
                f"peak term for kappa t = {x:.6g}; use n_max >= {need}"
            )
    op = _ConvOperator(model.kernel, u0)
    level = op.left_level0
    acc = u0.values.copy()
    acc_level = level
    conv_vals = u0.values.copy()
    conv_level = level  # unit-mass kernel: a plateau convolves to itself
    weight = 1.0
    for n in range(1, n_max + 1):
        conv_vals = op.apply(conv_vals, conv_level)
        weight *= x / n
        acc = acc + weight * conv_vals
        acc_level = acc_level + weight * conv_level
    damp = math.exp(-model.m * t)
    out_vals = np.maximum(acc * damp, 0.0)
    out_level = acc_level * damp
    left_ext = u0.left_ext
    if isinstance(left_ext, Constant) and left_ext.level > 0.0:
        left_ext = Constant(out_level)
    elif isinstance(left_ext, TailProfile) and t > 0.0:
        left_ext = Constant(0.0)
    return GridFunction(
        grid=u0.grid,
        values=out_vals,
        right_ext=u0.right_ext if t == 0.0 else Zero(),
        left_ext=left_ext,
    )


# ---------------------------------------------------------------------- #
# kernel truncation
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True)
class TruncatedKernel:
    """Renormalized restriction of a kernel to a window, with its mass share."""

    kernel: Kernel
    mass_fraction: float
    first_moment: float


def truncate_kernel(kernel: Kernel, window: tuple) -> TruncatedKernel:
    """Restrict the kernel to the window and renormalize to unit mass.

    The result has a finite first moment even when the original kernel does
    not; the removed mass fraction is reported so the owning model can scale
    its gain rate accordingly.
    """
    lo, hi = (float(window[0]), float(window[1]))
    if not lo < hi:
        raise DynamicsError(f"window must satisfy lo < hi, got ({lo}, {hi})")
    grid = kernel.grid
    mask = (grid.x >= lo) & (grid.x <= hi)
    vals = np.where(mask, kernel.density.values, 0.0)
    fraction = float(np.sum(vals) / np.sum(kernel.density.values))
    if fraction <= 0.0:
        raise DynamicsError("window captures no kernel mass")
    new_vals = vals / fraction
    dens = GridFunction(grid, new_vals, right_ext=Zero(), left_ext=Constant(0.0))
    moment = float(np.sum(grid.x * new_vals) * grid.dx)
    new_kernel = Kernel(
        density=dens,
        first_moment=moment,
        tail_sums=suffix_sums(new_vals, grid.dx),
        tails=None,
    )
    return TruncatedKernel(kernel=new_kernel, mass_fraction=fraction, first_moment=moment)


def truncate_model(model: Model, window: tuple) -> Model:
    """Model with the kernel truncated and the gain rate scaled by the kept mass."""
    trunc = truncate_kernel(model.kernel, window)
    kappa_n = model.kappa * trunc.mass_fraction
    if kappa_n <= model.m:
        raise DynamicsError(
            f"truncation kills growth: kappa * kept mass = {kappa_n:.6g} <= m = {model.m:.6g}"
        )
    return Model(
        kappa=kappa_n,
        m=model.m,
        theta=model.theta,
        kernel=trunc.kernel,
        reaction=model.reaction,
        first_moment=trunc.first_moment,
        strict_reaction=False,
    )


# ---------------------------------------------------------------------- #
# initial data builders
# ---------------------------------------------------------------------- #
def step_initial(grid: Grid, height: float, edge: float = 0.0) -> GridFunction:
    """height on (-inf, edge], zero beyond: a saturated invasion front seed."""
    if height <= 0.0:
        raise DynamicsError("step height must be positive")
    vals = cell_average(
        grid, lambda x: np.where(x <= edge, height, 0.0), breaks=(edge,)
    )
    return GridFunction(grid, vals, right_ext=Zero(), left_ext=Constant(height))


def indicator_initial(grid: Grid, height: float, lo: float, hi: float) -> GridFunction:
    """height on [lo, hi], zero outside: compactly supported seed."""
    if not lo < hi:
        raise DynamicsError(f"indicator needs lo < hi, got ({lo}, {hi})")
    if height <= 0.0:
        raise DynamicsError("indicator height must be positive")
    vals = cell_average(
        grid,
        lambda x: np.where((x >= lo) & (x <= hi), height, 0.0),
        breaks=(lo, hi),
    )
    return GridFunction(grid, vals, right_ext=Zero(), left_ext=Constant(0.0))


def tail_initial(grid: Grid, profile: TailProfile, cap: float) -> GridFunction:
    """Heavy-tailed seed: the cap level up to where b(x) falls below it, then b.

    The declared right extension is the profile itself, exact because the
    values past the crossing are b(x) verbatim.
    """
    if profile.side is not Side.RIGHT:
        raise DynamicsError("tail seed uses a right-sided profile")
    if cap <= 0.0:
        raise DynamicsError("cap must be positive")
    lo_dom = profile.domain_start
    x_lo = max(profile.rho, 0.0)
    if math.isfinite(lo_dom):
        x_lo = max(x_lo, lo_dom + 1e-9 * (1.0 + abs(lo_dom)))
    x_lo = max(x_lo, 1e-12)
    log_cap = math.log(cap)
    if float(profile.log_value(x_lo)) <= log_cap:
        x_cap = x_lo
    else:
        hi = max(2.0 * x_lo, 1.0)
        while float(profile.log_value(hi)) > log_cap:
            hi *= 2.0
            if hi > 1e12:
                raise DynamicsError("tail never falls below the cap on a usable range")
        from scipy.optimize import brentq

        x_cap = float(brentq(lambda s: float(profile.log_value(s)) - log_cap, x_lo, hi, xtol=1e-12))
    if x_cap >= grid.x[-1] - 8.0 * grid.dx:
        raise DynamicsError(
            f"cap region reaches x = {x_cap:.6g}, too close to the grid edge; enlarge the grid"
        )

    def fn(xs: ArrayF) -> ArrayF:
        arr = np.asarray(xs, dtype=float)
        out = np.full(arr.shape, float(cap))
        mask = arr > x_cap
        if np.any(mask):
            out[mask] = profile.value(arr[mask])
        return out

    vals = cell_average(grid, fn, breaks=(x_cap,))
    return GridFunction(grid, vals, right_ext=profile, left_ext=Constant(cap))


# ---------------------------------------------------------------------- #
# assumption checks (report-only)
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    details: dict

    @property
    def skipped(self) -> bool:
        return bool(self.details.get("skipped"))


@dataclasses.dataclass(frozen=True)
class AssumptionReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.details.get("skipped"))

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def check_assumptions(model: Model, *, seed: int = 0, n_random: int = 5) -> AssumptionReport:
    """Sampled verification of the structural assumptions; never raises.

    Covered: saturation bounds G[0] = 0 <= G <= G[theta] = beta on constants
    and random fields; monotonicity of kappa (a*v) - v G[v] + p v in the field
    for a small candidate set of shifts p (existential, so a failed scan is
    inconclusive and reported as such); positivity kappa a - beta a_minus >=
    delta near the origin for the nonlocal reaction; strict absorption
    G[r] < beta for constant levels inside (0, theta).
    """
    rng = np.random.default_rng(seed)
    grid = model.kernel.grid
    theta = model.theta
    beta = model.beta
    tol = 1e-9 * max(1.0, beta)
    checks: list = []

    # saturation bounds on constants
    cs = theta * np.concatenate(([0.0, 1e-6], np.linspace(0.05, 1.0, 20)))
    g_const = np.asarray(model.saturation_on_constant(cs), dtype=float)
    const_ok = (
        abs(g_const[0]) <= tol
        and abs(g_const[-1] - beta) <= tol
        and bool(np.all(g_const >= -tol) and np.all(g_const <= beta + tol))
    )
    checks.append(
        AssumptionCheck(
            "saturation-bounds-constants",
            const_ok,
            {"g_at_zero": float(g_const[0]), "g_at_theta": float(g_const[-1]),
             "g_min": float(g_const.min()), "g_max": float(g_const.max())},
        )
    )

    # saturation bounds on random fields
    worst_low, worst_high = 0.0, 0.0
    fields_ok = True
    for _ in range(n_random):
        v = GridFunction(grid, theta * rng.uniform(size=grid.n_points))
        g = apply_G(model, v)
        worst_low = min(worst_low, float(g.min()))
        worst_high = max(worst_high, float(g.max()) - beta)
        fields_ok = fields_ok and g.min() >= -tol and g.max() <= beta + tol
    checks.append(
        AssumptionCheck(
            "saturation-bounds-random-fields",
            fields_ok,
            {"worst_negative": worst_low, "worst_excess": worst_high},
        )
    )

    # shifted monotonicity of the full operator in the field argument
    pairs: list = []
    for _ in range(n_random):
        w_vals = theta * rng.uniform(size=grid.n_points)
        pairs.append((w_vals * rng.uniform(size=grid.n_points), w_vals))
    for hi_level in theta * np.array([0.3, 0.7, 1.0]):
        lo_level = hi_level * rng.uniform()
        pairs.append(
            (np.full(grid.n_points, lo_level), np.full(grid.n_points, hi_level))
        )
    candidates = [0.0, beta, 2.0 * beta]
    best_p = None
    margins = {}
    for p in candidates:
        worst = math.inf
        for v_vals, w_vals in pairs:
            w = GridFunction(grid, w_vals)
            v = GridFunction(grid, v_vals)
            expr_w = model.kappa * kernel_apply(model.kernel, w) - w_vals * apply_G(model, w) + p * w_vals
            expr_v = model.kappa * kernel_apply(model.kernel, v) - v_vals * apply_G(model, v) + p * v_vals
            worst = min(worst, float((expr_w - expr_v).min()))
        margins[p] = worst
        if worst >= -tol and best_p is None:
            best_p = p
    checks.append(
        AssumptionCheck(
            "shifted-monotonicity",
            best_p is not None,
            {"best_p": best_p, "margins": margins,
             "note": "existential shift: a failed scan over the candidate set is inconclusive"},
        )
    )

    # nonlocal positivity near the origin
    if isinstance(model.reaction, NonlocalLogisticReaction):
        h = max(5.0 * grid.dx, 0.01)
        near = np.abs(grid.x) <= h
        diff = (
            model.kappa * model.kernel.density.values[near]
            - beta * model.reaction.a_minus.density.values[near]
        )
        delta_emp = float(diff.min())
        checks.append(
            AssumptionCheck(
                "nonlocal-positivity-near-origin",
                delta_emp > 0.0,
                {"delta_emp": delta_emp, "window_half_width": h},
            )
        )
    else:
        checks.append(
            AssumptionCheck(
                "nonlocal-positivity-near-origin", True, {"skipped": "local reaction"}
            )
        )

    # strict absorption below the growth rate on interior constants
    rs = theta * np.linspace(0.01, 0.99, 25)
    g_r = np.asarray(model.saturation_on_constant(rs), dtype=float)
    strict_ok = bool(np.all(g_r < beta))
    checks.append(
        AssumptionCheck(
            "absorption-below-rate-interior",
            strict_ok,
            {"max_g": float(g_r.max()), "beta": beta},
        )
    )
    return AssumptionReport(checks=tuple(checks))
