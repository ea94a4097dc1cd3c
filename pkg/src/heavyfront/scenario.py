"""Scenario configs: parse, validate, and build the objects they describe.

A scenario is a TOML file with the tables below; numbers are read as 64-bit
floats, and every validation error names the offending field by its dotted
path.  Unknown keys are rejected (they are almost always typos).

``[grid]``
    ``half_width`` (> 0), ``n_points`` (power of two >= 16).

``[model]``
    ``kappa`` (> 0), ``m`` (> 0, with ``kappa > m``), ``theta`` (> 0),
    ``reaction`` in {"logistic", "cubic", "nonlocal"}; the nonlocal variant
    accepts ``reaction_k`` (>= 1, default 1) and ``reaction_gamma``
    (optional saturation coefficient).

``[kernel]``
    ``family`` names either a tail family ("power", "log_power_exp",
    "stretched_exp", "x_over_log", "exponential") with its parameters
    (``q``, ``p``, ``alpha``, ``k``, ``shift``, ``scale``) and an optional
    ``two_sided`` flag (default true: the right profile is mirrored), or an
    analytic kernel ("gaussian" with ``sigma``, "laplace" with ``scale``,
    "uniform" with ``half_support``).

``[initial]``
    ``variant`` in {"indicator", "step", "tail-profile", "custom"}:
    indicator takes ``height``/``lo``/``hi``; step takes ``height``/``edge``;
    tail-profile takes a tail ``family`` block plus ``cap``; custom takes an
    explicit ``values`` array (one entry per grid node) and an optional
    ``left_level``.

``[run]`` (optional; required by trajectory-based diagnostics)
    ``T`` (> 0), ``dt`` (> 0), optional ``snapshot_times`` array and
    ``boundary_margin``.

``[[diagnostics]]`` (zero or more)
    ``kind`` in {"frontlaw", "kesten", "subsolution", "sandwich",
    "envelope", "comparison"}, each with the parameters listed in
    :data:`DIAGNOSTIC_FIELDS`.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

try:  # Python 3.11+
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - version-dependent import
    import tomli as _toml

from . import tails
from .convolution import (
    Constant,
    Grid,
    GridFunction,
    Kernel,
    gaussian_kernel,
    kernel_from_profile,
    kernel_from_two_sided,
    laplace_kernel,
    uniform_kernel,
)
from .dynamics import (
    Model,
    NonlocalLogisticReaction,
    indicator_initial,
    local_cubic,
    local_logistic,
    step_initial,
    tail_initial,
)
from .tails import TailProfile, TwoSidedTail

__all__ = [
    "ScenarioError",
    "RunSpec",
    "Diagnostic",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "TAIL_FAMILIES",
    "ANALYTIC_KERNELS",
    "DIAGNOSTIC_FIELDS",
]


class ScenarioError(ValueError):
    """Config validation failure; the message starts with the field path."""


#: Tail families usable as kernel shapes and tail-profile specs.
TAIL_FAMILIES = ("power", "log_power_exp", "stretched_exp", "x_over_log", "exponential")

#: Kernels without a heavy-tail law (no closed-form front behaviour).
ANALYTIC_KERNELS = ("gaussian", "laplace", "uniform")

#: Allowed keys per diagnostic kind (beyond "kind").
DIAGNOSTIC_FIELDS: Mapping[str, tuple] = {
    "frontlaw": ("t_min", "t_max", "n_samples", "k", "tol"),
    "kesten": ("delta", "n_max", "distribution"),
    "subsolution": ("lam", "eps", "delta", "times", "tol"),
    "sandwich": ("level", "eps", "times", "law"),
    "envelope": ("delta", "times", "x_min", "tail"),
    "comparison": ("upper", "tol"),
}

_TAIL_KEYS = ("family", "q", "p", "alpha", "k", "shift", "scale")


# ---------------------------------------------------------------------- #
# field readers
# ---------------------------------------------------------------------- #
def _table(raw: Mapping, key: str, *, required: bool = True) -> Mapping | None:
    val = raw.get(key)
    if val is None:
        if required:
            raise ScenarioError(f"{key}: required table is missing")
        return None
    if not isinstance(val, Mapping):
        raise ScenarioError(f"{key}: expected a table, got {type(val).__name__}")
    return val


def _reject_unknown(table: Mapping, path: str, allowed: Sequence[str]) -> None:
    for key in table:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}: unknown field (allowed: {', '.join(sorted(allowed))})")


def _float(table: Mapping, path: str, key: str, *, default=None, required=False):
    val = table.get(key, default)
    if val is None:
        if required:
            raise ScenarioError(f"{path}.{key}: required number is missing")
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{path}.{key}: expected a number, got {val!r}")
    out = float(val)
    if not math.isfinite(out):
        raise ScenarioError(f"{path}.{key}: must be finite, got {out}")
    return out


def _int(table: Mapping, path: str, key: str, *, default=None, required=False):
    val = table.get(key, default)
    if val is None:
        if required:
            raise ScenarioError(f"{path}.{key}: required integer is missing")
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(f"{path}.{key}: expected an integer, got {val!r}")
    return int(val)


def _bool(table: Mapping, path: str, key: str, *, default: bool) -> bool:
    val = table.get(key, default)
    if not isinstance(val, bool):
        raise ScenarioError(f"{path}.{key}: expected true/false, got {val!r}")
    return val


def _str(table: Mapping, path: str, key: str, *, choices: Sequence[str]) -> str:
    val = table.get(key)
    if not isinstance(val, str):
        raise ScenarioError(f"{path}.{key}: expected one of {', '.join(choices)}")
    if val not in choices:
        raise ScenarioError(
            f"{path}.{key}: unknown value {val!r} (allowed: {', '.join(choices)})"
        )
    return val


def _positive(value: float, path: str) -> float:
    if not value > 0.0:
        raise ScenarioError(f"{path}: must be > 0, got {value}")
    return value


def _float_list(table: Mapping, path: str, key: str, *, required=False):
    val = table.get(key)
    if val is None:
        if required:
            raise ScenarioError(f"{path}.{key}: required array is missing")
        return None
    if not isinstance(val, (list, tuple)) or not val:
        raise ScenarioError(f"{path}.{key}: expected a non-empty array of numbers")
    out = []
    for i, item in enumerate(val):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ScenarioError(f"{path}.{key}[{i}]: expected a number, got {item!r}")
        out.append(float(item))
    return out


# ---------------------------------------------------------------------- #
# component builders
# ---------------------------------------------------------------------- #
def _build_profile(table: Mapping, path: str) -> TailProfile:
    _reject_unknown(table, path, [k for k in _TAIL_KEYS] + ["two_sided", "variant", "cap"])
    family = _str(table, path, "family", choices=TAIL_FAMILIES)
    scale = _float(table, path, "scale", default=1.0)
    _positive(scale, f"{path}.scale")
    try:
        if family == "power":
            q = _float(table, path, "q", required=True)
            if q <= 1.0:
                raise ScenarioError(f"{path}.q: must be > 1, got {q}")
            shift = _float(table, path, "shift", default=0.0)
            return tails.power(q, shift=shift, scale=scale)
        if family == "log_power_exp":
            q = _float(table, path, "q", required=True)
            if q <= 1.0:
                raise ScenarioError(f"{path}.q: must be > 1, got {q}")
            p = _float(table, path, "p", required=True)
            _positive(p, f"{path}.p")
            return tails.log_power_exp(p, q, scale=scale)
        if family == "stretched_exp":
            alpha = _float(table, path, "alpha", required=True)
            if not (0.0 < alpha < 1.0):
                raise ScenarioError(f"{path}.alpha: must lie in (0, 1), got {alpha}")
            return tails.stretched_exp(alpha, scale=scale)
        if family == "x_over_log":
            q = _float(table, path, "q", required=True)
            if q <= 1.0:
                raise ScenarioError(f"{path}.q: must be > 1, got {q}")
            return tails.x_over_log(q, scale=scale)
        k = _float(table, path, "k", required=True)
        _positive(k, f"{path}.k")
        return tails.exponential(k, scale=scale)
    except tails.TailError as err:
        raise ScenarioError(f"{path}: {err}") from err


def _build_grid(raw: Mapping) -> Grid:
    table = _table(raw, "grid")
    _reject_unknown(table, "grid", ["half_width", "n_points"])
    half_width = _float(table, "grid", "half_width", required=True)
    _positive(half_width, "grid.half_width")
    n_points = _int(table, "grid", "n_points", required=True)
    if n_points < 16 or (n_points & (n_points - 1)) != 0:
        raise ScenarioError(f"grid.n_points: must be a power of two >= 16, got {n_points}")
    return Grid(half_width=half_width, n_points=n_points)


def _build_kernel(raw: Mapping, grid: Grid) -> tuple:
    """Returns (kernel, right_profile_or_None, shape_or_None)."""
    table = _table(raw, "kernel")
    family = table.get("family")
    try:
        if family in ANALYTIC_KERNELS:
            if family == "gaussian":
                _reject_unknown(table, "kernel", ["family", "sigma"])
                sigma = _float(table, "kernel", "sigma", required=True)
                _positive(sigma, "kernel.sigma")
                return gaussian_kernel(grid, sigma), None, None
            if family == "laplace":
                _reject_unknown(table, "kernel", ["family", "scale"])
                scale = _float(table, "kernel", "scale", required=True)
                _positive(scale, "kernel.scale")
                return laplace_kernel(grid, scale), None, None
            _reject_unknown(table, "kernel", ["family", "half_support"])
            half = _float(table, "kernel", "half_support", required=True)
            _positive(half, "kernel.half_support")
            if half > grid.half_width / 2.0:
                raise ScenarioError(
                    f"kernel.half_support: must be at most grid.half_width / 2, got {half}"
                )
            return uniform_kernel(grid, half), None, None
        profile = _build_profile(table, "kernel")
        two_sided = _bool(table, "kernel", "two_sided", default=True)
        if two_sided:
            shape = TwoSidedTail(profile, profile.reflected())
            return kernel_from_two_sided(grid, shape), profile, shape
        return kernel_from_profile(grid, profile, one_sided=True), profile, None
    except ScenarioError:
        raise
    except ValueError as err:
        raise ScenarioError(f"kernel: {err}") from err


def _build_model(raw: Mapping, kernel: Kernel) -> Model:
    table = _table(raw, "model")
    _reject_unknown(
        table, "model", ["kappa", "m", "theta", "reaction", "reaction_k", "reaction_gamma"]
    )
    kappa = _float(table, "model", "kappa", required=True)
    m = _float(table, "model", "m", required=True)
    theta = _float(table, "model", "theta", required=True)
    for name, value in (("kappa", kappa), ("m", m), ("theta", theta)):
        _positive(value, f"model.{name}")
    if kappa <= m:
        raise ScenarioError(f"model.kappa: growth requires kappa > m, got {kappa} <= {m}")
    reaction_name = _str(table, "model", "reaction", choices=("logistic", "cubic", "nonlocal"))
    beta = kappa - m
    if reaction_name == "logistic":
        reaction = local_logistic(beta, theta)
    elif reaction_name == "cubic":
        reaction = local_cubic(beta, theta)
    else:
        k = _float(table, "model", "reaction_k", default=1.0)
        if k < 1.0:
            raise ScenarioError(f"model.reaction_k: must be >= 1, got {k}")
        gamma = _float(table, "model", "reaction_gamma")
        if gamma is not None:
            _positive(gamma, "model.reaction_gamma")
        reaction = NonlocalLogisticReaction(a_minus=kernel, k=k, gamma=gamma)
    if reaction_name != "nonlocal" and (
        "reaction_k" in table or "reaction_gamma" in table
    ):
        raise ScenarioError("model.reaction_k: only valid for the nonlocal reaction")
    return Model(kappa=kappa, m=m, theta=theta, kernel=kernel, reaction=reaction)


def _build_initial(raw: Mapping, grid: Grid, theta: float) -> tuple:
    table = _table(raw, "initial")
    variant = _str(
        table, "initial", "variant", choices=("indicator", "step", "tail-profile", "custom")
    )
    try:
        return _build_initial_inner(table, variant, grid, theta, "initial"), variant
    except ScenarioError:
        raise
    except ValueError as err:
        raise ScenarioError(f"initial: {err}") from err


def _build_initial_inner(
    table: Mapping, variant: str, grid: Grid, theta: float, path: str
) -> GridFunction:
    if variant == "indicator":
        _reject_unknown(table, path, ["variant", "height", "lo", "hi"])
        height = _float(table, path, "height", required=True)
        lo = _float(table, path, "lo", required=True)
        hi = _float(table, path, "hi", required=True)
        if not (0.0 < height <= theta):
            raise ScenarioError(f"{path}.height: must lie in (0, theta], got {height}")
        if not lo < hi:
            raise ScenarioError(f"{path}.lo: needs lo < hi, got ({lo}, {hi})")
        return indicator_initial(grid, height, lo, hi)
    if variant == "step":
        _reject_unknown(table, path, ["variant", "height", "edge"])
        height = _float(table, path, "height", required=True)
        edge = _float(table, path, "edge", default=0.0)
        if not (0.0 < height <= theta):
            raise ScenarioError(f"{path}.height: must lie in (0, theta], got {height}")
        return step_initial(grid, height, edge)
    if variant == "tail-profile":
        profile = _build_profile(table, path)
        cap = _float(table, path, "cap", required=True)
        if not (0.0 < cap <= theta):
            raise ScenarioError(f"{path}.cap: must lie in (0, theta], got {cap}")
        return tail_initial(grid, profile, cap)
    _reject_unknown(table, path, ["variant", "values", "left_level"])
    values = _float_list(table, path, "values", required=True)
    if len(values) != grid.n_points:
        raise ScenarioError(
            f"{path}.values: expected {grid.n_points} entries, got {len(values)}"
        )
    arr = np.asarray(values, dtype=float)
    if float(arr.min()) < 0.0 or float(arr.max()) > theta:
        raise ScenarioError(f"{path}.values: entries must lie in [0, theta]")
    left_level = _float(table, path, "left_level", default=0.0)
    if left_level < 0.0:
        raise ScenarioError(f"{path}.left_level: must be >= 0, got {left_level}")
    return GridFunction(grid, arr, left_ext=Constant(left_level))


@dataclasses.dataclass(frozen=True)
class RunSpec:
    """Time-stepping request: horizon, step and snapshot bookkeeping."""

    T: float
    dt: float
    snapshot_times: tuple | None
    boundary_margin: float | None


def _build_run(raw: Mapping) -> RunSpec | None:
    table = _table(raw, "run", required=False)
    if table is None:
        return None
    _reject_unknown(table, "run", ["T", "dt", "snapshot_times", "boundary_margin"])
    T = _float(table, "run", "T", required=True)
    dt = _float(table, "run", "dt", required=True)
    _positive(T, "run.T")
    _positive(dt, "run.dt")
    snaps = _float_list(table, "run", "snapshot_times")
    if snaps is not None:
        for i, t in enumerate(snaps):
            if not (0.0 <= t <= T):
                raise ScenarioError(
                    f"run.snapshot_times[{i}]: must lie in [0, T], got {t}"
                )
    margin = _float(table, "run", "boundary_margin")
    if margin is not None and margin < 0.0:
        raise ScenarioError(f"run.boundary_margin: must be >= 0, got {margin}")
    return RunSpec(
        T=T,
        dt=dt,
        snapshot_times=tuple(snaps) if snaps is not None else None,
        boundary_margin=margin,
    )


@dataclasses.dataclass(frozen=True)
class Diagnostic:
    """One validated diagnostic request: its kind plus normalized params."""

    kind: str
    params: Mapping


def _build_diagnostics(raw: Mapping, grid: Grid, theta: float) -> tuple:
    entries = raw.get("diagnostics", [])
    if not isinstance(entries, list):
        raise ScenarioError("diagnostics: expected an array of tables")
    out = []
    for i, entry in enumerate(entries):
        path = f"diagnostics[{i}]"
        if not isinstance(entry, Mapping):
            raise ScenarioError(f"{path}: expected a table")
        kind = _str(entry, path, "kind", choices=tuple(DIAGNOSTIC_FIELDS))
        _reject_unknown(entry, path, ["kind", *DIAGNOSTIC_FIELDS[kind]])
        params: dict = {}
        if kind == "frontlaw":
            params["t_min"] = _float(entry, path, "t_min", default=1.0)
            params["t_max"] = _float(entry, path, "t_max", default=50.0)
            if not 0.0 < params["t_min"] < params["t_max"]:
                raise ScenarioError(f"{path}.t_min: needs 0 < t_min < t_max")
            params["n_samples"] = _int(entry, path, "n_samples", default=12)
            if params["n_samples"] < 2:
                raise ScenarioError(f"{path}.n_samples: must be >= 2")
            params["k"] = _float(entry, path, "k", default=1.0)
            _positive(params["k"], f"{path}.k")
            params["tol"] = _float(entry, path, "tol", default=1e-8)
            _positive(params["tol"], f"{path}.tol")
        elif kind == "kesten":
            params["delta"] = _float(entry, path, "delta", required=True)
            if not (0.0 < params["delta"] < 1.0):
                raise ScenarioError(f"{path}.delta: must lie in (0, 1)")
            params["n_max"] = _int(entry, path, "n_max", default=4)
            if not (2 <= params["n_max"] <= 8):
                raise ScenarioError(f"{path}.n_max: must lie in [2, 8]")
            params["distribution"] = _bool(entry, path, "distribution", default=False)
        elif kind == "subsolution":
            params["lam"] = _float(entry, path, "lam", required=True)
            params["eps"] = _float(entry, path, "eps", required=True)
            params["delta"] = _float(entry, path, "delta", required=True)
            params["times"] = tuple(_float_list(entry, path, "times", required=True))
            tol = _float(entry, path, "tol")
            if tol is not None:
                _positive(tol, f"{path}.tol")
            params["tol"] = tol
        elif kind == "sandwich":
            params["level"] = _float(entry, path, "level", required=True)
            if not (0.0 < params["level"] < theta):
                raise ScenarioError(f"{path}.level: must lie in (0, theta)")
            params["eps"] = _float(entry, path, "eps", required=True)
            if not (0.0 < params["eps"] < 1.0):
                raise ScenarioError(f"{path}.eps: must lie in (0, 1)")
            times = _float_list(entry, path, "times")
            params["times"] = tuple(times) if times is not None else None
            law_table = entry.get("law")
            if law_table is None:
                params["law"] = None
            elif isinstance(law_table, Mapping):
                params["law"] = _build_profile(law_table, f"{path}.law")
            else:
                raise ScenarioError(f"{path}.law: expected a tail-profile table")
        elif kind == "envelope":
            params["delta"] = _float(entry, path, "delta", required=True)
            _positive(params["delta"], f"{path}.delta")
            params["times"] = tuple(_float_list(entry, path, "times", required=True))
            params["x_min"] = _float(entry, path, "x_min", required=True)
            tail_table = entry.get("tail")
            if not isinstance(tail_table, Mapping):
                raise ScenarioError(f"{path}.tail: required tail-profile table is missing")
            params["tail"] = _build_profile(tail_table, f"{path}.tail")
        else:  # comparison
            upper = entry.get("upper", "saturated")
            if upper == "saturated":
                params["upper"] = "saturated"
            elif isinstance(upper, Mapping):
                variant = _str(
                    upper,
                    f"{path}.upper",
                    "variant",
                    choices=("indicator", "step", "tail-profile", "custom"),
                )
                try:
                    params["upper"] = _build_initial_inner(upper, variant, grid, theta, f"{path}.upper")
                except ScenarioError:
                    raise
                except ValueError as err:
                    raise ScenarioError(f"{path}.upper: {err}") from err
            else:
                raise ScenarioError(
                    f"{path}.upper: expected 'saturated' or an initial-condition table"
                )
            params["tol"] = _float(entry, path, "tol", default=1e-9)
            _positive(params["tol"], f"{path}.tol")
        out.append(Diagnostic(kind=kind, params=params))
    return tuple(out)


# ---------------------------------------------------------------------- #
# scenario
# ---------------------------------------------------------------------- #
@dataclasses.dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario: built objects plus the raw config echo."""

    name: str
    raw: Mapping
    grid: Grid
    model: Model
    kernel_profile: TailProfile | None
    kernel_shape: TwoSidedTail | None
    initial: GridFunction
    initial_variant: str
    run: RunSpec | None
    diagnostics: tuple

    def needs_trajectory(self) -> bool:
        return any(d.kind in ("sandwich", "comparison") for d in self.diagnostics)


_TOP_LEVEL = ("name", "grid", "model", "kernel", "initial", "run", "diagnostics")


def parse_scenario(raw: Mapping, *, name: str = "scenario") -> Scenario:
    """Validate a parsed config mapping and build its objects."""
    _reject_unknown(raw, "config", _TOP_LEVEL)
    if "name" in raw:
        if not isinstance(raw["name"], str) or not raw["name"]:
            raise ScenarioError("name: expected a non-empty string")
        name = raw["name"]
    grid = _build_grid(raw)
    kernel, kernel_profile, kernel_shape = _build_kernel(raw, grid)
    model = _build_model(raw, kernel)
    initial, variant = _build_initial(raw, grid, model.theta)
    run = _build_run(raw)
    diagnostics = _build_diagnostics(raw, grid, model.theta)
    scenario = Scenario(
        name=name,
        raw=raw,
        grid=grid,
        model=model,
        kernel_profile=kernel_profile,
        kernel_shape=kernel_shape,
        initial=initial,
        initial_variant=variant,
        run=run,
        diagnostics=diagnostics,
    )
    _check_cross_references(scenario)
    return scenario


def _check_cross_references(scn: Scenario) -> None:
    needs_tail = [d.kind for d in scn.diagnostics if d.kind in ("frontlaw", "kesten", "sandwich", "subsolution")]
    if needs_tail and scn.kernel_profile is None:
        raise ScenarioError(
            f"diagnostics: {needs_tail[0]} requires a tail-family kernel, "
            f"got an analytic one"
        )
    needs_run = [d.kind for d in scn.diagnostics if d.kind in ("sandwich", "comparison")]
    if needs_run and scn.run is None:
        raise ScenarioError(f"run: required by the {needs_run[0]} diagnostic")
    for i, diag in enumerate(scn.diagnostics):
        if diag.kind == "sandwich" and diag.params["times"] is not None:
            declared = scn.run.snapshot_times or ()
            for t in diag.params["times"]:
                if t not in declared:
                    raise ScenarioError(
                        f"diagnostics[{i}].times: {t} is not in run.snapshot_times"
                    )
        if diag.kind == "subsolution":
            lam, eps, delta = (diag.params[k] for k in ("lam", "eps", "delta"))
            beta = scn.model.beta
            if not (0.0 < eps < 1.0):
                raise ScenarioError(f"diagnostics[{i}].eps: must lie in (0, 1)")
            if not (0.0 < delta < eps * beta):
                raise ScenarioError(
                    f"diagnostics[{i}].delta: must lie in (0, eps * beta) "
                    f"= (0, {eps * beta:.6g})"
                )
            if not (0.0 < lam < scn.model.theta):
                raise ScenarioError(f"diagnostics[{i}].lam: must lie in (0, theta)")


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file."""
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError as err:
        raise ScenarioError(f"config: file not found: {p}") from err
    except _toml.TOMLDecodeError as err:
        raise ScenarioError(f"config: {p}: {err}") from err
    return parse_scenario(raw, name=p.stem)
