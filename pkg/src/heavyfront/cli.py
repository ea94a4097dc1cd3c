"""Command-line runner: scenarios, parameter sweeps, and assumption checks.

``heavyfront simulate CONFIG --out DIR`` executes every diagnostic a
scenario declares and writes a deterministic artifact tree::

    DIR/
      manifest.json      config echo, versions, per-file SHA-256, status
      snapshots.csv      solution dumps (binary + index when large)
      fronts.csv         sandwich diagnostic rows
      subsolution.csv    barrier residual rows
      envelope.csv       linear-bound rows
      kesten.csv         convolution-power ratio rows
      frontlaw.csv       measured-vs-closed-form front positions
      comparison.csv     order-preservation summary
      *.png              companion figures (suppress with --no-plot)

Exit codes: 0 all diagnostics pass, 1 a diagnostic fails or the run hits a
runtime error (recorded in the manifest), 2 usage or config validation
errors.  Reruns of the same config produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .analysis import (
    AnalysisError,
    FrontTrace,
    SubSolution,
    comparison_test,
    front_trace,
    sandwich_check,
    verify_subsolution,
    verify_upper_envelope,
)
from .convolution import (
    Constant,
    GridFunction,
    kesten_density_check,
    kesten_distribution_check,
    tail_sum,
)
from .dynamics import DomainExhausted, DynamicsError, evolve
from .frontlaw import (
    FrontLaw,
    FrontLawError,
    check_linear_shift,
    check_superlinear,
    closed_form_for_profile,
)
from .reports import (
    file_entry,
    render_fronts_png,
    render_lines_png,
    write_csv,
    write_json,
    write_manifest,
    write_snapshots,
)
from .scenario import Diagnostic, Scenario, ScenarioError, load_scenario
from .tails import Side, TwoSidedTail, classify_tail

__all__ = [
    "run_scenario",
    "run_assumption_checks",
    "run_sweep",
    "RunOutcome",
    "DiagnosticOutcome",
    "main",
]


def _versions() -> dict:
    import scipy

    from . import __version__

    return {
        "heavyfront": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }


@dataclasses.dataclass(frozen=True)
class DiagnosticOutcome:
    """Result of one diagnostic: verdict, headline metrics, failure text."""

    kind: str
    status: str  # "pass" | "fail"
    metrics: Mapping
    message: str | None = None


@dataclasses.dataclass(frozen=True)
class RunOutcome:
    """Result of one scenario run; ``exit_code`` follows the CLI contract."""

    name: str
    status: str  # "pass" | "fail" | "error"
    exit_code: int
    out_dir: Path
    diagnostics: tuple
    error: Mapping | None = None


# ---------------------------------------------------------------------- #
# diagnostic runners
# ---------------------------------------------------------------------- #
def _law_for(scn: Scenario, *, right_only: bool) -> FrontLaw:
    if right_only or scn.kernel_shape is None:
        return FrontLaw(scn.kernel_profile, scn.model.beta)
    return FrontLaw(scn.kernel_shape, scn.model.beta)


def _run_frontlaw(scn: Scenario, params: Mapping, out_dir: Path, plot: bool):
    law = _law_for(scn, right_only=False)
    t_hi = params["t_max"]
    t_lo = max(params["t_min"], law.tau * 1.001 + 1e-9)
    if t_lo >= t_hi:
        raise AnalysisError(
            f"time window [{params['t_min']}, {t_hi}] sits below the law's "
            f"earliest valid time {law.tau:.6g}"
        )
    ts = np.geomspace(t_lo, t_hi, params["n_samples"])
    rows = []
    rels = []
    for t in ts:
        t = float(t)
        pos = law.position(t, Side.RIGHT)
        try:
            cf = closed_form_for_profile(scn.kernel_profile, scn.model.beta, t)
            cf_val, asym = cf.value, cf.asymptotic_only
        except FrontLawError:
            cf_val, asym = math.nan, True
        if not asym and math.isfinite(cf_val) and cf_val != 0.0:
            rel = abs(pos - cf_val) / abs(cf_val)
            rels.append(rel)
        else:
            rel = math.nan
        rows.append((t, pos, cf_val, rel, asym))
    sup = check_superlinear(law, params["k"], max(1.0e3, t_hi))
    closed_ok = (max(rels) <= params["tol"]) if rels else True
    files = [write_csv(out_dir / "frontlaw.csv",
                       ("t", "position", "closed_form", "rel_error", "asymptotic"), rows)]
    if plot:
        curves = [("inverted tail law", [r[0] for r in rows], [r[1] for r in rows])]
        exact = [r for r in rows if not r[4]]
        if exact:
            curves.append(
                ("closed form", [r[0] for r in exact], [r[2] for r in exact],
                 {"linestyle": "--"})
            )
        files.append(
            render_lines_png(out_dir / "frontlaw.png", curves, xlabel="t",
                             ylabel="front position", title="front law", logy=True)
        )
    status = "pass" if (closed_ok and sup.passed) else "fail"
    metrics = {
        "max_rel_error": max(rels) if rels else math.nan,
        "superlinear": sup.passed,
        "first_positive_t": sup.first_positive_t,
        "tau": law.tau,
    }
    return DiagnosticOutcome("frontlaw", status, metrics), files


def _run_kesten(scn: Scenario, params: Mapping, out_dir: Path, plot: bool):
    density = scn.model.kernel.density
    res = kesten_density_check(density, params["delta"], params["n_max"])
    ns = sorted(res.ratios)
    header = ("x", *(f"ratio_n{n}" for n in ns))
    rows = [
        (res.window_x[i], *(res.ratios[n][i] for n in ns))
        for i in range(len(res.window_x))
    ]
    files = [write_csv(out_dir / "kesten.csv", header, rows)]
    passed = (not res.precondition_violated) and math.isfinite(res.C_emp)
    metrics = {
        "C_emp": res.C_emp,
        "x_emp": res.x_emp,
        "mass": res.mass,
        "long_tailed": res.long_tailed.value,
        "subexponential": res.subexp_verdict.value,
        "unbounded_growth": res.unbounded_growth,
        "limit_estimates": {str(n): res.limit_estimates[n] for n in res.limit_estimates},
        "limit_targets": {str(n): res.limit_targets[n] for n in res.limit_targets},
    }
    if params["distribution"]:
        dist = kesten_distribution_check(
            tail_sum(density), params["delta"], n_max=params["n_max"]
        )
        files.append(
            write_csv(
                out_dir / "kesten_distribution.csv",
                ("n", "C_n"),
                [(n, dist.per_n[n]) for n in sorted(dist.per_n)],
            )
        )
        metrics["distribution_C_emp"] = dist.C_emp
        passed = passed and dist.passed
    if plot:
        curves = [
            (f"n = {n}", res.window_x, res.ratios[n]) for n in ns
        ]
        files.append(
            render_lines_png(out_dir / "kesten.png", curves, xlabel="x",
                             ylabel="power ratio", title="convolution-power domination")
        )
    status = "pass" if passed else "fail"
    return DiagnosticOutcome("kesten", status, metrics), files


def _run_subsolution(scn: Scenario, params: Mapping, out_dir: Path, plot: bool, seed: int):
    profile = scn.kernel_profile
    shape = scn.kernel_shape or TwoSidedTail(profile, profile.reflected())
    sub = SubSolution(
        shape=shape,
        beta=scn.model.beta,
        lam=params["lam"],
        eps=params["eps"],
        delta=params["delta"],
    )
    res = verify_subsolution(
        sub, scn.model, params["times"], scn.grid, tol=params["tol"], seed=seed
    )
    files = [
        write_csv(
            out_dir / "subsolution.csv",
            ("t", "max_residual", "regime"),
            [(r.t, r.max_residual, r.regime) for r in res.rows],
        )
    ]
    if plot:
        ts = [p[0] for p in res.per_time]
        curves = [
            ("shifted-linear residual", ts, [abs(p[1]) + 1e-300 for p in res.per_time]),
            ("nonlinear residual", ts, [abs(p[2]) + 1e-300 for p in res.per_time]),
            ("tolerance", ts, [res.tol] * len(ts), {"linestyle": ":"}),
        ]
        files.append(
            render_lines_png(out_dir / "subsolution.png", curves, xlabel="t",
                             ylabel="|residual|", title="barrier residuals", logy=True)
        )
    metrics = {
        "t0_emp": res.t0_emp,
        "max_residual": res.max_residual,
        "max_nonlinear": res.max_nonlinear,
        "tol": res.tol,
    }
    return DiagnosticOutcome("subsolution", "pass", metrics), files


def _filter_trace(trace: FrontTrace, keep: Sequence[float]) -> FrontTrace:
    idx = [i for i, t in enumerate(trace.times) if t in keep]
    return FrontTrace(
        level=trace.level,
        grid=trace.grid,
        times=tuple(trace.times[i] for i in idx),
        right=tuple(trace.right[i] for i in idx),
        left=tuple(trace.left[i] for i in idx),
        right_markers=tuple(trace.right_markers[i] for i in idx),
        left_markers=tuple(trace.left_markers[i] for i in idx),
    )


def _log_front_slope(rows) -> float:
    pts = [
        (r.t, math.log(r.x_right))
        for r in rows
        if r.verdict == "pass" and r.t > 0.0
        and math.isfinite(r.x_right) and r.x_right > 0.0
    ]
    if len(pts) < 2:
        return math.nan
    ts = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    return float(np.polyfit(ts, ys, 1)[0])


def _run_sandwich(scn: Scenario, params: Mapping, traj, out_dir: Path, plot: bool):
    if params["law"] is not None:
        law = FrontLaw(params["law"], scn.model.beta)
    else:
        plateau_left = (
            isinstance(scn.initial.left_ext, Constant)
            and scn.initial.left_ext.level > 0.0
        )
        law = _law_for(scn, right_only=plateau_left)
    trace = front_trace(traj, params["level"])
    keep = params["times"] if params["times"] is not None else tuple(
        t for t in trace.times if t > 0.0
    )
    report = sandwich_check(_filter_trace(trace, keep), law, params["eps"])
    files = [
        write_csv(
            out_dir / "fronts.csv",
            ("t", "x_right", "x_left", "r_lower", "r_upper", "verdict"),
            [(r.t, r.x_right, r.x_left, r.r_lower, r.r_upper, r.verdict) for r in report.rows],
        )
    ]
    if plot and report.rows:
        files.append(
            render_fronts_png(out_dir / "fronts.png", report.rows, "front sandwich")
        )
    metrics = {
        "engaged_at": report.engaged_at,
        "violations": len(report.violations),
        "log_front_slope": _log_front_slope(report.rows),
    }
    status = "pass" if report.passed else "fail"
    return DiagnosticOutcome("sandwich", status, metrics), files


def _run_envelope(scn: Scenario, params: Mapping, out_dir: Path, plot: bool):
    res = verify_upper_envelope(
        scn.model,
        scn.initial,
        params["tail"],
        params["delta"],
        params["times"],
        params["x_min"],
    )
    files = [
        write_csv(
            out_dir / "envelope.csv",
            ("t", "x", "w", "bound", "pass"),
            [(r.t, r.x, r.w, r.bound, r.ok) for r in res.rows],
        )
    ]
    if plot and res.rows:
        t_last = res.rows[-1].t
        last = [r for r in res.rows if r.t == t_last and r.w > 0.0 and r.bound > 0.0]
        if last:
            curves = [
                ("linear solution", [r.x for r in last], [r.w for r in last]),
                ("growth envelope", [r.x for r in last], [r.bound for r in last],
                 {"linestyle": "--"}),
            ]
            files.append(
                render_lines_png(out_dir / "envelope.png", curves, xlabel="x",
                                 ylabel="value", title=f"envelope at t = {t_last:g}",
                                 logy=True)
            )
    metrics = {
        "c_emp": res.c_emp,
        "rate": res.rate,
        "x_min": res.x_min,
        "violations": len(res.violations),
    }
    status = "pass" if res.passed else "fail"
    return DiagnosticOutcome("envelope", status, metrics), files


def _run_comparison(scn: Scenario, params: Mapping, out_dir: Path, plot: bool):
    run = scn.run
    if params["upper"] == "saturated":
        theta = scn.model.theta
        v0 = GridFunction(
            scn.grid,
            np.full(scn.grid.n_points, theta),
            left_ext=Constant(theta),
        )
        margin = 0.0
    else:
        v0 = params["upper"]
        margin = run.boundary_margin
    res = comparison_test(
        scn.model,
        scn.initial,
        v0,
        run.T,
        run.dt,
        snapshot_times=run.snapshot_times,
        tol=params["tol"],
        boundary_margin=margin,
    )
    status = "pass" if res.passed else "fail"
    files = [
        write_csv(
            out_dir / "comparison.csv",
            ("max_violation", "time", "location", "tol", "verdict"),
            [(res.max_violation, res.time, res.location, res.tol, status)],
        )
    ]
    metrics = {
        "max_violation": res.max_violation,
        "time": res.time,
        "location": res.location,
    }
    return DiagnosticOutcome("comparison", status, metrics), files


# ---------------------------------------------------------------------- #
# scenario execution
# ---------------------------------------------------------------------- #
def run_scenario(
    scn: Scenario,
    out_dir: Path | str,
    *,
    seed: int = 0,
    threads: int = 1,
    plot: bool = True,
) -> RunOutcome:
    """Execute every diagnostic of a validated scenario into ``out_dir``.

    Runtime failures (domain exhaustion, invariant violations) are recorded
    in the manifest's ``error`` field with partial artifacts kept; the
    outcome then carries exit code 1.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list = []
    outcomes: list = []
    error: dict | None = None
    traj = None

    if scn.run is not None:
        try:
            traj = evolve(
                scn.model,
                scn.initial,
                scn.run.T,
                scn.run.dt,
                snapshot_times=scn.run.snapshot_times,
                boundary_margin=scn.run.boundary_margin,
            )
        except DomainExhausted as err:
            error = {"stage": "evolve", "message": str(err)}
            traj = err.trajectory  # partial snapshots are still written
        except DynamicsError as err:
            error = {"stage": "evolve", "message": str(err)}
        if traj is not None and len(traj.times) > 0:
            files.extend(write_snapshots(out, traj.times, scn.grid, traj.fields))
            if plot:
                curves = [
                    (f"t = {t:g}", scn.grid.x, f.values)
                    for t, f in zip(traj.times, traj.fields)
                ]
                files.append(
                    render_lines_png(out / "snapshots.png", curves, xlabel="x",
                                     ylabel="u", title=f"{scn.name}: solution snapshots")
                )

    for diag in scn.diagnostics:
        if error is not None:
            break
        try:
            if diag.kind == "frontlaw":
                outcome, dfiles = _run_frontlaw(scn, diag.params, out, plot)
            elif diag.kind == "kesten":
                outcome, dfiles = _run_kesten(scn, diag.params, out, plot)
            elif diag.kind == "subsolution":
                outcome, dfiles = _run_subsolution(scn, diag.params, out, plot, seed)
            elif diag.kind == "sandwich":
                outcome, dfiles = _run_sandwich(scn, diag.params, traj, out, plot)
            elif diag.kind == "envelope":
                outcome, dfiles = _run_envelope(scn, diag.params, out, plot)
            else:
                outcome, dfiles = _run_comparison(scn, diag.params, out, plot)
        except ValueError as err:
            # Library-level check failures (residual curves, preconditions,
            # domain exhaustion inside comparison runs) are verdicts, not
            # crashes: the diagnostic fails and the message is kept.
            outcome, dfiles = (
                DiagnosticOutcome(diag.kind, "fail", {}, str(err)),
                [],
            )
        outcomes.append(outcome)
        files.extend(dfiles)

    if error is not None:
        status = "error"
    elif any(o.status != "pass" for o in outcomes):
        status = "fail"
    else:
        status = "pass"

    manifest = {
        "name": scn.name,
        "config": scn.raw,
        "versions": _versions(),
        "seed": seed,
        "threads": threads,
        "status": status,
        "error": error,
        "diagnostics": [dataclasses.asdict(o) for o in outcomes],
        "files": sorted(
            (file_entry(p, out) for p in dict.fromkeys(files)),
            key=lambda e: e["name"],
        ),
    }
    write_manifest(out, manifest)
    exit_code = 0 if status == "pass" else 1
    return RunOutcome(
        name=scn.name,
        status=status,
        exit_code=exit_code,
        out_dir=out,
        diagnostics=tuple(outcomes),
        error=error,
    )


# ---------------------------------------------------------------------- #
# assumption checks
# ---------------------------------------------------------------------- #
def run_assumption_checks(
    scn: Scenario,
    out_dir: Path | str,
    *,
    plot: bool = True,
    horizon: float = 1.0e3,
) -> RunOutcome:
    """Classify the kernel tail and check the acceleration prerequisites.

    Passes when the tail is long-tailed, the front escapes every linear
    trajectory, and the shrunken-time front eventually leads by a growing
    linear shift; the light-tail reference family fails the escape check.
    """
    if scn.kernel_profile is None:
        raise ScenarioError("kernel: assumption checks require a tail-family kernel")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = scn.kernel_profile
    law = _law_for(scn, right_only=False)
    cls = classify_tail(profile)
    sup = check_superlinear(law, 1.0, horizon)
    rows = [
        ("long_tailed", cls.long_tailed.value, math.nan),
        ("tail_decreasing", cls.tail_decreasing.value, math.nan),
        ("tail_convex", cls.tail_convex.value, math.nan),
        ("tail_log_convex", cls.tail_log_convex.value, math.nan),
        (
            "superlinear_escape",
            "true" if sup.passed else "false",
            sup.first_positive_t if sup.first_positive_t is not None else math.nan,
        ),
    ]
    shift_ok = False
    try:
        shift = check_linear_shift(law, 0.1, 0.2, 1.0, horizon=horizon)
        shift_ok = shift.samples[-1][1] > 0.0
        rows.append(("linear_shift", "true" if shift_ok else "false", shift.tau_emp))
    except FrontLawError as err:
        rows.append(("linear_shift", f"error: {err}", math.nan))
    files = [write_csv(out / "assumptions.csv", ("check", "verdict", "value"), rows)]
    if plot and sup.samples:
        curves = [
            ("r(t) - k t", [s[0] for s in sup.samples], [s[1] for s in sup.samples])
        ]
        files.append(
            render_lines_png(out / "assumptions.png", curves, xlabel="t",
                             ylabel="gap", title="escape from linear trajectories")
        )
    passed = sup.passed and (not cls.long_tailed.is_false) and shift_ok
    status = "pass" if passed else "fail"
    outcome = DiagnosticOutcome(
        "assumptions",
        status,
        {
            "long_tailed": cls.long_tailed.value,
            "superlinear": sup.passed,
            "linear_shift": shift_ok,
        },
    )
    manifest = {
        "name": scn.name,
        "config": scn.raw,
        "versions": _versions(),
        "seed": 0,
        "threads": 1,
        "status": status,
        "error": None,
        "diagnostics": [dataclasses.asdict(outcome)],
        "files": sorted(
            (file_entry(p, out) for p in files), key=lambda e: e["name"]
        ),
    }
    write_manifest(out, manifest)
    return RunOutcome(
        name=scn.name,
        status=status,
        exit_code=0 if passed else 1,
        out_dir=out,
        diagnostics=(outcome,),
    )


# ---------------------------------------------------------------------- #
# sweeps
# ---------------------------------------------------------------------- #
#: Per-kind metric names promoted into the sweep summary table.
_HEADLINE = {
    "frontlaw": ("max_rel_error",),
    "kesten": ("C_emp",),
    "subsolution": ("t0_emp", "max_residual"),
    "sandwich": ("engaged_at", "log_front_slope", "violations"),
    "envelope": ("c_emp",),
    "comparison": ("max_violation",),
}


def _headline_metrics(outcomes: Sequence[DiagnosticOutcome]) -> dict:
    seen: dict = {}
    metrics: dict = {}
    for outcome in outcomes:
        idx = seen.get(outcome.kind, 0)
        seen[outcome.kind] = idx + 1
        prefix = outcome.kind if idx == 0 else f"{outcome.kind}{idx + 1}"
        for key in _HEADLINE.get(outcome.kind, ()):
            if key in outcome.metrics:
                metrics[f"{prefix}_{key}"] = outcome.metrics[key]
    return metrics


def _set_dotted(target: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = target
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            node = node[int(part)]
            continue
        if part not in node or not isinstance(node[part], (dict, list)):
            node[part] = {}
        node = node[part]
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def _apply_overrides(base: Mapping, overrides: Mapping) -> dict:
    raw = copy.deepcopy(dict(base))
    for dotted in sorted(overrides):
        _set_dotted(raw, dotted, overrides[dotted])
    return raw


def _sweep_member_task(payload: tuple) -> dict:
    name, raw, out_dir, seed, plot = payload
    try:
        scn = _parse_member(raw, name)
    except ScenarioError as err:
        return {"name": name, "status": "invalid", "message": str(err), "metrics": {}}
    try:
        outcome = run_scenario(scn, Path(out_dir), seed=seed, threads=1, plot=plot)
    except Exception as err:  # keep the sweep alive; the member is reported
        return {"name": name, "status": "error", "message": str(err), "metrics": {}}
    return {
        "name": name,
        "status": outcome.status,
        "message": outcome.error["message"] if outcome.error else None,
        "metrics": _headline_metrics(outcome.diagnostics),
    }


def _parse_member(raw: Mapping, name: str) -> Scenario:
    from .scenario import parse_scenario

    return parse_scenario(raw, name=name)


def _load_sweep(path: Path) -> tuple:
    try:
        import tomllib as _toml  # Python 3.11+
    except ModuleNotFoundError:  # pragma: no cover - version-dependent import
        import tomli as _toml
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError as err:
        raise ScenarioError(f"config: file not found: {path}") from err
    except _toml.TOMLDecodeError as err:
        raise ScenarioError(f"config: {path}: {err}") from err
    for key in raw:
        if key not in ("name", "base", "members"):
            raise ScenarioError(f"{key}: unknown field (allowed: name, base, members)")
    name = raw.get("name", path.stem)
    if not isinstance(name, str) or not name:
        raise ScenarioError("name: expected a non-empty string")
    base = raw.get("base")
    if not isinstance(base, Mapping):
        raise ScenarioError("base: required scenario table is missing")
    members = raw.get("members")
    if not isinstance(members, list) or not members:
        raise ScenarioError("members: a sweep needs at least one member")
    parsed = []
    seen = set()
    for i, member in enumerate(members):
        if not isinstance(member, Mapping):
            raise ScenarioError(f"members[{i}]: expected a table")
        for key in member:
            if key not in ("name", "overrides"):
                raise ScenarioError(f"members[{i}].{key}: unknown field")
        mname = member.get("name")
        if not isinstance(mname, str) or not mname:
            raise ScenarioError(f"members[{i}].name: expected a non-empty string")
        if mname in seen:
            raise ScenarioError(f"members[{i}].name: duplicate member name {mname!r}")
        seen.add(mname)
        overrides = member.get("overrides", {})
        if not isinstance(overrides, Mapping):
            raise ScenarioError(f"members[{i}].overrides: expected a table")
        parsed.append((mname, dict(overrides)))
    return name, dict(base), parsed


def run_sweep(
    config_path: Path | str,
    out_dir: Path | str,
    *,
    seed: int = 0,
    threads: int = 1,
    plot: bool = True,
) -> int:
    """Run every member scenario; write ``summary.csv`` and ``summary.json``.

    Member failures (invalid configs included) do not stop the sweep: the
    remaining members still run and partial artifacts are kept, but the
    sweep exits 1.
    """
    sweep_name, base, members = _load_sweep(Path(config_path))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payloads = []
    for mname, overrides in members:
        raw = _apply_overrides(base, overrides)
        payloads.append((mname, raw, str(out / mname), seed, plot))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_member_task, payloads))
    else:
        results = [_sweep_member_task(p) for p in payloads]

    metric_keys = sorted({k for r in results for k in r["metrics"]})
    header = ("name", "status", *metric_keys)
    rows = [
        (r["name"], r["status"], *(r["metrics"].get(k) for k in metric_keys))
        for r in results
    ]
    write_csv(out / "summary.csv", header, rows)
    passed = all(r["status"] == "pass" for r in results)
    summary = {
        "sweep": sweep_name,
        "passed": passed,
        "members": results,
        "versions": _versions(),
    }
    write_json(out / "summary.json", summary)
    for r in results:
        print(f"{r['name']}: {r['status']}")
    return 0 if passed else 1


# ---------------------------------------------------------------------- #
# argument parsing and dispatch
# ---------------------------------------------------------------------- #
_SINGLE_DIAGNOSTIC = {
    "frontlaw": "frontlaw",
    "kesten": "kesten",
    "subsol": "subsolution",
    "sandwich": "sandwich",
}

#: Kinds that run without a time integration (``[run]`` is dropped).
_NO_TRAJECTORY = ("frontlaw", "kesten", "subsolution")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heavyfront",
        description="Accelerated-front laboratory: run scenarios and diagnostics.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, help="scenario TOML file")
    common.add_argument("--out", type=Path, default=Path("heavyfront-out"),
                        help="output directory (default: heavyfront-out)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes for sweeps (default: 1)")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomized probe fields (default: 0)")
    common.add_argument("--no-plot", action="store_true",
                        help="skip figure rendering")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common],
                   help="run every diagnostic the scenario declares")
    sub.add_parser("frontlaw", parents=[common],
                   help="run only the front-law diagnostic")
    sub.add_parser("kesten", parents=[common],
                   help="run only the convolution-power diagnostic")
    sub.add_parser("subsol", parents=[common],
                   help="run only the barrier-residual diagnostic")
    sub.add_parser("sandwich", parents=[common],
                   help="run only the front-sandwich diagnostic")
    sub.add_parser("sweep", parents=[common],
                   help="run a sweep config over member scenarios")
    sub.add_parser("check-assumptions", parents=[common],
                   help="classify the kernel tail and test acceleration prerequisites")
    return parser


def _report(outcome: RunOutcome) -> None:
    for diag in outcome.diagnostics:
        line = f"{diag.kind}: {diag.status}"
        if diag.message:
            line += f" ({diag.message})"
        print(line)
    if outcome.error is not None:
        print(f"error: {outcome.error['message']}", file=sys.stderr)
    print(f"{outcome.name}: {outcome.status} -> {outcome.out_dir / 'manifest.json'}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    plot = not args.no_plot
    try:
        if args.command == "sweep":
            return run_sweep(
                args.config, args.out, seed=args.seed, threads=args.threads, plot=plot
            )
        scn = load_scenario(args.config)
        if args.command == "check-assumptions":
            outcome = run_assumption_checks(scn, args.out, plot=plot)
        else:
            if args.command in _SINGLE_DIAGNOSTIC:
                kind = _SINGLE_DIAGNOSTIC[args.command]
                kept = tuple(d for d in scn.diagnostics if d.kind == kind)
                if not kept:
                    print(
                        f"error: config defines no {kind} diagnostic", file=sys.stderr
                    )
                    return 2
                run = None if kind in _NO_TRAJECTORY else scn.run
                scn = dataclasses.replace(scn, diagnostics=kept, run=run)
            outcome = run_scenario(
                scn, args.out, seed=args.seed, threads=args.threads, plot=plot
            )
        _report(outcome)
        return outcome.exit_code
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover - module execution hook
    sys.exit(main())
