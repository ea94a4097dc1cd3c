"""Tests for heavyfront.analysis: level lines, sandwich, barriers, envelopes.

Independent routes used here:
  * level-line crossings -> hand-computed positions on ramps, steps and
    double bumps;
  * barrier plateau edges -> the defining identity b(r) e^{rate t} = 1
    evaluated directly on the tail profile;
  * plateau-height bound lambda0 -> closed forms delta*theta/beta
    (proportional saturation) and theta*sqrt(delta/beta) (quadratic);
  * envelope and residual signs -> full numeric evaluation with frozen
    outcomes from an independent dry run.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from heavyfront import tails
from heavyfront.analysis import (
    AnalysisError,
    BELOW_LEVEL,
    BEYOND_GRID,
    ComparisonResult,
    FrontTrace,
    LevelSetError,
    SubSolution,
    build_subsolution,
    comparison_test,
    front_trace,
    lambda0_for,
    level_set_position,
    sandwich_check,
    verify_subsolution,
    verify_upper_envelope,
)
from heavyfront.convolution import (
    Constant,
    Grid,
    GridFunction,
    gaussian_kernel,
    kernel_from_two_sided,
)
from heavyfront.dynamics import (
    Model,
    NonlocalLogisticReaction,
    apply_G,
    evolve,
    indicator_initial,
    local_cubic,
    local_logistic,
    step_initial,
)
from heavyfront.frontlaw import FrontLaw
from heavyfront.tails import BoundedBelow, Side, TwoSidedTail


def power_shape() -> TwoSidedTail:
    p = tails.power(3.0, shift=1.0)
    return TwoSidedTail(p, p.reflected())


def power_model(grid: Grid) -> Model:
    kern = kernel_from_two_sided(grid, power_shape())
    return Model(
        kappa=2.0,
        m=1.0,
        theta=1.0,
        kernel=kern,
        reaction=local_logistic(1.0, 1.0),
    )


def gaussian_model(grid: Grid, reaction=None) -> Model:
    return Model(
        kappa=2.0,
        m=1.0,
        theta=1.0,
        kernel=gaussian_kernel(grid, 1.0),
        reaction=reaction if reaction is not None else local_logistic(1.0, 1.0),
    )


def two_sided_samples(grid: Grid, profile: tails.TailProfile) -> GridFunction:
    """Pointwise samples of a symmetric two-sided tail with matching exts."""
    left = profile.reflected()
    x = grid.x
    vals = np.where(
        x >= 0.0,
        profile.value(np.maximum(x, 0.0)),
        left.value(np.minimum(x, 0.0)),
    )
    return GridFunction(grid, vals, right_ext=profile, left_ext=left)


# ---------------------------------------------------------------------- #
# level-line extraction
# ---------------------------------------------------------------------- #
class TestLevelSetPosition:
    def ramp(self, grid: Grid) -> GridFunction:
        vals = np.clip(0.8 * (1.0 - grid.x / 10.0), 0.0, 0.8)
        return GridFunction(grid, vals, left_ext=Constant(0.8))

    def test_linear_ramp_exact(self):
        grid = Grid(10.0, 256)
        pos = level_set_position(self.ramp(grid), 0.4, Side.RIGHT)
        assert pos == pytest.approx(5.0, abs=1e-9)

    def test_step_within_one_cell(self):
        grid = Grid(10.0, 2048)
        vals = np.where(grid.x <= 5.0, 0.6, 0.0)
        u = GridFunction(grid, vals, left_ext=Constant(0.6))
        pos = level_set_position(u, 0.3, Side.RIGHT)
        assert abs(pos - 5.0) <= grid.dx

    def test_double_bump_takes_rightmost(self):
        grid = Grid(10.0, 256)
        x = grid.x
        vals = 0.5 * np.clip(1 - np.abs(x - 2.0), 0, 1) + 0.5 * np.clip(
            1 - np.abs(x - 6.5), 0, 1
        )
        u = GridFunction(grid, vals)
        assert level_set_position(u, 0.25, Side.RIGHT) == pytest.approx(7.0, abs=1e-9)
        assert level_set_position(u, 0.25, Side.LEFT) == pytest.approx(1.5, abs=1e-9)

    def test_left_side_mirrors_right(self):
        grid = Grid(10.0, 256)
        vals = np.clip(0.8 * (1.0 - np.abs(grid.x) / 10.0), 0.0, 0.8)
        u = GridFunction(grid, vals)
        assert level_set_position(u, 0.4, Side.LEFT) == pytest.approx(-5.0, abs=1e-9)
        assert level_set_position(u, 0.4, Side.RIGHT) == pytest.approx(5.0, abs=1e-9)

    def test_below_level_marker(self):
        grid = Grid(10.0, 256)
        u = GridFunction(grid, np.full(256, 0.2), left_ext=Constant(0.2))
        with pytest.raises(LevelSetError, match="never reaches") as err:
            level_set_position(u, 0.5)
        assert err.value.marker == BELOW_LEVEL

    def test_beyond_grid_marker_both_sides(self):
        grid = Grid(10.0, 256)
        u = GridFunction(grid, np.full(256, 0.5), left_ext=Constant(0.5))
        for side in (Side.RIGHT, Side.LEFT):
            with pytest.raises(LevelSetError, match="still attained") as err:
                level_set_position(u, 0.3, side)
            assert err.value.marker == BEYOND_GRID

    def test_invalid_level_rejected(self):
        grid = Grid(10.0, 256)
        u = GridFunction(grid, np.full(256, 0.5), left_ext=Constant(0.5))
        for bad in (0.0, -1.0, math.inf, math.nan):
            with pytest.raises(AnalysisError, match="level"):
                level_set_position(u, bad)


class TestFrontTrace:
    def test_markers_and_encodings(self):
        grid = Grid(40.0, 512)
        model = gaussian_model(grid)
        u0 = indicator_initial(grid, 0.3, -2.0, 2.0)
        traj = evolve(model, u0, 2.0, 0.05, snapshot_times=[1.0, 2.0])
        trace = front_trace(traj, 0.5)
        assert trace.times == (0.0, 1.0, 2.0)
        # level 0.5 not attained at t=0 (height 0.3), attained later
        assert trace.right_markers[0] == BELOW_LEVEL
        assert math.isnan(trace.right[0]) and math.isnan(trace.left[0])
        assert trace.right_markers[-1] is None and trace.left_markers[-1] is None
        assert trace.left[-1] < 0.0 < trace.right[-1]
        assert trace.left[-1] == pytest.approx(-trace.right[-1], abs=1e-9)

    def test_beyond_grid_encoded_as_signed_infinity(self):
        grid = Grid(10.0, 256)
        u = GridFunction(grid, np.full(256, 0.5), left_ext=Constant(0.5))
        traj_like = type("T", (), {})()
        traj_like.times = (1.0,)
        traj_like.fields = (u,)
        trace = front_trace(traj_like, 0.3)
        assert trace.right == (math.inf,)
        assert trace.left == (-math.inf,)
        assert trace.right_markers == (BEYOND_GRID,)
        assert trace.left_markers == (BEYOND_GRID,)

    def test_length_mismatch_rejected(self):
        with pytest.raises(AnalysisError, match="one entry per time"):
            FrontTrace(
                level=0.5,
                grid=Grid(10.0, 256),
                times=(1.0, 2.0),
                right=(1.0,),
                left=(1.0, 2.0),
                right_markers=(None, None),
                left_markers=(None, None),
            )


# ---------------------------------------------------------------------- #
# sandwich verification
# ---------------------------------------------------------------------- #
def one_sided_trace(times, right, grid=None, markers=None):
    n = len(times)
    return FrontTrace(
        level=0.5,
        grid=grid if grid is not None else Grid(100000.0, 32),
        times=tuple(times),
        right=tuple(right),
        left=(math.nan,) * n,
        right_markers=tuple(markers) if markers is not None else (None,) * n,
        left_markers=(BELOW_LEVEL,) * n,
    )


class TestSandwichCheck:
    def accelerating_law(self) -> FrontLaw:
        return FrontLaw(tails.stretched_exp(0.5), 1.0)

    def test_exact_trace_passes_every_eps(self):
        law = self.accelerating_law()
        ts = [6.0, 10.0, 14.0, 18.0]
        trace = one_sided_trace(ts, [law.position(t) for t in ts])
        for eps in (0.1, 0.4, 0.8):
            report = sandwich_check(trace, law, eps)
            assert report.passed
            assert report.engaged_at == 6.0
            assert all(r.verdict == "pass" for r in report.rows)

    def test_linear_trace_eventually_violates_lower_arm(self):
        law = self.accelerating_law()
        ts = [5.0, 10.0, 20.0, 40.0]
        trace = one_sided_trace(ts, [3.0 * t for t in ts])
        report = sandwich_check(trace, law, 0.3)
        verdicts = [r.verdict for r in report.rows]
        assert verdicts == ["pass", "fail", "fail", "fail"]
        assert report.engaged_at == 5.0
        assert report.violations == (10.0, 20.0, 40.0)
        assert not report.passed
        # the failures are on the lower arm: measured position below r((1-eps)t)
        for row in report.rows[1:]:
            assert row.x_right < row.r_lower

    def test_rows_carry_band_and_positions(self):
        law = self.accelerating_law()
        trace = one_sided_trace([10.0], [law.position(10.0)])
        row = sandwich_check(trace, law, 0.5).rows[0]
        assert row.t == 10.0
        assert row.r_lower == pytest.approx(law.position(5.0), rel=1e-12)
        assert row.r_upper == pytest.approx(law.position(15.0), rel=1e-12)
        assert row.r_lower < row.x_right < row.r_upper

    def test_marker_samples_are_inconclusive(self):
        law = self.accelerating_law()
        trace = one_sided_trace(
            [10.0, 12.0],
            [math.nan, math.inf],
            markers=[BELOW_LEVEL, BEYOND_GRID],
        )
        report = sandwich_check(trace, law, 0.4)
        assert [r.verdict for r in report.rows] == ["inconclusive", "inconclusive"]
        assert report.engaged_at is None
        assert not report.passed

    def test_edge_proximity_is_inconclusive(self):
        law = self.accelerating_law()
        grid = Grid(100.0, 512)  # dx = 0.39; guard band = 3.9
        x_near_edge = float(grid.x[-1]) - 2.0 * grid.dx
        trace = one_sided_trace([10.0], [x_near_edge], grid=grid)
        report = sandwich_check(trace, law, 0.4)
        assert report.rows[0].verdict == "inconclusive"

    def test_pre_law_times_are_inconclusive(self):
        # scale < 1 gives a positive earliest-valid time for the law
        law = FrontLaw(tails.power(3.0, shift=1.0, scale=0.5), 1.0)
        assert law.tau > 0.0
        t = 0.9 * law.tau  # (1 - eps) t is below tau: lower arm undefined
        trace = one_sided_trace([t], [1.0])
        report = sandwich_check(trace, law, 0.4)
        assert report.rows[0].verdict == "inconclusive"
        assert math.isnan(report.rows[0].r_lower)

    def test_two_sided_law_checks_left_arm(self):
        shape = power_shape()
        law = FrontLaw(shape, 1.0)
        ts = [8.0, 12.0]
        good_right = [law.position(t, Side.RIGHT) for t in ts]
        good_left = [-law.position(t, Side.LEFT) for t in ts]
        ok = FrontTrace(
            level=0.5,
            grid=Grid(100000.0, 32),
            times=tuple(ts),
            right=tuple(good_right),
            left=tuple(good_left),
            right_markers=(None, None),
            left_markers=(None, None),
        )
        assert sandwich_check(ok, law, 0.4).passed
        # left front stuck near the origin violates the left arm
        stuck = FrontTrace(
            level=0.5,
            grid=Grid(100000.0, 32),
            times=tuple(ts),
            right=tuple(good_right),
            left=(-0.1, -0.1),
            right_markers=(None, None),
            left_markers=(None, None),
        )
        report = sandwich_check(stuck, law, 0.4)
        assert all(r.verdict == "fail" for r in report.rows)

    def test_eps_validation(self):
        law = self.accelerating_law()
        trace = one_sided_trace([10.0], [25.0])
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(AnalysisError, match="eps"):
                sandwich_check(trace, law, bad)

    def test_simulated_accelerating_front_stays_in_band(self):
        # end-to-end: evolve, trace the half-level line, check the band
        grid = Grid(400.0, 2**13)
        p = tails.stretched_exp(0.5)
        shape = TwoSidedTail(p, p.reflected())
        model = Model(
            kappa=2.0,
            m=1.0,
            theta=1.0,
            kernel=kernel_from_two_sided(grid, shape),
            reaction=local_logistic(1.0, 1.0),
        )
        u0 = indicator_initial(grid, 1.0, -2.0, 2.0)
        traj = evolve(model, u0, 12.0, 0.05, snapshot_times=[4, 6, 8, 10, 12])
        trace = front_trace(traj, 0.5)
        report = sandwich_check(trace, FrontLaw(shape, model.beta), 0.5)
        assert report.engaged_at == 4.0
        assert report.passed
        verdicts = [r.verdict for r in report.rows]
        assert verdicts[0] == "inconclusive"  # t = 0: law not yet valid
        assert verdicts[1:] == ["pass"] * 5
        # measured front accelerates: average speed more than doubles
        x4 = trace.right[trace.times.index(4.0)]
        x12 = trace.right[trace.times.index(12.0)]
        assert x12 / 12.0 > 2.0 * (x4 / 4.0)


# ---------------------------------------------------------------------- #
# sub-solution barrier
# ---------------------------------------------------------------------- #
class TestSubSolutionConstruction:
    def test_parameter_validation(self):
        shape = power_shape()
        with pytest.raises(AnalysisError, match="eps"):
            SubSolution(shape=shape, beta=1.0, lam=0.05, eps=1.2, delta=0.1)
        with pytest.raises(AnalysisError, match="delta"):
            SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.6)
        with pytest.raises(AnalysisError, match="delta"):
            SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.0)
        with pytest.raises(AnalysisError, match="lam"):
            SubSolution(shape=shape, beta=1.0, lam=0.0, eps=0.5, delta=0.1)
        with pytest.raises(AnalysisError, match="beta"):
            SubSolution(shape=shape, beta=-1.0, lam=0.05, eps=0.5, delta=0.1)

    def test_light_tail_rejected_by_gauge_precondition(self):
        shape = TwoSidedTail(tails.exponential(1.0), BoundedBelow(0.3))
        with pytest.raises(tails.HConstructionError, match="long-tailed"):
            SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.1)

    def test_growth_exponent_and_tau(self):
        shape = power_shape()
        sub = SubSolution(shape=shape, beta=2.0, lam=0.05, eps=0.25, delta=0.3)
        assert sub.growth_exponent == pytest.approx(1.5)
        assert sub.tau == pytest.approx(sub.law.tau / 0.75)

    def test_plateau_edges_satisfy_defining_identity(self):
        shape = power_shape()
        sub = SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.1)
        t = 10.0
        left, right = sub.plateau_edges(t)
        # b(r) * exp(growth * t) = 1 at the plateau edge
        assert shape.right.value(right) * math.exp(sub.growth_exponent * t) == (
            pytest.approx(1.0, rel=1e-10)
        )
        assert left == pytest.approx(-right, rel=1e-10)  # symmetric shape
        # closed form for the shifted power tail: (1 + r)^q = e^{growth t}
        assert right == pytest.approx(math.exp(sub.growth_exponent * t / 3.0) - 1.0, rel=1e-10)

    def test_bounded_left_gives_infinite_plateau(self):
        shape = TwoSidedTail(tails.power(3.0, shift=1.0), BoundedBelow(0.3))
        sub = SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.1)
        left, right = sub.plateau_edges(8.0)
        assert left == -math.inf
        assert right > 0.0

    def test_times_below_tau_rejected(self):
        shape = power_shape()
        sub = SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.1)
        with pytest.raises(AnalysisError, match="earliest"):
            sub.plateau_edges(0.0)


class TestBuildSubsolution:
    def make(self):
        shape = power_shape()
        sub = SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.1)
        return shape, sub, Grid(1024.0, 2**14)

    def test_plateau_holds_lambda(self):
        shape, sub, grid = self.make()
        g = build_subsolution(sub, 10.0, grid)
        left, right = sub.plateau_edges(10.0)
        inside = (grid.x > left) & (grid.x < right)
        assert np.all(g.values[inside] == 0.05)
        assert g.values[grid.index_at(0.0)] == 0.05

    def test_range_invariant(self):
        _, sub, grid = self.make()
        g = build_subsolution(sub, 10.0, grid)
        assert float(g.values.min()) > 0.0
        assert float(g.values.max()) <= 0.05 * (1 + 1e-12)

    def test_tail_value_closed_form_at_doubled_edge(self):
        shape, sub, grid = self.make()
        t = 36.0  # plateau edge ~ 4e2: the power shift is negligible there
        g = build_subsolution(sub, t, grid)
        _, right = sub.plateau_edges(t)
        i = grid.index_at(2.0 * right)
        x_node = float(grid.x[i])
        expected = 0.05 * shape.right.value(x_node) * math.exp(sub.growth_exponent * t)
        assert g.values[i] == pytest.approx(expected, rel=1e-12)
        # the tail value at twice the edge is lam * b(2r)/b(r) ~ lam * 2^{-q}
        assert g.values[i] == pytest.approx(0.05 * 2.0 ** (-3.0), rel=0.05)

    def test_continuity_across_edge(self):
        shape, sub, grid = self.make()
        t = 10.0
        g = build_subsolution(sub, t, grid)
        _, right = sub.plateau_edges(t)
        j = grid.index_at(right)
        window = g.values[j - 2 : j + 3]
        # no jump at the edge: the drop over two cells is bounded by the
        # tail's log-slope q/(1+r) per cell
        per_cell = 3.0 * grid.dx / (1.0 + right)
        assert np.all(window > 0.05 * (1.0 - 2.5 * per_cell))
        assert np.all(window <= 0.05 + 1e-15)

    def test_extensions_model_the_grown_tail(self):
        shape, sub, grid = self.make()
        t = 10.0
        g = build_subsolution(sub, t, grid)
        x_edge = float(grid.x[-1])
        expected = 0.05 * shape.right.value(x_edge) * math.exp(sub.growth_exponent * t)
        assert float(g.right_ext.value(np.array([x_edge]))[0]) == pytest.approx(
            expected, rel=1e-9
        )
        assert g.values[-1] == pytest.approx(expected, rel=1e-9)

    def test_bounded_left_fills_plateau_to_edge(self):
        shape = TwoSidedTail(tails.power(3.0, shift=1.0), BoundedBelow(0.3))
        sub = SubSolution(shape=shape, beta=1.0, lam=0.05, eps=0.5, delta=0.1)
        grid = Grid(1024.0, 2**14)
        g = build_subsolution(sub, 10.0, grid)
        assert np.all(g.values[:100] == 0.05)
        assert isinstance(g.left_ext, Constant)
        assert g.left_ext.level == 0.05

    def test_time_below_tau_is_domain_error(self):
        _, sub, _ = self.make()
        with pytest.raises(AnalysisError, match="earliest"):
            build_subsolution(sub, 0.0, Grid(1024.0, 2**14))

    def test_plateau_reaching_grid_edge_rejected(self):
        _, sub, _ = self.make()
        small = Grid(16.0, 1024)
        # r(0.5 t) = e^{t/6} - 1 exceeds 16 - guard for t ~ 18
        with pytest.raises(AnalysisError, match="enlarge the grid"):
            build_subsolution(sub, 18.0, small)


class TestVerifySubsolution:
    def setup_case(self):
        grid = Grid(1024.0, 2**15)
        shape = power_shape()
        model = power_model(grid)
        sub = SubSolution(shape=shape, beta=model.beta, lam=0.05, eps=0.5, delta=0.1)
        return grid, model, sub

    def test_residual_curve_and_engagement_time(self):
        grid, model, sub = self.setup_case()
        ts = [2, 4, 6, 8, 10, 12, 14, 16]
        res = verify_subsolution(sub, model, ts, grid)
        assert res.tol == pytest.approx(1e-8 * 0.05)
        # frozen from an independent dry run: the residual drops through
        # tolerance between t = 6 and t = 8 on this grid
        assert res.t0_emp == 8.0
        assert res.max_residual <= res.tol
        assert res.max_nonlinear <= res.tol
        curve = {t: lin for t, lin, _ in res.per_time}
        assert curve[2] > 1e-2  # far from engaged at early times
        assert curve[6] > res.tol
        assert curve[8] <= res.tol

    def test_all_regimes_reported_for_two_sided_shape(self):
        grid, model, sub = self.setup_case()
        res = verify_subsolution(sub, model, [10.0], grid)
        regimes = {r.regime for r in res.rows}
        assert regimes == {
            "plateau",
            "shoulder-right",
            "far-right",
            "shoulder-left",
            "far-left",
            "boundary-right",
            "boundary-left",
        }
        # one-sided requirement: every regime is below tolerance at t >= t0
        assert all(r.max_residual <= res.tol for r in res.rows)

    def test_bounded_left_reports_right_regimes_only(self):
        grid = Grid(1024.0, 2**15)
        model = power_model(grid)
        shape = TwoSidedTail(tails.power(3.0, shift=1.0), BoundedBelow(0.3))
        sub = SubSolution(shape=shape, beta=model.beta, lam=0.05, eps=0.5, delta=0.1)
        res = verify_subsolution(sub, model, [8.0, 12.0, 16.0], grid)
        regimes = {r.regime for r in res.rows}
        assert regimes == {"plateau", "shoulder-right", "far-right", "boundary-right"}
        assert res.t0_emp == 8.0

    def test_never_engaging_raises_with_curve(self):
        grid, model, sub = self.setup_case()
        with pytest.raises(AnalysisError, match="residual curve"):
            verify_subsolution(sub, model, [2.0, 4.0], grid)

    def test_plateau_height_above_saturation_bound_rejected(self):
        grid, model, _ = self.setup_case()
        shape = power_shape()
        # saturation at 0.2 is 0.2 > delta = 0.1 for the proportional reaction
        sub = SubSolution(shape=shape, beta=model.beta, lam=0.2, eps=0.5, delta=0.1)
        with pytest.raises(AnalysisError, match="saturation"):
            verify_subsolution(sub, model, [8.0], grid)

    def test_growth_rate_mismatch_rejected(self):
        grid, model, _ = self.setup_case()
        sub = SubSolution(shape=power_shape(), beta=2.0, lam=0.05, eps=0.5, delta=0.1)
        with pytest.raises(AnalysisError, match="does not match the model"):
            verify_subsolution(sub, model, [8.0], grid)

    def test_wrong_grid_rejected(self):
        grid, model, sub = self.setup_case()
        with pytest.raises(AnalysisError, match="kernel grid"):
            verify_subsolution(sub, model, [8.0], Grid(512.0, 2**14))

    def test_empty_time_range_rejected(self):
        grid, model, sub = self.setup_case()
        with pytest.raises(AnalysisError, match="at least one"):
            verify_subsolution(sub, model, [], grid)

    def test_barrier_domination_persists_once_engaged(self):
        # once the evolved field dominates the barrier pointwise, it keeps
        # dominating at every later snapshot
        grid, model, sub = self.setup_case()
        u0 = indicator_initial(grid, 0.8, -2.0, 2.0)
        traj = evolve(model, u0, 10.0, 0.1, snapshot_times=[2, 4, 6, 8, 10])
        gaps = []
        for t, field in zip(traj.times, traj.fields):
            if t == 0.0:
                continue
            g = build_subsolution(sub, t, grid)
            gaps.append(float(np.min(field.values - g.values)))
        assert gaps[0] >= 0.0  # engaged by the first sampled time
        assert all(b >= a for a, b in zip(gaps, gaps[1:]))  # margin grows


class TestLambda0:
    def test_proportional_saturation_closed_form(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        assert lambda0_for(model, 0.1) == pytest.approx(0.1, abs=1e-9)
        assert lambda0_for(model, 0.25) == pytest.approx(0.25, abs=1e-9)

    def test_quadratic_saturation_closed_form(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid, reaction=local_cubic(1.0, 1.0))
        # saturation beta (v/theta)^2 <= delta up to v = theta sqrt(delta/beta)
        assert lambda0_for(model, 0.09) == pytest.approx(0.3, abs=1e-9)

    def test_monotone_in_delta(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        assert lambda0_for(model, 0.05) < lambda0_for(model, 0.2)

    def test_margin_at_or_above_rate_saturates_at_theta(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        assert lambda0_for(model, 1.5) == 1.0

    def test_nonlocal_saturation_bound_is_sharp(self):
        grid = Grid(60.0, 2**11)
        kern = gaussian_kernel(grid, 1.0)
        model = Model(
            kappa=2.0,
            m=1.0,
            theta=1.0,
            kernel=kern,
            reaction=NonlocalLogisticReaction(a_minus=kern, k=1.0),
        )
        lam0 = lambda0_for(model, 0.1)
        assert lam0 == pytest.approx(0.1, abs=1e-9)
        at = GridFunction(grid, np.full(grid.n_points, lam0), left_ext=Constant(lam0))
        assert float(apply_G(model, at).max()) <= 0.1 + 1e-9
        above = GridFunction(
            grid, np.full(grid.n_points, 1.05 * lam0), left_ext=Constant(1.05 * lam0)
        )
        assert float(apply_G(model, above).max()) > 0.1

    def test_delta_validation(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        with pytest.raises(AnalysisError, match="delta"):
            lambda0_for(model, 0.0)


# ---------------------------------------------------------------------- #
# linear upper envelope
# ---------------------------------------------------------------------- #
class TestUpperEnvelope:
    def test_two_sided_power_data_under_gaussian_kernel(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        b = tails.power(3.0, shift=1.0)
        u0 = two_sided_samples(grid, b)
        res = verify_upper_envelope(model, u0, b, 0.5, [1.0, 2.0, 4.0], 3.0)
        assert res.passed
        assert res.violations == ()
        assert res.rate == pytest.approx(2.0)
        # frozen from an independent dry run
        assert res.c_emp == pytest.approx(1.0198, abs=1e-3)
        assert {row.t for row in res.rows} == {1.0, 2.0, 4.0}
        assert all(row.ok for row in res.rows)
        assert all(abs(row.x) > 3.0 for row in res.rows)

    def test_zero_data_trivially_below(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        u0 = GridFunction(grid, np.zeros(grid.n_points))
        res = verify_upper_envelope(model, u0, tails.power(3.0, shift=1.0), 0.5, [1.0, 2.0], 3.0)
        assert res.passed
        assert res.c_emp == 1.0
        assert all(row.w == 0.0 for row in res.rows)

    def test_plateau_left_data_checks_right_tail_integral(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        u0 = step_initial(grid, 0.5, 0.0)
        res = verify_upper_envelope(model, u0, tails.power(3.0, shift=1.0), 0.5, [0.5, 1.0, 2.0], 4.0)
        assert res.passed
        assert res.c_emp == 1.0
        # only the right wing is sampled in the plateau-left regime
        assert all(row.x > 4.0 for row in res.rows)

    def test_light_tail_against_heavy_kernel_fails_precondition(self):
        grid = Grid(60.0, 2**11)
        model = power_model(grid)
        u0 = GridFunction(grid, np.zeros(grid.n_points))
        # e^{-x} drops below the kernel's (1+x)^{-3} tail from x ~ 7 on
        with pytest.raises(AnalysisError, match="precondition"):
            verify_upper_envelope(model, u0, tails.exponential(1.0), 0.5, [1.0, 2.0], 5.0)

    def test_small_margin_long_horizon_reports_violations(self):
        # an honest failure path: the frozen constant fitted at t = 1 cannot
        # cover t = 30 when the growth margin is far too small
        grid = Grid(60.0, 2**11)
        model = power_model(grid)
        b = tails.power(3.0, shift=1.0, scale=1.2)
        u0 = indicator_initial(grid, 0.5, -1.0, 1.0)
        res = verify_upper_envelope(model, u0, b, 0.01, [1.0, 30.0], 2.0)
        assert not res.passed
        assert len(res.violations) > 0
        assert all(t == 30.0 for t, _ in res.violations)

    def test_validation_errors(self):
        grid = Grid(60.0, 2**11)
        model = gaussian_model(grid)
        u0 = GridFunction(grid, np.zeros(grid.n_points))
        b = tails.power(3.0, shift=1.0)
        with pytest.raises(AnalysisError, match="right-sided"):
            verify_upper_envelope(model, u0, b.reflected(), 0.5, [1.0, 2.0], 3.0)
        with pytest.raises(AnalysisError, match="delta"):
            verify_upper_envelope(model, u0, b, 0.0, [1.0, 2.0], 3.0)
        with pytest.raises(AnalysisError, match="increasing"):
            verify_upper_envelope(model, u0, b, 0.5, [2.0, 1.0], 3.0)
        with pytest.raises(AnalysisError, match="x_min"):
            verify_upper_envelope(model, u0, b, 0.5, [1.0, 2.0], 80.0)


# ---------------------------------------------------------------------- #
# pairwise order
# ---------------------------------------------------------------------- #
class TestComparisonTest:
    def test_equal_data_stays_equal(self):
        grid = Grid(40.0, 2**11)
        model = gaussian_model(grid)
        u0 = indicator_initial(grid, 0.4, -2.0, 2.0)
        res = comparison_test(model, u0, u0, 5.0, 0.05)
        assert res.passed
        assert abs(res.max_violation) <= 1e-12

    def test_ordered_indicators_stay_ordered(self):
        grid = Grid(40.0, 2**11)
        model = gaussian_model(grid)
        lo = indicator_initial(grid, 0.5, -1.0, 1.0)
        hi = indicator_initial(grid, 1.0, -2.0, 2.0)
        res = comparison_test(model, lo, hi, 10.0, 0.05)
        assert res.passed
        assert res.max_violation <= 1e-9

    def test_saturated_upper_field_bounds_everything(self):
        grid = Grid(40.0, 2**11)
        model = gaussian_model(grid)
        lo = indicator_initial(grid, 0.3, -2.0, 2.0)
        top = GridFunction(grid, np.full(grid.n_points, 1.0), left_ext=Constant(1.0))
        res = comparison_test(model, lo, top, 5.0, 0.05, boundary_margin=0.0)
        assert res.passed
        assert res.max_violation <= 1e-9

    def test_initial_order_violation_rejected(self):
        grid = Grid(40.0, 2**11)
        model = gaussian_model(grid)
        lo = indicator_initial(grid, 0.5, -1.0, 1.0)
        hi = indicator_initial(grid, 0.4, -2.0, 2.0)
        with pytest.raises(AnalysisError, match="order"):
            comparison_test(model, lo, hi, 5.0, 0.05)

    def test_grid_mismatch_rejected(self):
        model = gaussian_model(Grid(40.0, 2**11))
        lo = indicator_initial(Grid(40.0, 2**11), 0.5, -1.0, 1.0)
        hi = indicator_initial(Grid(20.0, 2**10), 0.6, -1.0, 1.0)
        with pytest.raises(AnalysisError, match="grid"):
            comparison_test(model, lo, hi, 5.0, 0.05)

    def test_result_reports_location_of_worst_gap(self):
        grid = Grid(40.0, 2**11)
        model = gaussian_model(grid)
        lo = indicator_initial(grid, 0.5, -1.0, 1.0)
        hi = indicator_initial(grid, 1.0, -2.0, 2.0)
        res = comparison_test(model, lo, hi, 2.0, 0.05)
        assert isinstance(res, ComparisonResult)
        assert -40.0 <= res.location < 40.0
        assert 0.0 <= res.time <= 2.0


# ---------------------------------------------------------------------- #
# structural invariants on trajectories
# ---------------------------------------------------------------------- #
class TestStructuralInvariants:
    def test_monotone_data_stays_monotone(self):
        grid = Grid(100.0, 2**12)
        p = tails.power(3.0, shift=1.0)
        shape = TwoSidedTail(p, p.reflected())
        model = Model(
            kappa=2.0,
            m=1.0,
            theta=1.0,
            kernel=kernel_from_two_sided(grid, shape),
            reaction=local_logistic(1.0, 1.0),
        )
        u0 = step_initial(grid, 0.8, 0.0)
        traj = evolve(model, u0, 4.0, 0.05, snapshot_times=[1, 2, 3, 4])
        for field in traj.fields:
            assert float(np.max(np.diff(field.values))) <= 1e-9

    def test_step_front_outruns_compact_front(self):
        # same heavy kernel, step vs compact seed: the step-driven front
        # leads, and its lead grows with time
        grid = Grid(400.0, 2**13)
        model = power_model(grid)
        ts = [4.0, 6.0, 8.0]
        step_traj = evolve(
            model, step_initial(grid, 1.0, 0.0), 8.0, 0.1,
            snapshot_times=ts, boundary_margin=0.0,
        )
        compact_traj = evolve(
            model, indicator_initial(grid, 1.0, -1.0, 1.0), 8.0, 0.1,
            snapshot_times=ts,
        )
        step_front = front_trace(step_traj, 0.5)
        compact_front = front_trace(compact_traj, 0.5)
        margins = []
        for t, xs, xc in zip(step_front.times, step_front.right, compact_front.right):
            if t == 0.0:
                continue
            assert xs > xc
            margins.append(xs - xc)
        assert all(b > a for a, b in zip(margins, margins[1:]))
