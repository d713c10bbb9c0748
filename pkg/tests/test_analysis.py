import numpy as np
import pytest
from numpy.testing import assert_allclose

from fastreact.analysis import *
from fastreact.exceptions import InvalidInputError
from fastreact.model import GridSpec, Trajectory
from fastreact.profile import SelfSimilarProfile, eval_limit_uv
from fastreact.solver import SolverConfig, run

from .solver_test_base import SolverSetup, small_grid, small_spec


def profile_trajectory(spec, grid, times):
    """
    Trajectory sampled from the limit profile itself
    """
    prof = SelfSimilarProfile.from_spec(spec)
    us, vs = [], []
    for t in times:
        u, v = eval_limit_uv(prof, grid.x, t)
        us.append(u)
        vs.append(v)
    return prof, Trajectory(grid, spec, np.array(times), np.array(us), np.array(vs),
                            reaction_increments=np.zeros(0))


class TestWindowNorms():

    spec = small_spec(d_u=1.0, d_v=0.5, U_0=2.0, T=1.0)
    grid = GridSpec(-10.0, 10.0, 400, 0.01, (0.25, 0.5, 1.0))

    def test_profile_has_no_error(self):
        prof, traj = profile_trajectory(self.spec, self.grid, [0.25, 0.5, 1.0])
        err_u, err_v = l2_window_error(traj, prof, 4.0, 0.05)
        assert err_u == pytest.approx(0.0, abs=1e-14)
        assert err_v == pytest.approx(0.0, abs=1e-14)

    def test_empty_window(self):
        prof, traj = profile_trajectory(self.spec, self.grid, [0.25, 0.5, 1.0])
        assert l2_window_error(traj, prof, 0.0, 0.05) == (0.0, 0.0)

    def test_constant_offset(self):
        """
        Test a unit offset over a window of width 2J and unit time span
        """
        prof, traj = profile_trajectory(self.spec, self.grid, [0.0 + 1e-9, 0.5, 1.0])
        shifted = Trajectory(self.grid, self.spec, traj.times, traj.u + 1.0, traj.v)
        err_u, err_v = l2_window_error(shifted, prof, 2.0, 0.5)
        assert err_u == pytest.approx(np.sqrt(4.0 * 0.5))
        assert err_v == pytest.approx(0.0, abs=1e-14)

    def test_window_past_grid(self):
        prof, traj = profile_trajectory(self.spec, self.grid, [0.25, 0.5, 1.0])
        with pytest.raises(InvalidInputError):
            l2_window_error(traj, prof, 20.0, 0.05)

    def test_needs_two_snapshots(self):
        prof, traj = profile_trajectory(self.spec, self.grid, [0.25, 0.5, 1.0])
        with pytest.raises(InvalidInputError):
            l2_window_error(traj, prof, 4.0, 0.75)

    def test_rescaled_error_of_profile(self):
        prof, traj = profile_trajectory(self.spec, self.grid, [0.25, 0.5, 1.0])
        err_u, err_v = kamin_rescaled_error(traj, prof, 1.0, 4.0)
        assert err_u == pytest.approx(0.0, abs=1e-14)

    def test_window_distance_to_self(self):
        prof, traj = profile_trajectory(self.spec, self.grid, [0.25, 0.5, 1.0])
        assert window_distance(traj, traj, 4.0, 0.05) == (0.0, 0.0)


class TestFreeBoundary():

    def test_track_profile_interface(self):
        """
        Test the interpolated zero of w follows a sqrt(t) exactly enough for
        a sampled profile
        """
        spec = small_spec(d_u=1.0, d_v=0.5, U_0=2.0, T=1.0)
        grid = GridSpec(-10.0, 10.0, 2000, 0.01)
        times = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        prof, traj = profile_trajectory(spec, grid, [1e-12] + times[1:])
        traj = Trajectory(grid, spec, np.array(times), traj.u, traj.v)

        points = track_free_boundary(traj, prof)
        assert len(points) == 5
        a_hat, stderr = fit_sqrt_law(points)
        assert a_hat == pytest.approx(prof.a, abs=2 * grid.dx)

    def test_fit_sqrt_law_exact(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        a_hat, stderr = fit_sqrt_law(zip(t, 0.7 * np.sqrt(t)))
        assert a_hat == pytest.approx(0.7)
        assert stderr == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize('points', [
        [(1.0, 0.1), (2.0, 0.2)],
        [(0.0, 0.0), (1.0, 0.1), (2.0, 0.2)],
    ])
    def test_fit_sqrt_law_invalid(self, points):
        with pytest.raises(InvalidInputError):
            fit_sqrt_law(points)

    def test_no_sign_change_skipped(self):
        spec = small_spec(T=1.0)
        grid = GridSpec(-10.0, 10.0, 20, 0.01)
        u = np.ones((2, 21))
        traj = Trajectory(grid, spec, np.array([0.0, 1.0]), u, np.zeros((2, 21)))
        assert track_free_boundary(traj) == []


class TestBenchmarkDiagnostics(SolverSetup):
    """
    Test the integral diagnostics on one small run
    """

    def test_segregation_positive(self):
        assert segregation_integral(self.traj) > 0

    def test_reaction_mass_matches_increments(self):
        assert reaction_mass(self.traj) == pytest.approx(self.traj.reaction_increments.sum())

    def test_far_field_distance(self):
        df = far_field_distance(self.traj)
        assert list(df.columns) == ['t', 'l1_u', 'l1_v']
        # only the node on the jump differs from the step
        assert df['l1_u'].iloc[0] <= self.grid.dx
        assert df['l1_u'].iloc[-1] > 0

    @pytest.mark.parametrize('cells', [2, 4, 8])
    def test_translate_contraction(self, cells):
        result = translate_contraction_check(self.traj, cells * self.grid.dx)
        dx = self.grid.dx
        assert result.max_excess <= 1e-6 * self.spec.M * cells * dx + 10 * dx ** 2

    def test_shift_not_on_grid(self):
        with pytest.raises(InvalidInputError):
            translate_contraction_check(self.traj, 0.3 * self.grid.dx)

    def test_kamin_rescale(self):
        """
        Test rescaling by l maps the grid, times and rate consistently
        """
        scaled = kamin_rescale(self.traj, 2.0)
        assert scaled.spec.k == pytest.approx(4.0 * self.spec.k)
        assert scaled.times[-1] == pytest.approx(self.spec.T / 4.0)
        assert scaled.x[-1] == pytest.approx(self.grid.x_right / 2.0)
        assert reaction_mass(scaled) == pytest.approx(reaction_mass(self.traj) / 2.0)


class TestSegregationTrend():
    """
    Test the segregation integral decreases with the rate
    """

    def test_decreasing_in_k(self):
        spec = small_spec()
        grid = small_grid(spec, nx=160)
        values = []
        for k in [1.0, 100.0, 10000.0]:
            values.append(segregation_integral(run(spec.with_changes(k=k), grid)))
        assert is_nonincreasing(values, 0.02)
        assert values[-1] < 0.1 * values[0]


class TestAsymmetricFrontFit(SolverSetup):
    """
    Test the tracked front of a fast, asymmetric run follows the limit
    constant
    """
    spec_kwargs = {'d_u': 1.0, 'd_v': 0.5, 'U_0': 2.0, 'V_0': 1.0, 'k': 1e4, 'T': 1.0}
    grid_kwargs = {'nx': 800}

    def test_fitted_constant(self):
        prof = SelfSimilarProfile.from_spec(self.spec)
        assert prof.a > 0.5

        points = track_free_boundary(self.traj, prof)
        assert len(points) == 10
        a_hat, stderr = fit_sqrt_law(points)
        assert a_hat == pytest.approx(prof.a, rel=0.05)
        assert stderr < 0.02 * abs(prof.a)


@pytest.mark.slow
@pytest.mark.parametrize('changes', [
    dict(variant='half_line', d_v=0.5, U_0=2.0),
    dict(variant='whole_line', d_v=0.0, U_0=2.0),
    dict(variant='half_line', d_v=0.0),
])
def test_window_error_converges_in_k(changes):
    """
    Test the distance to the limit profile shrinks with k on the half line
    and for an immobile substrate
    """
    spec = small_spec(**changes)
    grid = small_grid(spec)
    prof = SelfSimilarProfile.from_spec(spec)

    errors = []
    for k in [1.0, 100.0, 10000.0]:
        traj = run(spec.with_changes(k=k), grid)
        assert not traj.failed
        errors.append(l2_window_error(traj, prof, 2.0, 0.05)[0])

    assert is_nonincreasing(errors, 0.02)
    assert errors[-1] <= 0.25 * errors[0]


def test_comparison_ordered_pair():
    spec = small_spec()
    grid = small_grid(spec, nx=160)
    u0, v0 = np.ones(grid.nx + 1) * 0.2, np.ones(grid.nx + 1) * 0.6
    u_hi, v_hi = u0 + 0.3 * np.exp(-grid.x ** 2), v0 - 0.3 * np.exp(-grid.x ** 2)
    violation = comparison_check(spec, grid, SolverConfig(), (u0, v0), (u_hi, v_hi))
    assert violation <= 1e-8


def test_comparison_rejects_unordered():
    spec = small_spec()
    grid = small_grid(spec, nx=160)
    u0 = np.zeros(grid.nx + 1)
    with pytest.raises(InvalidInputError):
        comparison_check(spec, grid, SolverConfig(), (u0 + 0.5, u0), (u0, u0))


@pytest.mark.parametrize('values, slack, expected', [
    ([3.0, 2.0, 1.0], 0.0, True),
    ([3.0, 3.05, 1.0], 0.02, True),
    ([3.0, 3.2, 1.0], 0.02, False),
])
def test_is_nonincreasing(values, slack, expected):
    assert is_nonincreasing(values, slack) == expected


@pytest.mark.parametrize('num, den, expected', [
    (1.0, 4.0, 0.25),
    (0.0, 0.0, 0.0),
    (1.0, 0.0, np.inf),
])
def test_value_ratio(num, den, expected):
    assert value_ratio(num, den) == expected


@pytest.mark.parametrize('values, passed, informational', [
    ([3.0, 2.0, 1.0], True, False),
    ([3.0, 3.5, 1.0], True, True),
    ([1.0, 2.0], False, False),
    ([1.0], True, False),
])
def test_trend_check(values, passed, informational):
    trend = trend_check(values, 0.05)
    assert trend.passed == passed
    assert trend.informational == informational


class TestConvergenceReport():

    def entry(self, value, err=1.0):
        return ConvergenceEntry(value, err, err, 0.1, 0.2)

    def test_sorted_by_axis(self):
        report = ConvergenceReport('k', [self.entry(10.0, 0.5), self.entry(1.0)])
        report.add(self.entry(5.0, 0.7))
        assert report.column('axis_value').tolist() == [1.0, 5.0, 10.0]

    def test_dataframe_names_axis(self):
        df = ConvergenceReport('d_v', [self.entry(0.1)]).to_dataframe()
        assert df.columns[0] == 'd_v'
        assert len(df.index) == 1

    def test_invalid_axis(self):
        with pytest.raises(InvalidInputError):
            ConvergenceReport('mu')

    @pytest.mark.parametrize('err', [-1.0, np.nan])
    def test_invalid_entry(self, err):
        with pytest.raises(InvalidInputError):
            self.entry(1.0, err)
