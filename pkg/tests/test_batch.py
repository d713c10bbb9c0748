from dataclasses import replace
from os.path import dirname, join

import numpy as np
import pytest

from fastreact.analysis import ConvergenceEntry, ConvergenceReport
from fastreact.batch import *
from fastreact.config import read_config
from fastreact.exceptions import InvalidInputError, SolverFailure
from fastreact.kinetics import Kinetics
from fastreact.solver import SolverConfig

DATA = join(dirname(__file__), 'data')


class TestKSweep():
    """
    Test a small k sweep run in process
    """

    @classmethod
    def setup_class(self):
        self.config = read_config(join(DATA, 'small.ini'))
        self.sweep = KSweep(self.config, quiet=True)
        self.sweep.run()
        self.report = self.sweep.build_report()

    def test_all_members_solved(self):
        assert self.sweep.completed == 3
        assert self.sweep.errors == []
        assert not self.report.partial

    def test_report_sorted(self):
        assert self.report.column('axis_value').tolist() == [1.0, 100.0, 10000.0]

    def test_error_shrinks_with_rate(self):
        err = self.report.column('l2_window_error_u')
        assert err[-1] < err[0]

    def test_segregation_shrinks_with_rate(self):
        seg = self.report.column('segregation_integral')
        assert seg[-1] < 0.1 * seg[0]

    def test_fitted_constant_near_zero(self):
        """
        Test the symmetric front stays at the origin
        """
        a_hat = self.report.column('fitted_a')[-1]
        assert abs(a_hat) <= 2 * self.config.grid.dx

    def test_checks(self):
        checks = self.sweep.check(self.report)
        assert sorted(checks) == ['error_ratio_small', 'error_u_nonincreasing',
                                  'reaction_mass_bounded', 'segregation_nonincreasing',
                                  'segregation_ratio_small']
        assert all(checks.values())


def test_n_members():
    config = read_config(join(DATA, 'small.ini'))
    sweep = KSweep(config, quiet=True, n_members=1)
    sweep.run()
    assert list(sweep.trajectories) == [1.0]


def test_single_value_trivially_monotone():
    config = read_config(join(DATA, 'small.ini'))
    sweep = KSweep(config, values=[100.0], quiet=True)
    sweep.run()
    report = sweep.build_report()
    assert len(report.entries) == 1
    assert all(sweep.check(report).values())


def synthetic_report(errors, segregation, masses, ks=(1.0, 100.0, 10000.0)):
    entries = [ConvergenceEntry(axis_value=k, l2_window_error_u=e, l2_window_error_v=e,
                                segregation_integral=s, reaction_mass=m)
               for k, e, s, m in zip(ks, errors, segregation, masses)]
    return ConvergenceReport('k', entries=entries)


@pytest.mark.parametrize('errors, segregation, masses, failed', [
    ([0.4, 0.2, 0.05], [1.0, 0.2, 0.05], [0.5, 0.6, 0.7], []),
    # monotone but the fast error does not drop far enough
    ([0.4, 0.3, 0.2], [1.0, 0.2, 0.05], [0.5, 0.6, 0.7], ['error_ratio_small']),
    ([0.4, 0.2, 0.05], [1.0, 0.5, 0.2], [0.5, 0.6, 0.7], ['segregation_ratio_small']),
    # the k = 1 mass is below the k >= 100 range so it is ignored
    ([0.4, 0.2, 0.05], [1.0, 0.2, 0.05], [0.01, 0.3, 0.7], ['reaction_mass_bounded']),
    ([0.4, 0.5, 0.05], [1.0, 0.2, 0.05], [0.1, 0.6, 0.7], ['error_u_nonincreasing']),
])
def test_k_sweep_gates(errors, segregation, masses, failed):
    """
    Test each convergence gate rejects the sequence it guards against
    """
    sweep = KSweep(read_config(join(DATA, 'small.ini')), quiet=True)
    checks = sweep.check(synthetic_report(errors, segregation, masses))
    assert sorted(name for name, ok in checks.items() if not ok) == failed


def test_k_sweep_gate_settings():
    config = read_config(join(DATA, 'small.ini'))
    loose = replace(config, analysis=replace(config.analysis, error_ratio=0.6,
                                             segregation_ratio=0.5))
    checks = KSweep(loose, quiet=True).check(
        synthetic_report([0.4, 0.3, 0.2], [1.0, 0.5, 0.2], [0.5, 0.6, 0.7]))
    assert all(checks.values())


def test_pool_matches_in_process():
    """
    Test results do not depend on the number of workers
    """
    config = read_config(join(DATA, 'small.ini'))
    serial = KSweep(config, values=[1.0, 100.0], quiet=True)
    serial.run()
    pooled = KSweep(config, values=[1.0, 100.0], quiet=True, workers=2)
    pooled.run()

    for k in [1.0, 100.0]:
        assert np.array_equal(serial.trajectories[k].u, pooled.trajectories[k].u)


def test_member_errors_collected():
    """
    Test a failing member is recorded with debug=False and raised otherwise
    """
    config = read_config(join(DATA, 'small.ini'))
    bad = config.spec.with_changes(kinetics=Kinetics.power(0.5, 0.5))
    config = replace(config, spec=bad, solver=SolverConfig(max_reaction_iters=1,
                                                           reaction_tol=1e-15))

    sweep = KSweep(config, values=[100.0], quiet=True, debug=False)
    sweep.run()
    assert sweep.partial
    assert sweep.errors[0][0] == 100.0

    with pytest.raises(SolverFailure):
        KSweep(config, values=[100.0], quiet=True, debug=True).run()


def test_no_values():
    config = read_config(join(DATA, 'half_dv_zero.ini'))
    with pytest.raises(InvalidInputError):
        KSweep(config)


class TestDiffusivitySweep():

    @classmethod
    def setup_class(self):
        self.config = read_config(join(DATA, 'dv_sweep.ini'))
        self.sweep = DiffusivitySweep(self.config, quiet=True)
        self.sweep.run()
        self.report = self.sweep.build_report()

    def test_reference_added(self):
        assert sorted(self.sweep.trajectories) == [0.0, 0.01, 0.1]
        assert self.report.column('axis_value').tolist() == [0.01, 0.1]

    def test_distance_shrinks(self):
        checks = self.sweep.check(self.report)
        assert checks['distance_decreasing']
        assert checks['reaction_mass_bounded']
