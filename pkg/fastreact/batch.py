"""
Module for running and managing multiple solver runs that make up a sweep
and assembling their convergence report
"""

import time
from multiprocessing import Pool

import numpy as np
import progressbar

from .analysis import (ConvergenceEntry, ConvergenceReport, fit_sqrt_law,
                       is_nonincreasing, is_strictly_decreasing, l2_window_error,
                       reaction_mass, segregation_integral, track_free_boundary,
                       value_ratio, window_distance)
from .exceptions import InvalidInputError, SolverFailure
from .profile import SelfSimilarProfile
from .solver import run
from .utilities import assign_default_kwargs, get_logger


def solve_member(job):
    """
    Worker entry point. Returns the trajectory or the exception raised so
    a pool can hand every member back to the single aggregator.

    Args:
        job: Tuple of (axis value, spec, grid, solver config)

    Returns:
        value, trajectory, error: trajectory or error is None
    """
    value, spec, grid, cfg = job
    try:
        return value, run(spec, grid, cfg), None
    except Exception as e:
        return value, None, e


class SweepBase:
    """
    Base Class for running a family of problems that differ along one
    axis. This class manages running members, logging and timing, and
    reporting of errors

    Attributes:
        defaults: Dictionary containing keyword arguments that are not to be
                  passed on to the members.
        config: RunConfig the members derive from
        values: Axis values of the sweep
        log: Logger object with colored logs installed.
        errors: List of tuple that contain the axis value and the exception
                thrown during the run
        completed: Integer of number of members that finished
        trajectories: Dictionary of axis value to Trajectory

    Functions:
        run: Solve every member. Use debug=False to allow exceptions
        report: Log the final result of the members, errors, time elapsed,
                etc.
        build_report: Assemble the ConvergenceReport
    """

    defaults = {'debug': True,
                'workers': 1,
                'quiet': False,
                'n_members': -1}

    axis = None

    def __init__(self, config, values=None, **kwargs):
        """
        Assigns attributes from kwargs and their defaults from self.defaults

        Args:
            config: RunConfig providing the base problem
            values: Axis values, defaults to the config sweep values
            debug: Boolean that allows exceptions when running members, when
                 True no exceptions are allowed. Default=True
            workers: Size of the worker pool, 1 runs in process. Default=1
            quiet: Hide the progress bar. Default=False
            n_members: Integer number of members to run (useful for testing),
                     Default=-1 (meaning all of the members)
        """
        self.config = config

        if values is None:
            if config.sweep is None:
                raise InvalidInputError('No sweep values configured')
            values = config.sweep.values

        self.values = [float(v) for v in values]
        self.meta = assign_default_kwargs(self, kwargs, self.defaults)
        self.log = get_logger(__name__, debug=not self.quiet)

        # Performance tracking
        self.errors = []
        self.completed = 0
        self.trajectories = {}
        self.start = time.time()

        self.log.info('Preparing a {} sweep of {} members...'.format(self.axis, len(self.values)))

    def member_spec(self, value):
        """
        Problem solved for one axis value
        """
        raise NotImplementedError('Sweeps must define member_spec')

    def jobs(self):
        values = self.values
        if self.n_members != -1:
            values = values[0:self.n_members]

        return [(v, self.member_spec(v), self.config.grid, self.config.solver) for v in values]

    def run(self):
        """
        Run every member tracking errors. If the class is instantiated with
        debug=True exceptions will error out. Otherwise any errors will be
        passed over and counted/reported
        """
        self.start = time.time()
        jobs = self.jobs()
        self.log.info('Running {} members on {} worker(s)...'.format(len(jobs), self.workers))

        bar = None
        if not self.quiet:
            bar = progressbar.ProgressBar(max_value=len(jobs))

        if self.workers > 1 and len(jobs) > 1:
            with Pool(min(self.workers, len(jobs))) as pool:
                for i, result in enumerate(pool.imap_unordered(solve_member, jobs)):
                    self._collect(*result)
                    if bar is not None:
                        bar.update(i + 1)
        else:
            for i, job in enumerate(jobs):
                self._collect(*solve_member(job))
                if bar is not None:
                    bar.update(i + 1)

        if bar is not None:
            bar.finish()

        self.report(len(jobs))
        return self.trajectories

    def _collect(self, value, traj, error):
        """
        Manage what finishing a single member is to use with debug options.
        """
        if error is None and traj.failed:
            error = SolverFailure(traj.message)

        if error is not None:
            # If were not debugging allow exceptions and report them later
            if self.debug:
                raise error
            self.log.error('Error with {} = {}'.format(self.axis, value))
            self.log.error(error)
            self.errors.append((value, error))

        if traj is not None:
            self.trajectories[value] = traj
            if not traj.failed:
                self.completed += 1

    @property
    def partial(self):
        return len(self.errors) > 0

    def report(self, attempted):
        """
        Report timing and errors that occurred

        Args:
            attempted: Number of members attempted
        """
        self.log.info("{} / {} members solved.".format(self.completed, attempted))

        if len(self.errors) > 0:
            self.log.error('{} members failed.'.format(len(self.errors)))
            self.log.error('The following members failed with their corresponding errors:')

            for e in self.errors:
                self.log.error('\t{} - {}'.format(e[0], e[1]))

        self.log.info('Finished! Elapsed {:d}s\n'.format(int(time.time() - self.start)))

    def good_values(self):
        return sorted(v for v, t in self.trajectories.items() if not t.failed)

    def _entry(self, value, traj, err_u, err_v, profile=None):
        J = self.config.analysis.J
        points = track_free_boundary(traj, profile)
        a_hat, stderr = float('nan'), float('nan')
        if len(points) >= 3:
            a_hat, stderr = fit_sqrt_law(points)

        if J == 0:
            err_u, err_v = 0.0, 0.0

        return ConvergenceEntry(axis_value=value, l2_window_error_u=err_u,
                                l2_window_error_v=err_v,
                                segregation_integral=segregation_integral(traj),
                                reaction_mass=reaction_mass(traj),
                                fitted_a=a_hat, fitted_a_stderr=stderr)

    def build_report(self):
        raise NotImplementedError('Sweeps must define build_report')

    def check(self, report):
        raise NotImplementedError('Sweeps must define check')


class KSweep(SweepBase):
    """
    Class for sweeping the reaction rate and measuring the distance to the
    limit profile
    """
    axis = 'k'

    def member_spec(self, value):
        return self.config.spec.with_changes(k=value)

    def build_report(self):
        spec = self.config.spec
        profile = SelfSimilarProfile.from_spec(spec)
        J = self.config.analysis.J
        t_lo = self.config.analysis.time_floor(spec.T)

        report = ConvergenceReport('k', profile=profile, partial=self.partial)
        for value in self.good_values():
            traj = self.trajectories[value]
            err_u, err_v = l2_window_error(traj, profile, J, t_lo)
            report.add(self._entry(value, traj, err_u, err_v, profile))

        return report

    def check(self, report):
        """
        Monotone decrease of the window error and segregation integral, the
        overall drop of both from the smallest to the largest rate and a
        k uniform reaction mass over the fast rates

        Returns:
            checks: Dictionary of property name to boolean
        """
        settings = self.config.analysis
        slack = settings.monotone_slack
        ks = report.column('axis_value')
        err = report.column('l2_window_error_u')
        seg = report.column('segregation_integral')
        if ks.size < 2:
            err, seg = np.zeros(2), np.zeros(2)

        fast = report.column('reaction_mass')[ks >= settings.mass_min_k]
        mass_ratio = value_ratio(np.max(fast), np.min(fast)) if fast.size >= 2 else 1.0

        return {'error_u_nonincreasing': is_nonincreasing(err, slack),
                'segregation_nonincreasing': is_nonincreasing(seg, slack),
                'error_ratio_small': value_ratio(err[-1], err[0]) <= settings.error_ratio,
                'segregation_ratio_small':
                value_ratio(seg[-1], seg[0]) <= settings.segregation_ratio,
                'reaction_mass_bounded': mass_ratio <= settings.mass_ratio}


class DiffusivitySweep(SweepBase):
    """
    Class for sweeping d_v toward 0. The d_v = 0 reference run is added to
    the members automatically and every other member is measured against it.
    """
    axis = 'd_v'
    reference_value = 0.0

    def member_spec(self, value):
        return self.config.spec.with_changes(d_v=value)

    def jobs(self):
        jobs = super().jobs()
        ref = self.reference_value
        return [(ref, self.member_spec(ref), self.config.grid, self.config.solver)] + jobs

    def build_report(self):
        spec = self.config.spec
        J = self.config.analysis.J
        t_lo = self.config.analysis.time_floor(spec.T)

        reference = self.trajectories.get(self.reference_value)
        if reference is None or reference.failed:
            raise SolverFailure('The d_v = 0 reference run did not finish')

        profile = SelfSimilarProfile.from_spec(spec.with_changes(d_v=0.0))
        report = ConvergenceReport('d_v', profile=profile, partial=self.partial)

        for value in self.good_values():
            if value == self.reference_value:
                continue
            traj = self.trajectories[value]
            dist_u, dist_v = window_distance(traj, reference, J, t_lo)
            report.add(self._entry(value, traj, dist_u, dist_v, profile))

        return report

    def check(self, report):
        """
        The distance to the d_v = 0 run shrinks strictly as d_v decreases,
        i.e. increases strictly along the sorted axis
        """
        dist = report.column('l2_window_error_u')
        masses = report.column('reaction_mass')
        ref_mass = reaction_mass(self.trajectories[self.reference_value])
        all_masses = np.append(masses, ref_mass)
        ratio = float(np.max(all_masses) / np.min(all_masses)) if np.min(all_masses) > 0 else np.inf

        return {'distance_decreasing': is_strictly_decreasing(dist[::-1]),
                'reaction_mass_bounded': ratio <= self.config.analysis.mass_ratio}
