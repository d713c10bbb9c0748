"""
Command line tool for fastreact. Every subcommand reads one config file,
writes its results and a manifest into <output>/<command> and returns an
exit code:

    0 pass, 1 config or validation error, 2 solver failure, 3 property failure
"""

import argparse
import sys
import time
from os.path import join

import numpy as np
import pandas as pd

from . import __version__
from .analysis import kamin_rescaled_error, trend_check, track_free_boundary
from .batch import DiffusivitySweep, KSweep
from .config import read_config
from .conversions import (diagnostics_to_dataframe, manifest, profile_to_dataframe,
                          write_csv, write_json, write_snapshots)
from .exceptions import FreeBoundaryError, InvalidInputError, SolverFailure
from .profile import SelfSimilarProfile, residual_report, sample_profile
from .solver import run as solve_problem
from .utilities import ensure_writable_dir, get_logger, timestamp
from .verify import PropertySuite

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_PROPERTY = 3

# Number of similarity samples in the profile CSV
PROFILE_SAMPLES = 801


class _Run:
    """
    Bookkeeping shared by the commands: output directory, timing and the
    manifest written at the end no matter the outcome.
    """

    def __init__(self, config, command, quiet=False):
        self.config = config
        self.command = command
        self.quiet = quiet
        self.directory = join(config.output_dir, command)
        self.log = get_logger('fastreact.{}'.format(command), debug=not quiet)
        self.started = timestamp()
        self.start = time.time()

        if not ensure_writable_dir(self.directory):
            raise InvalidInputError('Output directory {} is not writable'.format(self.directory))

    def path(self, name):
        return join(self.directory, name)

    def finish(self, exit_code, **extras):
        info = manifest(self.config, self.command, self.started, timestamp(),
                        time.time() - self.start, exit_code=exit_code, **extras)
        write_json(info, self.path('manifest.json'))
        self.log.info('Wrote results to {}'.format(self.directory))
        return exit_code


def _profile_eta(config, profile):
    """
    Similarity samples covering the analysis window, from 0 on the half line
    """
    spec = config.spec
    reach = max(config.analysis.J, 1.0) * 2.0 * np.sqrt(max(spec.d_u, spec.d_v))
    reach = max(reach, 2.0 * abs(profile.a))
    lower = -reach if spec.is_whole_line else 0.0
    return np.linspace(lower, reach, PROFILE_SAMPLES)


def cmd_profile(config, quiet=False):
    """
    Solve the self-similar profile of the configured problem and write it
    with its residual report
    """
    run = _Run(config, 'profile', quiet=quiet)

    try:
        profile = SelfSimilarProfile.from_spec(config.spec)
    except FreeBoundaryError as e:
        run.log.error('Free boundary solve failed: {}'.format(e))
        return run.finish(EXIT_SOLVER, error=str(e), bracket=e.bracket)

    report = residual_report(profile)
    worst = report.worst()
    tol = config.analysis.residual_tol

    write_csv(profile_to_dataframe(sample_profile(profile, _profile_eta(config, profile))),
              run.path('profile.csv'))
    header = {'case': profile.case.value, 'a': profile.a, 'residuals': report.to_dict(),
              'worst_residual': worst, 'residual_tol': tol}
    write_json(header, run.path('profile.json'))

    run.log.info('{}: a = {:0.16g}, worst residual = {:0.3e}'.format(
        profile.case.value, profile.a, worst))

    if worst > tol:
        run.log.error('Profile residual {:0.3e} exceeds {:0.1e}'.format(worst, tol))
        return run.finish(EXIT_PROPERTY, a=profile.a, worst_residual=worst)

    return run.finish(EXIT_OK, a=profile.a, worst_residual=worst)


def cmd_solve(config, quiet=False):
    """
    Run the solver once and write snapshots, per step diagnostics and the
    free boundary track
    """
    run = _Run(config, 'solve', quiet=quiet)
    traj = solve_problem(config.spec, config.grid, config.solver)

    write_snapshots(traj, run.directory)
    write_csv(diagnostics_to_dataframe(traj), run.path('diagnostics.csv'))
    track = pd.DataFrame(track_free_boundary(traj), columns=['t', 'xi'])
    write_csv(track, run.path('free_boundary.csv'))

    extras = {'failed': traj.failed, 'message': traj.message,
              'max_bound_violation': traj.max_bound_violation,
              'bounds_tolerance': traj.bounds_tolerance,
              'final_time': float(traj.times[-1])}

    if traj.failed:
        run.log.error('Solver failed, partial outputs kept: {}'.format(traj.message))
        return run.finish(EXIT_SOLVER, **extras)

    if not traj.bounds_ok:
        run.log.error('Bounds violated by {:0.3e}'.format(traj.max_bound_violation))
        return run.finish(EXIT_PROPERTY, **extras)

    return run.finish(EXIT_OK, **extras)


SWEEPS = {'k': KSweep, 'd_v': DiffusivitySweep}


def cmd_sweep(config, quiet=False):
    """
    Solve every member of a k or d_v sweep and write the convergence report
    """
    if config.sweep is None or config.sweep.axis not in SWEEPS:
        raise InvalidInputError('sweep needs [sweep] axis = k or d_v, use longtime for time')

    run = _Run(config, 'sweep', quiet=quiet)
    sweep = SWEEPS[config.sweep.axis](config, debug=False, workers=config.workers,
                                      quiet=quiet)
    sweep.run()

    try:
        report = sweep.build_report()
    except SolverFailure as e:
        run.log.error(str(e))
        return run.finish(EXIT_SOLVER, partial=True, failed_members=_failures(sweep))

    checks = sweep.check(report) if report.entries else {}
    write_csv(report.to_dataframe(), run.path('report.csv'))
    write_json({'axis': report.sweep_axis, 'partial': report.partial,
                'profile': report.profile.to_dict() if report.profile else None,
                'checks': checks, 'failed_members': _failures(sweep)},
               run.path('report.json'))

    extras = {'partial': report.partial, 'checks': checks}
    if report.partial:
        run.log.error('{} sweep members failed, report is partial'.format(len(sweep.errors)))
        return run.finish(EXIT_SOLVER, **extras)

    failing = [name for name, ok in checks.items() if not ok]
    if failing:
        run.log.error('Failing properties: {}'.format(', '.join(failing)))
        return run.finish(EXIT_PROPERTY, failing=failing, **extras)

    return run.finish(EXIT_OK, **extras)


def _failures(sweep):
    return {str(value): str(e) for value, e in sweep.errors}


def cmd_longtime(config, quiet=False):
    """
    Run once to the largest configured time and measure the rescaled
    distance to the profile at each time
    """
    if config.sweep is None or config.sweep.axis != 'time':
        raise InvalidInputError('longtime needs [sweep] axis = time')

    times = list(config.sweep.values)
    t_max = times[-1]
    J = config.analysis.J
    spec = config.spec.with_changes(T=t_max)
    grid = config.grid.with_changes(snapshot_times=tuple(times))
    grid.validate(spec)

    reach = J * np.sqrt(t_max)
    if reach > grid.x_right or (spec.is_whole_line and -reach < grid.x_left):
        raise InvalidInputError('Window J sqrt(t_max) = {:0.3f} leaves the grid [{}, {}]'
                                ''.format(reach, grid.x_left, grid.x_right))

    run = _Run(config, 'longtime', quiet=quiet)
    profile = SelfSimilarProfile.from_spec(spec)
    traj = solve_problem(spec, grid, config.solver)

    rows = []
    for t in times:
        if t > traj.times[-1]:
            break
        err_u, err_v = kamin_rescaled_error(traj, profile, t, J)
        rows.append({'t': t, 'rescaled_error_u': err_u, 'rescaled_error_v': err_v})
        run.log.info('t = {:0.6g}: rescaled error u = {:0.4e}, v = {:0.4e}'.format(
            t, err_u, err_v))

    df = pd.DataFrame(rows, columns=['t', 'rescaled_error_u', 'rescaled_error_v'])
    write_csv(df, run.path('longtime.csv'))

    if traj.failed:
        run.log.error('Solver failed, partial outputs kept: {}'.format(traj.message))
        return run.finish(EXIT_SOLVER, failed=True, message=traj.message)

    trend = trend_check(df['rescaled_error_u'].values, config.analysis.longtime_slack)
    write_json({'profile': profile.to_dict(), 'trend': trend.to_dict()},
               run.path('longtime.json'))

    if trend.informational:
        run.log.warning('Rescaled error is not monotone: {}'.format(trend.note))

    if not trend.passed:
        run.log.error('Rescaled error does not decrease')
        return run.finish(EXIT_PROPERTY, trend=trend.to_dict())

    return run.finish(EXIT_OK, trend=trend.to_dict())


def cmd_verify(config, quiet=False):
    """
    Run the property suite and write the scorecard
    """
    run = _Run(config, 'verify', quiet=quiet)
    suite = PropertySuite(config, quiet=quiet)
    suite.run()

    scorecard = suite.scorecard()
    write_json(scorecard, run.path('scorecard.json'))

    if not suite.passed:
        run.log.error('Failing properties: {}'.format(', '.join(suite.failing)))
        return run.finish(EXIT_PROPERTY, failing=suite.failing)

    return run.finish(EXIT_OK, failing=[])


COMMANDS = {'profile': cmd_profile,
            'solve': cmd_solve,
            'sweep': cmd_sweep,
            'longtime': cmd_longtime,
            'verify': cmd_verify}


def build_parser():
    parser = argparse.ArgumentParser(
        prog='fastreact',
        description='Fast reaction limit solver, profiles and convergence checks')

    parser.add_argument('command', metavar='COMMAND', choices=list(COMMANDS),
                        help='One of {}'.format(', '.join(COMMANDS)))

    parser.add_argument(
        '--config',
        '-c',
        dest='config',
        required=True,
        help='Path to the run configuration')

    parser.add_argument(
        '--output',
        '-o',
        dest='output',
        help='Output directory, overrides [output] directory')

    parser.add_argument(
        '--workers',
        '-w',
        dest='workers',
        type=int,
        help='Size of the sweep worker pool')

    parser.add_argument(
        '--seed',
        dest='seed',
        type=int,
        help='Seed for the randomized property checks')

    parser.add_argument(
        '--quiet',
        '-q',
        dest='quiet',
        action='store_true',
        help='Hide debug statements and progress bars')

    parser.add_argument('--version', action='version',
                        version='%(prog)s {}'.format(__version__))
    return parser


def main(argv=None):
    """
    Entry point of the fastreact console script

    Returns:
        exit_code: 0 pass, 1 invalid input, 2 solver failure, 3 property failure
    """
    args = build_parser().parse_args(argv)
    log = get_logger('fastreact', debug=not args.quiet)

    try:
        config = read_config(args.config)
        config = config.with_overrides(output_dir=args.output, seed=args.seed,
                                       workers=args.workers)
        config.check_output_dir()
        return COMMANDS[args.command](config, quiet=args.quiet)

    except (InvalidInputError, ValueError) as e:
        log.error('Invalid input: {}'.format(e))
        return EXIT_INVALID

    except (SolverFailure, FreeBoundaryError) as e:
        log.error('Solver failure: {}'.format(e))
        return EXIT_SOLVER


if __name__ == '__main__':
    sys.exit(main())
