"""
Module for reading run configurations. A configuration is an INI style
file of key = value pairs in the sections

    [problem]   variant, d_u, d_v, k, U_0, V_0, M, T
    [kinetics]  kind, m, n, mu, table
    [initial]   kind, width, base, gap, bumps
    [grid]      x_left, x_right, nx, dt, snapshot_times, n_snapshots
    [solver]    scheme, diffusion_theta, reaction_tol, max_reaction_iters,
                reaction_scheme
    [sweep]     axis, values
    [analysis]  J, t_lo and the property tolerances
    [output]    directory, workers, seed

Lists are comma separated, bumps are semicolon separated groups of
`component center width amplitude`.
"""

import configparser
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .conversions import read_kinetics_table
from .exceptions import InvalidInputError
from .kinetics import Kinetics, KineticsKind
from .model import Bump, GridSpec, InitialData, InitialKind, ProblemSpec
from .solver import SolverConfig
from .utilities import config_hash, ensure_writable_dir

SECTIONS = ['problem', 'kinetics', 'initial', 'grid', 'solver', 'sweep',
            'analysis', 'output']

# Allowed keys per section, configparser lower cases every key
KEYS = {
    'problem': ['variant', 'd_u', 'd_v', 'k', 'u_0', 'v_0', 'm', 't'],
    'kinetics': ['kind', 'm', 'n', 'mu', 'table'],
    'initial': ['kind', 'width', 'base', 'gap', 'bumps'],
    'grid': ['x_left', 'x_right', 'nx', 'dt', 'snapshot_times', 'n_snapshots'],
    'solver': ['scheme', 'diffusion_theta', 'reaction_tol', 'max_reaction_iters',
               'reaction_scheme'],
    'sweep': ['axis', 'values'],
    'analysis': ['j', 't_lo', 'xi_shifts', 'monotone_slack', 'longtime_slack',
                 'comparison_tol', 'comparison_pairs', 'comparison_k',
                 'contraction_tol', 'mass_ratio', 'mass_min_k', 'error_ratio',
                 'segregation_ratio', 'residual_tol', 'reaction_check_tol',
                 'bounds_ks', 'convergence_factor', 'segregation_ks', 'heat_order'],
    'output': ['directory', 'workers', 'seed'],
}

SWEEP_AXES = ['k', 'd_v', 'time']


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))

        if self.axis not in SWEEP_AXES:
            raise InvalidInputError('Sweep axis must be one of {}, got {}'
                                    ''.format(SWEEP_AXES, self.axis))
        values = np.asarray(self.values)
        if values.size == 0:
            raise InvalidInputError('Sweep needs at least one value')
        if np.any(values <= 0) or np.any(np.diff(values) <= 0):
            raise InvalidInputError('Sweep values must be positive and strictly increasing')


@dataclass(frozen=True)
class AnalysisSettings:
    """
    Window sizes and tolerances of the property checks. Shifts are in cells.
    A t_lo of None means 5% of the horizon.
    """
    J: float = 4.0
    t_lo: float = None
    xi_shifts: tuple = (2, 4, 8)
    monotone_slack: float = 0.02
    longtime_slack: float = 0.05
    comparison_tol: float = 1e-8
    comparison_pairs: int = 20
    comparison_k: float = 100.0
    contraction_tol: float = 1e-6
    mass_ratio: float = 2.0
    mass_min_k: float = 100.0
    error_ratio: float = 0.25
    segregation_ratio: float = 0.1
    residual_tol: float = 1e-10
    reaction_check_tol: float = 1e-9
    bounds_ks: tuple = (1.0, 100.0, 10000.0)
    segregation_ks: tuple = (1.0, 100.0, 10000.0)
    convergence_factor: float = 3.0
    heat_order: float = 1.8

    def __post_init__(self):
        object.__setattr__(self, 'xi_shifts', tuple(int(s) for s in self.xi_shifts))
        object.__setattr__(self, 'bounds_ks', tuple(float(s) for s in self.bounds_ks))
        object.__setattr__(self, 'segregation_ks',
                           tuple(float(s) for s in self.segregation_ks))

        if self.J < 0:
            raise InvalidInputError('J must be >= 0')
        if self.t_lo is not None and self.t_lo <= 0:
            raise InvalidInputError('t_lo must be > 0')

    def time_floor(self, T):
        return 0.05 * T if self.t_lo is None else self.t_lo


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a CLI command needs.

    Attributes:
        spec: ProblemSpec
        grid: GridSpec
        solver: SolverConfig
        sweep: SweepSpec or None
        analysis: AnalysisSettings
        output_dir: Directory for results
        seed: Seed of the randomized property checks
        workers: Size of the sweep worker pool
        source: Path of the file the config was read from
    """
    spec: ProblemSpec
    grid: GridSpec
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepSpec = None
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    output_dir: str = './output'
    seed: int = 0
    workers: int = 1
    source: str = None

    def with_overrides(self, output_dir=None, seed=None, workers=None):
        changes = {}
        if output_dir is not None:
            changes['output_dir'] = output_dir
        if seed is not None:
            changes['seed'] = int(seed)
        if workers is not None:
            if int(workers) < 1:
                raise InvalidInputError('workers must be >= 1')
            changes['workers'] = int(workers)
        return replace(self, **changes)

    def check_output_dir(self):
        if not ensure_writable_dir(self.output_dir):
            raise InvalidInputError('Output directory {} is not writable'.format(self.output_dir))

    def to_dict(self):
        return {'spec': self.spec.to_dict(), 'grid': self.grid.to_dict(),
                'solver': self.solver.to_dict(),
                'sweep': None if self.sweep is None else asdict(self.sweep),
                'analysis': asdict(self.analysis), 'seed': self.seed}

    def config_hash(self):
        return config_hash(self.to_dict())


def parse_list(value, cast=float):
    """
    Split a comma separated string into a list of values
    """
    return [cast(v.strip()) for v in value.split(',') if v.strip()]


def parse_bumps(value):
    """
    Parse `component center width amplitude; ...` into a tuple of Bump
    """
    bumps = []
    for group in value.split(';'):
        pieces = group.split()
        if not pieces:
            continue
        if len(pieces) != 4:
            raise InvalidInputError('Bumps need 4 entries, got "{}"'.format(group.strip()))
        component = pieces[0].lower()
        center, width, amplitude = (float(p) for p in pieces[1:])
        bumps.append(Bump(component, center, width, amplitude))
    return tuple(bumps)


class _Section:
    """
    Typed access to one config section, unknown keys are rejected
    """

    def __init__(self, parser, name):
        self.name = name
        self.items = dict(parser.items(name)) if parser.has_section(name) else {}

        unknown = set(self.items) - set(KEYS[name])
        if unknown:
            raise InvalidInputError('Unknown keys in [{}]: {}'
                                    ''.format(name, ', '.join(sorted(unknown))))

    def __contains__(self, key):
        return key in self.items

    def get(self, key, default=None, cast=float):
        if key not in self.items:
            return default
        try:
            return cast(self.items[key])
        except ValueError:
            raise InvalidInputError('[{}] {} = {} is not a valid {}'
                                    ''.format(self.name, key, self.items[key], cast.__name__))

    def require(self, key, cast=float):
        if key not in self.items:
            raise InvalidInputError('[{}] is missing {}'.format(self.name, key))
        return self.get(key, cast=cast)


def _build_kinetics(section, base_dir):
    kind = KineticsKind(section.get('kind', 'product', cast=str).strip().lower())
    mu = section.get('mu', 0.0)

    if kind == KineticsKind.PRODUCT:
        return Kinetics.product(mu=mu)

    elif kind == KineticsKind.POWER:
        return Kinetics.power(section.require('m'), section.require('n'), mu=mu)

    table = section.require('table', cast=str).strip()
    if not os.path.isabs(table):
        table = os.path.join(base_dir, table)
    u_grid, v_grid, values = read_kinetics_table(table)
    return Kinetics.tabulated(u_grid, v_grid, values, mu=mu)


def _build_initial(section):
    kind = InitialKind(section.get('kind', 'sharp_step', cast=str).strip().lower())
    base = InitialKind(section.get('base', 'sharp_step', cast=str).strip().lower())
    bumps = parse_bumps(section.get('bumps', '', cast=str))
    return InitialData(kind=kind, width=section.get('width', 0.0), base=base,
                       bumps=bumps, gap=section.get('gap', 0.0))


def _build_grid(section, spec):
    nx = section.require('nx', cast=int)
    dt = section.require('dt')

    if 'snapshot_times' in section:
        times = section.get('snapshot_times', cast=parse_list)
    else:
        n = section.get('n_snapshots', 20, cast=int)
        if n < 1:
            raise InvalidInputError('n_snapshots must be >= 1')
        times = list(np.linspace(0, spec.T, n + 1)[1:])

    if 'x_left' in section or 'x_right' in section:
        default_left = 0.0 if not spec.is_whole_line else None
        x_left = section.get('x_left', default_left)
        x_right = section.require('x_right')
        if x_left is None:
            raise InvalidInputError('[grid] is missing x_left')
        grid = GridSpec(x_left, x_right, nx, dt, tuple(times))
    else:
        grid = GridSpec.covering(spec, nx, dt, snapshot_times=times)

    grid.validate(spec)
    return grid


def build_config(parser, base_dir='.', source=None):
    """
    Build a RunConfig from a filled ConfigParser

    Raises:
        InvalidInputError: For missing, unknown or invalid entries
    """
    for name in parser.sections():
        if name not in SECTIONS:
            raise InvalidInputError('Unknown section [{}]'.format(name))

    sections = {name: _Section(parser, name) for name in SECTIONS}
    problem = sections['problem']

    spec = ProblemSpec(variant=problem.get('variant', 'whole_line', cast=str).strip().lower(),
                       d_u=problem.require('d_u'), d_v=problem.require('d_v'),
                       k=problem.require('k'), U_0=problem.require('u_0'),
                       V_0=problem.require('v_0'), T=problem.require('t'),
                       kinetics=_build_kinetics(sections['kinetics'], base_dir),
                       initial=_build_initial(sections['initial']),
                       M=problem.get('m'))

    grid = _build_grid(sections['grid'], spec)

    s = sections['solver']
    solver = SolverConfig(scheme=s.get('scheme', 'strang', cast=str).strip().lower(),
                          diffusion_theta=s.get('diffusion_theta', 1.0),
                          reaction_tol=s.get('reaction_tol', 1e-12),
                          max_reaction_iters=s.get('max_reaction_iters', 100, cast=int),
                          reaction_scheme=s.get('reaction_scheme', 'implicit_euler',
                                                cast=str).strip().lower())

    sw = sections['sweep']
    sweep = None
    if 'axis' in sw:
        sweep = SweepSpec(sw.require('axis', cast=str).strip().lower(),
                          tuple(sw.require('values', cast=parse_list)))

    a = sections['analysis']
    defaults = AnalysisSettings()
    analysis = AnalysisSettings(
        J=a.get('j', defaults.J),
        t_lo=a.get('t_lo', defaults.t_lo),
        xi_shifts=tuple(a.get('xi_shifts', defaults.xi_shifts,
                              cast=lambda v: parse_list(v, int))),
        monotone_slack=a.get('monotone_slack', defaults.monotone_slack),
        longtime_slack=a.get('longtime_slack', defaults.longtime_slack),
        comparison_tol=a.get('comparison_tol', defaults.comparison_tol),
        comparison_pairs=a.get('comparison_pairs', defaults.comparison_pairs, cast=int),
        comparison_k=a.get('comparison_k', defaults.comparison_k),
        contraction_tol=a.get('contraction_tol', defaults.contraction_tol),
        mass_ratio=a.get('mass_ratio', defaults.mass_ratio),
        mass_min_k=a.get('mass_min_k', defaults.mass_min_k),
        error_ratio=a.get('error_ratio', defaults.error_ratio),
        segregation_ratio=a.get('segregation_ratio', defaults.segregation_ratio),
        residual_tol=a.get('residual_tol', defaults.residual_tol),
        reaction_check_tol=a.get('reaction_check_tol', defaults.reaction_check_tol),
        bounds_ks=tuple(a.get('bounds_ks', defaults.bounds_ks, cast=parse_list)),
        segregation_ks=tuple(a.get('segregation_ks', defaults.segregation_ks,
                                   cast=parse_list)),
        convergence_factor=a.get('convergence_factor', defaults.convergence_factor),
        heat_order=a.get('heat_order', defaults.heat_order))

    o = sections['output']
    workers = o.get('workers', 1, cast=int)
    if workers < 1:
        raise InvalidInputError('workers must be >= 1')

    return RunConfig(spec=spec, grid=grid, solver=solver, sweep=sweep, analysis=analysis,
                     output_dir=o.get('directory', './output', cast=str).strip(),
                     seed=o.get('seed', 0, cast=int), workers=workers, source=source)


def read_config(filename):
    """
    Read and validate a configuration file

    Args:
        filename: Path to an INI style config

    Returns:
        config: RunConfig

    Raises:
        InvalidInputError: If the file is missing or invalid
    """
    if not os.path.isfile(filename):
        raise InvalidInputError('Config file {} does not exist'.format(filename))

    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';;'))
    try:
        parser.read(filename)
    except configparser.Error as e:
        raise InvalidInputError('Could not parse {}: {}'.format(filename, e))

    base_dir = os.path.dirname(os.path.abspath(filename))
    return build_config(parser, base_dir=base_dir, source=filename)


def read_config_string(text, base_dir='.'):
    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';;'))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise InvalidInputError('Could not parse config: {}'.format(e))
    return build_config(parser, base_dir=base_dir)
