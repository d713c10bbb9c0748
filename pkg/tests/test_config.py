from os.path import dirname, join

import pytest

from fastreact.config import *
from fastreact.exceptions import InvalidInputError
from fastreact.kinetics import KineticsKind
from fastreact.model import DomainVariant, InitialKind

DATA = join(dirname(__file__), 'data')

MINIMAL = """
[problem]
variant = whole_line
d_u = 1
d_v = 1
k = 10
U_0 = 1
V_0 = 1
T = 0.25

[grid]
nx = 64
dt = 0.01
{extra}
"""


def minimal(extra=''):
    return MINIMAL.format(extra=extra)


class TestReadSmall():
    """
    Test reading the small benchmark config
    """

    @classmethod
    def setup_class(self):
        self.config = read_config(join(DATA, 'small.ini'))

    def test_problem(self):
        spec = self.config.spec
        assert spec.variant == DomainVariant.WHOLE_LINE
        assert (spec.d_u, spec.d_v, spec.k, spec.U_0, spec.V_0, spec.T) == \
               (1.0, 1.0, 100.0, 1.0, 1.0, 0.25)
        assert spec.M == 1.0

    def test_grid(self):
        grid = self.config.grid
        assert (grid.x_left, grid.x_right, grid.nx, grid.dt) == (-5.0, 5.0, 160, 2.5e-3)
        assert len(grid.snapshot_times) == 10
        assert grid.snapshot_times[-1] == pytest.approx(0.25)

    def test_sweep(self):
        assert self.config.sweep.axis == 'k'
        assert self.config.sweep.values == (1.0, 100.0, 10000.0)

    def test_analysis(self):
        a = self.config.analysis
        assert a.J == 2.0
        assert a.xi_shifts == (2, 4)
        assert a.bounds_ks == (1.0, 100.0)
        assert a.comparison_pairs == 2
        # untouched entries keep their defaults
        assert a.residual_tol == 1e-10

    def test_source_recorded(self):
        assert self.config.source.endswith('small.ini')

    def test_hash_stable(self):
        assert self.config.config_hash() == read_config(join(DATA, 'small.ini')).config_hash()

    def test_overrides(self):
        c = self.config.with_overrides(output_dir='elsewhere', seed=3, workers=2)
        assert (c.output_dir, c.seed, c.workers) == ('elsewhere', 3, 2)
        assert c.config_hash() != self.config.config_hash()


def test_covering_grid_default():
    """
    Test a config without grid bounds gets the smallest valid grid
    """
    config = read_config(join(DATA, 'half_dv_zero.ini'))
    assert config.grid.x_left == 0.0
    assert config.grid.x_right == pytest.approx(4.0)
    assert len(config.grid.snapshot_times) == 20


def test_tabulated_and_perturbed():
    config = read_config(join(DATA, 'tabulated.ini'))
    assert config.spec.kinetics.kind == KineticsKind.TABULATED
    assert config.spec.initial.kind == InitialKind.PERTURBED
    assert [b.component for b in config.spec.initial.bumps] == ['v', 'u']
    assert config.grid.snapshot_times == (0.1, 0.2)


def test_power_kinetics():
    config = read_config_string(minimal('[kinetics]\nkind = power\nm = 0.5\nn = 2'))
    assert (config.spec.kinetics.m, config.spec.kinetics.n) == (0.5, 2.0)


def test_solver_and_gate_settings():
    text = minimal('[solver]\ndiffusion_theta = 0.5\nreaction_scheme = Exact\n'
                   '[analysis]\nerror_ratio = 0.3\nsegregation_ratio = 0.2\nmass_min_k = 1000')
    config = read_config_string(text)
    assert config.solver.reaction_scheme == 'exact'
    assert config.solver.to_dict()['reaction_scheme'] == 'exact'
    a = config.analysis
    assert (a.error_ratio, a.segregation_ratio, a.mass_min_k) == (0.3, 0.2, 1000.0)


@pytest.mark.parametrize('text', [
    # d_u must be positive
    minimal().replace('d_u = 1', 'd_u = 0'),
    # missing entry
    minimal().replace('k = 10', ''),
    # unknown key
    minimal('[solver]\nsolver_speed = 11'),
    # unknown section
    minimal('[plots]\ncolor = red'),
    # not a number
    minimal().replace('nx = 64', 'nx = many'),
    # sweep values not increasing
    minimal('[sweep]\naxis = k\nvalues = 10, 1'),
    # sweep values not positive
    minimal('[sweep]\naxis = d_v\nvalues = 0, 1'),
    # unknown sweep axis
    minimal('[sweep]\naxis = mu\nvalues = 1'),
    # grid too short for T
    minimal('x_left = -1\nx_right = 1'),
    # theta not supported
    minimal('[solver]\ndiffusion_theta = 0.3'),
    # unknown reaction scheme
    minimal('[solver]\nreaction_scheme = rk4'),
    # bad bump
    minimal('[initial]\nkind = perturbed\nbumps = u 0 1'),
    # missing kinetics table
    minimal('[kinetics]\nkind = tabulated\ntable = nowhere.csv'),
    # zero workers
    minimal('[output]\nworkers = 0'),
])
def test_invalid_configs(text):
    with pytest.raises(InvalidInputError):
        read_config_string(text, base_dir=DATA)


def test_non_monotone_table_rejected():
    text = minimal('[kinetics]\nkind = tabulated\ntable = non_monotone_table.csv')
    with pytest.raises(InvalidInputError):
        read_config_string(text, base_dir=DATA)


def test_missing_file():
    with pytest.raises(InvalidInputError):
        read_config(join(DATA, 'not_here.ini'))


def test_unwritable_output(tmpdir):
    blocker = tmpdir.join('file.txt')
    blocker.write('x')
    config = read_config_string(minimal()).with_overrides(output_dir=str(blocker.join('out')))
    with pytest.raises(InvalidInputError):
        config.check_output_dir()


@pytest.mark.parametrize('value, expected', [
    ('1, 2,3', [1.0, 2.0, 3.0]),
    ('4,', [4.0]),
    ('', []),
])
def test_parse_list(value, expected):
    assert parse_list(value) == expected


def test_parse_bumps():
    bumps = parse_bumps('u 0 1 0.1; v -2 0.5 0.2')
    assert [(b.component, b.center, b.width, b.amplitude) for b in bumps] == \
           [('u', 0.0, 1.0, 0.1), ('v', -2.0, 0.5, 0.2)]
