from dataclasses import replace
from os.path import dirname, join

import pytest

from fastreact.config import read_config
from fastreact.exceptions import InvalidInputError
from fastreact.solver import SolverConfig
from fastreact.verify import *

DATA = join(dirname(__file__), 'data')


class TestSuiteOnBenchmark():
    """
    Run the cheaper properties on the shrunken benchmark
    """

    @classmethod
    def setup_class(self):
        self.config = read_config(join(DATA, 'small.ini'))
        self.suite = PropertySuite(self.config, quiet=True)
        self.suite.run(['bounds', 'reaction_conservation', 'segregation_trend',
                        'reaction_mass', 'profile_residuals'])

    @pytest.mark.parametrize('name', ['bounds', 'reaction_conservation', 'segregation_trend',
                                      'reaction_mass', 'profile_residuals'])
    def test_property_passes(self, name):
        result = self.suite.results[name]
        assert result.passed, result.detail

    def test_runs_shared(self):
        """
        Test each rate is solved once across properties
        """
        assert sorted(self.suite._runs) == [1.0, 100.0, 10000.0]

    def test_reaction_laws_reported(self):
        detail = self.suite.results['reaction_conservation'].detail
        assert 'configured' in detail
        assert 'power_0.5_0.5' in detail

    def test_scorecard(self):
        card = self.suite.scorecard()
        assert card['passed']
        assert card['failing'] == []
        assert set(card['properties']) == set(self.suite.results)


def test_unknown_property():
    suite = PropertySuite(read_config(join(DATA, 'small.ini')), quiet=True)
    with pytest.raises(InvalidInputError):
        suite.run(['elegance'])


def test_loose_reaction_tolerance_fails():
    config = read_config(join(DATA, 'small.ini'))
    config = replace(config, solver=SolverConfig(reaction_tol=1e-2))
    suite = PropertySuite(config, quiet=True)
    suite.run(['reaction_conservation'])
    assert suite.failing == ['reaction_conservation']
    assert not suite.passed


@pytest.mark.parametrize('segregation_ratio, passed', [(0.1, False), (1.0, True)])
def test_segregation_trend_needs_overall_drop(segregation_ratio, passed):
    """
    Test a slow decrease between two close rates is not enough to pass the
    default segregation gate
    """
    config = read_config(join(DATA, 'small.ini'))
    analysis = replace(config.analysis, segregation_ks=(1.0, 2.0),
                       segregation_ratio=segregation_ratio)
    suite = PropertySuite(replace(config, analysis=analysis), quiet=True)
    suite.run(['segregation_trend'])

    result = suite.results['segregation_trend']
    assert 0.1 < result.value < 1.0
    assert result.threshold == segregation_ratio
    assert result.passed == passed


def test_optional_property_does_not_fail_suite():
    suite = PropertySuite(read_config(join(DATA, 'small.ini')), quiet=True)
    suite.results['heat_oracle'] = PropertyResult('heat_oracle', False, required=False)
    assert suite.passed


def test_nested_grids():
    """
    Test the self convergence grids share nodes for any configured nx
    """
    config = read_config(join(DATA, 'small.ini'))
    config = replace(config, grid=config.grid.with_changes(nx=162))
    grids = PropertySuite(config, quiet=True)._nested_grids()
    assert [g.nx for g in grids] == [40, 80, 160]
    assert grids[0].dt == pytest.approx(16 * grids[2].dt)


@pytest.mark.slow
class TestSlowProperties():

    @classmethod
    def setup_class(self):
        self.config = read_config(join(DATA, 'small.ini'))
        self.suite = PropertySuite(self.config, quiet=True)
        self.suite.run(['comparison', 'contraction', 'self_convergence', 'heat_oracle'])

    def test_comparison(self):
        result = self.suite.results['comparison']
        assert len(result.detail['violations']) == 2
        assert result.passed

    def test_contraction(self):
        assert sorted(self.suite.results['contraction'].detail) == ['2', '4']

    def test_self_convergence_shrinks(self):
        diffs = self.suite.results['self_convergence'].detail['differences']
        assert diffs[1] < diffs[0]

    def test_heat_oracle_optional(self):
        result = self.suite.results['heat_oracle']
        assert not result.required
        assert result.detail['errors'][1] < result.detail['errors'][0]
