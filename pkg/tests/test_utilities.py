import logging
import os

import pytest

from fastreact.utilities import *


class TestAssignDefaultKwargs():
    """
    Test the function assign_default_kwargs. This class is necessary so
    we can add attributes to it without raising exceptions.
    """

    @pytest.mark.parametrize("kwargs, defaults, leave, expected_kwargs, expected_attr", [
        # Assert missing attributes are added to object and removed from kwargs
        ({}, {'debug': False}, [], {}, {'debug': False}),
        # Assert we don't overwrite the kwargs provided by user
        ({'debug': True, }, {'debug': False}, [], {}, {'debug': True}),
        # Assert we leave non-default keys and still assign defaults
        ({'stays': True, }, {'debug': False}, [], {'stays': True}, {'debug': False}),
        # Assert keys can be left in the mod kwargs but still be used
        ({'workers': 4}, {'debug': False, 'workers': 1}, ['workers'], {'workers': 4},
         {'debug': False, 'workers': 4}),
    ])
    def test_assign_default_kwargs(self, kwargs, defaults, leave, expected_kwargs, expected_attr):
        """
        Test we can assign object attributes to an object given kwargs and defaults
        """
        mod_kwargs = assign_default_kwargs(self, kwargs, defaults, leave)

        # 1. Test We have removed kw from mod_kwargs
        for k, v in expected_kwargs.items():
            assert v == mod_kwargs[k]

        # 2. Test the object has the attributes/values
        for k, v in expected_attr.items():
            assert getattr(self, k) == v


@pytest.mark.parametrize('debug, level', [(True, logging.DEBUG), (False, logging.INFO)])
def test_get_logger_level(debug, level):
    """
    Test the colored logger shows the requested level
    """
    log = get_logger('loggertest_{}'.format(debug), debug=debug)
    assert log.isEnabledFor(level)


def test_config_hash_ignores_key_order():
    assert config_hash({'a': 1, 'b': [1, 2]}) == config_hash({'b': [1, 2], 'a': 1})


def test_config_hash_sees_values():
    assert config_hash({'k': 1.0}) != config_hash({'k': 10.0})


def test_timestamp_is_utc():
    assert timestamp().endswith('+00:00')


def test_ensure_writable_dir_makes_nested(tmpdir):
    d = os.path.join(str(tmpdir), 'one', 'two')
    assert ensure_writable_dir(d)
    assert os.path.isdir(d)


def test_ensure_writable_dir_blocked_by_file(tmpdir):
    """
    Test a path below a regular file is reported unwritable
    """
    f = os.path.join(str(tmpdir), 'file.txt')
    with open(f, 'w') as fp:
        fp.write('x')
    assert not ensure_writable_dir(os.path.join(f, 'out'))
