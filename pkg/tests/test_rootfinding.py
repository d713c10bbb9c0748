import numpy as np
import pytest

from fastreact.exceptions import FreeBoundaryError, SolverFailure
from fastreact.rootfinding import *


def test_expand_bracket_grows_until_sign_change():
    lo, hi, f_lo, f_hi = expand_bracket(lambda x: 50.0 - x, -1.0, 1.0)
    assert lo <= 50 <= hi
    assert f_lo * f_hi <= 0


def test_expand_bracket_respects_lower_bound():
    lo, hi, f_lo, f_hi = expand_bracket(lambda x: 7.0 - x, 0.0, 1.0, lower_bound=0.0)
    assert lo == 0.0
    assert hi >= 7


def test_expand_bracket_gives_up():
    with pytest.raises(FreeBoundaryError):
        expand_bracket(lambda x: 1.0 + x * x, -1.0, 1.0, max_expansions=5)


@pytest.mark.parametrize('func, dfunc, lo, hi, root', [
    (lambda x: x ** 3 - 2.0, lambda x: 3 * x ** 2, 0.0, 4.0, 2.0 ** (1 / 3)),
    (lambda x: np.cos(x) - x, lambda x: -np.sin(x) - 1, 0.0, 1.0, 0.7390851332151607),
    # decreasing functions are handled by orienting the bracket
    (lambda x: np.exp(-x) - 0.5, lambda x: -np.exp(-x), 0.0, 5.0, np.log(2.0)),
])
def test_bisect_newton(func, dfunc, lo, hi, root):
    assert bisect_newton(func, dfunc, lo, hi) == pytest.approx(root, abs=1e-14)


def test_bisect_newton_bad_derivative():
    """
    Test a useless derivative falls back to bisection and still converges
    """
    x = bisect_newton(lambda x: x - 0.3, lambda x: np.nan, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-12)


@pytest.mark.parametrize('dfunc', [
    lambda x: 1e-30,
    lambda x: -1.0,
    lambda x: 0.0,
])
def test_bisect_newton_rejected_steps_narrow_bracket(dfunc):
    """
    Test bisection fallback keeps shrinking the bracket when every Newton
    step is rejected
    """
    func = lambda x: np.tanh(x - 0.3) + (x - 0.3) ** 3
    x = bisect_newton(func, dfunc, -2.0, 2.0)
    assert x == pytest.approx(0.3, abs=1e-12)


def test_bisect_newton_not_bracketed():
    with pytest.raises(FreeBoundaryError):
        bisect_newton(lambda x: x * x + 1, lambda x: 2 * x, -1.0, 1.0)


def test_vector_newton_bisect_sqrt_law():
    """
    Test the elementwise solver on x + sqrt(x) = c whose slope is infinite at
    the lower bracket end
    """
    c = np.array([0.0, 0.5, 2.0, 6.0])
    lo = np.zeros_like(c)
    hi = c.copy()

    def g(x, idx):
        return x + np.sqrt(x) - c[idx]

    def dg(x, idx):
        return 1.0 + 0.5 / np.sqrt(x)

    x = vector_newton_bisect(g, dg, lo, hi, tol=1e-14)
    assert np.all(np.abs(x + np.sqrt(x) - c) <= 1e-13)
    assert x[-1] == pytest.approx(4.0)


def test_vector_newton_bisect_failure_carries_info():
    def g(x, idx):
        return x - 0.123456789

    with pytest.raises(SolverFailure) as e:
        vector_newton_bisect(g, lambda x, idx: np.full_like(x, np.nan), np.zeros(3),
                             np.ones(3), tol=1e-300, maxiter=3, k=5.0, dt=0.1)
    assert e.value.k == 5.0
    assert e.value.dt == 0.1
