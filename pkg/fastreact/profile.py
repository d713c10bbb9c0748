"""
Module for the self similar limit profiles w(x, t) = f(x / sqrt(t)) the
fast reaction solutions converge to, the free boundary constant a that
places the interface at xi(t) = a sqrt(t) and residual checks of the
interface conditions.

Every integral of exp(-s^2 / 4d) is carried in a scaled form multiplied by
exp(a^2 / 4d) and expressed through erfcx so that no intermediate overflows:

    R(a; d) = exp(a^2/4d) int_a^inf     = sqrt(pi d) erfcx(a / 2 sqrt(d))
    L(a; d) = exp(a^2/4d) int_-inf^a    = sqrt(pi d) erfcx(-a / 2 sqrt(d))
    H(a; d) = exp(a^2/4d) int_0^a       = sqrt(pi d) exp(x^2) erf(x)
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import erf, erfc, erfcx

from .exceptions import FreeBoundaryError, InvalidInputError
from .model import DomainVariant
from .rootfinding import bisect_newton, expand_bracket

LOG = logging.getLogger('fastreact.profile')

# Guard on the Stefan residual denominator
STEFAN_EPS = 1e-300

# Difference step of the ODE residual in units of sqrt(d)
FD_STEP = 1e-3


class LimitCase(str, Enum):
    WHOLE_DV_POS = 'whole_dv_pos'
    WHOLE_DV_ZERO = 'whole_dv_zero'
    HALF_DV_POS = 'half_dv_pos'
    HALF_DV_ZERO = 'half_dv_zero'

    @classmethod
    def from_problem(cls, variant, d_v):
        whole = DomainVariant(variant) == DomainVariant.WHOLE_LINE
        if d_v > 0:
            return cls.WHOLE_DV_POS if whole else cls.HALF_DV_POS
        return cls.WHOLE_DV_ZERO if whole else cls.HALF_DV_ZERO

    @property
    def whole_line(self):
        return self in [LimitCase.WHOLE_DV_POS, LimitCase.WHOLE_DV_ZERO]

    @property
    def substrate_diffuses(self):
        return self in [LimitCase.WHOLE_DV_POS, LimitCase.HALF_DV_POS]


class SignClass(str, Enum):
    ZERO = 'zero'
    NEGATIVE = 'negative'
    POSITIVE = 'positive'
    INDETERMINATE = 'indeterminate'


@dataclass(frozen=True)
class ProfileParams:
    d_u: float
    d_v: float
    U_0: float
    V_0: float

    def __post_init__(self):
        values = [self.d_u, self.d_v, self.U_0, self.V_0]
        if not all(np.isfinite(values)):
            raise InvalidInputError('Profile parameters must be finite, got {}'.format(values))
        if self.d_u <= 0 or self.d_v < 0 or self.U_0 <= 0 or self.V_0 <= 0:
            raise InvalidInputError(
                'Profile parameters need d_u > 0, d_v >= 0, U_0 > 0, V_0 > 0, got {}'
                ''.format(values))

    @classmethod
    def from_spec(cls, spec):
        return cls(spec.d_u, spec.d_v, spec.U_0, spec.V_0)


def scaled_tail(a, d):
    """
    R(a; d), the scaled integral of exp(-s^2/4d) over (a, inf)
    """
    return np.sqrt(np.pi * d) * erfcx(a / (2.0 * np.sqrt(d)))


def scaled_head(a, d):
    """
    L(a; d), the scaled integral of exp(-s^2/4d) over (-inf, a)
    """
    return np.sqrt(np.pi * d) * erfcx(-a / (2.0 * np.sqrt(d)))


def scaled_half(a, d):
    """
    H(a; d), the scaled integral of exp(-s^2/4d) over (0, a)
    """
    x = a / (2.0 * np.sqrt(d))
    with np.errstate(over='ignore', invalid='ignore'):
        return np.sqrt(np.pi * d) * np.exp(x * x) * erf(x)


def _check_case(params, case):
    case = LimitCase(case)
    if case.substrate_diffuses and params.d_v <= 0:
        raise InvalidInputError('{} needs d_v > 0'.format(case.value))
    if not case.substrate_diffuses and params.d_v != 0:
        raise InvalidInputError('{} needs d_v = 0'.format(case.value))
    return case


def _reference_integral(case, a, d_u):
    return scaled_head(a, d_u) if case.whole_line else scaled_half(a, d_u)


def root_function(params, case, a):
    """
    Both sides of the free boundary equation of a case evaluated at a. For
    d_v > 0 the sides are d_u U_0 R(a; d_v) and d_v V_0 I(a; d_u), for d_v = 0
    they are U_0 and V_0 a I(a; d_u) / 2 d_u, where I is L on the whole line
    and H on the half line.

    Args:
        params: ProfileParams
        case: LimitCase
        a: Trial similarity constant

    Returns:
        lhs, rhs: Floats, lhs - rhs is decreasing in a
    """
    case = LimitCase(case)
    p = params

    with np.errstate(over='ignore', invalid='ignore'):
        ref = _reference_integral(case, a, p.d_u)
        if case.substrate_diffuses:
            lhs = p.d_u * p.U_0 * scaled_tail(a, p.d_v)
            rhs = p.d_v * p.V_0 * ref
        else:
            lhs = p.U_0
            rhs = p.V_0 * a / (2.0 * p.d_u) * ref

    return float(lhs), float(rhs)


def _root_gap(params, case, a):
    lhs, rhs = root_function(params, case, a)
    return lhs - rhs


def _root_gap_slope(params, case, a):
    p = params
    with np.errstate(over='ignore', invalid='ignore'):
        ref = _reference_integral(case, a, p.d_u)
        dref = a / (2.0 * p.d_u) * ref + 1.0

        if case.substrate_diffuses:
            dtail = a / (2.0 * p.d_v) * scaled_tail(a, p.d_v) - 1.0
            return p.d_u * p.U_0 * dtail - p.d_v * p.V_0 * dref

        return -p.V_0 / (2.0 * p.d_u) * (ref + a * dref)


def initial_bracket(params, case):
    """
    Starting bracket for the free boundary constant. Whole line d_v > 0 uses
    [-B, B], every other case has a > 0 and uses [0, B] with
    B = 10 (sqrt(d_u) + sqrt(d_v)) (1 + |log(U_0 / V_0)|)
    """
    p = params
    B = 10.0 * (np.sqrt(p.d_u) + np.sqrt(p.d_v)) * (1.0 + abs(np.log(p.U_0 / p.V_0)))
    if LimitCase(case) == LimitCase.WHOLE_DV_POS:
        return -B, B
    return 0.0, B


def _check_monotone(func, lo, hi, n=1000):
    """
    Sample the root gap across the bracket and warn if it is not strictly
    decreasing where finite.
    """
    samples = np.linspace(lo, hi, n)
    with np.errstate(over='ignore', invalid='ignore'):
        values = np.array([func(a) for a in samples])
    finite = np.isfinite(values)
    steps = np.diff(values[finite])

    if np.any(steps >= 0):
        LOG.warning('Root gap not strictly decreasing at {} of {} samples in [{}, {}]'
                    ''.format(int(np.sum(steps >= 0)), steps.size, lo, hi))
        return False
    return True


def solve_free_boundary(params, case, debug=False):
    """
    Find the similarity constant a of a case by bisection down to a bracket
    width of 1e-3 followed by safeguarded Newton iterations on the analytic
    derivative.

    Args:
        params: ProfileParams
        case: LimitCase consistent with params.d_v
        debug: Sample the bracket to confirm the root gap is monotone

    Returns:
        a: Float similarity constant

    Raises:
        FreeBoundaryError: If the bracket could not be found or resolved
    """
    case = _check_case(params, case)

    def gap(a):
        return _root_gap(params, case, a)

    def slope(a):
        return _root_gap_slope(params, case, a)

    lo, hi = initial_bracket(params, case)
    lower_bound = None if case == LimitCase.WHOLE_DV_POS else 0.0
    lo, hi, f_lo, f_hi = expand_bracket(gap, lo, hi, lower_bound=lower_bound)

    if debug:
        _check_monotone(gap, lo, hi)

    a = bisect_newton(gap, slope, lo, hi)

    if not np.isfinite(a):
        raise FreeBoundaryError('Free boundary solve returned {}'.format(a), bracket=(lo, hi))

    LOG.debug('Solved {} for a = {:0.15g}'.format(case.value, a))
    return float(a)


def classify_sign(d_u, d_v, U_0, V_0):
    """
    Sufficient conditions for the sign of a on the whole line with d_v > 0.
    Equality in both comparisons is zero, one strict comparison in the same
    direction decides the sign, anything else is indeterminate.
    """
    ProfileParams(d_u, d_v, U_0, V_0)
    if d_v <= 0:
        raise InvalidInputError('Sign classification needs d_v > 0')

    flux_u = np.sqrt(d_u) * U_0
    flux_v = np.sqrt(d_v) * V_0

    if d_u == d_v and U_0 == V_0:
        return SignClass.ZERO

    if d_u <= d_v and flux_u <= flux_v and (d_u < d_v or flux_u < flux_v):
        return SignClass.NEGATIVE

    if d_u >= d_v and flux_u >= flux_v and (d_u > d_v or flux_u > flux_v):
        return SignClass.POSITIVE

    return SignClass.INDETERMINATE


@dataclass(frozen=True)
class SelfSimilarProfile:
    """
    Limit profile of one case.

    Attributes:
        case: LimitCase
        a: Similarity constant
        params: ProfileParams
        left_norm: Scaled integral normalizing the u branch, L(a; d_u) on the
            whole line or H(a; d_u) on the half line
        right_norm: R(a; d_v) normalizing the v branch, nan for d_v = 0
    """
    case: LimitCase
    a: float
    params: ProfileParams
    left_norm: float = field(init=False)
    right_norm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'case', LimitCase(self.case))
        p = self.params
        object.__setattr__(self, 'left_norm',
                           float(_reference_integral(self.case, self.a, p.d_u)))

        if self.case.substrate_diffuses:
            right = float(scaled_tail(self.a, p.d_v))
        else:
            right = float('nan')
        object.__setattr__(self, 'right_norm', right)

    @classmethod
    def solve(cls, params, case, debug=False):
        return cls(LimitCase(case), solve_free_boundary(params, case, debug=debug), params)

    @classmethod
    def from_spec(cls, spec, debug=False):
        params = ProfileParams.from_spec(spec)
        return cls.solve(params, LimitCase.from_problem(spec.variant, spec.d_v), debug=debug)

    def with_a(self, a):
        """
        Same case and parameters with a different constant, used to exercise
        the residual checks
        """
        return SelfSimilarProfile(self.case, a, self.params)

    def to_dict(self):
        return {'case': self.case.value, 'a': self.a, 'd_u': self.params.d_u,
                'd_v': self.params.d_v, 'U_0': self.params.U_0, 'V_0': self.params.V_0}


def _as_eta(prof, eta):
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise InvalidInputError('Similarity coordinates must be finite')
    if not prof.case.whole_line and np.any(eta < 0):
        raise InvalidInputError('Half line profiles are only defined for eta >= 0')
    return eta


def _left_fraction(prof, eta):
    """
    Fraction of the reference integral of exp(-s^2/4d_u) accumulated up to
    eta, for eta <= a.
    """
    sq = 2.0 * np.sqrt(prof.params.d_u)
    x, y = prof.a / sq, eta / sq

    if not prof.case.whole_line:
        return erf(y) / erf(x)

    if x >= 0:
        return erfc(-y) / erfc(-x)

    # a < 0, keeps both factors away from underflow
    return np.exp(x * x - y * y) * erfcx(-y) / erfcx(-x)


def _right_fraction(prof, eta):
    """
    Fraction of the integral of exp(-s^2/4d_v) over (a, inf) that lies
    beyond eta, for eta > a.
    """
    sq = 2.0 * np.sqrt(prof.params.d_v)
    x, y = prof.a / sq, eta / sq

    if x <= 0:
        return erfc(y) / erfc(x)

    return np.exp(x * x - y * y) * erfcx(y) / erfcx(x)


def eval_profile_f(prof, eta):
    """
    Evaluate the profile f. The u branch holds for eta <= a, so f(a) = 0 in
    every case and the d_v = 0 profiles jump to -V_0 just beyond a.

    Args:
        prof: SelfSimilarProfile
        eta: Similarity coordinate(s) x / sqrt(t)

    Returns:
        f: Float or array shaped like eta
    """
    eta = _as_eta(prof, eta)
    p = prof.params
    left = eta <= prof.a
    f = np.empty_like(eta)

    with np.errstate(over='ignore', under='ignore', invalid='ignore'):
        if np.any(left):
            f[left] = p.U_0 * (1.0 - _left_fraction(prof, eta[left]))

        right = ~left
        if np.any(right):
            if prof.case.substrate_diffuses:
                f[right] = -p.V_0 * (1.0 - _right_fraction(prof, eta[right]))
            else:
                f[right] = -p.V_0

    f = np.clip(f, -p.V_0, p.U_0)
    return float(f) if f.ndim == 0 else f


def _left_slope(prof, eta):
    p = prof.params
    sq = 2.0 * np.sqrt(p.d_u)
    x, y = prof.a / sq, eta / sq
    root = np.sqrt(np.pi * p.d_u)

    if not prof.case.whole_line:
        return -p.U_0 * np.exp(-y * y) / (root * erf(x))
    if x >= 0:
        return -p.U_0 * np.exp(-y * y) / (root * erfc(-x))
    return -p.U_0 * np.exp(x * x - y * y) / (root * erfcx(-x))


def _right_slope(prof, eta):
    p = prof.params
    sq = 2.0 * np.sqrt(p.d_v)
    x, y = prof.a / sq, eta / sq
    root = np.sqrt(np.pi * p.d_v)

    if x <= 0:
        return -p.V_0 * np.exp(-y * y) / (root * erfc(x))
    return -p.V_0 * np.exp(x * x - y * y) / (root * erfcx(x))


def profile_derivative(prof, eta, side='left'):
    """
    Exact one sided derivative f'(eta). The left side uses the u branch
    (valid for eta <= a), the right side the v branch (eta >= a). The
    constant branch of d_v = 0 profiles has derivative 0.

    Args:
        prof: SelfSimilarProfile
        eta: Similarity coordinate(s)
        side: 'left' or 'right'

    Returns:
        slope: Float or array shaped like eta
    """
    eta = _as_eta(prof, eta)

    if side not in ['left', 'right']:
        raise InvalidInputError('side must be left or right, got {}'.format(side))

    with np.errstate(over='ignore', under='ignore'):
        if side == 'left':
            slope = _left_slope(prof, eta)
        elif prof.case.substrate_diffuses:
            slope = _right_slope(prof, eta)
        else:
            slope = np.zeros_like(eta)

    return float(slope) if np.ndim(slope) == 0 else slope


def eval_limit_uv(prof, x, t):
    """
    Limit concentrations u = w+ and v = -w- at positions x and time t > 0
    """
    if not np.isfinite(t) or t <= 0:
        raise InvalidInputError('Limit profile needs t > 0, got {}'.format(t))

    w = np.asarray(eval_profile_f(prof, np.asarray(x, dtype=float) / np.sqrt(t)))
    u = np.maximum(w, 0.0)
    v = -np.minimum(w, 0.0)

    if u.ndim == 0:
        return float(u), float(v)
    return u, v


def diffusion_function(prof, s):
    """
    Piecewise linear flux of the limit problem, d_u s for s >= 0 and d_v s
    below
    """
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0, prof.params.d_u * s, prof.params.d_v * s)


def free_boundary_position(prof, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInputError('Free boundary position needs t >= 0')
    return prof.a * np.sqrt(t)


@dataclass(frozen=True)
class ProfileResidualReport:
    root_residual: float
    ode_residual_left: float
    ode_residual_right: float
    interface_flux_residual: float = 0.0
    stefan_residual: float = 0.0

    @property
    def ode_residual_max(self):
        return max(self.ode_residual_left, self.ode_residual_right)

    def worst(self):
        return max(self.root_residual, self.ode_residual_max,
                   self.interface_flux_residual, self.stefan_residual)

    def to_dict(self):
        return {'root_residual': self.root_residual,
                'ode_residual_left': self.ode_residual_left,
                'ode_residual_right': self.ode_residual_right,
                'ode_residual_max': self.ode_residual_max,
                'interface_flux_residual': self.interface_flux_residual,
                'stefan_residual': self.stefan_residual}


def _ode_residual(prof, eta, side):
    """
    max |d f'' + eta f' / 2| with f'' from a fourth order central difference
    of the closed form f'
    """
    if not eta.size:
        return 0.0

    d = prof.params.d_u if side == 'left' else prof.params.d_v
    slope = _left_slope if side == 'left' else _right_slope
    h = FD_STEP * np.sqrt(d)

    with np.errstate(over='ignore', under='ignore'):
        f1 = slope(prof, eta)
        f2 = (-slope(prof, eta + 2 * h) + 8.0 * slope(prof, eta + h)
              - 8.0 * slope(prof, eta - h) + slope(prof, eta - 2 * h)) / (12.0 * h)

    return float(np.max(np.abs(d * f2 + 0.5 * eta * f1)))


def residual_report(prof, n_points=400, band=1e-6):
    """
    Quantify how well a profile satisfies its root equation, the heat
    equations on both branches and the interface conditions.

    Args:
        prof: SelfSimilarProfile
        n_points: Number of eta samples per side
        band: Half width of the band around eta = a left out of the ODE check

    Returns:
        report: ProfileResidualReport
    """
    p = prof.params
    lhs, rhs = root_function(p, prof.case, prof.a)
    scale = max(abs(lhs), abs(rhs))
    root_residual = abs(lhs - rhs) / scale if scale > 0 else abs(lhs - rhs)

    span_u = 10.0 * np.sqrt(p.d_u)
    if prof.case.whole_line:
        left_eta = np.linspace(prof.a - span_u, prof.a - band, n_points)
    else:
        left_eta = np.linspace(0.0, max(prof.a - band, 0.0), n_points)

    left_res = _ode_residual(prof, left_eta, 'left')

    if prof.case.substrate_diffuses:
        right_eta = np.linspace(prof.a + band, prof.a + 10.0 * np.sqrt(p.d_v), n_points)
        right_res = _ode_residual(prof, right_eta, 'right')
    else:
        right_res = 0.0

    slope_left = profile_derivative(prof, prof.a, side='left')
    interface = 0.0
    stefan = 0.0

    if prof.case.substrate_diffuses:
        # d_u u_x(a-) = -d_v v_x(a+) with u = f+, v = -f-
        slope_right = profile_derivative(prof, prof.a, side='right')
        interface = abs(p.d_u * slope_left - p.d_v * slope_right) / abs(p.d_u * slope_left)
    else:
        stefan = (abs(p.V_0 * prof.a / 2.0 + p.d_u * slope_left)
                  / (p.V_0 * abs(prof.a) / 2.0 + STEFAN_EPS))

    return ProfileResidualReport(root_residual=float(root_residual),
                                 ode_residual_left=left_res,
                                 ode_residual_right=right_res,
                                 interface_flux_residual=float(interface),
                                 stefan_residual=float(stefan))


def sample_profile(prof, eta):
    """
    Tabulate (eta, f, u, v) for output

    Returns:
        samples: Dictionary of arrays keyed eta, f, u, v
    """
    eta = _as_eta(prof, eta)
    f = np.asarray(eval_profile_f(prof, eta))
    return {'eta': eta, 'f': f, 'u': np.maximum(f, 0.0), 'v': -np.minimum(f, 0.0)}
