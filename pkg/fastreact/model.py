"""
Module for the problem definitions shared by every other module: the two
domain variants, problem parameters, initial data, the truncated grid and
the trajectory container a solver run produces.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .exceptions import InvalidInputError
from .kinetics import Kinetics

# Diffusion penetration margin, in units of sqrt(d T)
TRUNCATION_MARGIN = 8.0

# Relative tolerance on the [0, M] bounds of every stored state
BOUNDS_RTOL = 1e-10


class DomainVariant(str, Enum):
    WHOLE_LINE = 'whole_line'
    HALF_LINE = 'half_line'


class InitialKind(str, Enum):
    SHARP_STEP = 'sharp_step'
    SMOOTHED_STEP = 'smoothed_step'
    PERTURBED = 'perturbed'
    TWO_LAYER = 'two_layer'


def _check_finite(**values):
    for name, value in values.items():
        if value is None or not np.isfinite(value):
            raise InvalidInputError('{} must be finite, got {}'.format(name, value))


@dataclass(frozen=True)
class Bump:
    """
    Gaussian perturbation amplitude * exp(-((x - center) / width)^2) added to
    one component of the base initial data.
    """
    component: str
    center: float
    width: float
    amplitude: float

    def __post_init__(self):
        if self.component not in ['u', 'v']:
            raise InvalidInputError(
                'Bump component must be u or v, got {}'.format(self.component))
        _check_finite(center=self.center, width=self.width, amplitude=self.amplitude)
        if self.width <= 0:
            raise InvalidInputError('Bump width must be > 0')

    def sample(self, x):
        return self.amplitude * np.exp(-((x - self.center) / self.width) ** 2)


@dataclass(frozen=True)
class InitialData:
    """
    Description of the initial pair (u0, v0). Far-field values come from the
    ProblemSpec the data is sampled for.

    Attributes:
        kind: InitialKind
        width: Ramp width for smoothed steps (also used by a smoothed base)
        base: Base kind under the bumps of perturbed data
        bumps: Tuple of Bump
        gap: Reactant free gap between the two layers for two layer data
    """
    kind: InitialKind = InitialKind.SHARP_STEP
    width: float = 0.0
    base: InitialKind = InitialKind.SHARP_STEP
    bumps: tuple = ()
    gap: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', InitialKind(self.kind))
        object.__setattr__(self, 'base', InitialKind(self.base))
        object.__setattr__(self, 'bumps', tuple(self.bumps))

        if self.base == InitialKind.PERTURBED:
            raise InvalidInputError('Perturbed data cannot be the base of perturbed data')

        if self._ramp_kind == InitialKind.SMOOTHED_STEP and not self.width > 0:
            raise InvalidInputError('Smoothed steps need a width > 0')

        if self.gap < 0:
            raise InvalidInputError('Two layer gap must be >= 0')

    @property
    def _ramp_kind(self):
        return self.base if self.kind == InitialKind.PERTURBED else self.kind

    def to_dict(self):
        return {'kind': self.kind.value, 'width': self.width, 'base': self.base.value,
                'gap': self.gap,
                'bumps': [[b.component, b.center, b.width, b.amplitude] for b in self.bumps]}


@dataclass(frozen=True)
class ProblemSpec:
    """
    Full description of one problem instance. d_v = 0 selects the immobile
    substrate case. M defaults to max(U_0, V_0).
    """
    variant: DomainVariant
    d_u: float
    d_v: float
    k: float
    U_0: float
    V_0: float
    T: float
    kinetics: Kinetics = field(default_factory=Kinetics)
    initial: InitialData = field(default_factory=InitialData)
    M: float = None

    def __post_init__(self):
        object.__setattr__(self, 'variant', DomainVariant(self.variant))

        if self.M is None:
            object.__setattr__(self, 'M', max(self.U_0, self.V_0))

        _check_finite(d_u=self.d_u, d_v=self.d_v, k=self.k, U_0=self.U_0,
                      V_0=self.V_0, T=self.T, M=self.M)

        if self.d_u <= 0:
            raise InvalidInputError('d_u must be > 0, got {}'.format(self.d_u))
        if self.d_v < 0:
            raise InvalidInputError('d_v must be >= 0, got {}'.format(self.d_v))
        # k = 0 is allowed for the pure diffusion oracle runs
        if self.k < 0:
            raise InvalidInputError('k must be >= 0, got {}'.format(self.k))
        if self.U_0 <= 0 or self.V_0 <= 0:
            raise InvalidInputError('U_0 and V_0 must be > 0')
        if self.T <= 0:
            raise InvalidInputError('T must be > 0')
        if self.M < max(self.U_0, self.V_0):
            raise InvalidInputError(
                'M = {} must be >= max(U_0, V_0) = {}'.format(self.M, max(self.U_0, self.V_0)))

    @property
    def is_whole_line(self):
        return self.variant == DomainVariant.WHOLE_LINE

    @property
    def substrate_diffuses(self):
        return self.d_v > 0

    def far_field(self, x):
        """
        Step data u0_inf, v0_inf the initial data decays to. On the half
        line this is (0, V_0) for every x > 0.

        Args:
            x: Array of positions

        Returns:
            u_inf, v_inf: arrays shaped like x
        """
        x = np.asarray(x, dtype=float)

        if self.is_whole_line:
            u_inf = np.where(x < 0, self.U_0, 0.0)
            v_inf = np.where(x > 0, self.V_0, 0.0)
        else:
            u_inf = np.zeros_like(x)
            v_inf = np.full_like(x, self.V_0)

        return u_inf, v_inf

    def with_changes(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {'variant': self.variant.value, 'd_u': self.d_u, 'd_v': self.d_v,
                'k': self.k, 'U_0': self.U_0, 'V_0': self.V_0, 'M': self.M,
                'T': self.T, 'kinetics': self.kinetics.to_dict(),
                'initial': self.initial.to_dict()}


@dataclass(frozen=True)
class GridSpec:
    """
    Truncated uniform grid of nx cells (nx + 1 nodes) with the time step and
    the times at which the solver stores snapshots.
    """
    x_left: float
    x_right: float
    nx: int
    dt: float
    snapshot_times: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'snapshot_times',
                           tuple(float(t) for t in self.snapshot_times))
        _check_finite(x_left=self.x_left, x_right=self.x_right, dt=self.dt)

        if int(self.nx) != self.nx or self.nx < 16:
            raise InvalidInputError('nx must be an integer >= 16, got {}'.format(self.nx))
        object.__setattr__(self, 'nx', int(self.nx))

        if self.x_right <= self.x_left:
            raise InvalidInputError('x_right must exceed x_left')
        if self.dt <= 0:
            raise InvalidInputError('dt must be > 0')

        times = np.asarray(self.snapshot_times)
        if times.size and (np.any(times <= 0) or np.any(np.diff(times) <= 0)):
            raise InvalidInputError('snapshot_times must be positive and strictly increasing')

    @property
    def dx(self):
        return (self.x_right - self.x_left) / self.nx

    @property
    def x(self):
        return np.linspace(self.x_left, self.x_right, self.nx + 1)

    @property
    def weights(self):
        """
        Trapezoidal quadrature weights on the nodes
        """
        w = np.full(self.nx + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def validate(self, spec):
        """
        Check the grid fits the problem: the origin placement of the variant,
        snapshot times within the horizon and the truncation margin.

        Args:
            spec: ProblemSpec the grid is meant for
        """
        if spec.is_whole_line:
            if not (self.x_left < 0 < self.x_right):
                raise InvalidInputError('Whole line grids need x_left < 0 < x_right')
        elif self.x_left != 0:
            raise InvalidInputError('Half line grids need x_left = 0')

        if self.snapshot_times and self.snapshot_times[-1] > spec.T * (1 + 1e-12):
            raise InvalidInputError('snapshot_times must lie in (0, T]')

        margin = TRUNCATION_MARGIN * np.sqrt(max(spec.d_u, spec.d_v) * spec.T)

        if self.x_right < margin or (spec.is_whole_line and -self.x_left < margin):
            raise InvalidInputError(
                'Grid [{}, {}] is too short for T = {}, needs at least {:0.3f} on each side'
                ''.format(self.x_left, self.x_right, spec.T, margin))

    @classmethod
    def covering(cls, spec, nx, dt, snapshot_times=(), margin=TRUNCATION_MARGIN):
        """
        Build the smallest grid satisfying the truncation margin for spec
        """
        half = margin * np.sqrt(max(spec.d_u, spec.d_v) * spec.T)
        x_left = -half if spec.is_whole_line else 0.0
        return cls(x_left, half, nx, dt, tuple(snapshot_times))

    def with_changes(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {'x_left': self.x_left, 'x_right': self.x_right, 'nx': self.nx,
                'dt': self.dt, 'snapshot_times': list(self.snapshot_times)}


@dataclass(frozen=True)
class Trajectory:
    """
    Output of one solver run. Snapshot 0 is always the initial state at t = 0
    followed by the requested snapshot times that were reached.

    Attributes:
        grid: GridSpec used
        spec: ProblemSpec solved
        times: 1D array of snapshot times
        u: 2D array (snapshot, node)
        v: 2D array (snapshot, node)
        step_times: End time of every step taken
        reaction_increments: Sum of dt * dx * k F removed during each step
        failed: True if the run stopped early
        message: Failure description
        max_bound_violation: Largest excursion outside [0, M] seen at any step
    """
    grid: GridSpec
    spec: ProblemSpec
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    step_times: np.ndarray = None
    reaction_increments: np.ndarray = None
    failed: bool = False
    message: str = ''
    max_bound_violation: float = 0.0

    @property
    def x(self):
        return self.grid.x

    @property
    def w(self):
        return self.u - self.v

    @property
    def bounds_tolerance(self):
        return BOUNDS_RTOL * self.spec.M

    @property
    def bounds_ok(self):
        return self.max_bound_violation <= self.bounds_tolerance

    def snapshot_index(self, t, rtol=1e-9):
        """
        Index of the snapshot stored at time t

        Raises:
            InvalidInputError: If no snapshot was stored at t
        """
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > rtol * max(abs(t), 1.0):
            raise InvalidInputError('No snapshot at t = {}'.format(t))
        return idx


def bound_violation(u, v, M):
    """
    Largest excursion of u or v outside [0, M]
    """
    lower = -min(np.min(u), np.min(v))
    upper = max(np.max(u), np.max(v)) - M
    return max(lower, upper, 0.0)


def _ramp(r):
    """
    Monotone C2 ramp from 0 (r <= 0) to 1 (r >= 1)
    """
    r = np.clip(r, 0.0, 1.0)
    return r ** 3 * (10.0 - 15.0 * r + 6.0 * r ** 2)


def _base_profile(kind, data, spec, x):
    """
    Sample the unperturbed step like data for a kind
    """
    U0, V0 = spec.U_0, spec.V_0

    if spec.is_whole_line:
        if kind == InitialKind.SHARP_STEP:
            # A node on the jump carries the cell average
            u0 = np.where(x < 0, U0, np.where(x > 0, 0.0, 0.5 * U0))
            v0 = np.where(x > 0, V0, np.where(x < 0, 0.0, 0.5 * V0))

        elif kind == InitialKind.SMOOTHED_STEP:
            s = _ramp((x + 0.5 * data.width) / data.width)
            u0 = U0 * (1.0 - s)
            v0 = V0 * s

        else:
            half_gap = 0.5 * data.gap
            u0 = np.where(x < -half_gap, U0, 0.0)
            v0 = np.where(x > half_gap, V0, 0.0)

    else:
        if kind == InitialKind.SHARP_STEP:
            u0 = np.zeros_like(x)
            v0 = np.full_like(x, V0)

        elif kind == InitialKind.SMOOTHED_STEP:
            s = _ramp(x / data.width)
            u0 = U0 * (1.0 - s)
            v0 = V0 * s

        else:
            u0 = np.zeros_like(x)
            v0 = np.where(x > data.gap, V0, 0.0)

    return u0.astype(float), v0.astype(float)


def sample_initial(data, spec, grid):
    """
    Sample the initial pair on the grid nodes

    Args:
        data: InitialData
        spec: ProblemSpec providing U_0, V_0, M and the variant
        grid: GridSpec valid for the variant

    Returns:
        u0, v0: Arrays on the nx + 1 nodes

    Raises:
        InvalidInputError: if a perturbation leaves [0, M]
    """
    x = grid.x

    if spec.is_whole_line and not grid.x_left < 0 < grid.x_right:
        raise InvalidInputError('Whole line data needs a grid straddling 0')
    if not spec.is_whole_line and grid.x_left != 0:
        raise InvalidInputError('Half line data needs a grid starting at 0')

    kind = data.kind
    if kind == InitialKind.PERTURBED:
        kind = data.base

    u0, v0 = _base_profile(kind, data, spec, x)

    if data.kind == InitialKind.PERTURBED:
        for bump in data.bumps:
            if bump.component == 'u':
                u0 = u0 + bump.sample(x)
            else:
                v0 = v0 + bump.sample(x)

    if bound_violation(u0, v0, spec.M) > 0:
        raise InvalidInputError(
            'Initial data leaves [0, M = {}]: min {:0.4g}, max {:0.4g}'
            ''.format(spec.M, min(u0.min(), v0.min()), max(u0.max(), v0.max())))

    return u0, v0
