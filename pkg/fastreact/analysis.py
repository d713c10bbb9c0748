"""
Module for the quantitative checks run on trajectories: window norms
against the limit profile, the rescaled long time error, segregation and
reaction mass integrals, free boundary tracking and the comparison and
translate contraction properties. Every integral uses the trapezoidal rule
on the stored grid.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .exceptions import InvalidInputError, SolverFailure
from .model import GridSpec, Trajectory
from .profile import eval_limit_uv
from .solver import run

LOG = logging.getLogger('fastreact.analysis')

# Boundary nodes left out of the contraction functional
CONTRACTION_EXCLUDED_CELLS = 2


def _window_mask(traj, J):
    """
    Boolean mask of the nodes in (-J, J) on the whole line or (0, J) on the
    half line

    Raises:
        InvalidInputError: If the window reaches past the grid
    """
    if J < 0 or not np.isfinite(J):
        raise InvalidInputError('Window half width must be finite and >= 0, got {}'.format(J))

    x = traj.x
    tol = 1e-12 * max(abs(x[0]), abs(x[-1]))
    lower = -J if traj.spec.is_whole_line else 0.0

    if lower < x[0] - tol or J > x[-1] + tol:
        raise InvalidInputError(
            'Window [{}, {}] exceeds the grid [{}, {}]'.format(lower, J, x[0], x[-1]))

    return (x >= lower - tol) & (x <= J + tol)


def _space_integral(x, values):
    if x.size < 2:
        return 0.0
    return float(trapezoid(values, x))


def l2_window_error(traj, prof, J, t_lo):
    """
    Space time L2 distance between the solution and the limit profile over
    the window and the snapshots with t >= t_lo.

    Args:
        traj: Trajectory
        prof: SelfSimilarProfile of the same case
        J: Window half width
        t_lo: Start of the time window, > 0

    Returns:
        err_u, err_v: Floats
    """
    mask = _window_mask(traj, J)
    if J == 0:
        return 0.0, 0.0

    if t_lo <= 0:
        raise InvalidInputError('t_lo must be > 0, got {}'.format(t_lo))

    keep = np.flatnonzero(traj.times >= t_lo * (1 - 1e-12))
    if keep.size < 2:
        raise InvalidInputError(
            'Need at least 2 snapshots with t >= {}, got {}'.format(t_lo, keep.size))

    x = traj.x[mask]
    per_time_u = []
    per_time_v = []

    for i in keep:
        t = traj.times[i]
        u_lim, v_lim = eval_limit_uv(prof, x, t)
        per_time_u.append(_space_integral(x, (traj.u[i, mask] - u_lim) ** 2))
        per_time_v.append(_space_integral(x, (traj.v[i, mask] - v_lim) ** 2))

    times = traj.times[keep]
    err_u = np.sqrt(max(trapezoid(per_time_u, times), 0.0))
    err_v = np.sqrt(max(trapezoid(per_time_v, times), 0.0))
    return float(err_u), float(err_v)


def kamin_rescaled_error(traj, prof, t_eval, J):
    """
    Long time error (1 / sqrt(t)) int |u(y, t) - f+(y / sqrt(t))|^2 dy over
    |y| <= J sqrt(t) (0 <= y <= J sqrt(t) on the half line), and the v
    analogue with -f-.

    Args:
        traj: Trajectory holding a snapshot at t_eval
        prof: SelfSimilarProfile
        t_eval: Snapshot time
        J: Window half width in similarity units

    Returns:
        err_u, err_v: Floats
    """
    idx = traj.snapshot_index(t_eval)
    t = traj.times[idx]
    if t <= 0:
        raise InvalidInputError('Rescaled error needs t_eval > 0')

    mask = _window_mask(traj, J * np.sqrt(t))
    if J == 0:
        return 0.0, 0.0

    y = traj.x[mask]
    u_lim, v_lim = eval_limit_uv(prof, y, t)
    err_u = _space_integral(y, (traj.u[idx, mask] - u_lim) ** 2) / np.sqrt(t)
    err_v = _space_integral(y, (traj.v[idx, mask] - v_lim) ** 2) / np.sqrt(t)
    return float(err_u), float(err_v)


def segregation_integral(traj):
    """
    Trapezoidal double integral of u v over the grid and the stored
    snapshots
    """
    per_time = trapezoid(traj.u * traj.v, traj.x, axis=1)
    if traj.times.size < 2:
        return 0.0
    return float(trapezoid(per_time, traj.times))


def reaction_mass(traj):
    """
    Total mass removed by reaction, the sum of the per step diagnostics
    """
    if traj.reaction_increments is None:
        raise InvalidInputError('Trajectory carries no reaction diagnostics')
    return float(np.sum(traj.reaction_increments))


def far_field_distance(traj):
    """
    L1 distance of each snapshot to the far field step data

    Returns:
        df: DataFrame with columns t, l1_u, l1_v
    """
    u_inf, v_inf = traj.spec.far_field(traj.x)
    l1_u = trapezoid(np.abs(traj.u - u_inf), traj.x, axis=1)
    l1_v = trapezoid(np.abs(traj.v - v_inf), traj.x, axis=1)
    return pd.DataFrame({'t': traj.times, 'l1_u': l1_u, 'l1_v': l1_v})


def _zero_crossings(x, w):
    """
    Positions where w changes sign. Runs of exact zeros between opposite
    signs count once at their midpoint.
    """
    nonzero = np.flatnonzero(w != 0)
    crossings = []

    for i, j in zip(nonzero[:-1], nonzero[1:]):
        if np.sign(w[i]) == np.sign(w[j]):
            continue
        if j == i + 1:
            crossings.append(x[i] + w[i] / (w[i] - w[j]) * (x[j] - x[i]))
        else:
            crossings.append(0.5 * (x[i + 1] + x[j - 1]))

    return crossings


def track_free_boundary(traj, prof=None):
    """
    Locate the interface in every snapshot with t > 0 as the interpolated
    zero of w = u - v. When a snapshot has several crossings the one closest
    to the previous position is used, the first snapshot is compared with
    a sqrt(t) from the profile (or 0 without a profile).

    Args:
        traj: Trajectory
        prof: Optional SelfSimilarProfile

    Returns:
        points: List of (t, xi) for the snapshots with a sign change
    """
    points = []
    previous = None
    w = traj.w

    for i, t in enumerate(traj.times):
        if t <= 0:
            continue

        crossings = _zero_crossings(traj.x, w[i])
        if not crossings:
            LOG.warning('No sign change of w at t = {:0.6g}, snapshot skipped'.format(t))
            continue

        if previous is None:
            previous = prof.a * np.sqrt(t) if prof is not None else 0.0

        xi = min(crossings, key=lambda c: abs(c - previous))
        points.append((float(t), float(xi)))
        previous = xi

    return points


def fit_sqrt_law(points):
    """
    Least squares fit of xi = a sqrt(t) through the origin

    Args:
        points: Iterable of (t, xi) with t > 0

    Returns:
        a_hat: Fitted constant
        stderr: Standard error of a_hat from the residual variance
    """
    points = np.asarray(list(points), dtype=float)

    if points.ndim != 2 or points.shape[0] < 3:
        raise InvalidInputError('Need at least 3 points to fit a sqrt law')

    t, xi = points[:, 0], points[:, 1]
    if np.any(t <= 0):
        raise InvalidInputError('Sqrt law fit needs t > 0')

    root = np.sqrt(t)
    a_hat = np.sum(xi * root) / np.sum(t)
    residual = xi - a_hat * root
    variance = np.sum(residual ** 2) / (t.size - 1)
    stderr = np.sqrt(variance / np.sum(t))

    return float(a_hat), float(stderr)


def comparison_check(spec, grid, cfg, lower, upper):
    """
    Run an ordered pair of initial data and measure how far the solutions
    break the order u_upper >= u_lower, v_upper <= v_lower.

    Args:
        spec: ProblemSpec
        grid: GridSpec
        cfg: SolverConfig
        lower: (u0, v0) of the lower solution
        upper: (u0, v0) of the upper solution, u0 >= lower u0, v0 <= lower v0

    Returns:
        violation: Largest of u_lower - u_upper and v_upper - v_lower over
            all nodes and snapshots
    """
    u_lo, v_lo = (np.asarray(a, dtype=float) for a in lower)
    u_hi, v_hi = (np.asarray(a, dtype=float) for a in upper)

    if np.any(u_hi < u_lo) or np.any(v_hi > v_lo):
        raise InvalidInputError('Comparison pair is not ordered')

    below = run(spec, grid, cfg, initial=(u_lo, v_lo))
    above = run(spec, grid, cfg, initial=(u_hi, v_hi))

    for traj in [below, above]:
        if traj.failed:
            raise SolverFailure('Comparison run failed: {}'.format(traj.message))

    violation = max(np.max(below.u - above.u), np.max(above.v - below.v))
    return float(violation)


@dataclass(frozen=True)
class ContractionResult:
    """
    Translate distances of one shift. lhs holds the interior L1 distance
    between the fields and their shift at every snapshot, rhs the same at
    t = 0.
    """
    shift: float
    times: np.ndarray
    lhs: np.ndarray
    rhs: float

    @property
    def max_excess(self):
        return float(np.max(self.lhs - self.rhs))


def translate_contraction_check(traj, xi):
    """
    Discrete L1 translate distance of u and v for a shift of whole cells.
    Two boundary cells are excluded at each end. On the half line only
    x > 4 |xi| is used.

    Args:
        traj: Trajectory whose first snapshot is t = 0
        xi: Shift length, a multiple of dx

    Returns:
        result: ContractionResult
    """
    dx = traj.grid.dx
    cells = xi / dx
    n = int(round(cells))

    if abs(cells - n) > 1e-9 * max(1.0, abs(cells)):
        raise InvalidInputError('Shift {} is not a multiple of dx = {}'.format(xi, dx))

    n = abs(n)
    x = traj.x
    nodes = x.size
    first = CONTRACTION_EXCLUDED_CELLS
    last = nodes - 1 - CONTRACTION_EXCLUDED_CELLS - n

    if not traj.spec.is_whole_line:
        first = max(first, int(np.searchsorted(x, 4.0 * abs(xi), side='right')))

    if last - first < 1:
        raise InvalidInputError('Shift {} leaves no interior to compare'.format(xi))

    base = slice(first, last + 1)
    shifted = slice(first + n, last + 1 + n)
    lhs = (trapezoid(np.abs(traj.u[:, base] - traj.u[:, shifted]), x[base], axis=1)
           + trapezoid(np.abs(traj.v[:, base] - traj.v[:, shifted]), x[base], axis=1))

    return ContractionResult(shift=float(xi), times=traj.times.copy(),
                             lhs=lhs, rhs=float(lhs[0]))


def _scale_initial(data, l):
    bumps = tuple(replace(b, center=b.center / l, width=b.width / l) for b in data.bumps)
    return replace(data, width=data.width / l, gap=data.gap / l, bumps=bumps)


def kamin_rescale(traj, l):
    """
    Rescale a trajectory by u_l(x, t) = u(l x, l^2 t). The rescaled fields
    solve the same problem with rate k l^2 on [x_left / l, x_right / l]
    up to T / l^2. Reaction diagnostics scale by 1 / l.

    Args:
        traj: Trajectory
        l: Length scale > 0

    Returns:
        rescaled: Trajectory
    """
    if not np.isfinite(l) or l <= 0:
        raise InvalidInputError('Scale l must be > 0, got {}'.format(l))

    l2 = l * l
    g = traj.grid
    grid = GridSpec(g.x_left / l, g.x_right / l, g.nx, g.dt / l2,
                    tuple(t / l2 for t in g.snapshot_times))
    spec = traj.spec.with_changes(k=traj.spec.k * l2, T=traj.spec.T / l2,
                                  initial=_scale_initial(traj.spec.initial, l))

    increments = traj.reaction_increments
    return Trajectory(grid=grid, spec=spec, times=traj.times / l2, u=traj.u.copy(),
                      v=traj.v.copy(),
                      step_times=None if traj.step_times is None else traj.step_times / l2,
                      reaction_increments=None if increments is None else increments / l,
                      failed=traj.failed, message=traj.message,
                      max_bound_violation=traj.max_bound_violation)


def window_distance(first, second, J, t_lo):
    """
    Space time L2 distance between two trajectories sharing a grid and
    snapshot times, over the same window as l2_window_error

    Returns:
        dist_u, dist_v: Floats
    """
    if first.x.shape != second.x.shape or not np.allclose(first.x, second.x):
        raise InvalidInputError('Trajectories must share a grid')
    if first.times.shape != second.times.shape or not np.allclose(first.times, second.times):
        raise InvalidInputError('Trajectories must share snapshot times')

    mask = _window_mask(first, J)
    if J == 0:
        return 0.0, 0.0

    keep = np.flatnonzero(first.times >= t_lo * (1 - 1e-12))
    if keep.size < 2:
        raise InvalidInputError('Need at least 2 snapshots with t >= {}'.format(t_lo))

    x = first.x[mask]
    sq_u = trapezoid((first.u[keep][:, mask] - second.u[keep][:, mask]) ** 2, x, axis=1)
    sq_v = trapezoid((first.v[keep][:, mask] - second.v[keep][:, mask]) ** 2, x, axis=1)
    times = first.times[keep]

    return (float(np.sqrt(trapezoid(sq_u, times))),
            float(np.sqrt(trapezoid(sq_v, times))))


def is_nonincreasing(values, slack=0.0):
    """
    True if every value is at most the previous one times (1 + slack)
    """
    values = np.asarray(values, dtype=float)
    return bool(np.all(values[1:] <= values[:-1] * (1.0 + slack)))


def is_strictly_decreasing(values):
    values = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(values) < 0))


def value_ratio(num, den):
    """
    num / den with 0 / 0 read as no change in a vanishing quantity
    """
    if den > 0:
        return float(num / den)
    return 0.0 if num <= 0 else float('inf')


@dataclass(frozen=True)
class TrendCheck:
    """
    Outcome of a monotone decrease check. A sequence that dips within an
    overall decrease passes as informational.
    """
    monotone: bool
    overall_decrease: bool
    note: str = ''

    @property
    def passed(self):
        return self.monotone or self.overall_decrease

    @property
    def informational(self):
        return self.passed and not self.monotone

    def to_dict(self):
        return {'monotone': self.monotone, 'overall_decrease': self.overall_decrease,
                'passed': self.passed, 'informational': self.informational,
                'note': self.note}


def trend_check(values, slack):
    values = np.asarray(values, dtype=float)

    if values.size < 2:
        return TrendCheck(True, True, note='single value, trend not tested')

    monotone = is_nonincreasing(values, slack)
    overall = bool(values[-1] < values[0])
    note = '' if monotone else 'non-monotone sequence {}'.format(values.tolist())
    return TrendCheck(monotone, overall, note=note)


@dataclass(frozen=True)
class ConvergenceEntry:
    axis_value: float
    l2_window_error_u: float
    l2_window_error_v: float
    segregation_integral: float
    reaction_mass: float
    fitted_a: float = float('nan')
    fitted_a_stderr: float = float('nan')

    def __post_init__(self):
        errors = [self.l2_window_error_u, self.l2_window_error_v,
                  self.segregation_integral, self.reaction_mass]
        if not all(np.isfinite(errors)) or min(errors) < 0:
            raise InvalidInputError('Convergence errors must be finite and >= 0, got {}'
                                    ''.format(errors))


@dataclass
class ConvergenceReport:
    """
    Sweep results, one entry per axis value kept sorted by axis value.

    Attributes:
        sweep_axis: k, d_v or time
        entries: List of ConvergenceEntry
        profile: SelfSimilarProfile the errors are measured against
        partial: True if some sweep member failed
    """
    sweep_axis: str
    entries: list = field(default_factory=list)
    profile: object = None
    partial: bool = False

    def __post_init__(self):
        if self.sweep_axis not in ['k', 'd_v', 'time']:
            raise InvalidInputError('Unknown sweep axis {}'.format(self.sweep_axis))
        self.entries = sorted(self.entries, key=lambda e: e.axis_value)

    def add(self, entry):
        self.entries.append(entry)
        self.entries.sort(key=lambda e: e.axis_value)

    def column(self, name):
        return np.array([getattr(e, name) for e in self.entries], dtype=float)

    def to_dataframe(self):
        columns = ['axis_value', 'l2_window_error_u', 'l2_window_error_v',
                   'segregation_integral', 'reaction_mass', 'fitted_a',
                   'fitted_a_stderr']
        df = pd.DataFrame([[getattr(e, c) for c in columns] for e in self.entries],
                          columns=columns)
        return df.rename(columns={'axis_value': self.sweep_axis})
