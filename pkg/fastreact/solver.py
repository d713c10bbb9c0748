"""
Module for integrating the reaction diffusion pair on a truncated grid.
Each step is a Strang splitting: an implicit Euler reaction solve over half
a step, a theta weighted implicit diffusion step and another half step of
reaction. The reaction solves conserve u - v exactly and keep both fields
inside [0, M] for any k. Product kinetics can instead use the closed form
reaction flow, which with Crank Nicolson diffusion makes the whole step
second order in time.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erfc

from .exceptions import InvalidInputError, SolverFailure
from .kinetics import KineticsKind
from .model import Trajectory, bound_violation, sample_initial
from .rootfinding import vector_newton_bisect

LOG = logging.getLogger('fastreact.solver')

ALLOWED_THETAS = [0.5, 1.0]
REACTION_SCHEMES = ['implicit_euler', 'exact']


@dataclass(frozen=True)
class SolverConfig:
    """
    Attributes:
        scheme: Only strang splitting is available
        diffusion_theta: 1.0 for backward Euler, 0.5 for Crank Nicolson
        reaction_tol: Reaction solves stop at |g| <= reaction_tol * M
        max_reaction_iters: Iteration limit of a reaction solve
        reaction_scheme: implicit_euler for any kinetics, exact for the
            closed form flow of unregularized product kinetics
    """
    scheme: str = 'strang'
    diffusion_theta: float = 1.0
    reaction_tol: float = 1e-12
    max_reaction_iters: int = 100
    reaction_scheme: str = 'implicit_euler'

    def __post_init__(self):
        if self.scheme != 'strang':
            raise InvalidInputError('Unknown scheme {}'.format(self.scheme))
        if self.diffusion_theta not in ALLOWED_THETAS:
            raise InvalidInputError(
                'diffusion_theta must be one of {}, got {}'
                ''.format(ALLOWED_THETAS, self.diffusion_theta))
        if not (self.reaction_tol > 0) or not np.isfinite(self.reaction_tol):
            raise InvalidInputError('reaction_tol must be > 0')
        if int(self.max_reaction_iters) < 1:
            raise InvalidInputError('max_reaction_iters must be >= 1')
        if self.reaction_scheme not in REACTION_SCHEMES:
            raise InvalidInputError('reaction_scheme must be one of {}, got {}'
                                    ''.format(REACTION_SCHEMES, self.reaction_scheme))

    def to_dict(self):
        return {'scheme': self.scheme, 'diffusion_theta': self.diffusion_theta,
                'reaction_tol': self.reaction_tol,
                'max_reaction_iters': self.max_reaction_iters,
                'reaction_scheme': self.reaction_scheme}


@dataclass(frozen=True)
class DiscreteOperator:
    """
    Second order diffusion stencils for both components with their boundary
    rows. Boundary values set to None mean the node is not Dirichlet.

    Attributes:
        x: Node positions
        dx: Node spacing
        d_u: Diffusivity of u
        d_v: Diffusivity of v, 0 leaves v without spatial coupling
        u_left: Dirichlet value of u at the first node
        u_right: Dirichlet value of u at the last node
        v_left: Dirichlet value of v at the first node, None for the
            homogeneous Neumann row (half line) or no coupling (d_v = 0)
        v_right: Dirichlet value of v at the last node
        kinetics: Kinetics of the problem
        M: Concentration cap
    """
    x: np.ndarray
    dx: float
    d_u: float
    d_v: float
    u_left: float
    u_right: float
    v_left: float
    v_right: float
    kinetics: object
    M: float
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.full(self.x.size, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        object.__setattr__(self, 'weights', w)

    @property
    def n_nodes(self):
        return self.x.size

    @property
    def v_diffuses(self):
        return self.d_v > 0

    def _bc(self, component):
        if component == 'u':
            return self.d_u, self.u_left, self.u_right
        return self.d_v, self.v_left, self.v_right

    def apply(self, y, component='u'):
        """
        Apply d y_xx with the boundary rows. Dirichlet rows return 0 and the
        Neumann row uses the mirrored ghost node.

        Args:
            y: Nodal values
            component: 'u' or 'v'
        """
        d, left, right = self._bc(component)
        out = np.zeros_like(y, dtype=float)

        if d == 0:
            return out

        out[1:-1] = d * (y[:-2] - 2.0 * y[1:-1] + y[2:]) / self.dx ** 2

        if left is None:
            out[0] = d * 2.0 * (y[1] - y[0]) / self.dx ** 2

        return out

    def banded_matrix(self, component, theta, dt):
        """
        Banded storage of I - theta dt d D2 with identity Dirichlet rows, laid
        out for scipy.linalg.solve_banded with (1, 1) bands.
        """
        d, left, right = self._bc(component)
        n = self.n_nodes
        r = theta * d * dt / self.dx ** 2

        ab = np.zeros((3, n))
        ab[1, :] = 1.0 + 2.0 * r
        ab[0, 1:] = -r
        ab[2, :-1] = -r

        if left is None:
            # mirrored ghost node, (1 + 2r) y0 - 2r y1
            ab[0, 1] = -2.0 * r
        else:
            ab[1, 0] = 1.0
            ab[0, 1] = 0.0

        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        return ab

    def diffuse(self, y, component, theta, dt):
        """
        One theta weighted implicit diffusion step of size dt

        Raises:
            SolverFailure: If the tridiagonal solve breaks down
        """
        d, left, right = self._bc(component)
        if d == 0:
            return y.copy()

        rhs = y + (1.0 - theta) * dt * self.apply(y, component)
        if left is not None:
            rhs[0] = left
        rhs[-1] = right

        try:
            y_new = solve_banded((1, 1), self.banded_matrix(component, theta, dt), rhs)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise SolverFailure('Tridiagonal solve failed: {}'.format(e), dt=dt)

        return y_new

    def impose(self, u, v):
        """
        Overwrite the Dirichlet nodes in place
        """
        u[0] = self.u_left
        u[-1] = self.u_right
        if self.v_left is not None:
            v[0] = self.v_left
        if self.v_right is not None:
            v[-1] = self.v_right


def build_operator(spec, grid):
    """
    Build the discrete diffusion operator of a problem.

    Whole line: u = U_0, v = 0 at x_left and u = 0, v = V_0 at x_right.
    Half line: u = U_0 at x = 0 with a homogeneous Neumann row for v,
    u = 0, v = V_0 at x_right. With d_v = 0 the v rows carry no coupling.

    Args:
        spec: ProblemSpec
        grid: GridSpec valid for spec

    Returns:
        op: DiscreteOperator
    """
    if grid.nx < 16:
        raise InvalidInputError('Grid too coarse, nx = {}'.format(grid.nx))

    grid.validate(spec)

    if spec.is_whole_line:
        v_left = 0.0 if spec.substrate_diffuses else None
    else:
        v_left = None
    v_right = spec.V_0 if spec.substrate_diffuses else None

    return DiscreteOperator(x=grid.x, dx=grid.dx, d_u=spec.d_u, d_v=spec.d_v,
                            u_left=spec.U_0, u_right=0.0, v_left=v_left,
                            v_right=v_right, kinetics=spec.kinetics, M=spec.M)


def _product_root(s, gap, kappa):
    """
    Root in [0, s] of kappa y^2 + (1 + kappa gap) y - s = 0 for gap >= 0,
    written without cancellation
    """
    b = 1.0 + kappa * gap
    disc = np.sqrt(b * b + 4.0 * kappa * s)
    return 2.0 * s / (b + disc)


def reaction_substep(u, v, k, kin, dt, cfg=None, M=None):
    """
    Implicit Euler solve of u' = u - dt k F(u', v'), v' = v - dt k F(u', v')
    at every node. Since u' - v' = u - v = c the system reduces to one
    increasing scalar equation per node. The unknown is the smaller of the
    two new values, y, with the larger one recovered as y + |c|:

        y + dt k F(u', v') - min(u, v) = 0 on [0, min(u, v)]

    Args:
        u: Nodal u values
        v: Nodal v values
        k: Reaction rate
        kin: Kinetics
        dt: Substep length
        cfg: SolverConfig for the tolerance and iteration limit
        M: Scale of the tolerance, defaults to the largest value present

    Returns:
        u_new, v_new: Arrays inside [max(c, 0), u] and [max(-c, 0), v]

    Raises:
        SolverFailure: If the scalar solve does not converge
    """
    cfg = cfg or SolverConfig()
    u = np.maximum(np.asarray(u, dtype=float), 0.0)
    v = np.maximum(np.asarray(v, dtype=float), 0.0)

    if M is None:
        M = max(float(np.max(u, initial=0.0)), float(np.max(v, initial=0.0)), 1.0)

    kappa = k * dt
    if kappa == 0:
        return u.copy(), v.copy()

    c = u - v
    gap = np.abs(c)
    v_smaller = c > 0
    small = np.where(v_smaller, v, u)
    large = np.where(v_smaller, u, v)

    if kin.kind == KineticsKind.PRODUCT and kin.mu == 0:
        y = _product_root(small, gap, kappa)

    else:
        def pair(y, idx):
            big = y + gap[idx]
            flip = v_smaller[idx]
            return np.where(flip, big, y), np.where(flip, y, big)

        def g(y, idx):
            return y + kappa * kin(*pair(y, idx)) - small[idx]

        def dg(y, idx):
            fu, fv = kin.partials(*pair(y, idx))
            return 1.0 + kappa * (fu + fv)

        y = vector_newton_bisect(g, dg, np.zeros_like(small), small,
                                 tol=cfg.reaction_tol * M,
                                 maxiter=int(cfg.max_reaction_iters),
                                 u=u, v=v, k=k, dt=dt)

    y = np.clip(y, 0.0, small)
    big = np.minimum(y + gap, large)
    u_new = np.where(v_smaller, big, y)
    v_new = np.where(v_smaller, y, big)
    return u_new, v_new


def reaction_flow(u, v, k, kin, dt):
    """
    Exact flow of u' = v' = -k u v over dt. With gap = |u - v| the smaller
    value follows y' = -k y (y + gap), whose solution is
    y0 e / (1 + y0 (1 - e) / gap) with e = exp(-k gap dt), or
    y0 / (1 + k y0 dt) when gap = 0.

    Args:
        u: Array of u values
        v: Array of v values
        k: Reaction rate
        kin: Kinetics, must be product kinetics without regularization
        dt: Substep length

    Returns:
        (u_new, v_new): Arrays with u_new - v_new == u - v
    """
    if kin.kind != KineticsKind.PRODUCT or kin.mu != 0:
        raise InvalidInputError('The exact reaction flow needs product kinetics with mu = 0')

    u = np.maximum(np.asarray(u, dtype=float), 0.0)
    v = np.maximum(np.asarray(v, dtype=float), 0.0)
    tau = k * dt
    if tau == 0:
        return u.copy(), v.copy()

    c = u - v
    gap = np.abs(c)
    v_smaller = c > 0
    small = np.where(v_smaller, v, u)

    decay = np.exp(-gap * tau)
    # (1 - e) / gap, tending to tau as gap -> 0
    growth = np.full_like(gap, tau)
    np.divide(-np.expm1(-gap * tau), gap, out=growth, where=gap > 0)

    y = np.clip(small * decay / (1.0 + small * growth), 0.0, small)
    big = np.minimum(y + gap, np.where(v_smaller, u, v))
    return np.where(v_smaller, big, y), np.where(v_smaller, y, big)


def reaction_residual(u, v, u_new, v_new, k, kin, dt):
    """
    Pointwise residuals of the implicit reaction equations

    Returns:
        implicit: Larger of |u' + dt k F(u', v') - u| and |v' + dt k F(u', v') - v|
        conservation: |(u' - v') - (u - v)|
    """
    u = np.maximum(np.asarray(u, dtype=float), 0.0)
    v = np.maximum(np.asarray(v, dtype=float), 0.0)
    reacted = k * dt * kin(u_new, v_new)
    implicit = np.maximum(np.abs(u_new + reacted - u), np.abs(v_new + reacted - v))
    conservation = np.abs((u_new - v_new) - (u - v))
    return implicit, conservation


@dataclass
class SolverState:
    u: np.ndarray
    v: np.ndarray
    reacted: float = 0.0


def _react(state_u, state_v, op, cfg, k, dt):
    if cfg.reaction_scheme == 'exact':
        u_new, v_new = reaction_flow(state_u, state_v, k, op.kinetics, dt)
    else:
        u_new, v_new = reaction_substep(state_u, state_v, k, op.kinetics, dt, cfg=cfg, M=op.M)
    removed = float(np.sum(op.weights * (np.maximum(state_u, 0.0) - u_new)))
    op.impose(u_new, v_new)
    return u_new, v_new, removed


def step(state, op, cfg, k, dt):
    """
    Advance one Strang step: reaction over dt / 2, diffusion over dt and
    reaction over dt / 2. Dirichlet nodes are reset after every substep.

    Args:
        state: SolverState
        op: DiscreteOperator
        cfg: SolverConfig
        k: Reaction rate
        dt: Step length

    Returns:
        state: New SolverState whose reacted attribute is the mass removed
            by reaction during the step
    """
    u, v, removed_1 = _react(state.u, state.v, op, cfg, k, 0.5 * dt)

    theta = cfg.diffusion_theta
    u = op.diffuse(u, 'u', theta, dt)
    if op.v_diffuses:
        v = op.diffuse(v, 'v', theta, dt)
    op.impose(u, v)

    u, v, removed_2 = _react(u, v, op, cfg, k, 0.5 * dt)

    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise SolverFailure('Non-finite values after step', k=k, dt=dt)

    return SolverState(u, v, removed_1 + removed_2)


def _check_theta_restriction(spec, grid, cfg):
    if cfg.diffusion_theta == 0.5:
        limit = grid.dx ** 2 / (2.0 * max(spec.d_u, spec.d_v))
        if grid.dt > limit:
            LOG.warning('Crank-Nicolson with dt = {} > dx^2 / 2d = {:0.4g} may '
                        'leave [0, M]'.format(grid.dt, limit))


def run(spec, grid, cfg=None, initial=None):
    """
    Integrate from t = 0 to T, storing the initial state and the state at
    every snapshot time (T is always stored). Steps are shortened to land
    exactly on snapshot times.

    Args:
        spec: ProblemSpec
        grid: GridSpec
        cfg: SolverConfig, defaults to backward Euler diffusion
        initial: Optional (u0, v0) arrays used instead of spec.initial

    Returns:
        traj: Trajectory, marked failed with the last good state retained if
            a step failed
    """
    cfg = cfg or SolverConfig()
    op = build_operator(spec, grid)
    _check_theta_restriction(spec, grid, cfg)
    if cfg.reaction_scheme == 'exact' and (spec.kinetics.kind != KineticsKind.PRODUCT
                                            or spec.kinetics.mu != 0):
        raise InvalidInputError('reaction_scheme = exact needs product kinetics with mu = 0')

    if initial is None:
        u, v = sample_initial(spec.initial, spec, grid)
    else:
        u, v = (np.array(a, dtype=float) for a in initial)
        if u.shape != op.x.shape or v.shape != op.x.shape:
            raise InvalidInputError('Initial arrays must have nx + 1 entries')

    u, v = u.copy(), v.copy()
    op.impose(u, v)
    state = SolverState(u, v)

    targets = sorted(set(grid.snapshot_times) | {float(spec.T)})
    times, us, vs = [0.0], [u.copy()], [v.copy()]
    step_times, increments = [], []
    worst = bound_violation(u, v, spec.M)
    failed = False
    message = ''
    t = 0.0
    start = time.time()

    LOG.info('Solving {} with k = {}, d_u = {}, d_v = {}, nx = {}, dt = {}'
             ''.format(spec.variant.value, spec.k, spec.d_u, spec.d_v, grid.nx, grid.dt))

    try:
        for target in targets:
            while t < target:
                h = min(grid.dt, target - t)
                # fold a sliver of a step into this one
                if target - t - h < 1e-9 * grid.dt:
                    h = target - t

                state = step(state, op, cfg, spec.k, h)
                t = target if h == target - t else t + h

                step_times.append(t)
                increments.append(state.reacted)
                worst = max(worst, bound_violation(state.u, state.v, spec.M))

            times.append(t)
            us.append(state.u.copy())
            vs.append(state.v.copy())
            LOG.debug('Stored snapshot at t = {:0.6g}'.format(t))

    except SolverFailure as e:
        failed = True
        message = str(e)
        LOG.error('Solver failed at t = {:0.6g}: {}'.format(t, message))
        if t > times[-1]:
            times.append(t)
            us.append(state.u.copy())
            vs.append(state.v.copy())

    LOG.info('Finished {} steps in {:0.2f}s'.format(len(step_times), time.time() - start))

    return Trajectory(grid=grid, spec=spec, times=np.array(times), u=np.array(us),
                      v=np.array(vs), step_times=np.array(step_times),
                      reaction_increments=np.array(increments), failed=failed,
                      message=message, max_bound_violation=float(worst))


def heat_step_solution(x, t, d, left, right, x0=0.0):
    """
    Solution of y_t = d y_xx on the line with y = left for x < x0 and
    y = right for x > x0 at t = 0
    """
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.where(x < x0, left, np.where(x > x0, right, 0.5 * (left + right)))
    return right + (left - right) * 0.5 * erfc((x - x0) / (2.0 * np.sqrt(d * t)))


def heat_dirichlet_solution(x, t, d, boundary, initial):
    """
    Solution of y_t = d y_xx on x > 0 with y(0, t) = boundary and y = initial
    at t = 0
    """
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.full_like(x, initial)
    return initial + (boundary - initial) * erfc(x / (2.0 * np.sqrt(d * t)))
