"""
Module for the property suite behind the verify command. Each property
runs the solver (or the profile code) on the configured benchmark and
returns a PropertyResult, the suite gathers them into a scorecard.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .analysis import (comparison_check, is_nonincreasing, reaction_mass,
                       segregation_integral, translate_contraction_check, value_ratio)
from .exceptions import FreeBoundaryError, InvalidInputError, SolverFailure
from .kinetics import Kinetics
from .model import InitialData, InitialKind, sample_initial
from .profile import SelfSimilarProfile, residual_report
from .solver import (SolverConfig, heat_dirichlet_solution, heat_step_solution,
                     reaction_residual, reaction_substep, run)
from .utilities import assign_default_kwargs, get_logger

EPS = np.finfo(float).eps


@dataclass
class PropertyResult:
    name: str
    passed: bool
    value: float = float('nan')
    threshold: float = float('nan')
    required: bool = True
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {'passed': bool(self.passed), 'value': self.value,
                'threshold': self.threshold, 'required': self.required,
                'detail': self.detail}


class PropertySuite:
    """
    Runs every property check on the benchmark of a RunConfig.

    Attributes:
        defaults: Dictionary of keyword arguments consumed by the suite
        config: RunConfig
        results: Dictionary of property name to PropertyResult
        log: Logger object with colored logs installed.
    """

    defaults = {'debug': False,
                'quiet': False}

    properties = ['bounds', 'reaction_conservation', 'comparison', 'contraction',
                  'segregation_trend', 'reaction_mass', 'profile_residuals',
                  'self_convergence', 'heat_oracle']

    def __init__(self, config, **kwargs):
        self.config = config
        self.meta = assign_default_kwargs(self, kwargs, self.defaults)
        self.log = get_logger(__name__, debug=not self.quiet)
        self.results = {}
        self._runs = {}

    @property
    def spec(self):
        return self.config.spec

    @property
    def settings(self):
        return self.config.analysis

    def trajectory(self, k):
        """
        Solve the benchmark at rate k once and reuse it across properties
        """
        k = float(k)
        if k not in self._runs:
            self.log.info('Solving the benchmark with k = {}'.format(k))
            self._runs[k] = run(self.spec.with_changes(k=k), self.config.grid, self.config.solver)
        return self._runs[k]

    def run(self, names=None):
        """
        Run the requested properties, all by default. With debug=False solver
        errors mark a property failed instead of propagating.

        Returns:
            results: Dictionary of property name to PropertyResult
        """
        names = names or self.properties
        start = time.time()

        for name in names:
            if name not in self.properties:
                raise InvalidInputError('Unknown property {}'.format(name))

            self.log.info('Checking {}...'.format(name))
            try:
                result = getattr(self, 'check_{}'.format(name))()
            except (SolverFailure, FreeBoundaryError) as e:
                if self.debug:
                    raise
                self.log.error('{} errored: {}'.format(name, e))
                result = PropertyResult(name, False, detail={'error': str(e)})

            self.results[name] = result
            level = self.log.info if result.passed else self.log.error
            level('{} {}: value = {}, threshold = {}'.format(
                name, 'passed' if result.passed else 'FAILED', result.value, result.threshold))

        self.log.info('Finished! Elapsed {:d}s'.format(int(time.time() - start)))
        return self.results

    @property
    def failing(self):
        return [n for n, r in self.results.items() if r.required and not r.passed]

    @property
    def passed(self):
        return len(self.failing) == 0

    def scorecard(self):
        return {'passed': self.passed, 'failing': self.failing,
                'properties': {n: r.to_dict() for n, r in self.results.items()}}

    def check_bounds(self):
        M = self.spec.M
        worst = 0.0
        detail = {}
        ok = True

        for k in self.settings.bounds_ks:
            traj = self.trajectory(k)
            detail[str(k)] = {'max_bound_violation': traj.max_bound_violation,
                              'failed': traj.failed}
            worst = max(worst, traj.max_bound_violation)
            ok = ok and traj.bounds_ok and not traj.failed

        return PropertyResult('bounds', ok, value=worst, threshold=1e-10 * M, detail=detail)

    def check_reaction_conservation(self):
        """
        Apply a reaction half step to every stored state of the bounds runs
        with the configured kinetics and a fractional power law, which goes
        through the iterative solve.
        """
        M = self.spec.M
        cfg = self.config.solver
        dt = 0.5 * self.config.grid.dt
        laws = {'configured': self.spec.kinetics, 'power_0.5_0.5': Kinetics.power(0.5, 0.5)}

        worst_cons = 0.0
        worst_implicit = 0.0
        detail = {}

        for label, kin in laws.items():
            law_cons = 0.0
            law_implicit = 0.0
            for k in self.settings.bounds_ks:
                traj = self.trajectory(k)
                for u, v in zip(traj.u, traj.v):
                    u_new, v_new = reaction_substep(u, v, k, kin, dt, cfg=cfg, M=M)
                    implicit, cons = reaction_residual(u, v, u_new, v_new, k, kin, dt)
                    law_cons = max(law_cons, float(np.max(cons)))
                    law_implicit = max(law_implicit, float(np.max(implicit)))

            detail[label] = {'conservation': law_cons, 'implicit': law_implicit}
            worst_cons = max(worst_cons, law_cons)
            worst_implicit = max(worst_implicit, law_implicit)

        cons_limit = 4.0 * EPS * M
        implicit_limit = self.settings.reaction_check_tol * M
        ok = worst_cons <= cons_limit and worst_implicit <= implicit_limit
        detail['conservation_limit'] = cons_limit
        detail['implicit_limit'] = implicit_limit

        return PropertyResult('reaction_conservation', ok,
                              value=max(worst_cons / cons_limit, worst_implicit / implicit_limit),
                              threshold=1.0, detail=detail)

    def _ordered_pair(self, rng, u0, v0, x):
        """
        Raise u and lower v by random Gaussian bumps inside the interior
        """
        M = self.spec.M
        span = x[-1] - x[0]

        def bump():
            center = rng.uniform(x[0] + 0.25 * span, x[-1] - 0.25 * span)
            width = rng.uniform(0.02, 0.1) * span
            amplitude = rng.uniform(0.0, 0.5) * M
            return amplitude * np.exp(-((x - center) / width) ** 2)

        u_hi = np.minimum(u0 + bump(), M)
        v_hi = np.maximum(v0 - bump(), 0.0)
        return (u0, v0), (u_hi, v_hi)

    def check_comparison(self):
        rng = np.random.default_rng(self.config.seed)
        spec = self.spec.with_changes(k=self.settings.comparison_k)
        grid = self.config.grid
        u0, v0 = sample_initial(spec.initial, spec, grid)

        violations = []
        for i in range(self.settings.comparison_pairs):
            lower, upper = self._ordered_pair(rng, u0, v0, grid.x)
            violations.append(comparison_check(spec, grid, self.config.solver, lower, upper))
            self.log.debug('Pair {} violation {:0.3g}'.format(i, violations[-1]))

        worst = max(violations) if violations else 0.0
        limit = self.settings.comparison_tol * spec.M
        return PropertyResult('comparison', worst <= limit, value=worst, threshold=limit,
                              detail={'violations': violations})

    def check_contraction(self):
        traj = self.trajectory(self.settings.comparison_k)
        dx = self.config.grid.dx
        M = self.spec.M
        ok = True
        detail = {}
        worst = -np.inf

        for cells in self.settings.xi_shifts:
            xi = cells * dx
            result = translate_contraction_check(traj, xi)
            limit = self.settings.contraction_tol * M * abs(xi) + 10.0 * dx ** 2
            detail[str(cells)] = {'max_excess': result.max_excess, 'limit': limit}
            ok = ok and result.max_excess <= limit
            worst = max(worst, result.max_excess - limit)

        return PropertyResult('contraction', ok, value=float(worst), threshold=0.0,
                              detail=detail)

    def check_segregation_trend(self):
        ks = sorted(self.settings.segregation_ks)
        values = [segregation_integral(self.trajectory(k)) for k in ks]
        ratio = value_ratio(values[-1], values[0])
        ok = (is_nonincreasing(values, self.settings.monotone_slack)
              and ratio <= self.settings.segregation_ratio)
        return PropertyResult('segregation_trend', ok, value=ratio,
                              threshold=self.settings.segregation_ratio,
                              detail={'k': ks, 'segregation': values})

    def check_reaction_mass(self):
        ks = sorted(set(k for k in list(self.settings.bounds_ks)
                        + list(self.settings.segregation_ks)
                        if k >= self.settings.mass_min_k))
        masses = [reaction_mass(self.trajectory(k)) for k in ks]

        if len(masses) < 2:
            return PropertyResult('reaction_mass', True, value=1.0,
                                  threshold=self.settings.mass_ratio,
                                  detail={'note': 'fewer than two rates with k >= {:g}'
                                          ''.format(self.settings.mass_min_k)})

        ratio = value_ratio(max(masses), min(masses))
        return PropertyResult('reaction_mass', ratio <= self.settings.mass_ratio, value=ratio,
                              threshold=self.settings.mass_ratio,
                              detail={'k': ks, 'reaction_mass': masses})

    def check_profile_residuals(self):
        prof = SelfSimilarProfile.from_spec(self.spec)
        report = residual_report(prof)
        tol = self.settings.residual_tol
        return PropertyResult('profile_residuals', report.worst() <= tol, value=report.worst(),
                              threshold=tol, detail={'a': prof.a, **report.to_dict()})

    def _refined(self, factor_x, factor_t):
        g = self.config.grid
        nx = max(16, int(round(g.nx * factor_x)))
        return g.with_changes(nx=nx, dt=g.dt * factor_t)

    def _nested_grids(self):
        """
        Coarse, middle and fine grids whose nodes nest by a factor of 2, dt
        shrinks with dx ** 2
        """
        g = self.config.grid
        nx = max(16, g.nx // 4)
        return [g.with_changes(nx=nx * 2 ** i, dt=g.dt * 16.0 / 4 ** i) for i in range(3)]

    def check_self_convergence(self):
        """
        Three solutions on (4 dx, 16 dt), (2 dx, 4 dt) and (dx, dt) with smooth
        data and k = 10. Successive final time differences must shrink by the
        configured factor.
        """
        grids = self._nested_grids()
        width = max(1.0, 10.0 * grids[0].dx)
        spec = self.spec.with_changes(k=10.0, initial=InitialData(InitialKind.SMOOTHED_STEP,
                                                                  width=width))
        cfg = SolverConfig(diffusion_theta=0.5, reaction_tol=self.config.solver.reaction_tol,
                           max_reaction_iters=self.config.solver.max_reaction_iters)

        finals = []
        for grid in grids:
            traj = run(spec, grid, cfg)
            if traj.failed:
                raise SolverFailure(traj.message)
            finals.append((traj.x, traj.u[-1], traj.v[-1]))

        diffs = []
        for (xc, uc, vc), (xf, uf, vf) in zip(finals[:-1], finals[1:]):
            stride = (xf.size - 1) // (xc.size - 1)
            du = uf[::stride] - uc
            dv = vf[::stride] - vc
            diffs.append(float(np.sqrt(trapezoid(du ** 2 + dv ** 2, xc))))

        ratio = diffs[0] / diffs[1] if diffs[1] > 0 else np.inf
        factor = self.settings.convergence_factor
        return PropertyResult('self_convergence', ratio >= factor, value=ratio,
                              threshold=factor, detail={'differences': diffs})

    def check_heat_oracle(self):
        """
        k = 0 against the closed form heat solution on (2 dx, dt) and
        (dx, dt / 4), reporting the observed order
        """
        spec = self.spec.with_changes(k=0.0, initial=InitialData(InitialKind.SHARP_STEP))
        errors = []

        for grid in [self._refined(0.5, 1.0), self._refined(1.0, 0.25)]:
            traj = run(spec, grid, SolverConfig(diffusion_theta=1.0))
            x = traj.x
            if spec.is_whole_line:
                exact = heat_step_solution(x, spec.T, spec.d_u, spec.U_0, 0.0)
            else:
                exact = heat_dirichlet_solution(x, spec.T, spec.d_u, spec.U_0, 0.0)
            errors.append(float(np.sqrt(trapezoid((traj.u[-1] - exact) ** 2, x))))

        order = np.log2(errors[0] / errors[1]) if errors[1] > 0 else np.inf
        return PropertyResult('heat_oracle', order >= self.settings.heat_order,
                              value=float(order), threshold=self.settings.heat_order,
                              required=False, detail={'errors': errors})
