"""
Module for the interaction term F(u, v) shared by both equations. Includes the
product law, fractional power laws, user supplied monotone tables and the C1
regularization F_mu used to keep the reaction solves well behaved when the
power law is not Lipschitz at zero.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .exceptions import InvalidInputError


class KineticsKind(str, Enum):
    PRODUCT = 'product'
    POWER = 'power'
    TABULATED = 'tabulated'


def smoothstep(r):
    """
    Cubic smoothstep, 0 for r <= 0, 3r^2 - 2r^3 on [0, 1] and 1 for r >= 1
    """
    r = np.clip(r, 0.0, 1.0)
    return r * r * (3.0 - 2.0 * r)


def smoothstep_slope(r):
    """
    Derivative of the cubic smoothstep
    """
    inside = (r > 0.0) & (r < 1.0)
    return np.where(inside, 6.0 * r * (1.0 - r), 0.0)


@dataclass(frozen=True)
class Kinetics:
    """
    Interaction function F with an optional regularization width mu. When
    mu > 0 every evaluation returns F_mu(u, v) = F(u, v) s(u/mu) s(v/mu).

    Attributes:
        kind: KineticsKind of the law
        m: Exponent on u for the power law
        n: Exponent on v for the power law
        mu: Regularization width, 0 disables it
        u_grid: Sample locations in u for tabulated kinetics
        v_grid: Sample locations in v for tabulated kinetics
        table: 2D values F(u_grid[i], v_grid[j]) for tabulated kinetics
    """
    kind: KineticsKind = KineticsKind.PRODUCT
    m: float = 1.0
    n: float = 1.0
    mu: float = 0.0
    u_grid: np.ndarray = field(default=None, repr=False, compare=False)
    v_grid: np.ndarray = field(default=None, repr=False, compare=False)
    table: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'kind', KineticsKind(self.kind))

        if not np.isfinite(self.mu) or self.mu < 0:
            raise InvalidInputError(
                'Regularization width mu must be >= 0, got {}'.format(self.mu))

        if self.kind == KineticsKind.POWER:
            if not (self.m > 0 and self.n > 0):
                raise InvalidInputError(
                    'Power kinetics need m > 0 and n > 0, got m={}, n={}'
                    ''.format(self.m, self.n))

        elif self.kind == KineticsKind.TABULATED:
            self._build_table()

    @classmethod
    def product(cls, mu=0.0):
        return cls(KineticsKind.PRODUCT, mu=mu)

    @classmethod
    def power(cls, m, n, mu=0.0):
        return cls(KineticsKind.POWER, m=m, n=n, mu=mu)

    @classmethod
    def tabulated(cls, u_grid, v_grid, table, mu=0.0):
        return cls(KineticsKind.TABULATED, u_grid=u_grid, v_grid=v_grid,
                   table=table, mu=mu)

    def _build_table(self):
        """
        Validate a sample table and attach the bilinear interpolator. Tables
        must start at zero in both directions, vanish on both zero edges, be
        positive inside and non-decreasing along both axes.
        """
        if self.u_grid is None or self.v_grid is None or self.table is None:
            raise InvalidInputError('Tabulated kinetics need u_grid, v_grid and table')

        ug = np.asarray(self.u_grid, dtype=float)
        vg = np.asarray(self.v_grid, dtype=float)
        values = np.asarray(self.table, dtype=float)

        if values.shape != (ug.size, vg.size):
            raise InvalidInputError(
                'Table shape {} does not match grids ({}, {})'
                ''.format(values.shape, ug.size, vg.size))

        if ug.size < 2 or vg.size < 2:
            raise InvalidInputError('Tabulated kinetics need at least 2 samples per axis')

        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(ug))
                and np.all(np.isfinite(vg))):
            raise InvalidInputError('Tabulated kinetics contain non-finite values')

        if ug[0] != 0 or vg[0] != 0:
            raise InvalidInputError('Tabulated grids must start at 0')

        if np.any(np.diff(ug) <= 0) or np.any(np.diff(vg) <= 0):
            raise InvalidInputError('Tabulated grids must be strictly increasing')

        if np.any(values[0, :] != 0) or np.any(values[:, 0] != 0):
            raise InvalidInputError('Tabulated kinetics must vanish when u = 0 or v = 0')

        if np.any(values[1:, 1:] <= 0):
            raise InvalidInputError('Tabulated kinetics must be positive for u, v > 0')

        if np.any(np.diff(values, axis=0) < 0) or np.any(np.diff(values, axis=1) < 0):
            raise InvalidInputError('Tabulated kinetics must be non-decreasing in u and v')

        object.__setattr__(self, 'u_grid', ug)
        object.__setattr__(self, 'v_grid', vg)
        object.__setattr__(self, 'table', values)
        object.__setattr__(self, '_interp',
                           RegularGridInterpolator((ug, vg), values, method='linear'))

    def _clamp_table(self, u, v):
        return (np.clip(u, 0.0, self.u_grid[-1]),
                np.clip(v, 0.0, self.v_grid[-1]))

    def raw(self, u, v):
        """
        Evaluate the unregularized F on arguments clamped to be non-negative

        Args:
            u: Concentration(s) of the mobile species
            v: Concentration(s) of the substrate

        Returns:
            rate: F(max(u, 0), max(v, 0))
        """
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        v = np.maximum(np.asarray(v, dtype=float), 0.0)

        if self.kind == KineticsKind.PRODUCT:
            return u * v

        elif self.kind == KineticsKind.POWER:
            return np.power(u, self.m) * np.power(v, self.n)

        uc, vc = self._clamp_table(u, v)
        pts = np.stack(np.broadcast_arrays(uc, vc), axis=-1)
        return self._interp(pts)

    def raw_partials(self, u, v):
        """
        Partial derivatives of the unregularized F. Power laws with exponents
        below one are infinite at zero, which callers treat as a signal to
        fall back to bisection.
        """
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        v = np.maximum(np.asarray(v, dtype=float), 0.0)
        u, v = np.broadcast_arrays(u, v)

        if self.kind == KineticsKind.PRODUCT:
            return v.copy(), u.copy()

        elif self.kind == KineticsKind.POWER:
            with np.errstate(divide='ignore', invalid='ignore'):
                fu = self.m * np.power(u, self.m - 1.0) * np.power(v, self.n)
                fv = self.n * np.power(u, self.m) * np.power(v, self.n - 1.0)
            # 0 * inf at the zero edges, F vanishes along them
            fu = np.where(v == 0, 0.0, fu)
            fv = np.where(u == 0, 0.0, fv)
            return fu, fv

        # Slopes of the bilinear interpolant from one sided differences
        h_u = 1e-7 * self.u_grid[-1]
        h_v = 1e-7 * self.v_grid[-1]
        f0 = self.raw(u, v)
        fu = (self.raw(u + h_u, v) - f0) / h_u
        fv = (self.raw(u, v + h_v) - f0) / h_v
        return fu, fv

    def __call__(self, u, v):
        f = self.raw(u, v)

        if self.mu > 0:
            u = np.maximum(np.asarray(u, dtype=float), 0.0)
            v = np.maximum(np.asarray(v, dtype=float), 0.0)
            f = f * smoothstep(u / self.mu) * smoothstep(v / self.mu)

        return f

    def partials(self, u, v):
        """
        Partial derivatives (dF/du, dF/dv) of the evaluated function, F_mu
        when regularized.
        """
        fu, fv = self.raw_partials(u, v)

        if self.mu > 0:
            u = np.maximum(np.asarray(u, dtype=float), 0.0)
            v = np.maximum(np.asarray(v, dtype=float), 0.0)
            f = self.raw(u, v)
            su, sv = smoothstep(u / self.mu), smoothstep(v / self.mu)
            dsu = smoothstep_slope(u / self.mu) / self.mu
            dsv = smoothstep_slope(v / self.mu) / self.mu

            with np.errstate(invalid='ignore'):
                fu = np.where(su > 0, fu * su * sv, 0.0) + f * dsu * sv
                fv = np.where(sv > 0, fv * su * sv, 0.0) + f * su * dsv

        return fu, fv

    def to_dict(self):
        info = {'kind': self.kind.value, 'm': self.m, 'n': self.n, 'mu': self.mu}
        if self.kind == KineticsKind.TABULATED:
            info['u_grid'] = self.u_grid.tolist()
            info['v_grid'] = self.v_grid.tolist()
            info['table'] = self.table.tolist()
        return info


def eval_F(kin, u, v):
    """
    Evaluate the interaction rate. Negative arguments are clamped to zero,
    non-finite arguments are rejected.

    Args:
        kin: Kinetics instance
        u: Concentration(s) of the mobile species
        v: Concentration(s) of the substrate

    Returns:
        rate: F(u, v), or F_mu(u, v) when kin.mu > 0
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)

    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise InvalidInputError('eval_F received non-finite concentrations')

    result = kin(u, v)

    if np.ndim(result) == 0:
        return float(result)

    return result
