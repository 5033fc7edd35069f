"""Local adiabatic schedules ``ds/dt = eps * g^2(eta_star, s)``.

Writing ``g^2 = eta_star + 4(1 - eta_star)(s - 1/2)^2`` makes the ODE
separable with an arctangent antiderivative.  With
``k = sqrt((1 - eta_star) / eta_star)``::

    t(s) = atan2(2 k s, 1 - 2 k^2 (s - 1/2)) / (2 eps eta_star k)
    T    = atan(k) / (eps eta_star k)

The ``atan2`` form is the sum ``atan(2k(s - 1/2)) + atan(k)`` folded into one
call, which stays accurate both for ``k -> 0`` (constant rate) and large k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .grover import ScheduleParams, lae_rate

__all__ = [
    "AdiabaticSchedule",
    "DEFAULT_GRID_POINTS",
    "build_schedule",
    "evaluate_s",
    "total_runtime",
]

DEFAULT_GRID_POINTS = 1025
QUADRATURE_RTOL = 1e-10
_INVERSE_TOL = 1e-12


def _k(params):
    return math.sqrt((1.0 - params.eta_star) / params.eta_star)


def _time_closed_form(params, s):
    s = np.asarray(s, dtype=float)
    k = _k(params)
    if k == 0.0:
        return s / params.eps
    angle = np.arctan2(2.0 * k * s, 1.0 - 2.0 * k * k * (s - 0.5))
    return angle / (2.0 * params.eps * params.eta_star * k)


def total_runtime(params):
    """Total sweep time ``T = t(s=1)``; ``~ pi / (2 eps sqrt(eta_star))`` for small eta_star."""
    k = _k(params)
    if k == 0.0:
        return 1.0 / params.eps
    return math.atan(k) / (params.eps * params.eta_star * k)


def _quadrature_table(params, s_grid):
    """Independent check: t(s) by adaptive quadrature of ``1 / (eps g^2)``."""

    eps, eta, c = params.eps, params.eta_star, 1.0 - params.eta_star

    def inv_rate(x):
        return 1.0 / (eps * (eta + 4.0 * c * (x - 0.5) ** 2))

    # breakpoints resolving the 1/g^2 peak of half-width ~ sqrt(eta_star)/2
    width = 0.5 * math.sqrt(params.eta_star)
    peak = [0.5 + sign * width * 4.0**j for j in range(-2, 4) for sign in (-1.0, 1.0)] + [0.5]
    pieces = [0.0]
    for lo, hi in zip(s_grid[:-1], s_grid[1:]):
        pts = sorted(x for x in peak if lo < x < hi) or None
        val, _ = integrate.quad(inv_rate, lo, hi, points=pts, epsabs=0.0, epsrel=1e-12, limit=200)
        pieces.append(val)
    return np.cumsum(pieces)


@dataclass(frozen=True)
class AdiabaticSchedule:
    """Realised local adiabatic path.

    ``t_of_s`` and ``s_of_t`` use the closed form.  ``table_s``/``table_t``
    hold the quadrature verification table on a uniform s-grid, and
    ``max_table_deviation`` is the largest relative disagreement between it
    and the closed form.
    """

    params: ScheduleParams
    total_runtime: float
    table_s: np.ndarray = field(repr=False)
    table_t: np.ndarray = field(repr=False)
    max_table_deviation: float

    @property
    def k(self):
        return _k(self.params)

    def t_of_s(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s < 0.0) | (s > 1.0)):
            raise ValueError("s must lie in [0, 1]")
        t = _time_closed_form(self.params, s)
        t = np.where(s == 1.0, self.total_runtime, t)
        return float(t) if t.ndim == 0 else t

    def s_of_t(self, t):
        """Inverse of :meth:`t_of_s`; endpoints map exactly to 0 and 1."""
        t_arr = np.asarray(t, dtype=float)
        if np.any((t_arr < 0.0) | (t_arr > self.total_runtime)) or np.any(np.isnan(t_arr)):
            raise ValueError(f"t must lie in [0, T={self.total_runtime!r}]")
        s = self._s_analytic(t_arr)
        bad = np.abs(self._time_residual(s, t_arr)) * self.params.eps > _INVERSE_TOL
        if np.any(bad):
            s = np.where(bad, np.vectorize(self._s_bracketed)(t_arr), s)
        s = np.where(t_arr == 0.0, 0.0, np.where(t_arr == self.total_runtime, 1.0, s))
        s = np.clip(s, 0.0, 1.0)
        return float(s) if s.ndim == 0 else s

    def rate(self, s):
        return lae_rate(self.params, s)

    def _s_analytic(self, t):
        p, k = self.params, self.k
        if k == 0.0:
            return p.eps * t
        theta = 2.0 * p.eps * p.eta_star * k * t
        sin, cos = np.sin(theta), np.cos(theta)
        return sin / (2.0 * k * p.eta_star * (cos + k * sin))

    def _time_residual(self, s, t):
        return _time_closed_form(self.params, np.clip(s, 0.0, 1.0)) - t

    def _s_bracketed(self, t):
        # bracket from the verification table, then refine on the closed form
        i = int(np.searchsorted(self.table_t, t))
        i = min(max(i, 1), len(self.table_s) - 1)
        lo, hi = self.table_s[i - 1], self.table_s[i]
        f = lambda s: float(_time_closed_form(self.params, s)) - t
        if f(lo) > 0.0:
            lo = 0.0
        if f(hi) < 0.0:
            hi = 1.0
        return optimize.brentq(f, lo, hi, xtol=_INVERSE_TOL, rtol=4 * np.finfo(float).eps)

    def table(self):
        """Rows ``(s, t, ds_dt)`` of the verification grid."""
        rates = np.asarray(self.rate(self.table_s))
        return np.column_stack([self.table_s, self.t_of_s(self.table_s), rates])


def build_schedule(params, grid_points=DEFAULT_GRID_POINTS):
    """Build the schedule for ``params`` and verify it against quadrature.

    Raises ``RuntimeError`` if the closed form and the quadrature table
    disagree by more than ``1e-10`` relative at any grid point.
    """
    grid_points = int(grid_points)
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    s_grid = np.linspace(0.0, 1.0, grid_points)
    t_quad = _quadrature_table(params, s_grid)
    t_closed = _time_closed_form(params, s_grid)
    dev = float(np.max(np.abs(t_closed[1:] - t_quad[1:]) / t_quad[1:]))
    if dev > QUADRATURE_RTOL:
        raise RuntimeError(f"closed-form schedule deviates from quadrature by {dev:.3e}")
    return AdiabaticSchedule(
        params=params,
        total_runtime=total_runtime(params),
        table_s=s_grid,
        table_t=t_quad,
        max_table_deviation=dev,
    )


def evaluate_s(schedule, t):
    return schedule.s_of_t(t)
