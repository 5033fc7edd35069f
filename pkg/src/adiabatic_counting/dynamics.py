"""Symmetry-reduced Schrödinger dynamics along a local adiabatic schedule.

By permutation symmetry the N-dimensional state keeps one amplitude ``a`` on
every marked item and one amplitude ``b`` on every unmarked item.  In the
adiabatic parameter ``s`` the equations of motion read::

    i eps g^2(eta*, s) a' = -(1 - s) [eta a + (1 - eta) b]
    i eps g^2(eta*, s) b' = -(1 - s) [eta a + (1 - eta) b] + s b

with ``a(0) = b(0) = 1`` so that ``eta |a|^2 + (1 - eta) |b|^2 = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .grover import ScheduleParams, _gap_squared, check_ratio, ratio_from_counts

__all__ = [
    "IntegrationError",
    "ReducedRunSpec",
    "ReducedState",
    "Trajectory",
    "integrate_reduced",
    "p_sol",
    "p_sol_landau_zener",
    "p_sol_landau_zener_ratio",
    "p_sol_small_eps",
    "reduced_trajectory",
    "solution_probability",
]

# smallest accepted step anywhere on [0, 1]; the coefficient 1/(eps g^2) is bounded
# so a healthy run never comes near this
MIN_STEP = 1e-12


class IntegrationError(RuntimeError):
    """ODE integration failed or violated a monitored invariant."""

    def __init__(self, message, s=None):
        super().__init__(message if s is None else f"{message} (at s={s:.17g})")
        self.s = s


@dataclass(frozen=True)
class ReducedState:
    a: complex
    b: complex
    s: float

    def norm(self, eta):
        return eta * abs(self.a) ** 2 + (1.0 - eta) * abs(self.b) ** 2


@dataclass(frozen=True)
class ReducedRunSpec:
    """True ratio ``eta``, schedule parameters and integrator tolerances."""

    eta: float
    params: ScheduleParams
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "eta", check_ratio(self.eta))
        for name in ("abs_tol", "rel_tol"):
            tol = float(getattr(self, name))
            if not 0.0 < tol <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {tol!r}")
            object.__setattr__(self, name, tol)

    @classmethod
    def from_counts(cls, m, n, m_star, eps, **tols):
        """Spec for ``M`` solutions out of ``N`` run with an ``M*`` schedule."""
        return cls(ratio_from_counts(m, n), ScheduleParams.from_counts(m_star, n, eps), **tols)

    @property
    def tolerance(self):
        return max(self.abs_tol, self.rel_tol)


@dataclass(frozen=True)
class Trajectory:
    s: np.ndarray
    a: np.ndarray
    b: np.ndarray
    norm: np.ndarray
    min_step: float

    @property
    def final(self):
        return ReducedState(complex(self.a[-1]), complex(self.b[-1]), float(self.s[-1]))


def _rhs(spec):
    eta, eta_star, eps = spec.eta, spec.params.eta_star, spec.params.eps

    def f(s, y):
        a, b = y
        mix = (1.0 - s) * (eta * a + (1.0 - eta) * b)
        scale = 1j / (eps * _gap_squared(eta_star, s))
        return np.array([scale * mix, scale * (mix - s * b)])

    return f


def _solve(spec, s_eval=None):
    sol = solve_ivp(
        _rhs(spec),
        (0.0, 1.0),
        np.array([1.0 + 0j, 1.0 + 0j]),
        method="DOP853",
        dense_output=s_eval is not None,
        rtol=spec.rel_tol,
        atol=spec.abs_tol,
    )
    if sol.status != 0:
        raise IntegrationError(f"integrator failed: {sol.message}", s=float(sol.t[-1]))
    steps = np.diff(sol.t)
    min_step = float(steps.min())
    if min_step < MIN_STEP:
        i = int(np.argmin(steps))
        raise IntegrationError(f"step size underflow ({min_step:.3e})", s=float(sol.t[i]))
    if s_eval is None:
        s, (a, b) = sol.t, sol.y
    else:
        s = s_eval
        a, b = sol.sol(s_eval)
        if s_eval[-1] == 1.0:
            a[-1], b[-1] = sol.y[:, -1]
    norm = spec.eta * np.abs(a) ** 2 + (1.0 - spec.eta) * np.abs(b) ** 2
    step_norm = spec.eta * np.abs(sol.y[0]) ** 2 + (1.0 - spec.eta) * np.abs(sol.y[1]) ** 2
    for where, values in ((sol.t, step_norm), (s, norm)):
        drift = np.abs(values - 1.0)
        if np.max(drift) > 10.0 * spec.tolerance:
            i = int(np.argmax(drift))
            raise IntegrationError(f"normalisation drift {drift[i]:.3e} exceeds tolerance", s=float(where[i]))
    return Trajectory(s=np.asarray(s), a=a, b=b, norm=norm, min_step=min_step)


def integrate_reduced(spec):
    """Integrate from s = 0 to s = 1 and return the final reduced state.

    Normalisation is checked at every accepted step and never re-imposed;
    drift above ``10 * max(abs_tol, rel_tol)`` raises :class:`IntegrationError`.
    """
    traj = _solve(spec)
    final = traj.final
    return ReducedState(final.a, final.b, 1.0)


def reduced_trajectory(spec, s_points):
    """Amplitudes sampled at the strictly increasing points ``s_points``."""
    s_points = np.asarray(s_points, dtype=float)
    if s_points.ndim != 1 or s_points.size == 0:
        raise ValueError("s_points must be a non-empty 1-d sequence")
    if np.any(np.diff(s_points) <= 0) or s_points[0] < 0.0 or s_points[-1] > 1.0:
        raise ValueError("s_points must be strictly increasing inside [0, 1]")
    return _solve(spec, s_eval=s_points)


def p_sol(final, eta):
    """Probability that measuring ``final`` yields a marked item."""
    eta = check_ratio(eta)
    weight_a = eta * abs(final.a) ** 2
    total = weight_a + (1.0 - eta) * abs(final.b) ** 2
    return min(max(weight_a / total, 0.0), 1.0)


def solution_probability(eta, eta_star, eps, **tols):
    """Convenience wrapper: integrated P_sol for ``(eta, eta_star, eps)``."""
    spec = ReducedRunSpec(eta, ScheduleParams(eta_star, eps), **tols)
    return p_sol(integrate_reduced(spec), spec.eta)


def p_sol_small_eps(eta, eps):
    """Leading-order small-eps success probability ``1 - eps^2 eta (1 - eta)``."""
    eta = check_ratio(eta)
    eps = float(eps)
    if eps < 0.0:
        raise ValueError("eps must be >= 0")
    return 1.0 - eps * eps * eta * (1.0 - eta)


def p_sol_landau_zener(m, m_star, eps):
    """Large-N success probability ``1 - exp(-pi M / (4 eps M*))``."""
    if m < 0:
        raise ValueError("M must be >= 0")
    if m_star < 1:
        raise ValueError("M* must be >= 1")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    return -math.expm1(-math.pi * m / (4.0 * eps * m_star))


def p_sol_landau_zener_ratio(eta, eta_star, eps):
    """Same law written with ratios, ``1 - exp(-pi eta / (4 eps eta*))``."""
    eta = check_ratio(eta)
    eta_star = check_ratio(eta_star, "eta_star")
    if eta_star == 0.0:
        raise ValueError("eta_star must be > 0")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    return -math.expm1(-math.pi * eta / (4.0 * eps * eta_star))
