"""Closed-form quantities of the adiabatic Grover problem.

The interpolating Hamiltonian is ``H(s) = s*Hp + (1 - s)*Hd`` with
``Hp = 1 - sum_m |m><m|`` and ``Hd = -|phi><phi|``.  Everything below depends
on the database only through the solution ratio ``eta = M / N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScheduleParams",
    "angle_from_ratio",
    "check_ratio",
    "gap",
    "lae_rate",
    "matrix_element_v01",
    "ratio_from_angle",
    "ratio_from_counts",
    "strict_lae_rate",
]


def check_ratio(eta, name="eta"):
    """Return ``eta`` as a float, raising ``ValueError`` outside [0, 1]."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {eta!r}")
    return eta


def ratio_from_counts(m, n):
    """Solution ratio ``M / N`` from integer counts."""
    m, n = int(m), int(n)
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    if not 0 <= m <= n:
        raise ValueError(f"M must satisfy 0 <= M <= N, got M={m}, N={n}")
    return m / n


def _check_unit_array(eta, name="eta"):
    arr = np.asarray(eta, dtype=float)
    if arr.ndim == 0:
        return check_ratio(arr, name)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _check_s(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any((s_arr < 0.0) | (s_arr > 1.0)) or np.any(np.isnan(s_arr)):
        raise ValueError("adiabatic parameter s must lie in [0, 1]")
    return s_arr


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class ScheduleParams:
    """Assumed solution ratio ``eta_star`` and adiabatic error parameter ``eps``.

    ``eta_star = 0`` is rejected: the resulting schedule never reaches s = 1.
    """

    eta_star: float
    eps: float

    def __post_init__(self):
        eta_star = check_ratio(self.eta_star, "eta_star")
        if eta_star == 0.0:
            raise ValueError("eta_star must be > 0 (the schedule is degenerate at 0)")
        eps = float(self.eps)
        if not (eps > 0.0 and math.isfinite(eps)):
            raise ValueError(f"eps must be a positive finite number, got {self.eps!r}")
        object.__setattr__(self, "eta_star", eta_star)
        object.__setattr__(self, "eps", eps)

    @classmethod
    def from_counts(cls, m_star, n, eps):
        return cls(ratio_from_counts(m_star, n), eps)


def _gap_squared(eta, s):
    # same as 1 - 4(1-eta)s(1-s) without the cancellation near s = 1/2
    return eta + 4.0 * (1.0 - eta) * (s - 0.5) ** 2


def gap(eta, s):
    """First excitation gap ``sqrt(1 - 4(1-eta)s(1-s))``.

    Vectorised over ``eta`` and ``s`` (broadcast).  Values lie in
    ``[sqrt(eta), 1]`` with the minimum at ``s = 1/2``.
    """
    eta = _check_unit_array(eta)
    s = _check_s(s)
    # clip guards tiny negative rounding at eta == 0, s == 1/2
    return _scalar_or_array(np.sqrt(np.maximum(_gap_squared(eta, s), 0.0)))


def matrix_element_v01(eta, s):
    """``|<0|dH/ds|1>| = sqrt(eta(1-eta)) / g(eta, s)``; never exceeds 1."""
    eta = _check_unit_array(eta)
    g = np.asarray(gap(eta, s))
    if np.any(g == 0.0):
        raise ValueError("matrix element undefined where the gap closes (eta=0, s=1/2)")
    return _scalar_or_array(np.sqrt(eta * (1.0 - eta)) / g)


def lae_rate(params, s):
    """Local-adiabatic sweep rate ``ds/dt = eps * g^2(eta_star, s)``."""
    s = _check_s(s)
    return _scalar_or_array(params.eps * _gap_squared(params.eta_star, s))


def strict_lae_rate(params, s):
    """Rate from the unrelaxed condition, ``eps g^3 / sqrt(eta*(1-eta*))``.

    Only defined for ``0 < eta_star < 1``.  Exposed for comparison; schedules
    are always built from :func:`lae_rate`.
    """
    eta = params.eta_star
    if eta >= 1.0:
        raise ValueError("strict rate requires eta_star < 1")
    g = np.asarray(gap(eta, s))
    return _scalar_or_array(params.eps * g**3 / math.sqrt(eta * (1.0 - eta)))


def angle_from_ratio(eta):
    """Angle ``theta`` in [0, pi] with ``eta = sin^2(theta / 2)``."""
    eta = check_ratio(eta)
    return 2.0 * math.asin(math.sqrt(eta))


def ratio_from_angle(theta):
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta!r}")
    return math.sin(theta / 2.0) ** 2
