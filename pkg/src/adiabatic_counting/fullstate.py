"""Brute-force N-dimensional evolution under ``H(s) = s Hp + (1 - s) Hd``.

Ground truth for the symmetry-reduced integrator at small N.  The
Hamiltonian is applied as diagonal plus rank-one, so one application costs
O(N) and no N x N matrix is formed.  Time integration runs in physical time
``t`` through :meth:`AdiabaticSchedule.s_of_t`, unlike the reduced module,
which integrates in ``s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import IntegrationError
from .schedule import build_schedule

__all__ = [
    "DEFAULT_MAX_N",
    "FullRun",
    "GroverInstance",
    "apply_hamiltonian",
    "block_spreads",
    "integrate_full",
    "measure",
    "measure_uniforms",
    "problem_energy",
    "run_full",
    "solution_weight",
    "uniform_state",
]

DEFAULT_MAX_N = 2**14
SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class GroverInstance:
    """Database of size ``n`` with solution indices ``marked``."""

    n: int
    marked: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError(f"n must be >= 1, got {self.n!r}")
        marked = [int(i) for i in self.marked]
        if len(set(marked)) != len(marked):
            raise ValueError("marked indices must be distinct")
        if any(not 0 <= i < n for i in marked):
            raise ValueError(f"marked indices must lie in [0, {n})")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "marked", frozenset(marked))

    @classmethod
    def first_m(cls, n, m):
        """Instance whose solutions are items ``0 .. m-1``."""
        return cls(n, frozenset(range(int(m))))

    @property
    def m(self):
        return len(self.marked)

    @property
    def eta(self):
        return self.m / self.n

    def mask(self):
        """Boolean array, True on solution items."""
        out = np.zeros(self.n, dtype=bool)
        out[list(self.marked)] = True
        return out


def uniform_state(n):
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


def _apply(s, psi, unmarked):
    return s * unmarked * psi - (1.0 - s) * psi.mean()


def apply_hamiltonian(instance, s, psi):
    """Return ``H(s) psi`` in O(N) without materialising H."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (instance.n,):
        raise ValueError(f"state has shape {psi.shape}, expected ({instance.n},)")
    return _apply(s, psi, (~instance.mask()).astype(float))


def solution_weight(psi, instance):
    """Total probability on marked items, normalised by ``||psi||^2``."""
    probs = np.abs(psi) ** 2
    return float(probs[instance.mask()].sum() / probs.sum())


def problem_energy(psi, instance):
    """``<psi|Hp|psi>``: the weight on unmarked items."""
    probs = np.abs(psi) ** 2
    return float(probs[~instance.mask()].sum() / probs.sum())


def block_spreads(psi, instance):
    """Largest amplitude spread inside the marked and the unmarked blocks."""
    mask = instance.mask()

    def spread(block):
        return float(np.max(np.abs(block - block[0]))) if block.size else 0.0

    return spread(psi[mask]), spread(psi[~mask])


@dataclass(frozen=True)
class FullRun:
    """States at the requested checkpoints; ``states[-1]`` is the final state."""

    instance: GroverInstance
    s: np.ndarray
    states: np.ndarray = field(repr=False)
    total_runtime: float
    norm_drift: float

    @property
    def final(self):
        return self.states[-1]

    @property
    def p_sol(self):
        return solution_weight(self.final, self.instance)


def run_full(instance, params, tol=1e-10, checkpoints=None, max_n=DEFAULT_MAX_N):
    """Evolve ``|phi>`` from s = 0 to s = 1, sampling at ``checkpoints`` in s.

    The endpoint ``s = 1`` is always included.  Raises ``IntegrationError``
    on norm drift above ``10 * tol`` or, for M >= 1, on a block spread above
    ``1e-8``.
    """
    if instance.n > max_n:
        raise ValueError(f"N={instance.n} exceeds the full-state cap {max_n}")
    if not 0.0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")
    schedule = build_schedule(params)
    total = schedule.total_runtime
    s_points = np.array([1.0] if checkpoints is None else sorted(set(map(float, checkpoints)) | {1.0}))
    if s_points[0] < 0.0:
        raise ValueError("checkpoints must lie in [0, 1]")
    t_points = np.asarray(schedule.t_of_s(s_points), dtype=float)
    t_points[-1] = total

    unmarked = (~instance.mask()).astype(float)

    def rhs(t, psi):
        return -1j * _apply(schedule.s_of_t(min(t, total)), psi, unmarked)

    sol = solve_ivp(
        rhs,
        (0.0, total),
        uniform_state(instance.n),
        method="DOP853",
        t_eval=t_points,
        rtol=tol,
        atol=tol / np.sqrt(instance.n),
    )
    if sol.status != 0:
        raise IntegrationError(f"integrator failed: {sol.message}", s=schedule.s_of_t(min(sol.t[-1], total)))
    states = sol.y.T
    norms = np.sum(np.abs(states) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > 10.0 * tol:
        raise IntegrationError(f"norm drift {drift:.3e} exceeds tolerance")
    if 0 < instance.m:
        for s, psi in zip(s_points, states):
            if max(block_spreads(psi, instance)) > SYMMETRY_TOL:
                raise IntegrationError("permutation symmetry broken", s=float(s))
    return FullRun(instance=instance, s=s_points, states=states, total_runtime=total, norm_drift=drift)


def integrate_full(instance, params, tol=1e-10, max_n=DEFAULT_MAX_N):
    """Final state at s = 1 of the full N-dimensional evolution."""
    return run_full(instance, params, tol=tol, max_n=max_n).final


def measure_uniforms(psi, instance, uniforms):
    """Computational-basis outcomes driven by the given uniforms in [0, 1).

    Returns ``(indices, is_solution)`` arrays.  Inverse-CDF sampling makes the
    outcome a pure function of the uniform.
    """
    cdf = np.cumsum(np.abs(psi) ** 2)
    u = np.asarray(uniforms, dtype=float) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), instance.n - 1)
    return idx, instance.mask()[idx]


def measure(psi, instance, rng):
    """Sample one basis index with probability ``|c_i|^2 / sum |c_j|^2``."""
    idx, hit = measure_uniforms(psi, instance, [rng.random()])
    return int(idx[0]), bool(hit[0])
