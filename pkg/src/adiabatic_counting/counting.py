"""Adiabatic quantum counting: detection, M* search and estimation of M.

Every oracle draw is one complete adiabatic run with schedule ``eta* = M*/N``
followed by a computational-basis measurement.  Its cost is the schedule's
total runtime ``T(M*/N, eps)``.  Randomness comes from streams keyed by
``(seed, phase, probe)``.  Draw ``i`` of a probe always uses variate ``i`` of
its stream, so results do not depend on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .dynamics import p_sol_landau_zener, solution_probability
from .fullstate import GroverInstance, measure_uniforms, run_full
from .grover import ScheduleParams, ratio_from_counts
from .schedule import total_runtime

__all__ = [
    "AnalyticOracle",
    "BACKENDS",
    "ClassicalEstimate",
    "CostMeter",
    "CountingEstimate",
    "FullOracle",
    "MeasurementOracle",
    "ReducedOracle",
    "SearchResult",
    "binary_search_mstar",
    "classical_baseline",
    "detect_nonzero",
    "estimate_m",
    "m_from_probability",
    "pooled_m_estimate",
    "make_oracle",
    "required_trials",
    "run_counting",
    "stream",
]

# stream phase tags
_DETECT, _SEARCH, _ESTIMATE, _CLASSICAL = 1, 2, 3, 4


def stream(seed, phase, probe=0):
    """Generator for the keyed stream ``(seed, phase, probe)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), phase, probe])))


def schedule_runtime(n, m_star, eps):
    return total_runtime(ScheduleParams.from_counts(m_star, n, eps))


class CostMeter:
    """Accumulates total annealing time ``sum T`` over oracle draws.

    Batches are summed with ``math.fsum`` so the total does not depend on the
    order in which batches were recorded.
    """

    def __init__(self):
        self._batches = []
        self.draws = 0

    def add(self, draws, runtime):
        self._batches.append(draws * runtime)
        self.draws += draws

    @property
    def total(self):
        return math.fsum(self._batches)


class MeasurementOracle:
    """Source of "solution found" outcomes for an ``(N, M)`` database.

    Subclasses provide :meth:`success_probability` and, if they do more than
    compare uniforms against it, :meth:`_outcomes`.
    """

    kind = "abstract"

    def __init__(self, instance):
        self.instance = instance

    @property
    def n(self):
        return self.instance.n

    @property
    def m(self):
        return self.instance.m

    def success_probability(self, m_star, eps):
        raise NotImplementedError

    def _outcomes(self, m_star, eps, uniforms):
        return uniforms < self.success_probability(m_star, eps)

    def sample(self, m_star, eps, count, rng, meter=None):
        """Run ``count`` annealing runs at ``M*``; returns the boolean outcomes."""
        if not 1 <= m_star <= self.n:
            raise ValueError(f"M* must lie in [1, N={self.n}], got {m_star}")
        outcomes = np.asarray(self._outcomes(m_star, eps, rng.random(count)), dtype=bool)
        if meter is not None:
            meter.add(count, schedule_runtime(self.n, m_star, eps))
        return outcomes

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, m={self.m})"


class AnalyticOracle(MeasurementOracle):
    """Draws with the large-N Landau-Zener probability."""

    kind = "analytic"

    def success_probability(self, m_star, eps):
        return p_sol_landau_zener(self.m, m_star, eps)


class ReducedOracle(MeasurementOracle):
    """Draws with the probability from the integrated two-amplitude dynamics."""

    kind = "reduced"

    def __init__(self, instance, tol=1e-10):
        super().__init__(instance)
        self.tol = tol
        self._cache = {}

    def success_probability(self, m_star, eps):
        key = (m_star, eps)
        if key not in self._cache:
            self._cache[key] = solution_probability(
                ratio_from_counts(self.m, self.n),
                ratio_from_counts(m_star, self.n),
                eps,
                abs_tol=self.tol,
                rel_tol=self.tol,
            )
        return self._cache[key]


class FullOracle(MeasurementOracle):
    """Measures the actual N-dimensional final state (small N only).

    The evolution is deterministic, so the final state for each ``(M*, eps)``
    is computed once and every draw is a fresh measurement of it.
    """

    kind = "full"

    def __init__(self, instance, tol=1e-10):
        super().__init__(instance)
        self.tol = tol
        self._cache = {}

    def final_state(self, m_star, eps):
        key = (m_star, eps)
        if key not in self._cache:
            params = ScheduleParams.from_counts(m_star, self.n, eps)
            self._cache[key] = run_full(self.instance, params, tol=self.tol).final
        return self._cache[key]

    def success_probability(self, m_star, eps):
        probs = np.abs(self.final_state(m_star, eps)) ** 2
        return float(probs[self.instance.mask()].sum() / probs.sum())

    def _outcomes(self, m_star, eps, uniforms):
        _, hits = measure_uniforms(self.final_state(m_star, eps), self.instance, uniforms)
        return hits


BACKENDS = {cls.kind: cls for cls in (AnalyticOracle, ReducedOracle, FullOracle)}


def make_oracle(kind, n, m=None, marked=None, **kwargs):
    """Oracle of backend ``kind`` for a database with ``m`` (or ``marked``) solutions."""
    if kind not in BACKENDS:
        raise ValueError(f"unknown backend {kind!r}; choose from {sorted(BACKENDS)}")
    if marked is not None:
        instance = GroverInstance(n, frozenset(marked))
    elif m is not None:
        instance = GroverInstance.first_m(n, m)
    else:
        raise ValueError("give either m or marked")
    return BACKENDS[kind](instance, **kwargs)


def detect_nonzero(oracle, eps, seed, repeats=1, meter=None):
    """Decide M > 0 from ``repeats`` runs with the ``M* = 1`` schedule.

    Never true for M = 0.  For M >= 1 the false-negative rate per run is about
    ``exp(-pi M / (4 eps))``.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    hits = oracle.sample(1, eps, repeats, stream(seed, _DETECT), meter)
    return bool(hits.any())


@dataclass(frozen=True)
class SearchResult:
    """Outcome of the M* search.

    ``m_star == 0`` together with ``no_solutions`` is the sentinel for "no
    success at any probe down to M* = 1".  ``probes`` holds one
    ``(m_star, successes, runs)`` triple per tested value.
    """

    m_star: int
    probes: tuple
    saturated: bool = False
    no_solutions: bool = False
    total_cost: float = 0.0


def pooled_m_estimate(probes, eps):
    """Maximum-likelihood M from ``(m_star, successes, runs)`` probes.

    Uses the success law ``1 - exp(-pi M / (4 eps M*))``; the log-likelihood
    is concave in M, so a bounded scalar search suffices.
    """
    rates = np.array([math.pi / (4.0 * eps * m) for m, _, _ in probes])
    hits = np.array([s for _, s, _ in probes], dtype=float)
    misses = np.array([r - s for _, s, r in probes], dtype=float)
    if hits.sum() == 0:
        return 0.0
    if misses.sum() == 0:
        return math.inf

    def neg_loglik(log_m):
        x = rates * math.exp(log_m)
        return -(np.sum(hits * np.log(-np.expm1(-x))) - np.sum(misses * x))

    upper = math.log(50.0 / rates.min())
    lower = math.log(1e-6 / rates.max())
    res = optimize.minimize_scalar(neg_loglik, bounds=(lower, upper), method="bounded", options={"xatol": 1e-10})
    return math.exp(res.x)


def binary_search_mstar(
    oracle,
    eps,
    target_p=0.1,
    runs_per_trial=200,
    seed=0,
    bracket_ratio=2.0,
    meter=None,
):
    """Noisy search for an ``M*`` whose success probability is near ``target_p``.

    Descends ``M* = N/2, N/4, ...`` with ``runs_per_trial`` runs per probe until
    the success fraction reaches ``target_p``.  The bracket between the last
    probe below the threshold and the first one at or above it is then bisected
    in ``log M*`` until its ratio is at most ``bracket_ratio``.  Finally M is
    estimated by maximum likelihood over all probes, and the grid or bisection
    value whose predicted success probability is closest to ``target_p`` (in
    log scale) is returned.

    If the very first probe already meets the threshold, ``N/2`` is returned
    with ``saturated=True``.
    """
    if not 0.0 < target_p <= 0.5:
        raise ValueError("target_p must lie in (0, 0.5]")
    if runs_per_trial < 1:
        raise ValueError("runs_per_trial must be >= 1")
    if bracket_ratio <= 1.0:
        raise ValueError("bracket_ratio must be > 1")
    meter = CostMeter() if meter is None else meter
    cost_before = meter.total
    probes = []

    def probe(m_star):
        hits = oracle.sample(m_star, eps, runs_per_trial, stream(seed, _SEARCH, len(probes)), meter)
        probes.append((m_star, int(hits.sum()), runs_per_trial))
        return probes[-1][1]

    def done(m_star, **flags):
        return SearchResult(m_star, tuple(probes), total_cost=meter.total - cost_before, **flags)

    lo = hi = None
    for m_star in _halvings(oracle.n):
        if probe(m_star) >= target_p * runs_per_trial:
            lo = m_star
            break
        hi = m_star

    if lo is None:
        ones = [s for m, s, _ in probes if m == 1]
        if all(s == 0 for s in ones):
            return done(0, no_solutions=True)
        return done(1)
    if hi is None:
        return done(lo, saturated=True)

    counts = {m: s for m, s, _ in probes}
    while hi / lo > bracket_ratio:
        mid = int(round(math.sqrt(lo * hi)))
        if not lo < mid < hi:
            break
        counts[mid] = probe(mid)
        if counts[mid] >= target_p * runs_per_trial:
            lo = mid
        else:
            hi = mid

    # score every grid value against a pooled estimate of M, so one noisy probe
    # that stopped the descent early cannot pin the answer
    m_pooled = pooled_m_estimate(probes, eps)
    candidates = set(counts) | set(_halvings(oracle.n))
    best = min(sorted(candidates), key=lambda m: abs(math.log(p_sol_landau_zener(m_pooled, m, eps) / target_p)))
    return done(best)


def _halvings(n):
    m = max(n // 2, 1)
    while True:
        yield m
        if m == 1:
            return
        m = max(m // 2, 1)


def required_trials(m_star, eps):
    """Trials for a ``sqrt(M)``-scale error: ``ceil(4 eps M* / pi)``."""
    if m_star < 1:
        raise ValueError("M* must be >= 1")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    return max(1, math.ceil(4.0 * eps * m_star / math.pi))


def m_from_probability(p, m_star, eps):
    """Invert ``p = 1 - exp(-pi M / (4 eps M*))`` for M."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    return -(4.0 * eps * m_star / math.pi) * math.log1p(-p)


def predicted_error(m, m_star, eps, k):
    """Sampling error of the M estimate after ``k`` runs at ``M*``."""
    scale = 4.0 * eps * m_star / math.pi
    return scale * math.sqrt(math.expm1(m / scale) / k)


@dataclass(frozen=True)
class CountingEstimate:
    m_hat: float
    delta_m_hat: float
    k: int
    m_star: int
    p_hat: float
    total_cost: float
    flags: tuple = ()
    successes: int = 0

    def as_dict(self):
        return {
            "m_hat": self.m_hat,
            "delta_m_hat": self.delta_m_hat,
            "m_star": self.m_star,
            "k": self.k,
            "p_hat": self.p_hat,
            "total_cost": self.total_cost,
            "flags": list(self.flags),
        }


def estimate_m(oracle, m_star, eps, k, seed=0, meter=None):
    """Estimate M from ``k`` runs at ``M*`` by inverting the success probability.

    ``p_hat == 1`` is clamped to ``1 - 1/(2k)`` and flagged as a lower bound.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    meter = CostMeter() if meter is None else meter
    hits = oracle.sample(m_star, eps, k, stream(seed, _ESTIMATE), meter)
    successes = int(hits.sum())
    p_hat = successes / k
    flags = []
    p_used = p_hat
    if successes == 0:
        flags.append("consistent_with_zero")
    elif successes == k:
        p_used = 1.0 - 1.0 / (2 * k)
        flags.append("saturated_lower_bound")
    m_hat = m_from_probability(p_used, m_star, eps)
    return CountingEstimate(
        m_hat=m_hat,
        delta_m_hat=predicted_error(m_hat, m_star, eps, k),
        k=k,
        m_star=m_star,
        p_hat=p_hat,
        total_cost=k * schedule_runtime(oracle.n, m_star, eps),
        flags=tuple(flags),
        successes=successes,
    )


@dataclass(frozen=True)
class ClassicalEstimate:
    m_hat: float
    predicted_error: float
    k: int
    hits: int


def classical_baseline(n, m, k, seed=0):
    """Estimate M by drawing ``k`` uniform items; error ``~ sqrt(M N / k)``."""
    ratio_from_counts(m, n)
    if k < 1:
        raise ValueError("k must be >= 1")
    draws = stream(seed, _CLASSICAL).integers(0, n, size=k)
    # solutions are items 0 .. m-1; any fixed labelling gives the same law
    hits = int(np.count_nonzero(draws < m))
    return ClassicalEstimate(m_hat=n * hits / k, predicted_error=math.sqrt(m * n / k), k=k, hits=hits)


def trials_for_mode(mode, m_star, eps, target_p, precision):
    """Estimation-stage trial count for the requested precision mode.

    ``sqrt``: error ``precision * sqrt(M)`` via ``required_trials / precision^2``.
    ``linear``: relative error ``precision`` at the search target probability,
    an M-independent count.
    """
    if mode == "sqrt":
        return math.ceil(required_trials(m_star, eps) / precision**2)
    if mode == "linear":
        x = -math.log1p(-target_p)
        return math.ceil(math.expm1(x) / (x * precision) ** 2)
    raise ValueError(f"mode must be 'sqrt' or 'linear', got {mode!r}")


@dataclass(frozen=True)
class CountingRun:
    """Full record of one counting run."""

    estimate: CountingEstimate
    search: SearchResult | None
    detected: bool
    total_cost: float
    draws: int
    flags: tuple = field(default=())


def run_counting(
    oracle,
    eps=0.1,
    target_p=0.1,
    mode="sqrt",
    seed=0,
    runs_per_trial=200,
    precision=0.1,
    detect_repeats=1,
    bracket_ratio=2.0,
):
    """Detection, M* search, then estimation; returns a :class:`CountingRun`."""
    meter = CostMeter()
    if not detect_nonzero(oracle, eps, seed, repeats=detect_repeats, meter=meter):
        est = CountingEstimate(0.0, 0.0, 0, 0, 0.0, meter.total, ("no_solutions_detected",))
        return CountingRun(est, None, False, meter.total, meter.draws, est.flags)
    search = binary_search_mstar(
        oracle, eps, target_p, runs_per_trial, seed, bracket_ratio=bracket_ratio, meter=meter
    )
    flags = []
    if search.no_solutions:
        est = CountingEstimate(0.0, 0.0, 0, 0, 0.0, meter.total, ("no_solutions_detected",))
        return CountingRun(est, search, True, meter.total, meter.draws, est.flags)
    if search.saturated:
        flags.append("search_saturated")
    k = trials_for_mode(mode, search.m_star, eps, target_p, precision)
    est = estimate_m(oracle, search.m_star, eps, k, seed, meter=meter)
    flags.extend(est.flags)
    total = meter.total
    est = CountingEstimate(
        m_hat=est.m_hat,
        delta_m_hat=est.delta_m_hat,
        k=est.k,
        m_star=est.m_star,
        p_hat=est.p_hat,
        total_cost=total,
        flags=tuple(flags),
        successes=est.successes,
    )
    return CountingRun(est, search, True, total, meter.draws, tuple(flags))
