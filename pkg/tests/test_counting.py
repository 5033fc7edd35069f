import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adiabatic_counting.counting import (
    AnalyticOracle,
    CostMeter,
    FullOracle,
    MeasurementOracle,
    ReducedOracle,
    binary_search_mstar,
    classical_baseline,
    detect_nonzero,
    estimate_m,
    m_from_probability,
    make_oracle,
    pooled_m_estimate,
    predicted_error,
    required_trials,
    run_counting,
    schedule_runtime,
    stream,
    trials_for_mode,
)
from adiabatic_counting.dynamics import p_sol_landau_zener
from adiabatic_counting.fullstate import GroverInstance

N20 = 2**20


class RealCountOracle(MeasurementOracle):
    """Analytic draws for a non-integer M, to place p exactly on a grid value."""

    kind = "test"

    def __init__(self, n, m_value):
        super().__init__(GroverInstance(n))
        self.m_value = m_value

    def success_probability(self, m_star, eps):
        return p_sol_landau_zener(self.m_value, m_star, eps)


def test_make_oracle():
    assert isinstance(make_oracle("analytic", 64, 4), AnalyticOracle)
    assert isinstance(make_oracle("reduced", 64, marked=[1, 2]), ReducedOracle)
    assert make_oracle("full", 64, 4).m == 4
    with pytest.raises(ValueError):
        make_oracle("quantum", 64, 4)
    with pytest.raises(ValueError):
        make_oracle("analytic", 64)


def test_sample_rejects_bad_mstar():
    o = make_oracle("analytic", 64, 4)
    with pytest.raises(ValueError):
        o.sample(0, 0.1, 10, stream(0, 1))
    with pytest.raises(ValueError):
        o.sample(65, 0.1, 10, stream(0, 1))


@pytest.mark.parametrize("kind", ["analytic", "reduced", "full"])
def test_detect_never_fires_without_solutions(kind):
    oracle = make_oracle(kind, 256, 0)
    assert not any(detect_nonzero(oracle, 0.1, seed) for seed in range(200))
    assert not detect_nonzero(oracle, 0.1, 0, repeats=10_000)


def test_detect_single_solution_frequency():
    oracle = make_oracle("analytic", N20, 1)
    repeats = 10_000
    freq = np.mean([detect_nonzero(oracle, 0.1, seed) for seed in range(repeats)])
    p = p_sol_landau_zener(1, 1, 0.1)
    assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / repeats) + 1.0 / repeats


def test_detect_more_solutions_is_at_least_as_likely():
    oracle = make_oracle("analytic", N20, 5)
    freq = np.mean([detect_nonzero(oracle, 0.1, seed) for seed in range(10_000)])
    assert freq >= 0.9996


def test_detect_charges_one_run_per_repeat():
    meter = CostMeter()
    detect_nonzero(make_oracle("analytic", 1024, 3), 0.1, 0, repeats=3, meter=meter)
    assert meter.draws == 3
    assert meter.total == 3 * schedule_runtime(1024, 1, 0.1)


def test_search_saturates_at_half():
    res = binary_search_mstar(make_oracle("analytic", 1024, 512), 0.1, seed=0)
    assert res.saturated and res.m_star == 512
    assert len(res.probes) == 1


def test_search_sentinel_without_solutions():
    res = binary_search_mstar(make_oracle("analytic", 1024, 0), 0.1, runs_per_trial=20)
    assert res.no_solutions and res.m_star == 0
    assert [p[0] for p in res.probes] == [512, 256, 128, 64, 32, 16, 8, 4, 2, 1]


def test_search_validation():
    o = make_oracle("analytic", 1024, 3)
    for kwargs in ({"target_p": 0.0}, {"target_p": 0.6}, {"runs_per_trial": 0}, {"bracket_ratio": 1.0}):
        with pytest.raises(ValueError):
            binary_search_mstar(o, 0.1, **kwargs)


def test_search_hits_target_band():
    oracle = make_oracle("analytic", N20, 100)
    ok = 0
    for seed in range(100):
        m_star = binary_search_mstar(oracle, 0.1, target_p=0.1, runs_per_trial=200, seed=seed).m_star
        ok += 0.05 <= p_sol_landau_zener(100, m_star, 0.1) <= 0.2
    assert ok >= 95


@pytest.mark.parametrize("grid_value", [8192, 1024, 64])
def test_search_returns_exact_grid_value(grid_value):
    oracle = RealCountOracle(N20, m_from_probability(0.1, grid_value, 0.1))
    hits = sum(binary_search_mstar(oracle, 0.1, seed=seed).m_star == grid_value for seed in range(100))
    assert hits >= 95


def test_search_probe_count_is_logarithmic():
    for n in (2**10, 2**16, 2**22):
        res = binary_search_mstar(make_oracle("analytic", n, 3), 0.1, seed=1)
        assert len(res.probes) <= 2 * math.log2(n)


def test_pooled_estimate_edges_and_recovery():
    assert pooled_m_estimate([(64, 0, 200)], 0.1) == 0.0
    assert pooled_m_estimate([(64, 200, 200)], 0.1) == math.inf
    m = 37.0
    probes = [(ms, round(200 * p_sol_landau_zener(m, ms, 0.1)), 200) for ms in (4096, 2048, 1024)]
    assert pooled_m_estimate(probes, 0.1) == pytest.approx(m, rel=0.02)


def test_required_trials_examples():
    assert required_trials(1000, 0.1) == 128
    assert required_trials(8, 0.1) == 2
    assert required_trials(1, 0.1) == 1
    with pytest.raises(ValueError):
        required_trials(0, 0.1)


@given(m_star=st.integers(1, 10**6), eps=st.floats(0.01, 1.0))
def test_required_trials_linear(m_star, eps):
    k1, k2 = required_trials(m_star, eps), required_trials(2 * m_star, eps)
    assert 2 * k1 - 1 <= k2 <= 2 * k1


def test_estimate_all_failures():
    est = estimate_m(make_oracle("analytic", N20, 0), 1024, 0.1, 50, seed=0)
    assert est.m_hat == 0.0 and est.p_hat == 0.0
    assert "consistent_with_zero" in est.flags


def test_estimate_saturation_clamps():
    est = estimate_m(make_oracle("analytic", 1024, 512), 1, 0.1, 20, seed=0)
    assert est.p_hat == 1.0
    assert est.m_hat == pytest.approx(m_from_probability(1 - 1 / 40, 1, 0.1))
    assert math.isfinite(est.delta_m_hat)
    assert "saturated_lower_bound" in est.flags


@given(m=st.floats(0.0, 500.0), m_star=st.integers(1, 10**5), eps=st.floats(0.01, 1.0))
def test_inversion_identity(m, m_star, eps):
    p = p_sol_landau_zener(m, m_star, eps)
    # inversion loses digits as 1 - p approaches rounding level
    if p < 1.0 - 1e-6:
        assert m_from_probability(p, m_star, eps) == pytest.approx(m, rel=1e-9, abs=1e-12)


@given(p=st.floats(0.0, 0.999), m_star=st.integers(1, 10**5), eps=st.floats(0.01, 1.0))
def test_estimate_probability_round_trip(p, m_star, eps):
    m = m_from_probability(p, m_star, eps)
    assert p_sol_landau_zener(m, m_star, eps) == pytest.approx(p, rel=1e-12, abs=1e-15)


def test_estimate_invariants_and_cost():
    oracle = make_oracle("analytic", N20, 64)
    k = 10 * required_trials(640, 0.1)
    for seed in range(20):
        est = estimate_m(oracle, 640, 0.1, k, seed=seed)
        assert 0.0 <= est.p_hat <= 1.0
        assert (est.m_hat == 0.0) == (est.p_hat == 0.0)
        assert est.total_cost == k * schedule_runtime(N20, 640, 0.1)


def test_estimator_statistics():
    oracle = make_oracle("analytic", N20, 64)
    k = 10 * required_trials(640, 0.1)
    ests = [estimate_m(oracle, 640, 0.1, k, seed=seed) for seed in range(200)]
    m_hat = np.array([e.m_hat for e in ests])
    stderr = m_hat.std(ddof=1) / math.sqrt(len(m_hat))
    assert abs(m_hat.mean() - 64) <= 2 * stderr
    predicted = np.mean([e.delta_m_hat for e in ests])
    assert m_hat.std(ddof=1) == pytest.approx(predicted, rel=0.3)


def test_predicted_error_small_probability_limit():
    # for M << 4 eps M*/pi the error tends to sqrt(4 eps M* M / (pi k))
    assert predicted_error(1.0, 10**6, 0.1, 100) == pytest.approx(math.sqrt(4e5 / math.pi / 100), rel=1e-5)


def test_classical_edges():
    for seed in range(10):
        assert classical_baseline(1000, 0, 50, seed).m_hat == 0.0
        assert classical_baseline(1000, 1000, 50, seed).m_hat == 1000.0
    with pytest.raises(ValueError):
        classical_baseline(1000, 10, 0)


def test_classical_error_formula():
    m_hat = np.array([classical_baseline(N20, 64, N20, seed).m_hat for seed in range(200)])
    assert m_hat.std(ddof=1) == pytest.approx(math.sqrt(64 * N20 / N20), rel=0.3)


def test_trials_for_mode():
    assert trials_for_mode("sqrt", 1000, 0.1, 0.1, 0.1) == math.ceil(128 / 0.01)
    linear = trials_for_mode("linear", 1000, 0.1, 0.1, 0.1)
    assert linear == trials_for_mode("linear", 10, 0.1, 0.1, 0.1)
    with pytest.raises(ValueError):
        trials_for_mode("cubic", 10, 0.1, 0.1, 0.1)


def test_run_counting_zero_solutions():
    run = run_counting(make_oracle("analytic", N20, 0), seed=4)
    assert run.estimate.m_hat == 0.0
    assert "no_solutions_detected" in run.flags
    assert run.draws == 1
    assert run.total_cost == schedule_runtime(N20, 1, 0.1)


def test_run_counting_cost_is_sum_over_draws():
    run = run_counting(make_oracle("analytic", 2**16, 40), seed=2)
    probes = run.search.probes
    expected = math.fsum(
        [schedule_runtime(2**16, 1, 0.1)]
        + [r * schedule_runtime(2**16, ms, 0.1) for ms, _, r in probes]
        + [run.estimate.k * schedule_runtime(2**16, run.estimate.m_star, 0.1)]
    )
    assert run.total_cost == expected
    assert run.draws == 1 + sum(r for _, _, r in probes) + run.estimate.k
    assert run.estimate.total_cost == run.total_cost


def test_run_counting_deterministic():
    oracle = make_oracle("analytic", 2**18, 77)
    a = run_counting(oracle, seed=11)
    b = run_counting(make_oracle("analytic", 2**18, 77), seed=11)
    assert a == b
    assert run_counting(oracle, seed=12).estimate != a.estimate


def test_run_counting_accuracy_sqrt_mode():
    errs = []
    for seed in range(30):
        est = run_counting(make_oracle("analytic", N20, 200), seed=seed).estimate
        errs.append((est.m_hat - 200) / math.sqrt(200))
    # precision 0.1 targets an error of 0.1 sqrt(M)
    assert np.std(errs) < 0.3


def test_streams_are_keyed():
    a = stream(5, 2, 3).random(4)
    assert np.array_equal(a, stream(5, 2, 3).random(4))
    assert not np.array_equal(a, stream(5, 2, 4).random(4))
    assert not np.array_equal(a, stream(5, 3, 3).random(4))


def test_cost_meter_order_insensitive():
    batches = [(3, 0.1), (7, 1e16), (2, 1e-3), (5, -1e16)]
    forward, backward = CostMeter(), CostMeter()
    for d, t in batches:
        forward.add(d, t)
    for d, t in reversed(batches):
        backward.add(d, t)
    assert forward.total == backward.total and forward.draws == backward.draws == 17


@pytest.mark.parametrize("kind", ["reduced", "full"])
def test_backend_draws_use_backend_probability(kind):
    oracle = make_oracle(kind, 256, 4)
    p = oracle.success_probability(40, 0.1)
    draws = oracle.sample(40, 0.1, 20_000, stream(0, 9))
    assert abs(draws.mean() - p) <= 4 * math.sqrt(p * (1 - p) / 20_000)


def test_full_and_reduced_probabilities_agree():
    full = FullOracle(GroverInstance.first_m(256, 4), tol=1e-12)
    reduced = ReducedOracle(GroverInstance.first_m(256, 4), tol=1e-12)
    for m_star in (4, 16, 64):
        assert full.success_probability(m_star, 0.1) == pytest.approx(reduced.success_probability(m_star, 0.1), abs=1e-8)
