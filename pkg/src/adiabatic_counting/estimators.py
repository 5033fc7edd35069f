"""scikit-learn style front ends for the counting procedures.

The "data" handed to ``fit`` is the database itself: a
:class:`~adiabatic_counting.fullstate.GroverInstance` or a ready-made
:class:`~adiabatic_counting.counting.MeasurementOracle`.  Fitted results are
exposed as trailing-underscore attributes, so the estimators work with
``get_params``/``set_params``/``clone``.
"""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_scalar
from sklearn.utils.validation import check_is_fitted

from .counting import BACKENDS, MeasurementOracle, classical_baseline, run_counting
from .fullstate import GroverInstance

__all__ = ["AdiabaticCounter", "ClassicalCounter", "check_seed"]


def check_seed(random_state):
    """Root seed for the keyed streams: a non-negative int, or fresh entropy for None."""
    if random_state is None:
        return int(np.random.SeedSequence().entropy)
    if isinstance(random_state, (bool, np.bool_)) or not isinstance(random_state, numbers.Integral):
        raise TypeError(f"random_state must be a non-negative int or None, got {random_state!r}")
    if random_state < 0:
        raise ValueError(f"random_state must be non-negative, got {random_state}")
    return int(random_state)


def _check_instance(X):
    if isinstance(X, GroverInstance):
        return X
    if isinstance(X, tuple) and len(X) == 2:
        return GroverInstance.first_m(*X)
    raise TypeError(f"expected a GroverInstance or an (n, m) pair, got {type(X).__name__}")


class AdiabaticCounter(BaseEstimator):
    """Estimate the number of solutions M with local adiabatic runs.

    Parameters
    ----------
    backend : {"analytic", "reduced", "full"}
        Simulator that produces measurement outcomes when ``fit`` is given a
        :class:`GroverInstance`.  Ignored when ``fit`` receives an oracle.
    eps : float
        Adiabatic error parameter.
    target_p : float
        Success probability the M* search aims for, in (0, 0.5].
    mode : {"sqrt", "linear"}
        ``"sqrt"`` targets an error ``precision * sqrt(M)``;
        ``"linear"`` targets ``precision * M``.
    precision : float
        Error scale for ``mode``.
    runs_per_trial : int
        Annealing runs per probe in the M* search.
    bracket_ratio : float
        Stop bisecting once the M* bracket is this narrow.
    detect_repeats : int
        Runs used by the initial zero/non-zero test.
    random_state : int or None
        Root seed.

    Attributes
    ----------
    m_hat_, delta_m_hat_, m_star_, k_, p_hat_, total_cost_ : fitted results
    flags_ : tuple of str
    run_ : CountingRun
    """

    def __init__(
        self,
        backend="analytic",
        eps=0.1,
        target_p=0.1,
        mode="sqrt",
        precision=0.1,
        runs_per_trial=200,
        bracket_ratio=2.0,
        detect_repeats=1,
        random_state=0,
    ):
        self.backend = backend
        self.eps = eps
        self.target_p = target_p
        self.mode = mode
        self.precision = precision
        self.runs_per_trial = runs_per_trial
        self.bracket_ratio = bracket_ratio
        self.detect_repeats = detect_repeats
        self.random_state = random_state

    def _validate_params(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {sorted(BACKENDS)}, got {self.backend!r}")
        if self.mode not in ("sqrt", "linear"):
            raise ValueError(f"mode must be 'sqrt' or 'linear', got {self.mode!r}")
        check_scalar(self.eps, "eps", numbers.Real, min_val=0.0, include_boundaries="neither")
        check_scalar(self.target_p, "target_p", numbers.Real, min_val=0.0, max_val=0.5, include_boundaries="right")
        check_scalar(self.precision, "precision", numbers.Real, min_val=0.0, include_boundaries="neither")
        check_scalar(self.runs_per_trial, "runs_per_trial", numbers.Integral, min_val=1)
        check_scalar(self.bracket_ratio, "bracket_ratio", numbers.Real, min_val=1.0, include_boundaries="neither")
        check_scalar(self.detect_repeats, "detect_repeats", numbers.Integral, min_val=1)
        return check_seed(self.random_state)

    def fit(self, X, y=None):
        """Run detection, M* search and estimation against ``X``."""
        seed = self._validate_params()
        oracle = X if isinstance(X, MeasurementOracle) else BACKENDS[self.backend](_check_instance(X))
        run = run_counting(
            oracle,
            eps=self.eps,
            target_p=self.target_p,
            mode=self.mode,
            seed=seed,
            runs_per_trial=self.runs_per_trial,
            precision=self.precision,
            detect_repeats=self.detect_repeats,
            bracket_ratio=self.bracket_ratio,
        )
        est = run.estimate
        self.run_ = run
        self.seed_ = seed
        self.m_hat_ = est.m_hat
        self.delta_m_hat_ = est.delta_m_hat
        self.m_star_ = est.m_star
        self.k_ = est.k
        self.p_hat_ = est.p_hat
        self.total_cost_ = est.total_cost
        self.flags_ = est.flags
        return self

    def result(self):
        """Fitted estimate as a plain dict."""
        check_is_fitted(self, "m_hat_")
        return self.run_.estimate.as_dict()


class ClassicalCounter(BaseEstimator):
    """Baseline: estimate M from ``n_samples`` uniform draws (default N)."""

    def __init__(self, n_samples=None, random_state=0):
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        instance = _check_instance(X)
        seed = check_seed(self.random_state)
        k = instance.n if self.n_samples is None else self.n_samples
        check_scalar(k, "n_samples", numbers.Integral, min_val=1)
        est = classical_baseline(instance.n, instance.m, k, seed)
        self.m_hat_ = est.m_hat
        self.predicted_error_ = est.predicted_error
        self.k_ = est.k
        self.total_cost_ = float(est.k)
        return self
