"""scikit-learn style wrappers around the functional core.

``VariationalCompiler`` and ``GrapeCompiler`` fit circuit parameters to a
target ground state; ``ZeroNoiseExtrapolator`` is a linear regressor in the
noise strength whose ``intercept_`` is the mitigated estimate.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .circuit import LayerSpec, PulseSchedule
from .models import HamiltonianSpec
from .noise import linear_fit
from .optimize import GrapeConfig, OptimizerConfig, Problem, grape_optimize, precompile_scaling


class VariationalCompiler(BaseEstimator):
    """Pre-compile a layered circuit over increasing training sizes.

    ``fit(sizes)`` runs the warm-started sweep; ``prepare(n)`` returns the
    circuit state at size ``n`` and ``score(n)`` the negative residual energy
    density there (higher is better).
    """

    def __init__(self, target: Optional[HamiltonianSpec] = None, resource: Optional[HamiltonianSpec] = None,
                 mode: str = "quenched", depth: int = 1, free: Optional[Sequence[str]] = None,
                 fermion_start: str = "filled", init_duration: float = 0.1,
                 config: Optional[OptimizerConfig] = None):
        self.target = target
        self.resource = resource
        self.mode = mode
        self.depth = depth
        self.free = free
        self.fermion_start = fermion_start
        self.init_duration = init_duration
        self.config = config

    def _problem(self) -> Problem:
        if self.target is None or self.resource is None:
            raise ValueError("target and resource are required")
        if int(self.depth) < 1:
            raise ValueError("depth must be >= 1")
        layers = LayerSpec.default(self.mode, self.resource) if self.free is None else LayerSpec(self.mode, tuple(self.free))
        return Problem(self.target, self.resource, layers, self.fermion_start, self.init_duration)

    def fit(self, X, y=None):
        sizes = [int(n) for n in np.ravel(np.asarray(X))]
        problem = self._problem()
        res = precompile_scaling(problem, sizes, sizes[-1], int(self.depth), self.config)
        self.problem_ = problem
        self.theta_ = res.theta
        self.traces_ = res.traces
        self.metrics_ = res.final_metrics
        return self

    def prepare(self, n_sites: int):
        check_is_fitted(self, "theta_")
        ev = self.problem_.evaluator(int(n_sites))
        return ev.prepare(self.theta_)

    def metrics(self, n_sites: int) -> dict:
        check_is_fitted(self, "theta_")
        return self.problem_.evaluator(int(n_sites)).metrics(self.theta_)

    def score(self, X, y=None) -> float:
        return -float(np.mean([self.metrics(int(n))["eps"] for n in np.ravel(np.asarray(X))]))


class GrapeCompiler(BaseEstimator):
    """Piecewise-constant pulse optimization toward a target ground state."""

    def __init__(self, target: Optional[HamiltonianSpec] = None, resource: Optional[HamiltonianSpec] = None,
                 total_time: float = 1.0, dt: float = 0.1, smoothness: float = 1e-3, J_max: float = 1.0,
                 max_iter: int = 300, fermion_start: str = "filled", init: Optional[PulseSchedule] = None):
        self.target = target
        self.resource = resource
        self.total_time = total_time
        self.dt = dt
        self.smoothness = smoothness
        self.J_max = J_max
        self.max_iter = max_iter
        self.fermion_start = fermion_start
        self.init = init

    def fit(self, X=None, y=None):
        n_steps = int(round(self.total_time / self.dt))
        if n_steps < 1 or abs(n_steps * self.dt - self.total_time) > 1e-9:
            raise ValueError("total_time must be a positive multiple of dt")
        problem = Problem(self.target, self.resource, LayerSpec.default("simultaneous", self.resource), self.fermion_start)
        ev = problem.evaluator(self.target.n_sites)
        init = self.init
        if init is None:
            L = 2.0 if self.resource.profile.kind.value == "power_law" else 1.0
            init = PulseSchedule.constant(self.dt, n_steps, 0.5 * self.J_max, L, float(self.resource.couplings["mu" if "mu" in self.resource.couplings else "h"]))
        cfg = GrapeConfig(dt=self.dt, smoothness=self.smoothness, J_max=self.J_max, max_iter=self.max_iter)
        self.schedule_, self.trace_ = grape_optimize(ev, init, cfg)
        self.metrics_ = self.trace_.final_metrics
        return self

    def score(self, X=None, y=None) -> float:
        check_is_fitted(self, "schedule_")
        return -float(self.metrics_["infidelity"])


class ZeroNoiseExtrapolator(RegressorMixin, BaseEstimator):
    """Unweighted linear fit of an observable against the noise strength.

    After ``fit(gammas, values)``, ``intercept_`` is the zero-noise estimate
    and ``intercept_std_`` its standard error.
    """

    def fit(self, X, y):
        X, y = check_X_y(np.asarray(X, dtype=float).reshape(-1, 1), y, y_numeric=True)
        c0, c1, se = linear_fit(X[:, 0], y)
        self.intercept_ = c0
        self.coef_ = np.array([c1])
        self.intercept_std_ = se
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "intercept_")
        X = check_array(np.asarray(X, dtype=float).reshape(-1, 1))
        return self.intercept_ + X[:, 0] * self.coef_[0]

    def extrapolate(self) -> tuple[float, float]:
        check_is_fitted(self, "intercept_")
        return self.intercept_, (self.intercept_std_ if not math.isnan(self.intercept_std_) else math.nan)
