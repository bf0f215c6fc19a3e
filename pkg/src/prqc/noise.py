"""Noise models and zero-noise extrapolation.

Global depolarizing noise at rate ``gamma`` acting during the interaction
time ``T`` mixes the ideal state with the maximally mixed state of the
simulated space, so for any observable

    <O>_noisy = exp(-gamma T) <O> + (1 - exp(-gamma T)) Tr(O) / dim.

Finite measurement budgets are modeled by a Gaussian with the variance of the
depolarized state, and calibration errors by Gaussian kicks of the optimizer
coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from . import fermion, spin
from .circuit import CircuitRunner, LayerMode, ParameterVector, State, total_interaction_time
from .optimize import CostEvaluator, OptimizationTrace, OptimizerConfig, minimize


class NoiseConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    gamma: float = 0.0
    shots: Optional[int] = None  # None means unlimited
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise NoiseConfigError("gamma must be >= 0")
        if self.shots is not None and int(self.shots) < 1:
            raise NoiseConfigError("shots must be >= 1 or unlimited")
        if not self.sigma >= 0:
            raise NoiseConfigError("sigma must be >= 0")


@dataclass(frozen=True)
class ZNEConfig:
    factors: tuple = (1.0, 1.5, 2.0, 2.5, 3.0)
    order: int = 1
    repeats: int = 1

    def __post_init__(self):
        f = tuple(float(x) for x in self.factors)
        object.__setattr__(self, "factors", f)
        if len(set(f)) < 2:
            raise NoiseConfigError("zero-noise extrapolation needs at least two distinct factors")
        if any(x < 1 for x in f):
            raise NoiseConfigError("amplification factors must be >= 1")
        if self.order != 1:
            raise NoiseConfigError("only linear extrapolation is supported")
        if self.repeats < 1:
            raise NoiseConfigError("repeats must be >= 1")


# moments of an observable -------------------------------------------------------


def mixed_moments(op) -> tuple[float, float]:
    """``(Tr O / dim, Tr O^2 / dim)`` over the simulated space."""
    if isinstance(op, fermion.QuadraticHamiltonian):
        ec = 0.5 * float(np.real(np.trace(op.A))) + op.offset
        return ec, ec**2 + float(np.sum(np.abs(op.bdg) ** 2)) / 8.0
    return op.trace() / op.dim, op.trace_of_square() / op.dim


def ideal_moments(state: State, op) -> tuple[float, float]:
    """``(<O>, <O^2>)`` in a pure state."""
    if isinstance(state, fermion.GaussianState):
        mean = fermion.energy(state, op)
        C = state.columns
        G = C @ C.conj().T
        M = op.bdg
        var = 0.5 * float(np.real(np.trace(M @ G @ M @ (np.eye(G.shape[0]) - G))))
        return mean, max(var, 0.0) + mean**2
    mean = spin.expectation(state, op)
    return mean, spin.variance(state, op) + mean**2


def depolarizing_weight(gamma: float, T: float) -> float:
    return math.exp(-gamma * T)


def noisy_expectation(state: State, op, gamma: float, T_acc: float) -> float:
    """Closed-form global depolarizing expectation value."""
    w = depolarizing_weight(gamma, T_acc)
    ideal = ideal_moments(state, op)[0] if w > 0 else 0.0
    return w * ideal + (1.0 - w) * mixed_moments(op)[0]


def noisy_moments(state: State, op, gamma: float, T_acc: float) -> tuple[float, float]:
    w = depolarizing_weight(gamma, T_acc)
    m1, m2 = ideal_moments(state, op)
    t1, t2 = mixed_moments(op)
    mean = w * m1 + (1 - w) * t1
    var = w * m2 + (1 - w) * t2 - mean**2
    return mean, max(var, 0.0)


def shot_estimate(mean: float, variance: float, shots: Optional[int], rng: np.random.Generator) -> float:
    """Gaussian surrogate of an ``shots``-sample estimate of an observable."""
    if shots is None:
        return mean
    return float(rng.normal(mean, math.sqrt(max(variance, 0.0) / shots)))


def perturb_parameters(theta: ParameterVector, sigma: float, rng: np.random.Generator) -> ParameterVector:
    """Independent N(0, sigma^2) shifts of every free optimizer coordinate."""
    if sigma == 0:
        return theta
    x = theta.to_unconstrained()
    return theta.from_unconstrained(x + rng.normal(0.0, sigma, x.shape))


# zero-noise extrapolation ----------------------------------------------------------


@dataclass
class ZNEResult:
    value: float
    std_error: float
    slope: float
    gammas: np.ndarray
    values: np.ndarray

    def table(self) -> list[tuple[float, float]]:
        return list(zip(self.gammas.tolist(), self.values.tolist()))


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Unweighted least squares ``y = c0 + c1 x``; returns ``(c0, c1, stderr(c0))``.

    The standard error is ``nan`` when there are no residual degrees of freedom.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise NoiseConfigError("degenerate fit: need at least two distinct noise strengths")
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    dof = x.size - 2
    if dof <= 0:
        return float(coef[0]), float(coef[1]), math.nan
    resid = y - X @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return float(coef[0]), float(coef[1]), math.sqrt(max(cov[0, 0], 0.0))


def zne_estimate(evaluate: Callable[[float], float], gamma_base: float, config: Optional[ZNEConfig] = None) -> ZNEResult:
    """Evaluate at each ``factor * gamma_base`` and extrapolate linearly to zero."""
    cfg = config or ZNEConfig()
    if not gamma_base > 0:
        raise NoiseConfigError("zero-noise extrapolation needs gamma_base > 0")
    gammas, values = [], []
    for f in cfg.factors:
        for _ in range(cfg.repeats):
            gammas.append(f * gamma_base)
            values.append(float(evaluate(f * gamma_base)))
    c0, c1, se = linear_fit(gammas, values)
    return ZNEResult(c0, se, c1, np.asarray(gammas), np.asarray(values))


class NoisyCost:
    """Cost hook: shot-sampled depolarized energy, ZNE-mitigated when configured.

    Each call draws from its own generator seeded by ``(seed, call index,
    sample index)``, so a run is reproducible from the seed.
    """

    def __init__(self, noise: NoiseModel, zne: Optional[ZNEConfig] = None):
        self.noise = noise
        self.zne = zne
        self.calls = 0
        self.last: Optional[ZNEResult] = None

    def __call__(self, evaluator: CostEvaluator, theta, state) -> float:
        T = total_interaction_time(theta)
        call = self.calls
        self.calls += 1
        counter = [0]

        def sample(gamma):
            rng = np.random.default_rng([self.noise.seed, call, counter[0]])
            counter[0] += 1
            mean, var = noisy_moments(state, evaluator.target_op, gamma, T)
            return shot_estimate(mean, var, self.noise.shots, rng)

        if self.zne is None or self.noise.gamma == 0:
            return sample(self.noise.gamma)
        self.last = zne_estimate(sample, self.noise.gamma, self.zne)
        return self.last.value


def noisy_reoptimize(
    theta_start: ParameterVector,
    evaluator: CostEvaluator,
    noise: NoiseModel,
    zne: Optional[ZNEConfig] = None,
    config: Optional[OptimizerConfig] = None,
) -> OptimizationTrace:
    """Hybrid loop: miscalibrate the transferred parameters once, then minimize
    the mitigated, shot-limited cost. Trace records carry the noiseless metrics."""
    rng = np.random.default_rng([noise.seed, 7])
    start = perturb_parameters(theta_start, noise.sigma, rng)
    hook = NoisyCost(noise, zne)
    noisy_eval = CostEvaluator(evaluator.target, evaluator.resource, evaluator.rho0, cost_fn=hook)
    cfg = config or OptimizerConfig(restarts=1)
    return minimize(noisy_eval, start, cfg, restarts=1)


# density-matrix oracle (small spin systems) --------------------------------------------


def density_matrix_expectation(
    rho0: spin.DenseState, resource, theta: ParameterVector, op: spin.OperatorMatrix, gamma: float
) -> float:
    """Explicit density-matrix run: depolarize after every interaction quench
    with weight ``exp(-gamma T_int)``; drive quenches are noiseless."""
    if rho0.dim > 256:
        raise ValueError("density-matrix oracle is limited to dim <= 256")
    runner = CircuitRunner(resource, rho0)
    psi = rho0.amplitudes
    rho = np.outer(psi, psi.conj())
    dim = rho.shape[0]
    eye = np.eye(dim) / dim

    def unitary(gen, T):
        return scipy.linalg.expm(-1j * T * gen.toarray())

    def channel(rho, gen, T, noisy):
        if T == 0:
            return rho
        U = unitary(gen, T)
        rho = U @ rho @ U.conj().T
        if noisy:
            w = math.exp(-gamma * T)
            rho = w * rho + (1 - w) * eye
        return rho

    for k in range(theta.depth):
        p = theta.layer(k)
        if theta.mode is LayerMode.SIMULTANEOUS:
            rho = channel(rho, runner.full(p["J"], p["L"], p["h"]), p["T"], True)
        elif theta.mode is LayerMode.QUENCHED:
            rho = channel(rho, runner.interaction(p["J"], p["L"]), p["T_int"], True)
            rho = channel(rho, runner.drive(p["h"]), p["T_drv"], False)
        else:
            rho = channel(rho, runner.interaction(p["J"], p["L"]), p["T_int"], True)
            rho = channel(rho, runner.drive(p["h"], frozenset({"Sz"})), p["T_rot"], False)
            rho = channel(rho, runner.drive(p["h"], frozenset({"Sx2"})), p["T_aniso"], False)
    return float(np.real(np.trace(op.toarray() @ rho)))
