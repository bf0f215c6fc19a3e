import math

import numpy as np
import pytest

from prqc import fermion, models, spin
from prqc.circuit import LayerSpec, ParameterVector, apply_circuit, initial_state, total_interaction_time
from prqc.estimators import ZeroNoiseExtrapolator
from prqc.models import HamiltonianSpec, exponential, power_law
from prqc.noise import (
    NoiseConfigError,
    NoiseModel,
    NoisyCost,
    ZNEConfig,
    density_matrix_expectation,
    ideal_moments,
    linear_fit,
    mixed_moments,
    noisy_expectation,
    noisy_moments,
    noisy_reoptimize,
    perturb_parameters,
    shot_estimate,
    zne_estimate,
)
from prqc.optimize import CostEvaluator, OptimizerConfig, minimize

from conftest import random_quadratic

RES4 = HamiltonianSpec("Ising", 4, {"J": 1.0, "h": 1.0}, exponential(1.0))


def random_quenched(rng, depth, n_fields=5):
    vals = rng.uniform(0.1, 1.0, size=(depth, n_fields))
    return ParameterVector("quenched", vals, ("J", "L", "h", "T_int", "T_drv"))


class TestClosedForm:
    def test_matches_density_matrix(self, rng):
        target = models.tfim(4)
        H = spin.realize(target)
        rho0 = initial_state(target)
        for _ in range(10):
            theta = random_quenched(rng, int(rng.integers(1, 4)))
            gamma = rng.uniform(0.01, 0.5)
            psi = apply_circuit(rho0, RES4, None, theta)
            closed = noisy_expectation(psi, H, gamma, total_interaction_time(theta))
            oracle = density_matrix_expectation(rho0, RES4, theta, H, gamma)
            assert closed == pytest.approx(oracle, abs=1e-10)

    def test_simultaneous_mode_oracle(self, rng):
        target = models.tfim(3)
        H = spin.realize(target)
        rho0 = initial_state(target)
        theta = ParameterVector("simultaneous", rng.uniform(0.2, 1.0, (2, 4)), ("T",))
        psi = apply_circuit(rho0, RES4.resized(3), None, theta)
        closed = noisy_expectation(psi, H, 0.2, total_interaction_time(theta))
        assert closed == pytest.approx(density_matrix_expectation(rho0, RES4.resized(3), theta, H, 0.2), abs=1e-10)

    def test_monotone_toward_mixed_value(self, rng):
        H = spin.realize(models.tfim(4))
        _, gs = spin.ground_state(H)
        mixed = mixed_moments(H)[0]
        vals = [noisy_expectation(gs, H, g, 2.0) for g in np.linspace(0, 5, 30)]
        dist = np.abs(np.array(vals) - mixed)
        assert np.all(np.diff(dist) <= 1e-15)
        assert vals[-1] == pytest.approx(mixed, abs=1e-3)

    def test_zero_noise_is_ideal(self, rng):
        H = spin.realize(models.tfim(4))
        psi = apply_circuit(initial_state(models.tfim(4)), RES4, None, random_quenched(rng, 2))
        assert noisy_expectation(psi, H, 0.0, 3.0) == pytest.approx(spin.expectation(psi, H), abs=1e-14)

    def test_fermion_moments_against_fock(self, rng):
        n = 4
        H = random_quadratic(n, rng, offset=0.4)
        st = fermion.ground_gaussian(random_quadratic(n, rng))[1]
        psi = fermion.fock_state(st)
        F = fermion.fock_hamiltonian(H)
        mean, second = ideal_moments(st, H)
        assert mean == pytest.approx(np.vdot(psi, F @ psi).real, abs=1e-10)
        assert second == pytest.approx(np.vdot(psi, F @ F @ psi).real, abs=1e-10)
        t1, t2 = mixed_moments(H)
        assert t1 == pytest.approx(np.trace(F).real / 2**n, abs=1e-10)
        assert t2 == pytest.approx(np.trace(F @ F).real / 2**n, abs=1e-10)

    def test_noisy_variance_non_negative(self, rng):
        H = spin.realize(models.tfim(3))
        _, gs = spin.ground_state(H)
        for g in (0.0, 0.1, 10.0):
            assert noisy_moments(gs, H, g, 1.0)[1] >= 0


class TestSampling:
    def test_shot_noise_scale(self):
        rng = np.random.default_rng(3)
        draws = [shot_estimate(1.0, 4.0, 100, rng) for _ in range(20000)]
        assert np.std(draws) == pytest.approx(0.2, rel=0.05)
        assert shot_estimate(1.0, 4.0, None, rng) == 1.0

    def test_calibration_spread(self):
        rng = np.random.default_rng(4)
        theta = ParameterVector("quenched", np.full((40, 5), 0.5), ("J", "h", "T_int", "T_drv"))
        shifts = [perturb_parameters(theta, 0.05, rng).to_unconstrained() - theta.to_unconstrained() for _ in range(50)]
        assert np.std(np.concatenate(shifts)) == pytest.approx(0.05, rel=0.03)

    def test_model_validation(self):
        with pytest.raises(NoiseConfigError):
            NoiseModel(gamma=-1.0)
        with pytest.raises(NoiseConfigError):
            NoiseModel(shots=0)
        with pytest.raises(NoiseConfigError):
            ZNEConfig(factors=(1.0, 1.0))


class TestZNE:
    def test_exact_linear_recovery(self):
        res = zne_estimate(lambda g: -3.25 + 7.5 * g, 0.05)
        assert res.value == pytest.approx(-3.25, abs=1e-10)
        assert res.std_error < 1e-10
        assert len(res.table()) == 5

    def test_two_points_have_no_error_bar(self):
        c0, c1, se = linear_fit([1.0, 2.0], [3.0, 5.0])
        assert (c0, c1) == pytest.approx((1.0, 2.0))
        assert math.isnan(se)

    def test_degenerate_fit(self):
        with pytest.raises(NoiseConfigError):
            linear_fit([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_gamma_base_must_be_positive(self):
        with pytest.raises(NoiseConfigError):
            zne_estimate(lambda g: g, 0.0)

    def test_mitigation_beats_raw(self, rng):
        n = 6
        target = models.tfim(n)
        H = spin.realize(target)
        rho0 = initial_state(target)
        res = RES4.resized(n)
        for _ in range(100):
            theta = random_quenched(rng, int(rng.integers(1, 4)))
            T = total_interaction_time(theta)
            gamma = rng.uniform(0.0, 0.3) / T
            psi = apply_circuit(rho0, res, None, theta)
            ideal = spin.expectation(psi, H)
            z = zne_estimate(lambda g: noisy_expectation(psi, H, g, T), gamma)
            raw = noisy_expectation(psi, H, gamma, T)
            assert abs(z.value - ideal) <= abs(raw - ideal) + 1e-12

    def test_estimator_wrapper(self):
        g = np.array([0.05, 0.075, 0.1, 0.125, 0.15])
        est = ZeroNoiseExtrapolator().fit(g, 2.0 - 3.0 * g)
        assert est.intercept_ == pytest.approx(2.0)
        assert est.coef_[0] == pytest.approx(-3.0)
        np.testing.assert_allclose(est.predict([0.0, 1.0]), [2.0, -1.0])


class TestNoisyLoop:
    def _setup(self):
        target = models.tfim(4)
        ev = CostEvaluator(target, RES4)
        theta = ParameterVector.initial(RES4, LayerSpec("quenched", ("L", "T_int", "T_drv")), 1)
        return ev, theta

    def test_cost_hook_reproducible(self):
        ev, theta = self._setup()
        a = NoisyCost(NoiseModel(0.05, 1000, seed=9), ZNEConfig())
        b = NoisyCost(NoiseModel(0.05, 1000, seed=9), ZNEConfig())
        state = ev.prepare(theta)
        assert [a(ev, theta, state) for _ in range(3)] == [b(ev, theta, state) for _ in range(3)]
        c = NoisyCost(NoiseModel(0.05, 1000, seed=10), ZNEConfig())
        assert c(ev, theta, state) != a.__class__(NoiseModel(0.05, 1000, seed=9), ZNEConfig())(ev, theta, state)

    def test_reoptimize_reproducible_and_noiseless_metrics(self):
        ev, theta = self._setup()
        noise = NoiseModel(0.01, 10000, 0.05, seed=2)
        cfg = OptimizerConfig(restarts=1, max_evals=60)
        a = noisy_reoptimize(theta, ev, noise, ZNEConfig(), cfg)
        b = noisy_reoptimize(theta, ev, noise, ZNEConfig(), cfg)
        assert a.costs == b.costs
        assert a.final_metrics["energy"] == pytest.approx(ev.energy(a.best_theta), abs=1e-14)
