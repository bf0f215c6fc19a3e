import math

import numpy as np
import pytest

from prqc import fermion, models, spin
from prqc.circuit import LayerSpec, ParameterVector, PulseSchedule
from prqc.ledger import WarmStartLedger
from prqc.models import HamiltonianSpec, exponential, power_law
from prqc.optimize import (
    CostEvaluator,
    GrapeConfig,
    OptimizationAborted,
    OptimizerConfig,
    Problem,
    depth_sweep,
    fd_gradient,
    grape_optimize,
    infidelity_density,
    max_jump_ratio,
    minimize,
    precompile_scaling,
    residual_energy_density,
    smoothness_penalty,
)

TFIM_PR = Problem(models.tfim(4), HamiltonianSpec("Ising", 4, {"J": 1.0, "h": 1.0}, exponential(1.0)),
                  LayerSpec("quenched", ("L", "T_int", "T_drv")))
KITAEV_PR = Problem(models.kitaev_chain(6), HamiltonianSpec("KitaevQuadratic", 6, {"J": 1.0, "mu": 2.0}, power_law(2.0)),
                    LayerSpec("quenched", ("L", "T_int", "T_drv")), init_duration=0.5)


class TestMetrics:
    def test_infidelity_density_example(self):
        assert infidelity_density(math.log(0.9), 10) == pytest.approx(1 - 0.9**0.1, rel=1e-12)
        assert infidelity_density(math.log(0.9), 10) == pytest.approx(0.010481, abs=5e-7)

    def test_infidelity_limits(self):
        assert infidelity_density(0.0, 5) == 0.0
        assert infidelity_density(-math.inf, 5) == 1.0
        assert 0 < infidelity_density(-1e4, 1000) < 1

    def test_residual_energy_density(self):
        assert residual_energy_density(-9.0, -10.0, 4) == pytest.approx(0.25)

    def test_depth_zero_cost(self):
        ev = CostEvaluator(models.tfim(2), HamiltonianSpec("Ising", 2, {"J": 1.0, "h": 1.0}))
        theta = ParameterVector("quenched", np.zeros((0, 5)), ("T_int",))
        assert ev.cost(theta) == pytest.approx(-2.0)
        m = ev.metrics(theta)
        assert m["eps"] == pytest.approx((math.sqrt(5) - 2) / 2)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            CostEvaluator(models.tfim(4), HamiltonianSpec("Ising", 5, {"J": 1.0, "h": 1.0}))

    def test_kitaev_parity_mismatch_gives_unit_infidelity(self):
        ev = CostEvaluator(models.kitaev_chain(5, mu=-3.0), KITAEV_PR.resource.resized(5), fermion_start="filled")
        theta = ParameterVector("quenched", np.zeros((0, 5)), ("T_int",))
        # the filled odd chain is odd, the near-empty reference even
        assert ev.reference.state.parity != fermion.filled(5).parity
        assert ev.metrics(theta)["infidelity"] == 1.0


class TestMinimize:
    def test_variational_bound_and_improvement(self):
        ev = TFIM_PR.evaluator(4)
        theta0 = TFIM_PR.initial(2)
        trace = minimize(ev, theta0, OptimizerConfig(restarts=2, max_evals=400))
        e_ex = ev.reference.energy
        assert min(trace.costs) >= e_ex - 1e-9
        assert trace.best_cost <= ev.cost(theta0)
        assert trace.final_metrics["eps"] < 0.05

    def test_warm_start_never_worse(self):
        ev = KITAEV_PR.evaluator(6)
        start = minimize(ev, KITAEV_PR.initial(2), OptimizerConfig(restarts=1, max_evals=100)).best_theta
        again = minimize(ev, start, OptimizerConfig(restarts=1, max_evals=200, engine="bfgs"))
        assert again.best_cost <= ev.cost(start) + 1e-15

    def test_determinism(self):
        cfg = OptimizerConfig(restarts=3, max_evals=150, seed=5)
        a = minimize(TFIM_PR.evaluator(4), TFIM_PR.initial(1), cfg)
        b = minimize(TFIM_PR.evaluator(4), TFIM_PR.initial(1), cfg)
        assert a.costs == b.costs
        assert a.final_metrics == b.final_metrics

    def test_budget(self):
        trace = minimize(TFIM_PR.evaluator(4), TFIM_PR.initial(2), OptimizerConfig(restarts=1, max_evals=25))
        assert trace.n_evals == 25
        assert trace.reason == "budget"

    def test_stall_stop(self):
        flat = lambda ev, theta, state: 1.0  # noqa: E731
        ev = TFIM_PR.evaluator(4)
        ev.cost_fn = flat
        trace = minimize(ev, TFIM_PR.initial(1), OptimizerConfig(restarts=1, window=5))
        assert trace.reason == "stalled"
        assert trace.n_evals < 100

    def test_non_finite_cost_aborts_with_trace(self):
        ev = TFIM_PR.evaluator(4)
        calls = []

        def bad(evaluator, theta, state):
            calls.append(1)
            return -1.0 * len(calls) if len(calls) < 4 else math.nan

        ev.cost_fn = bad
        with pytest.raises(OptimizationAborted) as info:
            minimize(ev, TFIM_PR.initial(1), OptimizerConfig(restarts=1))
        assert info.value.trace.n_evals == 4
        assert len(info.value.trace.records) == 3

    @pytest.mark.parametrize("engine", ["nelder-mead", "bfgs"])
    def test_engines(self, engine):
        trace = minimize(KITAEV_PR.evaluator(6), KITAEV_PR.initial(1), OptimizerConfig(engine=engine, restarts=1))
        assert trace.final_metrics["eps"] < KITAEV_PR.evaluator(6).metrics(KITAEV_PR.initial(1))["eps"]

    def test_bad_config(self):
        with pytest.raises(ValueError):
            OptimizerConfig(engine="adam")
        with pytest.raises(ValueError):
            OptimizerConfig(max_evals=0)


class TestGradient:
    def test_against_five_point_stencil(self, rng):
        problem = Problem(models.tfim(6), HamiltonianSpec("Ising", 6, {"J": 1.0, "h": 1.0}, power_law(2.0)),
                          LayerSpec("quenched", ("J", "L", "h", "T_int", "T_drv")))
        ev = problem.evaluator(6)
        template = problem.initial(2)
        for _ in range(3):
            x = rng.uniform(0.2, 1.2, template.n_free)
            f = lambda y: ev.cost(template.from_unconstrained(y))  # noqa: E731
            g = fd_gradient(f, x)
            h = 1e-3
            ref = np.zeros_like(x)
            for i in range(x.size):
                e = np.zeros_like(x)
                e[i] = h
                ref[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
            assert np.linalg.norm(g - ref) <= 1e-4 * np.linalg.norm(ref)


class TestPrecompile:
    def test_single_size_is_plain_minimize(self):
        cfg = OptimizerConfig(restarts=2, max_evals=200)
        res = precompile_scaling(TFIM_PR, [4], 4, 1, cfg)
        direct = minimize(TFIM_PR.evaluator(4), TFIM_PR.initial(1), cfg)
        assert res.final_metrics["eps"] == direct.final_metrics["eps"]

    def test_sizes_and_ledger(self, tmp_path):
        ledger = WarmStartLedger(tmp_path / "l.jsonl")
        res = precompile_scaling(KITAEV_PR, [6, 8, 10], 40, 1, OptimizerConfig(restarts=2, max_evals=300), ledger=ledger)
        assert sorted(res.traces) == [6, 8, 10]
        assert sorted(e.n_sites for e in ledger) == [6, 8, 10, 40]
        assert res.final_metrics["eps"] < 0.1

    def test_reoptimize_flag(self):
        cfg = OptimizerConfig(restarts=1, max_evals=150)
        plain = precompile_scaling(KITAEV_PR, [6], 12, 1, cfg)
        reopt = precompile_scaling(KITAEV_PR, [6], 12, 1, cfg, reoptimize_final=True)
        assert 12 in reopt.traces and 12 not in plain.traces
        assert reopt.final_metrics["energy"] <= plain.final_metrics["energy"] + 1e-12

    def test_rejects_unsorted_sizes(self):
        with pytest.raises(ValueError):
            precompile_scaling(TFIM_PR, [6, 4], 8, 1)

    def test_depth_monotone_with_padding(self):
        cfg = OptimizerConfig(restarts=2, max_evals=400, engine="bfgs")
        res = depth_sweep(KITAEV_PR, [6], 6, [1, 2, 3], cfg)
        eps = [res[d].traces[6].final_metrics["eps"] for d in (1, 2, 3)]
        assert eps[1] <= eps[0] + 1e-9
        assert eps[2] <= eps[1] + 1e-9


class TestGrape:
    def _evaluator(self, n=8):
        res = HamiltonianSpec("KitaevQuadratic", n, {"J": 1.0, "mu": 2.0}, power_law(2.0))
        return Problem(models.kitaev_chain(n), res, LayerSpec.default("simultaneous", res)).evaluator(n)

    def test_improves_fidelity(self):
        ev = self._evaluator()
        init = PulseSchedule.constant(0.1, 10, -0.5, 2.0, 2.0)
        start = ev.metrics(init)["infidelity"]
        sched, trace = grape_optimize(ev, init, GrapeConfig(max_iter=30))
        assert trace.final_metrics["infidelity"] < start
        assert sched.total_time == pytest.approx(1.0)

    def test_huge_smoothness_gives_constant_pulse(self):
        ev = self._evaluator(6)
        init = PulseSchedule(0.1, np.column_stack([np.linspace(-0.9, 0.9, 8), np.linspace(1, 3, 8), np.linspace(0, 3, 8)]))
        sched, _ = grape_optimize(ev, init, GrapeConfig(smoothness=1e6, max_iter=200))
        assert smoothness_penalty(sched.values) < 1e-6
        c = np.column_stack([sched.values[:, 0], np.log(sched.values[:, 1]), sched.values[:, 2]])
        assert np.max(np.abs(np.diff(c, axis=0))) < 1e-3

    def test_single_step_equals_simultaneous_layer(self):
        ev = self._evaluator(6)
        sched, trace = grape_optimize(ev, PulseSchedule.constant(0.1, 1, -0.5, 2.0, 2.0), GrapeConfig(max_iter=50))
        layer = sched.as_layers()
        a = ev.prepare(sched)
        b = ev.prepare(layer)
        assert fermion.overlap_magnitude(a, b) == pytest.approx(1.0, abs=1e-12)
        assert ev.metrics(layer)["infidelity"] == pytest.approx(trace.final_metrics["infidelity"], abs=1e-12)

    def test_rejects_mismatched_step(self):
        with pytest.raises(ValueError):
            grape_optimize(self._evaluator(4), PulseSchedule.constant(0.2, 3, 0.5, 2.0, 2.0), GrapeConfig(dt=0.1))

    def test_jump_ratio(self):
        smooth = PulseSchedule(0.1, np.column_stack([np.linspace(0, 1, 10), np.ones(10), np.linspace(0, 2, 10)]))
        assert max_jump_ratio(smooth) == pytest.approx(1.0)
        kink = smooth.values.copy()
        kink[5, 0] += 1.0
        assert max_jump_ratio(PulseSchedule(0.1, kink)) > 5
