import numpy as np
import pytest

from prqc import models, spin
from prqc.models import GOLDEN, HamiltonianSpec, exponential, power_law
from prqc.quench import (
    Preparation,
    QuenchConfig,
    QuenchError,
    SpectralData,
    diagonal_ensemble,
    gibbs_energy,
    gibbs_weights,
    long_time_average,
    run_quench,
    solve_beta,
    thermalization_report,
    time_average,
)

N = 8


def aah_resource(n, h, g=0.0, profile=power_law(1.5)):
    return HamiltonianSpec("AAHResource", n, {"J": -1.0, "h": h, "alpha": GOLDEN, "g": g}, profile)


def config(g=0.0, t_max=40.0, window=(20.0, 40.0)):
    return QuenchConfig(Preparation(aah_resource(N, 2.0)), aah_resource(N, 0.5, g), t_max, 0.5, window)


class TestTrajectory:
    def test_energy_conservation(self):
        cfg = config(g=0.05, t_max=10.0, window=(0.0, 10.0))
        traj = run_quench(cfg)
        H2 = traj.spectral.H
        for t in (0.0, 3.3, 10.0):
            psi = spin.evolve(traj.psi1, H2, t)
            assert spin.expectation(psi, H2) == pytest.approx(traj.energy, abs=1e-10)

    def test_occupations_match_direct_evolution(self):
        traj = run_quench(config(t_max=5.0, window=(0.0, 5.0)))
        H2 = traj.spectral.H
        for k in (0, 3, 10):
            psi = spin.evolve(traj.psi1, H2, traj.times[k])
            np.testing.assert_allclose(traj.occupations[k], spin.occupations(psi), atol=1e-10)

    def test_sector_basis_used_when_conserved(self):
        assert run_quench(config(t_max=1.0, window=(0.0, 1.0))).psi1.sector is not None
        assert run_quench(config(g=0.01, t_max=1.0, window=(0.0, 1.0))).psi1.sector is None

    def test_sector_and_full_space_agree(self):
        a = run_quench(config(t_max=4.0, window=(0.0, 4.0)))
        full = SpectralData(spin.realize(aah_resource(N, 0.5)))
        psi = a.psi1.to_full()
        from prqc.quench import evolve_trajectory

        np.testing.assert_allclose(evolve_trajectory(psi, full, a.times), a.occupations, atol=1e-10)

    def test_particle_number_conserved_without_g(self):
        traj = run_quench(config())
        np.testing.assert_allclose(traj.occupations.sum(axis=1), traj.occupations[0].sum(), atol=1e-10)

    def test_config_validation(self):
        with pytest.raises(QuenchError):
            QuenchConfig(Preparation(aah_resource(N, 2.0)), aah_resource(N, 0.5), 10.0, 0.5, (5.0, 20.0))
        with pytest.raises(QuenchError):
            QuenchConfig(Preparation(aah_resource(N, 2.0)), aah_resource(N + 1, 0.5))
        with pytest.raises(QuenchError):
            QuenchConfig(Preparation(aah_resource(N, 2.0)), aah_resource(N, 0.5), 10.0, 0.0, (0.0, 10.0))


class TestAverages:
    def test_trapezoid_average(self):
        t = np.linspace(0, 2, 21)
        vals = np.column_stack([t, t**2])
        np.testing.assert_allclose(time_average(t, vals, (0.0, 2.0)), [1.0, 4.0 / 3.0], rtol=1e-2)
        with pytest.raises(QuenchError):
            time_average(t, vals, (0.01, 0.05))

    def test_diagonal_ensemble_with_degeneracies(self):
        # uniform-field XX chain: many degenerate levels
        H2 = spin.realize(HamiltonianSpec("XX", 6, {"J": 1.0, "h": 0.3}), sector=3)
        sd = SpectralData(H2)
        psi = spin.basis_state([0, 1, 0, 1, 0, 1], sector=3)
        got = diagonal_ensemble(psi, sd)
        w, v = sd.energies, sd.vectors
        occ = spin.occupation_diagonals(6, 3)
        ref = np.zeros(6)
        labels = np.round(w, 8)
        for e in np.unique(labels):
            cols = v[:, labels == e]
            phi = cols @ (cols.conj().T @ psi.amplitudes)
            ref += occ @ np.abs(phi) ** 2
        np.testing.assert_allclose(got, ref, atol=1e-10)

    def test_diagonal_ensemble_independent_of_window(self):
        traj = run_quench(config())
        a = long_time_average(traj, (5.0, 20.0)).diagonal_ensemble
        b = long_time_average(traj, (20.0, 40.0)).diagonal_ensemble
        np.testing.assert_array_equal(a, b)


class TestThermal:
    def _spectral(self):
        return SpectralData(spin.realize(aah_resource(6, 0.5, 0.01)))

    def test_weights_normalized_and_energy_monotone(self):
        sd = self._spectral()
        betas = np.linspace(-5, 5, 41)
        energies = [gibbs_energy(sd.energies, b) for b in betas]
        for b in betas:
            assert gibbs_weights(sd.energies, b).sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all(np.diff(energies) < 0)

    def test_infinite_temperature(self):
        sd = self._spectral()
        ref = solve_beta(float(np.mean(sd.energies)), sd)
        assert ref.beta == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_allclose(ref.occupations, 0.5, atol=1e-9)

    def test_round_trip(self):
        sd = self._spectral()
        ref = solve_beta(gibbs_energy(sd.energies, 1.3), sd)
        assert ref.beta == pytest.approx(1.3, abs=1e-7)
        assert not ref.saturated

    def test_saturation_and_unsolvable(self):
        sd = self._spectral()
        cold = solve_beta(sd.energies[0] + 1e-12, sd, beta_max=5.0)
        assert cold.saturated and cold.beta == 5.0
        out = solve_beta(sd.energies[0] - 1.0, sd)
        assert not out.solvable

    def test_report(self):
        rep = thermalization_report(config(g=0.01, t_max=20.0, window=(10.0, 20.0)), threshold=0.5)
        assert len(rep.sites) == N
        assert rep.site(1).site == 1
        d = rep.to_dict()
        assert set(d) == {"beta", "energy", "saturated", "sites"}
        assert all(s.thermal_consistent for s in rep.sites)
