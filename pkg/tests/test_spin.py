import math

import numpy as np
import pytest
import scipy.linalg

from prqc import models, spin
from prqc.models import GOLDEN, HamiltonianSpec, exponential, power_law

from conftest import random_state


def dense_tfim(n, J, h):
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1.0, -1.0])

    def site(op, i):
        return np.kron(np.kron(np.eye(2 ** (i - 1)), op), np.eye(2 ** (n - i)))

    H = sum(-J * site(X, i) @ site(X, i + 1) for i in range(1, n))
    return H + sum(-h * site(Z, i) for i in range(1, n + 1))


class TestRealize:
    def test_tfim_two_sites(self):
        # eigenvalues of -XX - Z1 - Z2 are ±sqrt(5), ±1
        e, _ = spin.ground_state(spin.realize(models.tfim(2)))
        assert e == pytest.approx(-math.sqrt(5.0), abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5])
    def test_matches_kronecker_oracle(self, n):
        M = spin.realize(models.tfim(n, J=0.7, h=1.3)).toarray()
        np.testing.assert_allclose(M, dense_tfim(n, 0.7, 1.3), atol=1e-14)

    def test_site_one_is_most_significant(self):
        up_down = spin.basis_state([0, 1])
        assert up_down.amplitudes[1] == 1.0
        np.testing.assert_allclose(spin.occupations(up_down), [1.0, 0.0])

    def test_cap(self):
        with pytest.raises(spin.TooLargeError):
            spin.realize(models.tfim(12), cap=2**10)

    def test_spin_one_commutator(self):
        Sx, Sy, Sz = spin.ONE["Sx"], spin.ONE["Sy"], spin.ONE["Sz"]
        np.testing.assert_allclose(Sx @ Sy - Sy @ Sx, 1j * Sz, atol=1e-15)

    def test_product_diagonal_fast_path(self):
        H = spin.realize(HamiltonianSpec("Ising", 4, {"J": 1.0, "h": 0.0}, exponential(1.0)))
        assert H.is_product_diagonal
        psi = random_state(4, np.random.default_rng(0))
        dense = scipy.linalg.expm(-0.7j * H.toarray()) @ psi.amplitudes
        np.testing.assert_allclose(spin.evolve(psi, H, 0.7).amplitudes, dense, atol=1e-12)


class TestEvolution:
    def test_unitarity(self, rng):
        for _ in range(5):
            spec = HamiltonianSpec("XX", 5, {"J": rng.normal(), "h": rng.normal(), "g": rng.normal()}, power_law(1.3))
            psi = spin.evolve(random_state(5, rng), spin.realize(spec), rng.uniform(0, 10))
            assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-12

    def test_composition(self, rng):
        H = spin.realize(HamiltonianSpec("Ising", 5, {"J": 1.0, "h": 0.4}, power_law(2.0)))
        psi = random_state(5, rng)
        a = spin.evolve(spin.evolve(psi, H, 0.3), H, 1.1)
        b = spin.evolve(psi, H, 1.4)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-10)

    def test_matches_expm(self, rng):
        H = spin.realize(models.tfim(4, 1.0, 0.3))
        psi = random_state(4, rng)
        ref = scipy.linalg.expm(-2.0j * H.toarray()) @ psi.amplitudes
        np.testing.assert_allclose(spin.evolve(psi, H, 2.0).amplitudes, ref, atol=1e-12)

    @pytest.mark.parametrize("n", [6, 8, 10])
    def test_sector_consistency(self, rng, n):
        spec = HamiltonianSpec("AAHResource", n, {"J": 1.0, "h": 2.0, "alpha": GOLDEN}, exponential(1.5))
        k = n // 2
        basis = spin.sector_basis(n, k)
        amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
        psi_s = spin.DenseState(amps / np.linalg.norm(amps), n, 2, k)
        out_s = spin.evolve(psi_s, spin.realize(spec, sector=k), 1.7)
        out_f = spin.evolve(psi_s.to_full(), spin.realize(spec), 1.7)
        np.testing.assert_allclose(out_s.to_full().amplitudes, out_f.amplitudes, atol=1e-10)

    def test_basis_mismatch(self):
        H = spin.realize(models.tfim(3))
        with pytest.raises(spin.BasisMismatchError):
            spin.evolve(spin.basis_state([0, 0]), H, 1.0)


class TestObservables:
    def test_expectation_and_variance(self, rng):
        H = spin.realize(models.tfim(4))
        psi = random_state(4, rng)
        M = H.toarray()
        v = psi.amplitudes
        mean = np.vdot(v, M @ v).real
        assert spin.expectation(psi, H) == pytest.approx(mean, abs=1e-12)
        assert spin.variance(psi, H) == pytest.approx(np.vdot(v, M @ M @ v).real - mean**2, abs=1e-11)

    def test_ground_state_is_eigenvector(self):
        H = spin.realize(models.aah(8, h=4.0))
        e, psi = spin.ground_state(H)
        assert spin.variance(psi, H) < 1e-10
        assert spin.expectation(psi, H) == pytest.approx(e, abs=1e-10)

    def test_iterative_ground_state(self):
        H = spin.realize(models.tfim(13, 1.0, 1.0))
        assert H.dim > spin.DENSE_GS_CAP
        e, psi = spin.ground_state(H)
        assert spin.variance(psi, H) < 1e-9

    def test_traces(self):
        H = spin.realize(models.tfim(3))
        M = H.toarray()
        assert H.trace() == pytest.approx(np.trace(M).real)
        assert H.trace_of_square() == pytest.approx(np.trace(M @ M).real)

    def test_local_ground_state_tfim_all_up(self):
        psi = spin.local_ground_state(models.tfim(4))
        np.testing.assert_allclose(spin.occupations(psi), np.ones(4))

    def test_sector_of(self):
        assert spin.sector_of(spin.basis_state([0, 1, 1])) == 1
        plus = spin.product_state([np.array([1, 1]) / math.sqrt(2)] * 2)
        assert spin.sector_of(plus) is None
