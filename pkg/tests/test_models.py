import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prqc import models, spin
from prqc.models import (
    GOLDEN,
    NN,
    HamiltonianSpec,
    InteractionProfile,
    ModelError,
    ProfileKind,
    exponential,
    power_law,
    profile_weight,
    term_list,
)


class TestProfiles:
    def test_exponential_values(self):
        assert profile_weight(exponential(1.0), 1) == pytest.approx(math.exp(-1))
        assert profile_weight(exponential(2.0), 3) == pytest.approx(math.exp(-1.5))

    def test_power_law_values(self):
        assert profile_weight(power_law(2.0), 3) == pytest.approx(1 / 9)
        assert profile_weight(power_law(1.5), 1) == 1.0

    def test_nearest_neighbor(self):
        assert profile_weight(NN, 1) == 1.0
        assert profile_weight(NN, 2) == 0.0

    def test_array_input(self):
        w = profile_weight(power_law(1.0), np.arange(1, 5))
        np.testing.assert_allclose(w, [1, 1 / 2, 1 / 3, 1 / 4])

    @pytest.mark.parametrize("d", [0, -1, 1.5])
    def test_invalid_distance(self, d):
        with pytest.raises(ValueError):
            profile_weight(exponential(1.0), d)

    def test_nonpositive_range(self):
        with pytest.raises(ModelError):
            InteractionProfile(ProfileKind.EXPONENTIAL, 0.0)

    @given(st.floats(0.05, 20.0), st.sampled_from(["exponential", "power_law"]), st.integers(1, 60))
    def test_monotone_decay(self, L, kind, d):
        prof = InteractionProfile(kind, L)
        assert profile_weight(prof, d + 1) <= profile_weight(prof, d)

    def test_short_range_limit(self):
        ratios = [profile_weight(exponential(L), 2) / profile_weight(exponential(L), 1) for L in (1.0, 0.1, 0.01)]
        assert ratios == pytest.approx([math.exp(-1), math.exp(-10), math.exp(-100)])
        assert ratios[-1] < 1e-40


class TestValidation:
    def test_valid_specs(self):
        HamiltonianSpec("KitaevQuadratic", 4, {"J": 1.0, "mu": 2.0}, power_law(1.0))
        HamiltonianSpec("TFIM", 2, {"J": 1.0, "h": 1.0})

    def test_collects_all_errors(self):
        errs = models.validate({"model_kind": "TFIM", "n_sites": 1, "couplings": {"J": 1.0, "x": 2.0}})
        assert any("n_sites" in e for e in errs)
        assert any("missing coupling h" in e for e in errs)
        assert any("unexpected coupling x" in e for e in errs)

    def test_unknown_kind(self):
        with pytest.raises(ModelError, match="unknown model kind"):
            HamiltonianSpec("Heisenberg", 4, {})

    def test_target_rejects_programmable_profile(self):
        with pytest.raises(ModelError, match="nearest-neighbour"):
            HamiltonianSpec("TFIM", 4, {"J": 1.0, "h": 1.0}, exponential(1.0))

    def test_non_finite_coupling(self):
        with pytest.raises(ModelError):
            HamiltonianSpec("TFIM", 4, {"J": float("nan"), "h": 1.0})

    def test_round_trip_dict(self):
        spec = HamiltonianSpec("AAHResource", 5, {"J": -1.0, "h": 0.5, "alpha": GOLDEN, "g": 0.01}, power_law(1.5))
        assert HamiltonianSpec.from_dict(spec.to_dict()) == spec

    def test_optional_coupling_default(self):
        assert models.aah(4).couplings["g"] == 0.0


class TestTermList:
    def test_tfim_terms(self):
        terms = term_list(models.tfim(3, J=1.0, h=0.5))
        assert sorted(terms) == sorted(
            [(-1.0, "XX", (1, 2)), (-1.0, "XX", (2, 3)), (-0.5, "Z", (1,)), (-0.5, "Z", (2,)), (-0.5, "Z", (3,))]
        )

    def test_pr_couplings_all_pairs(self):
        spec = HamiltonianSpec("Ising", 4, {"J": 2.0, "h": 0.0}, exponential(1.0))
        two = {t.sites: t.coeff for t in term_list(spec) if len(t.sites) == 2}
        assert len(two) == 6
        assert two[(1, 4)] == pytest.approx(2.0 * math.exp(-3))

    def test_kitaev_target_matrices(self):
        from prqc import fermion

        H = fermion.build_quadratic(models.kitaev_chain(3, t=1.0, delta=1.0, mu=0.0))
        np.testing.assert_allclose(H.A, [[0, -1, 0], [-1, 0, -1], [0, -1, 0]])
        np.testing.assert_allclose(H.B, [[0, 1, 0], [-1, 0, 1], [0, -1, 0]])

    def test_aah_potential_origin(self):
        np.testing.assert_allclose(models.aah_potential(2, 0.25), [0.0, -1.0], atol=1e-15)

    @pytest.mark.parametrize(
        "spec",
        [
            models.tfim(5),
            HamiltonianSpec("XX", 5, {"J": 1.0, "h": 0.3, "g": 0.2}, power_law(1.5)),
            HamiltonianSpec("AAHResource", 6, {"J": 1.0, "h": 2.0, "alpha": GOLDEN}, exponential(2.0)),
            models.aah(6, h=4.0),
            HamiltonianSpec("Ising", 6, {"J": 1.0, "h": 0.7}, power_law(1.0)),
            HamiltonianSpec("BlumeCapel", 4, {"J": 1.0, "aniso_d": 0.3, "h": 1.1}, exponential(1.0)),
            models.blume_capel(4),
        ],
    )
    def test_realization_is_hermitian(self, spec):
        M = spin.realize(spec).toarray()
        assert np.max(np.abs(M - M.conj().T)) < 1e-14
