import numpy as np
import pytest

from spincat.states import (
    PseudopureState,
    basis_state,
    coherence_profile,
    crusher,
    fidelity,
    labeled_state,
    magnetization,
    order_of_element,
    pseudopure,
    purity,
    rotate_collective,
    rotate_z,
    thermal_deviation,
)
from spincat.systems import Channel, DimensionError, SpinSystem, build_preset

B12 = build_preset("benzene12")
ONE_SPIN = SpinSystem((Channel("1H"),), (0,), np.zeros((1, 1)))


def random_state(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


class TestBasisConvention:
    def test_all_down_is_top_index(self):
        psi = labeled_state("d", "d", B12)
        assert psi[4095] == 1.0 and np.count_nonzero(psi) == 1

    def test_all_up_is_index_zero(self):
        psi = labeled_state("u", "u", B12)
        assert psi[0] == 1.0

    def test_magnetization_of_labels(self):
        assert magnetization(0, 12) == 6.0
        assert magnetization(4095, 12) == -6.0

    def test_channel_magnetization(self):
        # protons down, carbons up
        idx = B12.channel_mask("1H")
        assert magnetization(idx, 12, B12.channel_mask("1H")) == -3.0
        assert magnetization(idx, 12, B12.channel_mask("13C")) == 3.0

    def test_element_order(self):
        assert order_of_element(0, 4095) == 12
        assert order_of_element(4095, 0) == -12
        assert order_of_element(5, 5) == 0

    def test_single_channel_rejected(self):
        with pytest.raises(ValueError):
            labeled_state("d", "d", build_preset("benzene6"))


class TestRotations:
    def test_zero_angle_is_identity(self):
        rng = np.random.default_rng(0)
        psi = random_state(rng, 2)
        out = rotate_collective(psi, ONE_SPIN, "1H", 0.0)
        np.testing.assert_allclose(out, psi, atol=1e-15)

    def test_single_spin_90(self):
        psi = basis_state(0, 1)
        out = rotate_collective(psi, ONE_SPIN, "1H", np.pi / 2.0, 0.0)
        expect = np.array([1.0, -1j]) / np.sqrt(2.0)
        np.testing.assert_allclose(out, expect, atol=1e-12)

    def test_pi_pulses_invert_labels(self):
        psi = labeled_state("d", "d", B12)
        out = rotate_collective(psi, B12, "1H", np.pi)
        out = rotate_collective(out, B12, "13C", np.pi)
        assert fidelity(out, labeled_state("u", "u", B12)) == pytest.approx(1.0)

    def test_density_matrix_rotation(self):
        rng = np.random.default_rng(1)
        psi = random_state(rng, 4)
        sys2 = SpinSystem((Channel("1H"),), (0, 0), np.zeros((2, 2)))
        rho = np.outer(psi, psi.conj())
        rho_r = rotate_collective(rho, sys2, "1H", 0.7, 0.3)
        psi_r = rotate_collective(psi, sys2, "1H", 0.7, 0.3)
        np.testing.assert_allclose(rho_r, np.outer(psi_r, psi_r.conj()), atol=1e-12)
        assert np.abs(rho_r - rho_r.conj().T).max() < 1e-14

    def test_rotate_z_phases(self):
        psi = np.ones(4, dtype=complex) / 2.0
        out = rotate_z(psi, 2, 0.5)
        m = np.array([1.0, 0.0, 0.0, -1.0])
        np.testing.assert_allclose(out, psi * np.exp(-1j * 0.5 * m), atol=1e-14)


class TestCoherenceProfile:
    def test_basis_state_is_order_zero(self):
        prof = coherence_profile(basis_state(9, 4), 4)
        assert prof[4] == pytest.approx(1.0)
        assert prof.sum() == pytest.approx(1.0)

    def test_two_spin_cat(self):
        psi = np.zeros(4, dtype=complex)
        psi[0] = psi[3] = 1.0 / np.sqrt(2.0)
        prof = coherence_profile(psi, 2)
        assert prof[2] == pytest.approx(0.5)
        assert prof[0] == pytest.approx(0.25)
        assert prof[4] == pytest.approx(0.25)

    def test_twelve_spin_cat(self):
        psi = (labeled_state("u", "u", B12) + labeled_state("d", "d", B12)) / np.sqrt(2)
        prof = coherence_profile(psi, 12)
        assert prof[12 + 12] == pytest.approx(0.25, abs=1e-12)
        assert prof[12 - 12] == pytest.approx(0.25, abs=1e-12)
        assert prof[12] == pytest.approx(0.5, abs=1e-12)

    def test_sums_to_purity_pure(self):
        rng = np.random.default_rng(2)
        psi = random_state(rng, 32)
        prof = coherence_profile(psi, 5)
        assert prof.sum() == pytest.approx(purity(psi), abs=1e-9)

    def test_sums_to_purity_mixed(self):
        rng = np.random.default_rng(3)
        a = np.outer(random_state(rng, 16), random_state(rng, 16).conj())
        rho = 0.5 * (a + a.conj().T)
        rho = rho / np.trace(rho).real
        prof = coherence_profile(rho, 4)
        assert prof.sum() == pytest.approx(purity(rho), abs=1e-9)

    def test_symmetric_for_hermitian(self):
        rng = np.random.default_rng(4)
        psi = random_state(rng, 16)
        prof = coherence_profile(np.outer(psi, psi.conj()), 4)
        np.testing.assert_allclose(prof, prof[::-1], atol=1e-12)


class TestCrusher:
    def cat_rho(self):
        psi = np.zeros(4, dtype=complex)
        psi[0] = psi[3] = 1.0 / np.sqrt(2.0)
        return np.outer(psi, psi.conj())

    def test_retain_zero_gives_mixture(self):
        rho = crusher(self.cat_rho(), {0})
        expect = np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex)
        np.testing.assert_allclose(rho, expect, atol=1e-12)

    def test_retain_all_is_identity(self):
        rho = self.cat_rho()
        out = crusher(rho, range(-2, 3))
        np.testing.assert_allclose(out, rho, atol=1e-15)

    def test_trace_preserved_with_zero(self):
        rho = self.cat_rho()
        out = crusher(rho, {0, 2, -2})
        assert np.trace(out).real == pytest.approx(np.trace(rho).real, abs=1e-12)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            crusher(self.cat_rho(), {0, 2})

    def test_asymmetric_override(self):
        out = crusher(self.cat_rho(), {0, 2}, allow_asymmetric=True)
        assert out[3, 0] == 0.0 and out[0, 3] != 0.0

    def test_pure_state_rejected(self):
        with pytest.raises(ValueError):
            crusher(np.ones(4, dtype=complex) / 2.0, {0})


class TestPseudopure:
    def test_full_purity_is_projector(self):
        rng = np.random.default_rng(5)
        psi = random_state(rng, 16)
        rho = pseudopure(psi, 1.0).to_dense()
        np.testing.assert_allclose(rho, np.outer(psi, psi.conj()), atol=1e-12)

    def test_diagonal_entry_formula(self):
        psi = labeled_state("d", "d", B12)
        pp = pseudopure(psi, 0.01)
        diag = pp.diagonal()
        assert diag[4095] == pytest.approx(0.99 / 4096 + 0.01, rel=1e-12)
        assert diag[0] == pytest.approx(0.99 / 4096, rel=1e-12)
        assert diag.sum() == pytest.approx(1.0, abs=1e-12)

    def test_epsilon_range(self):
        psi = basis_state(0, 2)
        with pytest.raises(ValueError):
            pseudopure(psi, 0.0)
        with pytest.raises(ValueError):
            pseudopure(psi, 1.5)

    def test_dense_limited(self):
        with pytest.raises(DimensionError):
            pseudopure(labeled_state("d", "d", B12), 0.5).to_dense()

    def test_unitary_acts_on_pure_part(self):
        psi = labeled_state("d", "d", B12)
        pp = pseudopure(psi, 0.3)
        out = rotate_collective(pp, B12, "1H", np.pi)
        assert isinstance(out, PseudopureState)
        assert out.eps == 0.3
        assert abs(out.psi[B12.channel_mask("13C")]) == pytest.approx(1.0)

    def test_lazy_profile_matches_dense(self):
        rng = np.random.default_rng(9)
        psi = random_state(rng, 16)
        pp = pseudopure(psi, 0.35)
        lazy = coherence_profile(pp, 4)
        dense = coherence_profile(pp.to_dense(), 4)
        np.testing.assert_allclose(lazy, dense, atol=1e-14)
        assert lazy.sum() == pytest.approx(purity(pp), abs=1e-12)

    def test_lazy_fidelity_matches_dense(self):
        rng = np.random.default_rng(10)
        a, b = random_state(rng, 16), random_state(rng, 16)
        pa, pb = pseudopure(a, 0.3), pseudopure(b, 0.7)
        assert fidelity(pa, pb) == pytest.approx(
            fidelity(pa.to_dense(), pb.to_dense()), abs=1e-14)
        assert fidelity(pa, b) == pytest.approx(
            fidelity(pa.to_dense(), b), abs=1e-14)

    def test_lazy_paths_work_at_twelve_spins(self):
        pp = pseudopure(labeled_state("d", "d", B12), 0.1)
        prof = coherence_profile(pp, 12)
        assert prof.sum() == pytest.approx(purity(pp), abs=1e-12)
        assert fidelity(pp, pp) == pytest.approx(1.0)


class TestThermalDeviation:
    def test_single_proton(self):
        s = SpinSystem((Channel("1H"),), (0,), np.zeros((1, 1)))
        rho = thermal_deviation(s)
        np.testing.assert_allclose(rho, np.diag([1.0, -1.0]), atol=1e-12)

    def test_traceless(self):
        rho = thermal_deviation(build_preset("benzene6"))
        assert abs(np.trace(rho)) < 1e-12

    def test_channel_weighting(self):
        s = SpinSystem((Channel("1H"), Channel("13C")), (0, 1),
                       np.zeros((2, 2)))
        rho = thermal_deviation(s)
        # |ud> (proton up, carbon down) diagonal: (gH - gC)/(gH + gC) scaled
        gh, gc = 3.977, 1.0
        assert rho[2, 2].real == pytest.approx((gh - gc) / (gh + gc), rel=1e-9)

    def test_large_system_rejected(self):
        with pytest.raises(DimensionError):
            thermal_deviation(B12)


class TestFidelity:
    def test_self(self):
        rng = np.random.default_rng(6)
        psi = random_state(rng, 8)
        assert fidelity(psi, psi) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert fidelity(basis_state(0, 2), basis_state(3, 2)) == 0.0

    def test_half_overlap(self):
        up = basis_state(0, 1)
        down = basis_state(1, 1)
        plus = (up + down) / np.sqrt(2.0)
        assert fidelity(plus, up) == pytest.approx(0.5)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(7)
        psi = random_state(rng, 8)
        assert fidelity(psi, np.exp(1j * 0.7) * psi) == pytest.approx(1.0)

    def test_pure_vs_density(self):
        rng = np.random.default_rng(8)
        psi = random_state(rng, 8)
        rho = np.outer(psi, psi.conj())
        assert fidelity(psi, rho) == pytest.approx(1.0)
        assert fidelity(rho, psi) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(basis_state(0, 2), basis_state(0, 3))
