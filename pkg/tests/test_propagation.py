import numpy as np
import pytest

from spincat.propagate import dense_propagator, expm_action, gershgorin_interval
from spincat.states import evolve
from spincat.systems import Channel, SpinSystem, build_preset, free_hamiltonian


def random_system(rng, n_spins, n_channels=1):
    coup = np.zeros((n_spins, n_spins))
    for i in range(n_spins):
        for j in range(i + 1, n_spins):
            coup[i, j] = coup[j, i] = rng.uniform(-200.0, 200.0)
    labels = ("1H", "13C")[:n_channels]
    channels = tuple(Channel(lb, rng.uniform(-50.0, 50.0)) for lb in labels)
    channel_of = tuple(int(rng.integers(0, n_channels)) for _ in range(n_spins))
    return SpinSystem(channels, channel_of, coup, "random")


def random_state(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


class TestExpmAction:
    def test_zero_time_is_identity(self):
        h = free_hamiltonian(build_preset("benzene6"))
        psi = random_state(np.random.default_rng(0), 64)
        np.testing.assert_array_equal(expm_action(h, psi, 0.0), psi)

    def test_forward_backward_roundtrip(self):
        h = free_hamiltonian(build_preset("benzene6"))
        psi = random_state(np.random.default_rng(1), 64)
        out = expm_action(h, expm_action(h, psi, 3.7e-3), -3.7e-3)
        assert np.abs(out - psi).max() < 1e-9

    def test_norm_preserved(self):
        h = free_hamiltonian(build_preset("benzene12"))
        psi = random_state(np.random.default_rng(2), 4096)
        out = expm_action(h, psi, 5e-3)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-10

    def test_single_spin_relative_phase(self):
        # offset 100 Hz, 2.5 ms: the up component lags the down one by pi/2
        s = SpinSystem((Channel("1H", 100.0),), (0,), np.zeros((1, 1)))
        h = free_hamiltonian(s)
        psi = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
        out = expm_action(h, psi, 2.5e-3)
        ratio = (out[0] / psi[0]) / (out[1] / psi[1])
        assert abs(ratio - np.exp(-1j * np.pi / 2.0)) < 1e-9

    def test_matches_dense_oracle_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            n = int(rng.integers(2, 5))
            system = random_system(rng, n, n_channels=int(rng.integers(1, 3)))
            h = free_hamiltonian(system)
            psi = random_state(rng, 1 << n)
            t = rng.uniform(0.0, 0.05)
            sparse_out = expm_action(h, psi, t)
            dense_out = dense_propagator(h, t) @ psi
            assert np.abs(sparse_out - dense_out).max() < 1e-9

    def test_batch_matches_single(self):
        h = free_hamiltonian(build_preset("benzene6"))
        rng = np.random.default_rng(3)
        cols = np.stack([random_state(rng, 64) for _ in range(5)], axis=1)
        batch = expm_action(h, cols, 2e-3)
        for k in range(5):
            single = expm_action(h, cols[:, k], 2e-3)
            assert np.abs(batch[:, k] - single).max() < 1e-12

    def test_gershgorin_contains_spectrum(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            h = free_hamiltonian(random_system(rng, 4))
            lo, hi = gershgorin_interval(h)
            w = np.linalg.eigvalsh(h.toarray())
            assert lo <= w.min() + 1e-9 and w.max() <= hi + 1e-9


class TestEvolve:
    def test_density_matrix_path(self):
        s = build_preset("benzene6")
        h = free_hamiltonian(s)
        rng = np.random.default_rng(5)
        psi = random_state(rng, 64)
        rho = np.outer(psi, psi.conj())
        rho_t = evolve(rho, h, 1e-3)
        psi_t = evolve(psi, h, 1e-3)
        np.testing.assert_allclose(rho_t, np.outer(psi_t, psi_t.conj()), atol=1e-10)

    def test_dimension_mismatch(self):
        h = free_hamiltonian(build_preset("benzene6"))
        with pytest.raises(ValueError):
            evolve(np.ones(16, dtype=complex), h, 1e-3)

    def test_sector_conservation(self):
        # zero offsets: per-channel magnetization sectors never mix
        s = build_preset("benzene12")
        h = free_hamiltonian(s)
        psi = np.zeros(4096, dtype=complex)
        start = 0b000011_000111  # 3 proton flips, 2 carbon flips
        psi[start] = 1.0
        out = evolve(psi, h, 2e-3)
        hmask = s.channel_mask("1H")
        cmask = s.channel_mask("13C")
        pops = lambda x, m: int(x & m).bit_count()
        for idx in np.nonzero(np.abs(out) > 1e-12)[0]:
            assert pops(idx, hmask) == pops(start, hmask)
            assert pops(idx, cmask) == pops(start, cmask)
