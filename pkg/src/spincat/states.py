"""State representations, rotations, coherence analysis and fidelities.

States come in three kinds, all value-semantic (operations return new
objects and never mutate their inputs):

- pure states: plain complex numpy vectors of length 2^N;
- density matrices: complex 2^N x 2^N numpy arrays, allowed only up to
  ``MAX_DENSE_SPINS`` spins;
- :class:`PseudopureState`: the lazy pair ``(1 - eps) Id / 2^N +
  eps |psi><psi|`` that stands in for a full matrix on large systems, where
  only the traceless deviation ever produces signal.

Basis convention: spin k is bit k of the index, bit 0 = up (m = +1/2);
two-channel presets keep protons on the low six bits.  Coherence orders are
counted as q = M(row) - M(column) in integer spin-flip units, so the
extreme element of an N-spin cat state has q = N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .propagate import dense_propagator, expm_action
from .systems import MAX_DENSE_SPINS, DimensionError, SpinSystem

__all__ = [
    "PseudopureState",
    "basis_state",
    "labeled_state",
    "magnetization",
    "order_of_element",
    "evolve",
    "rotate_collective",
    "rotate_z",
    "coherence_profile",
    "crusher",
    "pseudopure",
    "thermal_deviation",
    "fidelity",
    "purity",
]

NORM_TOL = 1e-10

# High-field gyromagnetic-ratio weights for the thermal deviation.
_GAMMA = {"1H": 3.977, "13C": 1.0}


def _n_spins_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def basis_state(index: int, n_spins: int) -> np.ndarray:
    """Computational basis vector |index> on ``n_spins`` spins."""
    if not 0 <= index < (1 << n_spins):
        raise ValueError(f"index {index} out of range for {n_spins} spins")
    psi = np.zeros(1 << n_spins, dtype=complex)
    psi[index] = 1.0
    return psi


def labeled_state(proton_label: str, carbon_label: str, system: SpinSystem) -> np.ndarray:
    """Channel-extreme product state, e.g. ``labeled_state("d", "d", sys)``.

    ``"u"`` means every spin of the channel up (bit 0), ``"d"`` every spin
    down.  Requires a system with both a ``1H`` and a ``13C`` channel.
    """
    if len(system.channels) < 2:
        raise ValueError("labeled states need a two-channel system")
    index = 0
    for label, channel in ((proton_label, "1H"), (carbon_label, "13C")):
        if label == "d":
            index |= system.channel_mask(channel)
        elif label != "u":
            raise ValueError(f"label must be 'u' or 'd', got {label!r}")
    return basis_state(index, system.n_spins)


def magnetization(index: int, n_spins: int, mask: int | None = None) -> float:
    """Total z magnetization of a basis state in units of 1/2 per spin.

    ``mask`` restricts the count to a subset of spins (a channel).
    """
    if mask is None:
        mask = (1 << n_spins) - 1
    bits = int(index) & int(mask)
    total = int(mask).bit_count()
    return 0.5 * (total - 2 * bits.bit_count())


def order_of_element(row: int, col: int, mask: int | None = None) -> int:
    """Coherence order q = M(row) - M(col) of a density-matrix element."""
    r, c = int(row), int(col)
    if mask is not None:
        r &= int(mask)
        c &= int(mask)
    return (c).bit_count() - (r).bit_count()


@dataclass(frozen=True)
class PseudopureState:
    """Lazy density matrix ``(1-eps) Id / 2^N + eps |psi><psi|``.

    Unitaries act on the pure part only (the identity is invariant), so the
    relaxation-free protocol runs at state-vector cost even on twelve spins.
    """

    psi: np.ndarray
    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"purity fraction must be in (0, 1], got {self.eps}")
        psi = np.asarray(self.psi, dtype=complex)
        object.__setattr__(self, "psi", psi)

    @property
    def n_spins(self) -> int:
        return _n_spins_of(self.psi.size)

    @property
    def dim(self) -> int:
        return self.psi.size

    def diagonal(self) -> np.ndarray:
        """Diagonal of the represented matrix."""
        return (1.0 - self.eps) / self.dim + self.eps * np.abs(self.psi) ** 2

    def to_dense(self) -> np.ndarray:
        """Materialize the full matrix (small systems only)."""
        if self.n_spins > MAX_DENSE_SPINS:
            raise DimensionError(
                f"dense density matrices limited to {MAX_DENSE_SPINS} spins"
            )
        rho = self.eps * np.outer(self.psi, self.psi.conj())
        rho[np.diag_indices(self.dim)] += (1.0 - self.eps) / self.dim
        return rho

    def apply(self, func) -> "PseudopureState":
        """New pseudopure state with ``func`` applied to the pure part."""
        return PseudopureState(func(self.psi), self.eps)


def is_density(state) -> bool:
    return isinstance(state, np.ndarray) and state.ndim == 2


def evolve(state, h: sp.spmatrix, t: float, interval=None):
    """Propagate a state under Hermitian ``h`` (rad/s) for ``t`` seconds.

    Vectors (and the pure part of pseudopure states) go through the sparse
    Chebyshev route; density matrices use the dense eigendecomposition and
    are therefore limited to small systems.  Negative ``t`` runs the inverse
    evolution.
    """
    if isinstance(state, PseudopureState):
        return state.apply(lambda p: expm_action(h, p, t, interval))
    state = np.asarray(state)
    if state.shape[0] != h.shape[0]:
        raise ValueError(f"state dimension {state.shape[0]} != operator {h.shape[0]}")
    if state.ndim == 1:
        return expm_action(h, state, t, interval)
    u = dense_propagator(h, t)
    return u @ state @ u.conj().T


def _single_spin_rotation(theta: float, phase: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array(
        [[c, -1j * np.exp(-1j * phase) * s],
         [-1j * np.exp(1j * phase) * s, c]]
    )


def _apply_spin_matrix(psi: np.ndarray, spin: int, m: np.ndarray, n_spins: int) -> np.ndarray:
    """Apply a 2x2 matrix to one spin of a state vector (or a (dim, k)
    batch of column vectors)."""
    lo = 1 << spin
    hi = (1 << n_spins) // (2 * lo)
    work = psi.reshape(hi, 2, -1)  # trailing batch axes fold into the block
    return np.einsum("ab,ibj->iaj", m, work).reshape(psi.shape)


def rotate_collective(state, system: SpinSystem, channel: str | int,
                      flip_angle: float, phase: float = 0.0):
    """Ideal hard pulse: ``exp(-i theta sum_i (Ix_i cos phi + Iy_i sin phi))``
    over the spins of a channel, with no evolution during the pulse.

    ``phase`` is the rotation-axis azimuth in radians (0 = x, pi/2 = y).
    """
    spins = system.spins_on(channel)
    m = _single_spin_rotation(flip_angle, phase)

    def act(psi):
        out = psi
        for s in spins:
            out = _apply_spin_matrix(out, s, m, system.n_spins)
        return out

    if isinstance(state, PseudopureState):
        return state.apply(act)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return act(state)
    a = np.empty_like(state)
    for k in range(state.shape[1]):
        a[:, k] = act(state[:, k].copy())  # A = U rho
    ah = a.conj().T
    b = np.empty_like(a)
    for k in range(ah.shape[1]):
        b[:, k] = act(ah[:, k].copy())  # U A^dagger
    return b.conj().T  # (U A^dagger)^dagger = U rho U^dagger


def rotate_z(state, n_spins: int, angle: float, mask: int | None = None):
    """Collective z rotation ``exp(-i angle * M_channel)`` (diagonal phases).

    ``mask`` selects the participating spins; default all.  Used by the
    multiple-quantum phase-increment scan and for phase bookkeeping.
    """
    dim = 1 << n_spins
    if mask is None:
        mask = dim - 1
    idx = np.arange(dim, dtype=np.int64)
    flipped = np.zeros(dim, dtype=np.int64)
    for k in range(n_spins):
        if mask & (1 << k):
            flipped += (idx >> k) & 1
    mvals = 0.5 * (int(mask).bit_count() - 2 * flipped)
    phases = np.exp(-1j * angle * mvals)
    if isinstance(state, PseudopureState):
        return state.apply(lambda p: phases * p)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return phases * state
    return phases[:, None] * state * phases.conj()[None, :]


def _popcounts(n_spins: int) -> np.ndarray:
    idx = np.arange(1 << n_spins, dtype=np.int64)
    counts = np.zeros(1 << n_spins, dtype=np.int64)
    for k in range(n_spins):
        counts += (idx >> k) & 1
    return counts


def coherence_profile(state, n_spins: int | None = None) -> np.ndarray:
    """Weight per coherence order q, indexed as ``profile[q + N]``.

    weight(q) sums |rho_rs|^2 over elements with M(r) - M(s) = q; a pure
    state is taken as its projector.  The weights add up to Tr(rho^2).
    """
    if isinstance(state, PseudopureState):
        # the identity part is diagonal: it adds cross and square terms to
        # the order-0 weight and scales everything else by eps^2
        eps, dim = state.eps, state.dim
        profile = eps**2 * coherence_profile(state.psi, n_spins)
        profile[state.n_spins if n_spins is None else n_spins] += (
            2.0 * eps * (1.0 - eps) + (1.0 - eps) ** 2) / dim
        return profile
    state = np.asarray(state)
    n = n_spins if n_spins is not None else _n_spins_of(state.shape[0])
    pops = _popcounts(n)
    profile = np.zeros(2 * n + 1)
    if state.ndim == 1:
        # |rho_rs|^2 = p_r p_s factorizes over the popcount marginal
        p = np.abs(state) ** 2
        marg = np.bincount(pops, weights=p, minlength=n + 1)
        for q in range(-n, n + 1):
            acc = 0.0
            for a in range(n + 1):
                b = a + q  # popcount difference = order
                if 0 <= b <= n:
                    acc += marg[a] * marg[b]
            profile[q + n] = acc
        return profile
    mags = np.abs(state) ** 2
    qgrid = pops[None, :] - pops[:, None]  # q of element (r, s)
    profile = np.bincount(
        (qgrid + n).ravel(), weights=mags.ravel(), minlength=2 * n + 1
    )
    return profile


def crusher(rho: np.ndarray, retain, n_spins: int | None = None,
            allow_asymmetric: bool = False) -> np.ndarray:
    """Ideal order-selective filter: zero every element whose coherence
    order is not in ``retain``.

    A retain set that is not symmetric under q -> -q would break
    Hermiticity; that is rejected rather than silently fixed unless
    ``allow_asymmetric`` is set.
    """
    if isinstance(rho, PseudopureState):
        rho = rho.to_dense()
    rho = np.asarray(rho)
    if rho.ndim != 2:
        raise ValueError("crusher needs a density matrix; promote pure states first")
    retain = {int(q) for q in retain}
    if not allow_asymmetric and any(-q not in retain for q in retain):
        raise ValueError(f"retain set {sorted(retain)} is not symmetric under q -> -q")
    n = n_spins if n_spins is not None else _n_spins_of(rho.shape[0])
    pops = _popcounts(n)
    qgrid = pops[None, :] - pops[:, None]
    keep = np.isin(qgrid, list(retain))
    return np.where(keep, rho, 0.0)


def pseudopure(psi: np.ndarray, eps: float) -> PseudopureState:
    """Pseudopure state ``(1-eps) Id / 2^N + eps |psi><psi|``.

    The traceless deviation equals ``eps (|psi><psi| - Id / 2^N)``, so every
    linear-response observable is just ``eps`` times the pure-state one.
    """
    return PseudopureState(np.asarray(psi, dtype=complex), eps)


def thermal_deviation(system: SpinSystem) -> np.ndarray:
    """High-temperature deviation matrix, diag(sum_c w_c sum_{i in c} Iz_i),
    channel-weighted by gyromagnetic ratio and rescaled so the largest
    diagonal magnitude is 1.  Dense, so limited to small systems.
    """
    n = system.n_spins
    if n > MAX_DENSE_SPINS:
        raise DimensionError(
            f"thermal deviation matrix limited to {MAX_DENSE_SPINS} spins"
        )
    diag = np.zeros(1 << n)
    for ci, chan in enumerate(system.channels):
        weight = _GAMMA.get(chan.label, 1.0)
        mask = system.channel_mask(ci)
        diag += weight * np.array(
            [magnetization(i, n, mask) for i in range(1 << n)]
        )
    diag /= np.abs(diag).max()
    return np.diag(diag).astype(complex)


def purity(state) -> float:
    """Tr(rho^2); 1 for pure states."""
    if isinstance(state, PseudopureState):
        e, d = state.eps, state.dim
        return float(e**2 + (1 - e**2) / d)
    state = np.asarray(state)
    if state.ndim == 1:
        return float(np.vdot(state, state).real ** 2)
    return float(np.einsum("ij,ji->", state, state).real)


def fidelity(a, b) -> float:
    """Phase-invariant overlap of two states.

    Pure/pure gives ``|<a|b>|^2``; a pure state against a matrix gives
    ``<psi| rho |psi>``; two matrices use the normalized Hilbert-Schmidt
    overlap ``Tr(rho_a rho_b) / max(Tr rho_a^2, Tr rho_b^2)`` (a regression
    measure, not the Uhlmann fidelity).  Pseudopure states are handled
    lazily, so the comparison works at any size.
    """
    if isinstance(a, PseudopureState) or isinstance(b, PseudopureState):
        return _pseudopure_fidelity(a, b)
    a, b = np.asarray(a), np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError("states have different dimensions")
    if a.ndim == 1 and b.ndim == 1:
        return float(np.abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        return float(np.real(np.vdot(a, b @ a)))
    if b.ndim == 1:
        return float(np.real(np.vdot(b, a @ b)))
    overlap = np.einsum("ij,ji->", a, b).real
    return float(overlap / max(purity(a), purity(b)))


def _pseudopure_fidelity(a, b) -> float:
    """Hilbert-Schmidt overlap with at least one lazy pseudopure operand:
    Tr(rho_a rho_b) = (1 - eps_a eps_b)/2^N + eps_a eps_b |<a|b>|^2."""
    if not isinstance(a, PseudopureState):
        a, b = b, a  # a is now pseudopure
    if isinstance(b, PseudopureState):
        psi_b, eps_b = b.psi, b.eps
    elif np.asarray(b).ndim == 1:
        psi_b, eps_b = np.asarray(b, dtype=complex), 1.0
    else:
        return fidelity(a.to_dense(), b)  # dense matrix: small system anyway
    if a.dim != psi_b.size:
        raise ValueError("states have different dimensions")
    ee = a.eps * eps_b
    overlap = (1.0 - ee) / a.dim + ee * np.abs(np.vdot(a.psi, psi_b)) ** 2
    norm = max(purity(a), purity(PseudopureState(psi_b, eps_b)))
    return float(overlap / norm)
