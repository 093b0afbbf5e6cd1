"""Spin-cluster definitions and their rotating-frame Hamiltonians.

A :class:`SpinSystem` collects the static description of one molecule-sized
cluster of spin-1/2 nuclei: which radio-frequency channel each spin belongs
to (e.g. ``"1H"`` or ``"13C"``), the table of residual dipolar coupling
constants in Hz, and per-channel carrier offsets.  From it two operators are
built as sparse matrices in angular-frequency units (rad/s):

- :func:`free_hamiltonian` -- the secular dipolar Hamiltonian: full
  (zz + flip-flop) coupling within a channel, zz-only across channels, plus
  Zeeman offset terms;
- :func:`dq_hamiltonian` -- the pure double-quantum operator of one channel,
  the effective generator engineered by the multiple-quantum pulse cycles in
  :mod:`spincat.sequences`.

Basis convention (used by every module): spin ``k`` is bit ``k`` of the
basis-state index, bit value 0 means "up" (m = +1/2) and 1 means "down"
(m = -1/2).  The all-up state is index 0.  Two-channel presets place the six
protons on spins 0-5 and the six carbons on spins 6-11, so ``|u>_C |u>_H``
is index 0 and ``|d>_C |d>_H`` is index 2^12 - 1.

Preset geometry: a regular hexagon with the carbon ring at radius 1.397 A
(the C-C bond length) and each proton 1.085 A further out along the same
spoke.  All internuclear vectors lie in the molecular plane, so a single
orientational factor multiplies every 1/r^3 coupling.  The factor is
negative (vectors perpendicular to the field) and its magnitude is fixed by
requiring that the summed heteronuclear couplings rotate the six-quantum
proton coherence by pi in exactly ``HET_PHASE_TIME`` seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Channel",
    "SpinSystem",
    "DimensionError",
    "HET_PHASE_TIME",
    "MAX_SPINS",
    "MAX_DENSE_SPINS",
    "build_preset",
    "het_coupling_sum",
    "free_hamiltonian",
    "dq_hamiltonian",
]

# Delay unit of the two-channel presets: the summed heteronuclear couplings
# advance the phase of the six-spin proton flip coherence by pi in this time.
HET_PHASE_TIME = 65.6e-6

# Sparse Hamiltonian action is supported up to this many spins; dense
# operator materialization (eigendecomposition paths) only up to 8.
MAX_SPINS = 14
MAX_DENSE_SPINS = 8

# Hexagon geometry in Angstrom.
_CC_BOND = 1.397
_CH_BOND = 1.085


class DimensionError(ValueError):
    """A state or operator exceeds the supported Hilbert-space size."""


@dataclass(frozen=True)
class Channel:
    """One radio-frequency channel: a nuclear species with a carrier offset.

    Parameters
    ----------
    label : str
        Identifier, unique within a system (e.g. ``"1H"``).
    offset : float
        Rotating-frame carrier offset in Hz, applied to every spin on the
        channel.
    """

    label: str
    offset: float = 0.0


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """An immutable cluster of dipolar-coupled spin-1/2 nuclei.

    Instances compare (and hash) by identity, which lets operator caches key
    on the system object directly.

    Parameters
    ----------
    channels : tuple[Channel, ...]
        The channels present; labels must be unique.
    channel_of : tuple[int, ...]
        Channel index for each spin.
    couplings : numpy.ndarray
        Symmetric N x N table of residual dipolar coupling constants in Hz
        with zero diagonal.  Same-channel entries are homonuclear couplings
        (zz + flip-flop), cross-channel entries heteronuclear (zz only).
    name : str
        Preset identifier or free-form label.
    """

    channels: tuple[Channel, ...]
    channel_of: tuple[int, ...]
    couplings: np.ndarray = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        labels = [c.label for c in self.channels]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate channel labels: {labels}")
        coup = np.asarray(self.couplings, dtype=float)
        n = len(self.channel_of)
        if coup.shape != (n, n):
            raise ValueError(f"coupling table shape {coup.shape} != ({n}, {n})")
        if not np.allclose(coup, coup.T, atol=0.0):
            raise ValueError("coupling table must be symmetric")
        if np.any(np.diag(coup) != 0.0):
            raise ValueError("coupling table must have zero diagonal")
        if any(c < 0 or c >= len(self.channels) for c in self.channel_of):
            raise ValueError("channel_of entry out of range")
        coup = coup.copy()
        coup.flags.writeable = False
        object.__setattr__(self, "couplings", coup)
        object.__setattr__(self, "channel_of", tuple(int(c) for c in self.channel_of))

    @property
    def n_spins(self) -> int:
        return len(self.channel_of)

    @property
    def dim(self) -> int:
        return 1 << self.n_spins

    def channel_index(self, channel: str | int) -> int:
        """Resolve a channel given by label or index; raise KeyError otherwise."""
        if isinstance(channel, int):
            if 0 <= channel < len(self.channels):
                return channel
            raise KeyError(f"no channel {channel}")
        for i, c in enumerate(self.channels):
            if c.label == channel:
                return i
        raise KeyError(f"no channel {channel!r}")

    def spins_on(self, channel: str | int) -> tuple[int, ...]:
        """Indices of the spins assigned to a channel."""
        ci = self.channel_index(channel)
        return tuple(i for i, c in enumerate(self.channel_of) if c == ci)

    def channel_mask(self, channel: str | int) -> int:
        """Bit mask selecting the spins of a channel in the basis index."""
        mask = 0
        for i in self.spins_on(channel):
            mask |= 1 << i
        return mask

    def with_offsets(self, offsets: dict[str, float]) -> "SpinSystem":
        """Copy of the system with channel offsets replaced (Hz)."""
        chans = tuple(
            Channel(c.label, offsets.get(c.label, c.offset)) for c in self.channels
        )
        return SpinSystem(chans, self.channel_of, self.couplings, self.name)


def _hexagon_sites(radius: float) -> np.ndarray:
    angles = np.arange(6) * (np.pi / 3.0)
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def _r3_couplings(positions: np.ndarray) -> np.ndarray:
    """Pairwise 1/r^3 magnitudes for in-plane site positions (Angstrom)."""
    n = len(positions)
    table = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            r = np.linalg.norm(positions[i] - positions[j])
            table[i, j] = table[j, i] = 1.0 / r**3
    return table


def build_preset(name: str, scale: float | None = None) -> SpinSystem:
    """Build one of the benzene-geometry presets.

    ``benzene12`` is the fully labeled molecule (six protons on spins 0-5,
    six carbons on spins 6-11), ``benzene6`` the proton-only ring and
    ``benzene7`` the ring with a single labeled carbon on spin 6.  Coupling
    magnitudes follow the hexagon geometry with 1/r^3 scaling; the common
    (negative) prefactor is calibrated on the twelve-spin system so that
    ``het_coupling_sum(build_preset("benzene12"))`` equals
    ``1 / (2 * HET_PHASE_TIME)``.  The sign makes anti-aligned channel
    patterns the higher-energy ones, which is what gives the delay step of
    the cat protocol its -i phase factors.

    Parameters
    ----------
    name : {"benzene12", "benzene6", "benzene7"}
    scale : float, optional
        Extra multiplier on every coupling (default 1).

    Returns
    -------
    SpinSystem
    """
    protons = _hexagon_sites(_CC_BOND + _CH_BOND)
    carbons = _hexagon_sites(_CC_BOND)

    if name == "benzene12":
        positions = np.vstack([protons, carbons])
        channel_of = (0,) * 6 + (1,) * 6
        channels = (Channel("1H"), Channel("13C"))
    elif name == "benzene6":
        positions = protons
        channel_of = (0,) * 6
        channels = (Channel("1H"),)
    elif name == "benzene7":
        positions = np.vstack([protons, carbons[:1]])
        channel_of = (0,) * 6 + (1,)
        channels = (Channel("1H"), Channel("13C"))
    else:
        raise ValueError(f"unknown preset {name!r}")

    table = _r3_couplings(positions)
    # Calibrate the global factor on the 12-spin geometry so every preset
    # shares one dipolar scale.
    full = _r3_couplings(np.vstack([protons, carbons]))
    het_r3_sum = full[:6, 6:].sum()
    factor = -1.0 / (2.0 * HET_PHASE_TIME * het_r3_sum)
    if scale is not None:
        factor *= scale
    return SpinSystem(channels, channel_of, factor * table, name=name)


def het_coupling_sum(system: SpinSystem) -> float:
    """Magnitude of the summed cross-channel couplings, in Hz.

    For the default ``benzene12`` preset this equals
    ``1 / (2 * HET_PHASE_TIME)``, i.e. about 7621.95 Hz: the aggregate
    heteronuclear coupling that rotates the proton six-quantum coherence by
    pi during one delay unit.

    Raises
    ------
    ValueError
        If the system has fewer than two channels.
    """
    if len(system.channels) < 2:
        raise ValueError("heteronuclear coupling sum needs at least two channels")
    ch = np.asarray(system.channel_of)
    cross = ch[:, None] != ch[None, :]
    return float(abs(system.couplings[cross].sum()) / 2.0)


def _bit_signs(n_spins: int) -> np.ndarray:
    """(n_spins, 2^N) array of +1/-1 for bit values 0/1 of each index."""
    idx = np.arange(1 << n_spins, dtype=np.int64)
    return 1 - 2 * ((idx[None, :] >> np.arange(n_spins)[:, None]) & 1)


def _check_dim(n_spins: int):
    if n_spins > MAX_SPINS:
        raise DimensionError(
            f"{n_spins} spins exceeds the {MAX_SPINS}-spin sparse limit"
        )


def free_hamiltonian(system: SpinSystem) -> sp.csr_matrix:
    """Rotating-frame secular Hamiltonian as a sparse matrix in rad/s.

    H = sum_{i<j, same channel} 2 pi d_ij (2 Iz_i Iz_j - (I+_i I-_j + I-_i I+_j)/2)
      + sum_{i<j, cross channel} 2 pi b_ij 2 Iz_i Iz_j
      + sum_i 2 pi offset(channel(i)) Iz_i

    with Iz eigenvalues +-1/2.  Cross-channel flip-flop terms are dropped
    (secular approximation for well-separated Larmor frequencies), which is
    what makes the per-channel magnetization a good quantum number under
    free evolution.
    """
    n = system.n_spins
    _check_dim(n)
    dim = 1 << n
    signs = _bit_signs(n)
    ch = np.asarray(system.channel_of)

    diag = np.zeros(dim)
    rows, cols, vals = [], [], []
    idx = np.arange(dim, dtype=np.int64)
    for i in range(n):
        off = system.channels[ch[i]].offset
        if off != 0.0:
            diag += np.pi * off * signs[i]
        for j in range(i + 1, n):
            d = system.couplings[i, j]
            if d == 0.0:
                continue
            # zz part, common to both coupling kinds:
            # 2 pi d * 2 * (s_i/2)(s_j/2) = pi d s_i s_j
            diag += np.pi * d * signs[i] * signs[j]
            if ch[i] == ch[j]:
                # flip-flop: -pi d between states with opposite bits i, j
                src = idx[signs[i] != signs[j]]
                dst = src ^ ((1 << i) | (1 << j))
                rows.append(src)
                cols.append(dst)
                vals.append(np.full(src.size, -np.pi * d))

    h = sp.csr_matrix(
        (np.concatenate(vals) if vals else np.empty(0),
         (np.concatenate(rows) if rows else np.empty(0, dtype=np.int64),
          np.concatenate(cols) if cols else np.empty(0, dtype=np.int64))),
        shape=(dim, dim),
        dtype=complex,
    )
    h += sp.diags(diag.astype(complex))
    return h.tocsr()


def dq_hamiltonian(system: SpinSystem, channel: str | int) -> sp.csr_matrix:
    """Pure double-quantum operator of one channel, sparse, in rad/s.

    H_DQ = -1/2 sum_{i<j in channel} 2 pi d_ij (I+_i I+_j + I-_i I-_j)

    It has no diagonal part and only connects basis states whose channel
    magnetization differs by exactly 2 (both bits of a pair flip together).
    """
    n = system.n_spins
    _check_dim(n)
    dim = 1 << n
    spins = system.spins_on(channel)
    if not spins:
        raise ValueError("channel has no spins")
    signs = _bit_signs(n)
    idx = np.arange(dim, dtype=np.int64)

    rows, cols, vals = [], [], []
    for a, i in enumerate(spins):
        for j in spins[a + 1:]:
            d = system.couplings[i, j]
            if d == 0.0:
                continue
            src = idx[signs[i] == signs[j]]
            dst = src ^ ((1 << i) | (1 << j))
            rows.append(src)
            cols.append(dst)
            vals.append(np.full(src.size, -np.pi * d))

    if rows:
        h = sp.csr_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
            dtype=complex,
        )
    else:
        h = sp.csr_matrix((dim, dim), dtype=complex)
    return h
