"""Matrix-exponential time propagation for sparse Hermitian Hamiltonians.

The workhorse is :func:`expm_action`, a Chebyshev polynomial expansion of
``exp(-i H t) v`` that never materializes the propagator.  The spectral
interval of H is bounded with Gershgorin discs, H is affinely mapped onto
[-1, 1], and the series

    exp(-i z x) = J_0(z) + 2 sum_k (-i)^k J_k(z) T_k(x)

is summed with the standard Chebyshev three-term recurrence until the
Bessel coefficients fall below tolerance.  The truncation error is then
uniform over the whole spectrum, so no step splitting is needed.

:func:`dense_propagator` provides the dense eigendecomposition route used
both for density matrices and as an independent cross-check of the sparse
path on small systems.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .systems import MAX_DENSE_SPINS, DimensionError

__all__ = ["gershgorin_interval", "expm_action", "dense_propagator", "evolve_dense"]

#: Series terms are kept until |J_k| stays below this for several k.
COEFF_TOL = 1e-16


def gershgorin_interval(h: sp.spmatrix) -> tuple[float, float]:
    """Enclosing interval [lo, hi] for the spectrum of Hermitian ``h``."""
    h = h.tocsr()
    diag = h.diagonal().real
    radius = np.abs(h).sum(axis=1).A1 - np.abs(diag)
    return float((diag - radius).min()), float((diag + radius).max())


def expm_action(
    h: sp.spmatrix,
    v: np.ndarray,
    t: float,
    interval: tuple[float, float] | None = None,
) -> np.ndarray:
    """Apply ``exp(-i h t)`` to a vector without forming the exponential.

    Parameters
    ----------
    h : scipy sparse matrix
        Hermitian operator in rad/s.
    v : numpy.ndarray
        State vector, or a (dim, m) array of column vectors propagated as a
        batch; returned unchanged (a copy) when ``t == 0``.
    t : float
        Evolution time in seconds; negative values give the inverse.
    interval : (float, float), optional
        Pre-computed spectral bounds, e.g. from :func:`gershgorin_interval`.
        Passing it amortizes the bound when stepping repeatedly.
    """
    v = np.asarray(v, dtype=complex)
    if t == 0.0:
        return v.copy()
    lo, hi = interval if interval is not None else gershgorin_interval(h)
    center = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    if half == 0.0:
        return np.exp(-1j * center * t) * v

    z = half * t
    n_terms = _chebyshev_terms(abs(z))
    k = np.arange(n_terms)
    coeff = (2.0 * jv(k, z)) * (-1j) ** k
    coeff[0] /= 2.0

    # three-term recurrence on the scaled operator x = (h - center) / half
    def x_dot(w):
        return (h @ w - center * w) / half

    t_prev = v
    t_cur = x_dot(v)
    acc = coeff[0] * t_prev + coeff[1] * t_cur
    for kk in range(2, n_terms):
        t_next = 2.0 * x_dot(t_cur) - t_prev
        acc += coeff[kk] * t_next
        t_prev, t_cur = t_cur, t_next
    return np.exp(-1j * center * t) * acc


def _chebyshev_terms(z: float) -> int:
    """Series length for |J_k(z)| to drop below COEFF_TOL (super-exponential
    decay sets in for k > z)."""
    n = int(z + 20.0 + 12.0 * np.cbrt(max(z, 1.0)))
    while jv(n - 1, z) != 0.0 and abs(jv(n - 1, z)) > COEFF_TOL:
        n += 10
    return max(n, 2)


def dense_propagator(h, t: float) -> np.ndarray:
    """Dense unitary ``exp(-i h t)`` via eigendecomposition (small systems only)."""
    h = h.toarray() if sp.issparse(h) else np.asarray(h)
    if h.shape[0] > (1 << MAX_DENSE_SPINS):
        raise DimensionError(
            f"dense propagator limited to {1 << MAX_DENSE_SPINS} dimensions"
        )
    w, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * w * t)) @ vecs.conj().T


def evolve_dense(h, rho: np.ndarray, t: float) -> np.ndarray:
    """Propagate a density matrix: rho -> U rho U^dagger."""
    u = dense_propagator(h, t)
    return u @ rho @ u.conj().T
