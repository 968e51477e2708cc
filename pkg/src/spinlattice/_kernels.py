"""Numba kernels for the Metropolis sampler.

The random stream is SplitMix64: a 64-bit counter advanced by a fixed odd
increment and scrambled by two xor-shift-multiply rounds.  Each update
attempt draws one uniform for the site and, only when the move raises the
energy or leaves it unchanged, a second uniform for acceptance.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, nogil=True)
def splitmix_next(state):
    """Advance ``state`` and return ``(new_state, uint64 output)``."""
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def uniform(state):
    """Advance ``state`` and return ``(new_state, u)`` with u in [0, 1)."""
    state, z = splitmix_next(state)
    return state, np.float64(z >> _S11) * _INV53


@njit(cache=True, nogil=True)
def random_spins(n, state):
    spins = np.empty(n, dtype=np.int8)
    for i in range(n):
        state, u = uniform(state)
        spins[i] = 1 if u < 0.5 else -1
    return spins, state


@njit(cache=True, nogil=True)
def local_terms(spins, s, nbr_ptr, nbr_idx, nbr_kind, face_ptr, face_pair, jvals):
    """(pair field, face pair sum) felt by site ``s``."""
    h = 0.0
    for p in range(nbr_ptr[s], nbr_ptr[s + 1]):
        h += jvals[nbr_kind[p]] * spins[nbr_idx[p]]
    fp = 0.0
    for p in range(face_ptr[s], face_ptr[s + 1]):
        fp += spins[face_pair[p, 0]] * spins[face_pair[p, 1]]
    return h, fp


@njit(cache=True, nogil=True)
def sweeps(spins, sub, nbr_ptr, nbr_idx, nbr_kind, face_ptr, face_pair,
           jvals, jt, b, temp, n_sweeps, state,
           energy, sum_sigma, sum_tau, face_sum, out):
    """Run ``n_sweeps`` sweeps of N attempts each, updating running totals.

    ``sum_sigma`` collects spins with sublattice label other than 2 (tau).
    When ``out`` has rows, row ``k`` receives (energy, sum_sigma, sum_tau,
    face_sum) after sweep ``k``.
    """
    n = spins.shape[0]
    accepted = 0
    record = out.shape[0] > 0
    for sw in range(n_sweeps):
        for _ in range(n):
            state, u = uniform(state)
            s = int(u * n)
            if s >= n:
                s = n - 1
            h, fp = local_terms(spins, s, nbr_ptr, nbr_idx, nbr_kind,
                                face_ptr, face_pair, jvals)
            si = spins[s]
            d_e = 2.0 * si * (h + jt * fp + b)
            accept = d_e < 0.0
            if not accept:
                state, u = uniform(state)
                accept = u < np.exp(-d_e / temp)
            if accept:
                spins[s] = -si
                energy += d_e
                if sub[s] == 2:
                    sum_tau -= 2 * si
                else:
                    sum_sigma -= 2 * si
                face_sum -= 2.0 * si * fp
                accepted += 1
        if record:
            out[sw, 0] = energy
            out[sw, 1] = sum_sigma
            out[sw, 2] = sum_tau
            out[sw, 3] = face_sum
    return state, accepted, energy, sum_sigma, sum_tau, face_sum
