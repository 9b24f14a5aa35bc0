"""Compiled loops for the exponential-size oracles.

Bit convention: qubit (site) ``q`` of an ``n``-qubit register lives in bit
``n - 1 - q`` of the basis index, so site 0 is the most significant bit.
Bit value 0 encodes ``sigma = +1``.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def _trailing_zeros(j):
    t = 0
    while (j & 1) == 0:
        j >>= 1
        t += 1
    return t


@numba.njit(cache=True)
def _gray_init(pbits):
    n_pat, n = pbits.shape
    cfg = np.zeros(n, dtype=np.int64)
    x = np.zeros(n_pat, dtype=np.int64)
    for mu in range(n_pat):
        for i in range(n):
            x[mu] += pbits[mu, i]
    return cfg, x


@numba.njit(cache=True)
def _gray_step(j, n, cfg, x, pbits):
    site = n - 1 - _trailing_zeros(j)
    cfg[site] ^= 1
    for mu in range(pbits.shape[0]):
        if cfg[site] == pbits[mu, site]:
            x[mu] -= 1
        else:
            x[mu] += 1
    return j ^ (j >> 1)


@numba.njit(cache=True)
def _energy(x, profile):
    e = 0.0
    for mu in range(x.shape[0]):
        e += profile[x[mu]]
    return e


@numba.njit(cache=True)
def gray_energy_table(pbits, profile):
    """Energies of all 2**n configurations, stored at their basis index."""
    n = pbits.shape[1]
    dim = 1 << n
    table = np.empty(dim, dtype=np.float64)
    cfg, x = _gray_init(pbits)
    table[0] = _energy(x, profile)
    for j in range(1, dim):
        g = _gray_step(j, n, cfg, x, pbits)
        table[g] = _energy(x, profile)
    return table


@numba.njit(cache=True)
def gray_minimum(pbits, profile):
    n = pbits.shape[1]
    cfg, x = _gray_init(pbits)
    best = _energy(x, profile)
    for j in range(1, 1 << n):
        _gray_step(j, n, cfg, x, pbits)
        e = _energy(x, profile)
        if e < best:
            best = e
    return best


@numba.njit(cache=True)
def gray_collect(pbits, profile, threshold, out):
    """Write basis indices with energy <= threshold into ``out``; return the count."""
    n = pbits.shape[1]
    cfg, x = _gray_init(pbits)
    count = 0
    if _energy(x, profile) <= threshold:
        if count < out.shape[0]:
            out[count] = 0
        count += 1
    for j in range(1, 1 << n):
        g = _gray_step(j, n, cfg, x, pbits)
        if _energy(x, profile) <= threshold:
            if count < out.shape[0]:
                out[count] = g
            count += 1
    return count


@numba.njit(cache=True)
def rotate_all_x(vec, c, s, n):
    """Apply ``prod_q (c I + i s sigma^x_q)`` in place."""
    dim = vec.shape[0]
    for q in range(n):
        bit = 1 << (n - 1 - q)
        for j in range(dim):
            if j & bit == 0:
                a0 = vec[j]
                a1 = vec[j | bit]
                vec[j] = c * a0 + 1j * s * a1
                vec[j | bit] = 1j * s * a0 + c * a1


@numba.njit(cache=True)
def annealing_matvec(vec, diag, wz, wx, shift, n, out):
    """``out = (wz * diag - wx * sum_q sigma^x_q - shift) @ vec``."""
    dim = vec.shape[0]
    for j in range(dim):
        acc = (wz * diag[j] - shift) * vec[j]
        sx = 0.0j
        for q in range(n):
            sx += vec[j ^ (1 << q)]
        out[j] = acc - wx * sx


@numba.njit(cache=True)
def apply_gate_2q(vec, u, q, n):
    """Apply a 4x4 gate to neighbouring sites ``q`` and ``q + 1`` in place."""
    dim = vec.shape[0]
    b1 = 1 << (n - 1 - q)
    b2 = 1 << (n - 2 - q)
    for j in range(dim):
        if j & b1 == 0 and j & b2 == 0:
            i1 = j | b2
            i2 = j | b1
            i3 = j | b1 | b2
            a0 = vec[j]
            a1 = vec[i1]
            a2 = vec[i2]
            a3 = vec[i3]
            vec[j] = u[0, 0] * a0 + u[0, 1] * a1 + u[0, 2] * a2 + u[0, 3] * a3
            vec[i1] = u[1, 0] * a0 + u[1, 1] * a1 + u[1, 2] * a2 + u[1, 3] * a3
            vec[i2] = u[2, 0] * a0 + u[2, 1] * a1 + u[2, 2] * a2 + u[2, 3] * a3
            vec[i3] = u[3, 0] * a0 + u[3, 1] * a1 + u[3, 2] * a2 + u[3, 3] * a3


@numba.njit(cache=True)
def environment_2q(phi, psi, q, n):
    """``E[j, k] = sum_rest phi[.. j ..] conj(psi[.. k ..])`` on sites ``q, q + 1``."""
    dim = phi.shape[0]
    b1 = 1 << (n - 1 - q)
    b2 = 1 << (n - 2 - q)
    e = np.zeros((4, 4), dtype=np.complex128)
    idx = np.empty(4, dtype=np.int64)
    for j in range(dim):
        if j & b1 == 0 and j & b2 == 0:
            idx[0] = j
            idx[1] = j | b2
            idx[2] = j | b1
            idx[3] = j | b1 | b2
            for r in range(4):
                pr = phi[idx[r]]
                for c in range(4):
                    e[r, c] += pr * np.conj(psi[idx[c]])
    return e
