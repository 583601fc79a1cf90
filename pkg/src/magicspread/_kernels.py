"""Compiled inner loops shared by the state-vector, model and observable modules.

All kernels work on flat numpy arrays indexed by the computational basis
label ``x``; qubit ``j`` is bit ``j`` of ``x`` (little-endian).
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True, fastmath=True)
def fwht_inplace(v):
    """Unnormalised Walsh-Hadamard transform, in place, for real or complex ``v``."""
    n = v.shape[0]
    if n < 4:
        if n == 2:
            a = v[0]
            b = v[1]
            v[0] = a + b
            v[1] = a - b
        return
    # the two lowest levels fused
    for i in range(0, n, 4):
        a0 = v[i]
        a1 = v[i + 1]
        a2 = v[i + 2]
        a3 = v[i + 3]
        s0 = a0 + a1
        d0 = a0 - a1
        s1 = a2 + a3
        d1 = a2 - a3
        v[i] = s0 + s1
        v[i + 1] = d0 + d1
        v[i + 2] = s0 - s1
        v[i + 3] = d0 - d1
    h = 4
    while h < n:
        for i in range(0, n, 2 * h):
            lo = v[i:i + h]
            hi = v[i + h:i + 2 * h]
            for j in range(h):
                a = lo[j]
                b = hi[j]
                lo[j] = a + b
                hi[j] = a - b
        h *= 2


@numba.njit(cache=True)
def apply_1q(psi, bit, g00, g01, g10, g11):
    mask = 1 << bit
    n = psi.shape[0]
    for x in range(n):
        if x & mask:
            continue
        y = x | mask
        a = psi[x]
        b = psi[y]
        psi[x] = g00 * a + g01 * b
        psi[y] = g10 * a + g11 * b


@numba.njit(cache=True)
def apply_2q(psi, bit_a, bit_b, g):
    # local index = 2 * bit_a + bit_b
    ma = 1 << bit_a
    mb = 1 << bit_b
    n = psi.shape[0]
    for x in range(n):
        if x & ma or x & mb:
            continue
        i0 = x
        i1 = x | mb
        i2 = x | ma
        i3 = x | ma | mb
        a0 = psi[i0]
        a1 = psi[i1]
        a2 = psi[i2]
        a3 = psi[i3]
        psi[i0] = g[0, 0] * a0 + g[0, 1] * a1 + g[0, 2] * a2 + g[0, 3] * a3
        psi[i1] = g[1, 0] * a0 + g[1, 1] * a1 + g[1, 2] * a2 + g[1, 3] * a3
        psi[i2] = g[2, 0] * a0 + g[2, 1] * a1 + g[2, 2] * a2 + g[2, 3] * a3
        psi[i3] = g[3, 0] * a0 + g[3, 1] * a1 + g[3, 2] * a2 + g[3, 3] * a3


@numba.njit(cache=True, fastmath=True)
def transverse_ising_apply(psi, out, diag, b, nq):
    """out = diag * psi + b * sum_j X_j psi."""
    n = psi.shape[0]
    for x in range(n):
        acc = 0.0j
        for j in range(nq):
            acc += psi[x ^ (1 << j)]
        out[x] = diag[x] * psi[x] + b * acc


@numba.njit(cache=True, fastmath=True)
def chebyshev_recurrence(psi_prev, psi_cur, out, diag, b, nq, scale, shift):
    """out = 2 * Ht psi_cur - psi_prev with Ht = (H - shift) / scale."""
    n = psi_cur.shape[0]
    two_over = 2.0 / scale
    for x in range(n):
        acc = 0.0j
        for j in range(nq):
            acc += psi_cur[x ^ (1 << j)]
        h_psi = (diag[x] - shift) * psi_cur[x] + b * acc
        out[x] = two_over * h_psi - psi_prev[x]


@numba.njit(cache=True)
def _popcount(v):
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


@numba.njit(cache=True, fastmath=True)
def pauli_moments(re, im, ks, want_shannon):
    """Sums over all 4^N Pauli strings of <P>^(2k), plus sum <P>^2 log2 <P>^2.

    For fixed X-part ``a`` the expectation values of all strings X^a Z^b are
    (up to a factor i^|a&b|) the Walsh-Hadamard transform of
    f_a(x) = conj(psi[x^a]) psi[x]. Each transform entry is either purely real
    or purely imaginary, so transforming Re f + Im f yields +-<P> directly.
    """
    d = re.shape[0]
    nk = ks.shape[0]
    v = np.empty(d)
    sums = np.zeros(nk)
    shannon = 0.0
    total = 0.0
    want2 = False
    want3 = False
    general = False
    for i in range(nk):
        if ks[i] == 2.0:
            want2 = True
        elif ks[i] == 3.0:
            want3 = True
        elif ks[i] != 1.0:
            general = True
    s2 = 0.0
    s3 = 0.0
    for a in range(d):
        for x in range(d):
            y = x ^ a
            v[x] = re[y] * re[x] + im[y] * im[x] + re[y] * im[x] - im[y] * re[x]
        fwht_inplace(v)
        for bidx in range(d):
            v[bidx] = v[bidx] * v[bidx]
        t1 = 0.0
        for bidx in range(d):
            t1 += v[bidx]
        total += t1
        if want2 and not want3:
            acc = 0.0
            for bidx in range(d):
                acc += v[bidx] * v[bidx]
            s2 += acc
        elif want3:
            acc2 = 0.0
            acc3 = 0.0
            for bidx in range(d):
                e2 = v[bidx] * v[bidx]
                acc2 += e2
                acc3 += e2 * v[bidx]
            s2 += acc2
            s3 += acc3
        if want_shannon:
            acc = 0.0
            for bidx in range(d):
                e = v[bidx]
                if e > 0.0:
                    acc += e * np.log2(e)
            shannon += acc
        if general:
            for i in range(nk):
                k = ks[i]
                if k != 1.0 and k != 2.0 and k != 3.0:
                    acc = 0.0
                    for bidx in range(d):
                        if v[bidx] > 0.0:
                            acc += v[bidx] ** k
                    sums[i] += acc
    for i in range(nk):
        if ks[i] == 2.0:
            sums[i] = s2
        elif ks[i] == 3.0:
            sums[i] = s3
        elif ks[i] == 1.0:
            sums[i] = total
    return sums, shannon, total


@numba.njit(cache=True)
def pauli_moments_checked(psi, ks):
    """Slow path of :func:`pauli_moments` with an explicit Hermitian phase.

    Returns the moment sums, the normalisation sum and the largest imaginary
    residual of i^|a&b| g(a, b), which must vanish for Hermitian strings.
    """
    d = psi.shape[0]
    nk = ks.shape[0]
    f = np.empty(d, dtype=np.complex128)
    sums = np.zeros(nk)
    total = 0.0
    worst = 0.0
    phases = np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])
    for a in range(d):
        for x in range(d):
            f[x] = np.conj(psi[x ^ a]) * psi[x]
        fwht_inplace(f)
        for bidx in range(d):
            val = phases[_popcount(a & bidx) & 3] * f[bidx]
            if abs(val.imag) > worst:
                worst = abs(val.imag)
            e = val.real * val.real
            total += e
            for i in range(nk):
                if e > 0.0:
                    sums[i] += e ** ks[i]
    return sums, total, worst
