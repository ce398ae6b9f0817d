# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels; bit-identical twin of pykern.py.

Same splitmix64 arithmetic, same per-trial seeding, same draw order.
"""

from libc.stdint cimport uint64_t, int64_t

BACKEND_NAME = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double INV_2_53 = 1.1102230246251565e-16


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t _derive(uint64_t seed, uint64_t index) nogil:
    return _mix64(seed + (index + 1) * GOLDEN)


def lg_pair_trials(double p_first0, double p_cond00, double p_cond10,
                   long long n_trials, unsigned long long seed):
    """Sum over trials of s(x)*s(y); see pykern.lg_pair_trials."""
    cdef int64_t total = 0
    cdef int64_t t
    cdef uint64_t state
    cdef double u, v, pc0
    cdef int x, y
    with nogil:
        for t in range(n_trials):
            state = _derive(seed, <uint64_t>t)
            state += GOLDEN
            u = <double>(_mix64(state) >> 11) * INV_2_53
            state += GOLDEN
            v = <double>(_mix64(state) >> 11) * INV_2_53
            x = 0 if u < p_first0 else 1
            pc0 = p_cond00 if x == 0 else p_cond10
            y = 0 if v < pc0 else 1
            total += (2 * x - 1) * (2 * y - 1)
    return total


def chsh_trials(double[:, ::1] joint, long long n_trials, unsigned long long seed,
                unsigned char[::1] out_sa, unsigned char[::1] out_a,
                unsigned char[::1] out_sb, unsigned char[::1] out_b):
    """Fill per-trial setting/outcome logs; see pykern.chsh_trials."""
    if joint.shape[0] != 4 or joint.shape[1] != 4:
        raise ValueError("joint must have shape (4, 4)")
    if (out_sa.shape[0] < n_trials or out_a.shape[0] < n_trials
            or out_sb.shape[0] < n_trials or out_b.shape[0] < n_trials):
        raise ValueError("output arrays shorter than n_trials")
    cdef int64_t t
    cdef uint64_t state
    cdef double u, v, pa0, pb0
    cdef int sa, sb, a, b
    with nogil:
        for t in range(n_trials):
            state = _derive(seed, <uint64_t>t)
            state += GOLDEN
            sa = <int>(_mix64(state) >> 63)
            state += GOLDEN
            sb = <int>(_mix64(state) >> 63)
            state += GOLDEN
            u = <double>(_mix64(state) >> 11) * INV_2_53
            state += GOLDEN
            v = <double>(_mix64(state) >> 11) * INV_2_53
            pa0 = joint[2 * sa + sb, 0] + joint[2 * sa + sb, 1]
            if u < pa0:
                a = 0
                pb0 = joint[2 * sa + sb, 0] / pa0
            else:
                a = 1
                pb0 = joint[2 * sa + sb, 2] / (1.0 - pa0)
            b = 0 if v < pb0 else 1
            out_sa[t] = <unsigned char>sa
            out_a[t] = <unsigned char>a
            out_sb[t] = <unsigned char>sb
            out_b[t] = <unsigned char>b
