# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cycle kernel. Mirrors ``_fallback.run_cycles`` draw for draw."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TO_UNIT = 1.0 / 9007199254740992.0
cdef long MAX_REDRAWS = 10000000


cdef inline uint64_t mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, uint64_t* ctr) nogil:
    ctr[0] += 1
    return <double>(mix(key + ctr[0] * GOLDEN) >> 11) * TO_UNIT


cdef inline int select(const double[::1] thr, double gamma, int n) nogil:
    cdef int k = n - 1
    while k >= 0 and thr[k] > gamma:
        k -= 1
    return k


cdef inline double per_at(int k, double gamma, const double[::1] a,
                          const double[::1] g, const double[::1] cut) nogil:
    if gamma < cut[k]:
        return 1.0
    return a[k] * exp(-g[k] * gamma)


def run_cycles(uint64_t seed_key, int64_t start, int64_t stop,
               double mean_sd, const double[::1] thr_sd,
               double mean_rd, const double[::1] thr_rd,
               const double[::1] a, const double[::1] g, const double[::1] cut,
               const double[::1] eps, int nr, int policy):
    cdef int n_modes = a.shape[0]
    cdef int64_t base = nr + 1
    cdef int64_t span = 1
    cdef int64_t total = stop - start
    cdef cnp.ndarray[int64_t, ndim=1] out_arr = np.empty(total, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef int64_t[:] weights = np.empty(n_modes, dtype=np.int64)
    cdef int64_t i, relay_counts, event
    cdef uint64_t key, ctr
    cdef int n, m, attempt, src_code, k
    cdef double gamma, per, u
    cdef bint d_fail, r_fail, fail
    cdef long redraws
    cdef bint stuck = False

    for k in range(n_modes):
        weights[k] = span
        span *= base

    with nogil:
        for i in range(total):
            key = mix(seed_key + <uint64_t>(start + i + 1) * GOLDEN)
            ctr = 0
            relay_counts = 0
            gamma = -mean_sd * log1p(-uniform(key, &ctr))
            n = select(thr_sd, gamma, n_modes)
            if n < 0:
                out[i] = 0
                continue
            per = per_at(n, gamma, a, g, cut)
            d_fail = uniform(key, &ctr) < per
            r_fail = uniform(key, &ctr) < eps[n]
            if not d_fail:
                event = 1
            elif r_fail:
                event = 2
            else:
                event = 3
                for attempt in range(1, nr + 1):
                    gamma = -mean_rd * log1p(-uniform(key, &ctr))
                    if gamma < thr_rd[0]:
                        if policy == 1:
                            continue
                        redraws = 0
                        while gamma < thr_rd[0]:
                            redraws += 1
                            if redraws > MAX_REDRAWS:
                                stuck = True
                                break
                            gamma = -mean_rd * log1p(-uniform(key, &ctr))
                        if stuck:
                            break
                    m = select(thr_rd, gamma, n_modes)
                    relay_counts += weights[m]
                    fail = uniform(key, &ctr) < per_at(m, gamma, a, g, cut)
                    if not fail:
                        event = 3 + attempt
                        break
            if stuck:
                break
            src_code = n + 1
            out[i] = (event * (n_modes + 1) + src_code) * span + relay_counts

    if stuck:
        raise RuntimeError("relay link stuck in outage")
    return out_arr
