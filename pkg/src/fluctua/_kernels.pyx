# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled path kernels.  Semantics mirror ``fluctua._fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, cos, sin
from libc.stdint cimport uint64_t, int64_t, uint8_t

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double TWO_PI = 6.283185307179586
cdef double INV53 = 1.1102230246251565e-16

cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef struct Stream:
    uint64_t state
    double spare
    int has_spare


cdef inline double _uniform(Stream* s) noexcept nogil:
    s.state += GAMMA
    return <double>(_mix(s.state) >> 11) * INV53


cdef inline double _normal(Stream* s) noexcept nogil:
    cdef double u1, u2, r
    if s.has_spare:
        s.has_spare = 0
        return s.spare
    u1 = _uniform(s)
    u2 = _uniform(s)
    r = sqrt(-2.0 * log(1.0 - u1))
    s.spare = r * sin(TWO_PI * u2)
    s.has_spare = 1
    return r * cos(TWO_PI * u2)


cdef inline double _step(Stream* s, int kind, const double* values, const double* cum,
                         int nvals, double mean, double scale) noexcept nogil:
    cdef double u
    cdef int j
    if kind == 0:
        u = _uniform(s)
        j = 0
        while j < nvals - 1 and u >= cum[j]:
            j += 1
        return values[j]
    elif kind == 1:
        return mean + scale * _normal(s)
    else:
        return mean + scale * (2.0 * _uniform(s) - 1.0)


def path_key(uint64_t seed, int64_t index):
    """Initial stream state for path ``index`` under master ``seed``."""
    return _mix(seed ^ _mix(<uint64_t>(index + 1) * GAMMA))


def uniforms(uint64_t seed, int64_t index, int64_t count):
    cdef Stream s
    s.state = _mix(seed ^ _mix(<uint64_t>(index + 1) * GAMMA))
    s.has_spare = 0
    out = np.empty(count)
    cdef double[::1] o = out
    cdef int64_t i
    for i in range(count):
        o[i] = _uniform(&s)
    return out


def run_paths(int kind, double[::1] values, double[::1] cum, double mean, double scale,
              int functional, double level, double bound, int64_t horizon, int64_t cap,
              uint64_t seed, int64_t start, int64_t stop):
    cdef int64_t n = stop - start
    out0_arr = np.zeros(n)
    out1_arr = np.zeros(n)
    capped_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] out0 = out0_arr
    cdef double[::1] out1 = out1_arr
    cdef uint8_t[::1] capped = capped_arr
    cdef const double* vp = &values[0]
    cdef const double* cp = &cum[0]
    cdef int nvals = values.shape[0]
    cdef int64_t p, t, count, last
    cdef double x, m
    cdef Stream s
    with nogil:
        for p in range(n):
            s.state = _mix(seed ^ _mix(<uint64_t>(start + p + 1) * GAMMA))
            s.has_spare = 0
            x = 0.0
            t = 0
            if functional == 0:
                count = 0
                while True:
                    if x - level > bound:
                        break
                    if t >= cap:
                        capped[p] = 1
                        break
                    x += _step(&s, kind, vp, cp, nvals, mean, scale)
                    t += 1
                    if x < level:
                        count += 1
                out0[p] = <double>count
            elif functional == 1:
                m = 0.0
                while True:
                    if x - m > bound:
                        break
                    if t >= cap:
                        capped[p] = 1
                        break
                    x += _step(&s, kind, vp, cp, nvals, mean, scale)
                    t += 1
                    if x < m:
                        m = x
                out0[p] = m
            elif functional == 2:
                last = 0
                while t < horizon:
                    x += _step(&s, kind, vp, cp, nvals, mean, scale)
                    t += 1
                    if x == 0.0:
                        last = t
                out0[p] = <double>last
            else:
                count = 0
                last = 0
                while True:
                    if horizon > 0:
                        if t >= horizon:
                            break
                    elif x > bound:
                        break
                    if t >= cap:
                        capped[p] = 1
                        break
                    x += _step(&s, kind, vp, cp, nvals, mean, scale)
                    t += 1
                    if x == 0.0:
                        count += 1
                        last = t
                out0[p] = <double>count
                out1[p] = <double>last
    return out0_arr, out1_arr, capped_arr
