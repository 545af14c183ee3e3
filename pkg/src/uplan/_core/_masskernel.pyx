# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled evidential mass kernel.

Same contract as the pure twin in ``_masskernel_py``, restricted to frames
of at most 64 elements (masks must fit an unsigned 64-bit word).  Callers
are expected to route wider frames to the pure kernel.
"""

from libc.stdint cimport uint64_t

BACKEND = "compiled"


def support(masks, masses, query):
    cdef uint64_t q = <uint64_t> query
    cdef uint64_t m
    cdef double total = 0.0
    cdef Py_ssize_t i, n = len(masks)
    for i in range(n):
        m = <uint64_t> masks[i]
        if (m | q) == q:
            total += <double> masses[i]
    return total


def plausibility(masks, masses, query, full):
    cdef uint64_t q = <uint64_t> query
    cdef uint64_t f = <uint64_t> full
    return 1.0 - support(masks, masses, f & ~q)


def product_pair(masks_a, masses_a, masks_b, masses_b, size_b):
    cdef int shift = <int> size_b
    cdef uint64_t ma, mb, product, rest
    cdef double va, vb
    cdef int bit
    cdef Py_ssize_t i, j, na = len(masks_a), nb = len(masks_b)
    acc = {}
    for i in range(na):
        ma = <uint64_t> masks_a[i]
        va = <double> masses_a[i]
        for j in range(nb):
            mb = <uint64_t> masks_b[j]
            vb = <double> masses_b[j]
            product = 0
            bit = 0
            rest = ma
            while rest:
                if rest & 1:
                    product |= mb << (bit * shift)
                rest >>= 1
                bit += 1
            key = product
            acc[key] = acc.get(key, 0.0) + va * vb
    out = sorted(acc.items())
    return [m for m, _ in out], [v for _, v in out]


def project(masks, masses, image):
    cdef uint64_t m, target, rest
    cdef int bit
    cdef Py_ssize_t i, n = len(masks)
    acc = {}
    for i in range(n):
        m = <uint64_t> masks[i]
        target = 0
        bit = 0
        rest = m
        while rest:
            if rest & 1:
                target |= <uint64_t> image[bit]
            rest >>= 1
            bit += 1
        key = target
        acc[key] = acc.get(key, 0.0) + <double> masses[i]
    out = sorted(acc.items())
    return [m for m, _ in out], [v for _, v in out]
