# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: partition refinement and exact grouped weight sums.

Weight sums are computed modulo several 62-bit primes and recovered by CRT,
so the results are exact Python integers.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef extern from *:
    """
    static inline unsigned long long bx_mulmod(unsigned long long a,
                                               unsigned long long b,
                                               unsigned long long m) {
        return (unsigned long long)(((unsigned __int128)a * b) % m);
    }
    """
    unsigned long long bx_mulmod(unsigned long long a, unsigned long long b,
                                 unsigned long long m) nogil

def _is_prime(n):
    # Deterministic Miller-Rabin for n < 3.3e24.
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


PRIMES = []


def _primes_for(bound):
    """Shortest prefix of descending primes below 2**62 whose product exceeds bound."""
    prod = 1
    k = 0
    while prod <= bound:
        if k == len(PRIMES):
            p = PRIMES[len(PRIMES) - 1] - 2 if PRIMES else (1 << 62) - 1
            while not _is_prime(p):
                p -= 2
            PRIMES.append(p)
        prod *= PRIMES[k]
        k += 1
    return PRIMES[:k]


DENSE_LIMIT = 1 << 26


def refine(labels, keys):
    cdef cnp.int64_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef cnp.int64_t[::1] key = np.ascontiguousarray(keys, dtype=np.int64)
    cdef Py_ssize_t n = lab.shape[0]
    cdef Py_ssize_t i
    cdef cnp.int64_t width = 0, nlab = 0, slot, nxt = 0
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] res = out
    if n == 0:
        return out, 0
    for i in range(n):
        if key[i] + 1 > width:
            width = key[i] + 1
        if lab[i] + 1 > nlab:
            nlab = lab[i] + 1
    if nlab * width > DENSE_LIMIT:
        from ._fallback import refine as slow_refine
        return slow_refine(labels, keys)
    table = np.full(nlab * width, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] tab = table
    for i in range(n):
        slot = lab[i] * width + key[i]
        if tab[slot] < 0:
            tab[slot] = nxt
            nxt += 1
        res[i] = tab[slot]
    return out, int(nxt)


cdef void _sums_mod(Py_ssize_t m, const cnp.int64_t* radix,
                    unsigned long long** nums, const cnp.int64_t* lab,
                    Py_ssize_t n, unsigned long long p,
                    unsigned long long* acc) nogil:
    # Odometer over configurations, digit 0 fastest; suffix[j] holds the
    # product of digit weights for positions >= j.
    cdef unsigned long long* suffix = <unsigned long long*>malloc((m + 1) * sizeof(unsigned long long))
    cdef cnp.int64_t* digit = <cnp.int64_t*>malloc((m + 1) * sizeof(cnp.int64_t))
    cdef Py_ssize_t j, c, k
    cdef unsigned long long s
    suffix[m] = 1
    for j in range(m):
        digit[j] = 0
    j = m - 1
    while j >= 0:
        suffix[j] = bx_mulmod(suffix[j + 1], nums[j][0], p)
        j -= 1
    for c in range(n):
        s = acc[lab[c]] + suffix[0]
        if s >= p:
            s -= p
        acc[lab[c]] = s
        k = 0
        while k < m:
            digit[k] += 1
            if digit[k] < radix[k]:
                break
            digit[k] = 0
            k += 1
        if k == m:
            break
        j = k
        while j >= 0:
            suffix[j] = bx_mulmod(suffix[j + 1], nums[j][digit[j]], p)
            j -= 1
    free(suffix)
    free(digit)


def _grouped(labels, Py_ssize_t n_classes, radices, numerators, bound):
    cdef cnp.int64_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef cnp.int64_t[::1] rad = np.ascontiguousarray(radices, dtype=np.int64)
    cdef Py_ssize_t m = rad.shape[0]
    cdef Py_ssize_t n = lab.shape[0]
    cdef Py_ssize_t j, d, q
    cdef unsigned long long p
    primes = _primes_for(bound)
    residues = []
    cdef unsigned long long** nums = <unsigned long long**>malloc(max(m, 1) * sizeof(unsigned long long*))
    acc_arr = np.zeros(max(n_classes, 1), dtype=np.uint64)
    cdef cnp.uint64_t[::1] acc = acc_arr
    try:
        for j in range(m):
            nums[j] = <unsigned long long*>malloc(rad[j] * sizeof(unsigned long long))
        for p_obj in primes:
            p = p_obj
            for j in range(m):
                for d in range(rad[j]):
                    nums[j][d] = <unsigned long long>(numerators[j][d] % p_obj)
            acc_arr[:] = 0
            with nogil:
                _sums_mod(m, &rad[0] if m > 0 else NULL, nums, &lab[0], n, p,
                          <unsigned long long*>&acc[0])
            residues.append([int(x) for x in acc_arr[:n_classes]])
    finally:
        for j in range(m):
            free(nums[j])
        free(nums)
    # Chinese remaindering, one prime at a time.
    out = residues[0]
    modulus = primes[0]
    for q in range(1, len(primes)):
        p_obj = primes[q]
        inv = pow(modulus, -1, p_obj)
        res_q = residues[q]
        out = [x + modulus * (((r - x) * inv) % p_obj) for x, r in zip(out, res_q)]
        modulus *= p_obj
    return out


def class_sums(labels, n_classes, radices, num_true, num_false):
    bound_t = 1
    bound_f = 1
    for nums in num_true:
        bound_t *= sum(nums)
    for nums in num_false:
        bound_f *= sum(nums)
    n_classes = int(n_classes)
    if np.asarray(labels).shape[0] == 0:
        return [0] * n_classes, [0] * n_classes
    return (_grouped(labels, n_classes, radices, num_true, bound_t),
            _grouped(labels, n_classes, radices, num_false, bound_f))
