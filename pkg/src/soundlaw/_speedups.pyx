# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled string-metric kernels.

Mirrors soundlaw._native exactly (same functions, same tie-breaks); the
test suite asserts equivalence of the two backends.  Symbols are interned
to small integers per call so the inner loops run on C arrays.
"""

from libc.stdlib cimport free, malloc


cdef int _encode(seq, int* out, dict code) except -1:
    cdef Py_ssize_t i
    cdef object v
    for i in range(len(seq)):
        v = code.get(seq[i])
        if v is None:
            out[i] = len(code)
            code[seq[i]] = out[i]
        else:
            out[i] = v
    return 0


def levenshtein(a, b):
    """Unit-cost edit distance between two symbol sequences."""
    cdef Py_ssize_t m = len(a), n = len(b)
    if m == 0:
        return n
    if n == 0:
        return m
    cdef int* xa = <int*> malloc(m * sizeof(int))
    cdef int* xb = <int*> malloc(n * sizeof(int))
    cdef int* prev = <int*> malloc((n + 1) * sizeof(int))
    cdef int* cur = <int*> malloc((n + 1) * sizeof(int))
    if not (xa and xb and prev and cur):
        free(xa); free(xb); free(prev); free(cur)
        raise MemoryError()
    cdef dict code = {}
    cdef Py_ssize_t i, j
    cdef int d, up, left, ai
    cdef int* tmp
    try:
        _encode(a, xa, code)
        _encode(b, xb, code)
        for j in range(n + 1):
            prev[j] = j
        for i in range(1, m + 1):
            cur[0] = i
            ai = xa[i - 1]
            for j in range(1, n + 1):
                d = prev[j - 1] + (ai != xb[j - 1])
                up = prev[j] + 1
                if up < d:
                    d = up
                left = cur[j - 1] + 1
                if left < d:
                    d = left
                cur[j] = d
            tmp = prev; prev = cur; cur = tmp
        return prev[n]
    finally:
        free(xa); free(xb); free(prev); free(cur)


def lcs_pair(a, b):
    """A longest common subsequence; leftmost-in-`a` tie-break."""
    cdef Py_ssize_t m = len(a), n = len(b)
    if m == 0 or n == 0:
        return ()
    cdef int* xa = <int*> malloc(m * sizeof(int))
    cdef int* xb = <int*> malloc(n * sizeof(int))
    cdef int* L = <int*> malloc((m + 1) * (n + 1) * sizeof(int))
    if not (xa and xb and L):
        free(xa); free(xb); free(L)
        raise MemoryError()
    cdef dict code = {}
    cdef Py_ssize_t i, j, w = n + 1
    cdef int ai
    try:
        _encode(a, xa, code)
        _encode(b, xb, code)
        for j in range(n + 1):
            L[m * w + j] = 0
        for i in range(m - 1, -1, -1):
            L[i * w + n] = 0
            ai = xa[i]
            for j in range(n - 1, -1, -1):
                if ai == xb[j]:
                    L[i * w + j] = L[(i + 1) * w + j + 1] + 1
                elif L[(i + 1) * w + j] >= L[i * w + j + 1]:
                    L[i * w + j] = L[(i + 1) * w + j]
                else:
                    L[i * w + j] = L[i * w + j + 1]
        out = []
        i = 0
        j = 0
        while i < m and j < n:
            if xa[i] == xb[j]:
                out.append(a[i])
                i += 1
                j += 1
            elif L[i * w + j + 1] >= L[(i + 1) * w + j]:
                j += 1
            else:
                i += 1
        return tuple(out)
    finally:
        free(xa); free(xb); free(L)


cdef bint _next_comb(int* comb, int k, int n):
    cdef int i = k - 1, j
    while i >= 0 and comb[i] == n - k + i:
        i -= 1
    if i < 0:
        return False
    comb[i] += 1
    for j in range(i + 1, k):
        comb[j] = comb[j - 1] + 1
    return True


def levenshtein_bruteforce(a, b):
    """Edit distance by exhaustive enumeration of monotone alignments."""
    cdef Py_ssize_t m = len(a), n = len(b)
    if m == 0:
        return n
    if n == 0:
        return m
    cdef int kmax = m if m < n else n
    cdef int* xa = <int*> malloc(m * sizeof(int))
    cdef int* xb = <int*> malloc(n * sizeof(int))
    cdef int* ii = <int*> malloc(kmax * sizeof(int))
    cdef int* jj = <int*> malloc(kmax * sizeof(int))
    if not (xa and xb and ii and jj):
        free(xa); free(xb); free(ii); free(jj)
        raise MemoryError()
    cdef dict code = {}
    cdef int best = m + n
    cdef int k, t, base, cost
    try:
        _encode(a, xa, code)
        _encode(b, xb, code)
        for k in range(1, kmax + 1):
            base = (m - k) + (n - k)
            for t in range(k):
                ii[t] = t
            while True:
                for t in range(k):
                    jj[t] = t
                while True:
                    cost = base
                    for t in range(k):
                        cost += xa[ii[t]] != xb[jj[t]]
                    if cost < best:
                        best = cost
                    if not _next_comb(jj, k, n):
                        break
                if not _next_comb(ii, k, m):
                    break
        return best
    finally:
        free(xa); free(xb); free(ii); free(jj)


def lcs_len_bruteforce(a, b):
    """LCS length by enumerating every subsequence of the first argument."""
    cdef Py_ssize_t m = len(a), n = len(b)
    if m > 20:
        raise ValueError("bruteforce LCS limited to sequences of length <= 20")
    if m == 0 or n == 0:
        return 0
    cdef int* xa = <int*> malloc(m * sizeof(int))
    cdef int* xb = <int*> malloc(n * sizeof(int))
    if not (xa and xb):
        free(xa); free(xb)
        raise MemoryError()
    cdef dict code = {}
    cdef int best = 0
    cdef unsigned int mask
    cdef int cnt, i, j, ok
    try:
        _encode(a, xa, code)
        _encode(b, xb, code)
        for mask in range(1u << m):
            cnt = 0
            for i in range(m):
                cnt += (mask >> i) & 1u
            if cnt <= best:
                continue
            j = 0
            ok = 1
            for i in range(m):
                if (mask >> i) & 1u:
                    while j < n and xb[j] != xa[i]:
                        j += 1
                    if j == n:
                        ok = 0
                        break
                    j += 1
            if ok:
                best = cnt
        return best
    finally:
        free(xa); free(xb)
