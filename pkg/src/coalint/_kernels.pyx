# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_kernels_py``.

Coalitions arrive bit-packed as uint64 word arrays; the inner loops are
plain C. Accumulations use Kahan compensation so results are independent
of iteration chunking and match the fallback to float precision.
"""

import numpy as np

BACKEND_NAME = "compiled"

cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    static inline int coalint_popcountll(unsigned long long x)
    { return __builtin_popcountll(x); }
    #else
    static inline int coalint_popcountll(unsigned long long x)
    {
        int c = 0;
        while (x) { x &= x - 1; ++c; }
        return c;
    }
    #endif
    """
    int coalint_popcountll(unsigned long long x) nogil


def extract_interactions(
    unsigned long long[:, ::1] l_words,
    unsigned long long[:, ::1] r_words,
    double[::1] leaf_values,
    long[::1] l_sizes,
    long[::1] r_sizes,
    unsigned long long[:, ::1] target_words,
    long[::1] target_sizes,
    double[:, :, :, ::1] lam_table,
):
    cdef Py_ssize_t n_leaves = l_words.shape[0]
    cdef Py_ssize_t n_words = l_words.shape[1]
    cdef Py_ssize_t n_targets = target_words.shape[0]
    cdef Py_ssize_t i, j, w
    cdef int u, s, covered
    cdef unsigned long long tw
    cdef double acc, comp, term, y, t
    out_arr = np.empty(n_targets, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for j in range(n_targets):
            s = <int> target_sizes[j]
            acc = 0.0
            comp = 0.0
            for i in range(n_leaves):
                covered = 1
                u = 0
                for w in range(n_words):
                    tw = target_words[j, w]
                    if tw & ~(l_words[i, w] | r_words[i, w]):
                        covered = 0
                        break
                    u += coalint_popcountll(tw & l_words[i, w])
                if not covered:
                    continue
                term = leaf_values[i] * lam_table[l_sizes[i], r_sizes[i], u, s]
                y = term - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
            out[j] = acc
    return out_arr


def predict_coalitions(
    unsigned long long[:, ::1] l_words,
    unsigned long long[:, ::1] r_words,
    double[::1] leaf_values,
    unsigned long long[:, ::1] coal_words,
    double base_score,
):
    cdef Py_ssize_t n_leaves = l_words.shape[0]
    cdef Py_ssize_t n_words = l_words.shape[1]
    cdef Py_ssize_t n_rows = coal_words.shape[0]
    cdef Py_ssize_t i, j, w
    cdef int reached
    cdef unsigned long long cw
    out_arr = np.full(n_rows, base_score, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n_rows):
            for j in range(n_leaves):
                reached = 1
                for w in range(n_words):
                    cw = coal_words[i, w]
                    if (cw & r_words[j, w]) != r_words[j, w] or (cw & l_words[j, w]):
                        reached = 0
                        break
                if reached:
                    out[i] += leaf_values[j]
    return out_arr


def weighted_index_terms(
    unsigned long long[:, ::1] coal_words,
    double[::1] values,
    double[::1] inv_probs,
    double[::1] p_col,
    int s,
    unsigned long long[::1] target_words,
):
    cdef Py_ssize_t n_rows = coal_words.shape[0]
    cdef Py_ssize_t n_words = coal_words.shape[1]
    cdef Py_ssize_t i, w
    cdef int inside, outside
    cdef unsigned long long cw, tw
    cdef double sign
    out_arr = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n_rows):
            inside = 0
            outside = 0
            for w in range(n_words):
                cw = coal_words[i, w]
                tw = target_words[w]
                inside += coalint_popcountll(cw & tw)
                outside += coalint_popcountll(cw & ~tw)
            sign = 1.0 if (s - inside) % 2 == 0 else -1.0
            out[i] = values[i] * sign * p_col[outside] * inv_probs[i]
    return out_arr
