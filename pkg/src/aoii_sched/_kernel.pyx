# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernel.

Mirrors ``_kernel_py.sim_chunk`` operation for operation: same uniform
layout, same selection tie-breaks, same update order, integer metric
accumulators.  Any behavioural change here must be made in the Python
kernel as well; the test suite asserts the two produce identical
trajectories.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "cython"

cdef enum PolicyCode:
    P_RR = 0
    P_GREEDY = 1
    P_GREEDY_QAWARE = 2
    P_TABLE_DELTA = 3
    P_TABLE_AOI = 4
    P_THRESHOLD = 5


def sim_chunk(double[:, :, ::1] U not None,
              long long[::1] delta not None,
              long long[::1] aoi not None,
              int policy_code, int m,
              double[::1] p_stay not None,
              double[::1] p_move_back not None,
              double[::1] p_success not None,
              double[::1] q_query not None,
              object table_holder,
              long long[::1] thresholds,
              int rr_cursor,
              long long[::1] accum not None,
              object trace=None):
    """Advance all users through ``U.shape[0]`` frames; returns the RR cursor."""
    cdef Py_ssize_t frames = U.shape[0]
    cdef Py_ssize_t n = U.shape[1]
    cdef int k = m if m < n else <int> n
    cdef double[:, ::1] table
    cdef bint have_table = table_holder is not None
    if have_table:
        table = table_holder.array

    cdef unsigned char[::1] selected = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] queried = np.zeros(n, dtype=np.uint8)
    cdef long long a0 = accum[0]
    cdef long long a1 = accum[1]
    cdef long long a2 = accum[2]
    cdef long long a3 = accum[3]

    cdef Py_ssize_t t, i, j, best
    cdef long long d, need
    cdef double p, best_p, u
    cdef bint success, correct, tracing = trace is not None

    for t in range(frames):
        # query indicators and metric accrual on the pre-transition age
        for i in range(n):
            queried[i] = U[t, i, 0] < q_query[i]
            d = delta[i]
            a0 += d
            if queried[i]:
                a1 += d
                a2 += 1

        # decision
        for i in range(n):
            selected[i] = 0
        if policy_code == P_RR:
            for j in range(k):
                selected[(rr_cursor + j) % n] = 1
            rr_cursor = <int> ((rr_cursor + k) % n)
            a3 += k
        elif policy_code == P_THRESHOLD:
            for i in range(n):
                if delta[i] >= thresholds[i]:
                    selected[i] = 1
                    a3 += 1
        else:
            if policy_code == P_TABLE_DELTA or policy_code == P_TABLE_AOI:
                need = 0
                for i in range(n):
                    if policy_code == P_TABLE_DELTA:
                        d = delta[i]
                    else:
                        d = aoi[i]
                    if d > need:
                        need = d
                if need >= table.shape[1]:
                    table = table_holder.grow(int(need))
            for j in range(k):
                best = -1
                best_p = 0.0
                for i in range(n):
                    if selected[i]:
                        continue
                    if policy_code == P_GREEDY:
                        p = <double> delta[i]
                    elif policy_code == P_GREEDY_QAWARE:
                        p = <double> delta[i] if queried[i] else 0.0
                    elif policy_code == P_TABLE_DELTA:
                        p = table[i, delta[i]]
                    else:
                        p = table[i, aoi[i]]
                    if best < 0 or p > best_p:
                        best = i
                        best_p = p
                selected[best] = 1
            a3 += k

        if tracing:
            pre_ages = [delta[i] for i in range(n)]
            sel = [selected[i] != 0 for i in range(n)]
            delivered = [bool(selected[i] and U[t, i, 1] < p_success[i])
                         for i in range(n)]
            qrow = [queried[i] != 0 for i in range(n)]
            trace.append((pre_ages, sel, delivered, qrow))

        # channel outcomes and source moves
        for i in range(n):
            success = selected[i] and U[t, i, 1] < p_success[i]
            u = U[t, i, 2]
            d = delta[i]
            if d == 0:
                delta[i] = 0 if u < p_stay[i] else 1
            else:
                if success:
                    correct = p_move_back[i] <= u < p_move_back[i] + p_stay[i]
                else:
                    correct = u < p_move_back[i]
                delta[i] = 0 if correct else d + 1
            aoi[i] = 1 if success else aoi[i] + 1

    accum[0] = a0
    accum[1] = a1
    accum[2] = a2
    accum[3] = a3
    return rr_cursor
