"""Pure-Python simulation kernel.

Reference implementation of the per-frame loop; the compiled kernel in
``_kernel.pyx`` mirrors it operation for operation so both backends
produce bit-identical trajectories from the same uniform draws.  Frame
layout of the uniforms: ``U[t, i, 0]`` query draw, ``U[t, i, 1]``
channel draw, ``U[t, i, 2]`` source draw.  Channel and source draws are
consumed positionally whether or not they matter for the chosen action,
which is what makes policy comparisons share their randomness.
"""

from __future__ import annotations

from .policies import GREEDY, GREEDY_QAWARE, RR, TABLE_AOI, TABLE_DELTA, THRESHOLD

NAME = "python"


def sim_chunk(U, delta, aoi, policy_code, m, p_stay, p_move_back, p_success,
              q_query, table_holder, thresholds, rr_cursor, accum, trace=None):
    """Advance all users through ``U.shape[0]`` frames; returns the RR cursor.

    ``delta``/``aoi`` and the four accumulators in ``accum``
    (aoii sum, queried-age sum, query count, transmit count) are
    updated in place.  When ``trace`` is a list, one row per frame is
    appended: (pre-transition ages, selected, delivered, queried).
    """
    frames, n, _ = U.shape
    k = m if m < n else n
    table = table_holder.array if table_holder is not None else None

    selected = [False] * n
    queried = [False] * n
    a0 = int(accum[0])
    a1 = int(accum[1])
    a2 = int(accum[2])
    a3 = int(accum[3])

    for t in range(frames):
        row = U[t]

        # query indicators and metric accrual on the pre-transition age
        for i in range(n):
            queried[i] = row[i, 0] < q_query[i]
            d = int(delta[i])
            a0 += d
            if queried[i]:
                a1 += d
                a2 += 1

        # decision
        for i in range(n):
            selected[i] = False
        if policy_code == RR:
            for j in range(k):
                selected[(rr_cursor + j) % n] = True
            rr_cursor = (rr_cursor + k) % n
            a3 += k
        elif policy_code == THRESHOLD:
            for i in range(n):
                if delta[i] >= thresholds[i]:
                    selected[i] = True
                    a3 += 1
        else:
            if policy_code == TABLE_DELTA or policy_code == TABLE_AOI:
                key = delta if policy_code == TABLE_DELTA else aoi
                need = 0
                for i in range(n):
                    if key[i] > need:
                        need = int(key[i])
                if need >= table.shape[1]:
                    table = table_holder.grow(need)
            for _ in range(k):
                best = -1
                best_p = 0.0
                for i in range(n):
                    if selected[i]:
                        continue
                    if policy_code == GREEDY:
                        p = float(delta[i])
                    elif policy_code == GREEDY_QAWARE:
                        p = float(delta[i]) if queried[i] else 0.0
                    elif policy_code == TABLE_DELTA:
                        p = table[i, delta[i]]
                    else:
                        p = table[i, aoi[i]]
                    if best < 0 or p > best_p:
                        best = i
                        best_p = p
                selected[best] = True
            a3 += k

        if trace is not None:
            pre_ages = [int(delta[i]) for i in range(n)]
            delivered = [bool(selected[i] and row[i, 1] < p_success[i])
                         for i in range(n)]
            trace.append((pre_ages, list(selected), delivered, list(queried)))

        # channel outcomes and source moves
        for i in range(n):
            success = selected[i] and row[i, 1] < p_success[i]
            u = row[i, 2]
            d = int(delta[i])
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
