"""JIT-compiled trial loop for the Monte Carlo engine.

Implements exactly the algorithm and draw order of the vectorized engine
in :mod:`vaporlink.montecarlo` (splitmix64-counter streams, stage-ordered
counts, bottom-up roll-up), one trial at a time.  All draws and integer
statistics are bit-identical to the numpy path; float time aggregates can
differ in the last ulp because segment sums here are sequential while
numpy's reduceat is pairwise.  This kernel exists purely for speed; import
is optional and callers fall back to the numpy engine when numba is
missing.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_ONE = np.uint64(1)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 2.0 ** -53


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _uniform(key, ctr):
    word = _mix64(key + (ctr + _ONE) * _GOLDEN)
    return float(word >> _S11) * _TO_UNIT


@njit(cache=True, inline="always")
def _geometric(key, ctr, log1m):
    # attempts = floor(log1p(-u)/log1p(-p)) + 1; log1m = log1p(-p) <= 0.
    # For p = 1 (log1m = -inf) the ratio is -0.0 and attempts = 1.
    u = _uniform(key, ctr)
    return np.int64(math.floor(math.log1p(-u) / log1m)) + 1


@njit(cache=True)
def _run_trials(seed, t_lo, t_hi, n, log1m_swap, log1m_ps, log1m_gen,
                t_att, max_attempts, out_time, out_idle, out_attempts,
                out_links):
    """Simulate trials [t_lo, t_hi); returns the index of a trial whose
    total link attempts exceeded max_attempts, or -1."""
    ks_buf = np.empty(1024, dtype=np.int64)       # per-level try counts
    level_off = np.empty(n + 1, dtype=np.int64)
    level_cnt = np.empty(n + 1, dtype=np.int64)
    work_t = np.empty(1024, dtype=np.float64)     # child completion times
    work_i = np.empty(1024, dtype=np.float64)     # child max idle times

    for t in range(t_lo, t_hi):
        key = _mix64(np.uint64(seed) + (np.uint64(t) + _ONE) * _GOLDEN)
        ctr = np.uint64(0)

        k_ps = _geometric(key, ctr, log1m_ps)
        ctr += _ONE

        # --- top-down try counts, stage order: levels n down to 1 -------
        nodes = 2 * k_ps
        off = np.int64(0)
        for i in range(n, 0, -1):
            level_off[i] = off
            level_cnt[i] = nodes
            need = off + nodes
            if need > ks_buf.size:
                grown = np.empty(max(need, 2 * ks_buf.size), dtype=np.int64)
                grown[:off] = ks_buf[:off]
                ks_buf = grown
            tries = np.int64(0)
            for j in range(nodes):
                k = _geometric(key, ctr, log1m_swap[i - 1])
                ctr += _ONE
                ks_buf[off + j] = k
                tries += k
            off += nodes
            nodes = 2 * tries

        # --- leaf stage: link attempt counts ----------------------------
        n_links = nodes
        if n_links > work_t.size:
            work_t = np.empty(max(n_links, 2 * work_t.size), dtype=np.float64)
            work_i = np.empty(work_t.size, dtype=np.float64)
        total_attempts = np.int64(0)
        for j in range(n_links):
            a = _geometric(key, ctr, log1m_gen)
            ctr += _ONE
            total_attempts += a
            work_t[j] = a * t_att
            work_i[j] = 0.0
        if total_attempts > max_attempts:
            return t

        # --- bottom-up roll-up: pair children, reduce over try segments -
        cur = n_links
        for i in range(1, n + 1):
            m = cur // 2
            # pair in place: try time and idle
            for j in range(m):
                a_t = work_t[2 * j]
                b_t = work_t[2 * j + 1]
                wait = abs(a_t - b_t)
                tt = (a_t if a_t > b_t else b_t) + t_att
                ii = work_i[2 * j]
                if work_i[2 * j + 1] > ii:
                    ii = work_i[2 * j + 1]
                if wait > ii:
                    ii = wait
                work_t[j] = tt
                work_i[j] = ii
            # segment-reduce tries into completions
            base = level_off[i]
            n_nodes = level_cnt[i]
            pos = np.int64(0)
            for jn in range(n_nodes):
                k = ks_buf[base + jn]
                acc_t = 0.0
                acc_i = 0.0
                for _ in range(k):
                    acc_t += work_t[pos]
                    if work_i[pos] > acc_i:
                        acc_i = work_i[pos]
                    pos += 1
                work_t[jn] = acc_t
                work_i[jn] = acc_i
            cur = n_nodes

        # --- post-selection: pair the two chains of each try, sum tries -
        total = 0.0
        idle = 0.0
        for j in range(k_ps):
            a_t = work_t[2 * j]
            b_t = work_t[2 * j + 1]
            wait = abs(a_t - b_t)
            total += (a_t if a_t > b_t else b_t) + t_att
            ii = work_i[2 * j]
            if work_i[2 * j + 1] > ii:
                ii = work_i[2 * j + 1]
            if wait > ii:
                ii = wait
            if ii > idle:
                idle = ii

        out_time[t - t_lo] = total
        out_idle[t - t_lo] = idle
        out_attempts[t - t_lo] = total_attempts
        out_links[t - t_lo] = n_links
    return -1
