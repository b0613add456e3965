"""Vectorized numpy implementation of the cycle kernel.

Consumes the per-cycle random counters in the same order as the compiled
kernel, so both produce the same event codes for the same seed.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_ONE = np.uint64(1)
_TO_UNIT = 1.0 / 9007199254740992.0

WAIT, COUNT_ATTEMPT = 0, 1
MAX_REDRAWS = 10_000_000


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


class _Streams:
    def __init__(self, seed_key: int, start: int, stop: int):
        c = np.arange(start, stop, dtype=np.uint64)
        self.keys = _mix(np.uint64(seed_key) + (c + _ONE) * _GOLDEN)
        self.ctr = np.zeros(stop - start, dtype=np.uint64)

    def uniform(self, idx: np.ndarray) -> np.ndarray:
        self.ctr[idx] += _ONE
        x = _mix(self.keys[idx] + self.ctr[idx] * _GOLDEN)
        return (x >> _S11).astype(np.float64) * _TO_UNIT


def _per(gamma, k, a, g, cut):
    return np.where(gamma < cut[k], 1.0, a[k] * np.exp(-g[k] * gamma))


def run_cycles(
    seed_key: int,
    start: int,
    stop: int,
    mean_sd: float,
    thr_sd: np.ndarray,
    mean_rd: float,
    thr_rd: np.ndarray,
    a: np.ndarray,
    g: np.ndarray,
    cut: np.ndarray,
    eps: np.ndarray,
    nr: int,
    policy: int,
) -> np.ndarray:
    """Event code of every cycle in ``[start, stop)``; see ``sim.encode``."""
    n_modes = len(a)
    base = nr + 1
    span = base**n_modes
    total = stop - start
    streams = _Streams(seed_key, start, stop)
    every = np.arange(total)

    gamma1 = -mean_sd * np.log1p(-streams.uniform(every))
    src = np.searchsorted(thr_sd, gamma1, side="right") - 1
    event = np.zeros(total, dtype=np.int64)
    tx = np.flatnonzero(src >= 0)
    n = src[tx]
    per = _per(gamma1[tx], n, a, g, cut)
    d_fail = streams.uniform(tx) < per
    r_fail = streams.uniform(tx) < eps[n]
    event[tx] = np.where(d_fail, np.where(r_fail, 2, 3), 1)

    relay_counts = np.zeros(total, dtype=np.int64)
    weights = base ** np.arange(n_modes, dtype=np.int64)
    pending = tx[d_fail & ~r_fail]
    for attempt in range(1, nr + 1):
        if pending.size == 0:
            break
        gamma2 = -mean_rd * np.log1p(-streams.uniform(pending))
        if policy == WAIT:
            redo = np.flatnonzero(gamma2 < thr_rd[0])
            rounds = 0
            while redo.size:
                rounds += 1
                if rounds > MAX_REDRAWS:
                    raise RuntimeError("relay link stuck in outage")
                gamma2[redo] = -mean_rd * np.log1p(-streams.uniform(pending[redo]))
                redo = redo[gamma2[redo] < thr_rd[0]]
            sending = np.arange(pending.size)
        else:
            sending = np.flatnonzero(gamma2 >= thr_rd[0])
        who = pending[sending]
        m = np.searchsorted(thr_rd, gamma2[sending], side="right") - 1
        relay_counts[who] += weights[m]
        fail = streams.uniform(who) < _per(gamma2[sending], m, a, g, cut)
        done = who[~fail]
        event[done] = 3 + attempt
        keep = np.ones(pending.size, dtype=bool)
        keep[sending[~fail]] = False
        pending = pending[keep]

    src_code = np.where(src >= 0, src + 1, 0)
    return (event * (n_modes + 1) + src_code) * span + relay_counts
