"""Classical symmetric random walk on the trapped K-cycle by exact enumeration."""
from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError
from .walk import _trap_mask

__all__ = ["crw_step", "crw_survival_aggregate", "crw_survival_per_walker"]


def crw_step(p: NDArray[np.float64], traps=None) -> NDArray[np.float64]:
    """One step: each site receives half the mass of each neighbour, then traps are emptied."""
    p = np.asarray(p, dtype=np.float64)
    mask = _trap_mask(p.shape[-1], traps)
    out = 0.5 * (np.roll(p, 1, axis=-1) + np.roll(p, -1, axis=-1))
    out[..., mask] = 0.0
    return out


def crw_survival_aggregate(K: int, traps=None, T: int = 0) -> NDArray[np.float64]:
    """Mean survival of one walker per untrapped site, for ``t = 0..T``.

    The walkers evolve independently under the same linear sub-stochastic map, so
    their summed distribution is propagated as a single vector starting from the
    indicator of untrapped sites.  Cost is O(K*T) instead of O(K^2*T).
    """
    mask = _trap_mask(K, traps)
    q = (~mask).astype(np.float64)
    N = q.sum()
    if N == 0:
        raise ConfigurationError("every site is a trap")
    trap_sites = np.flatnonzero(mask)
    nxt = np.empty_like(q)
    out = np.empty(T + 1)
    out[0] = 1.0
    for t in range(1, T + 1):
        np.add(q[:-2], q[2:], out=nxt[1:-1])
        nxt[0] = q[-1] + q[1] if K > 1 else 2 * q[0]
        nxt[-1] = q[-2] + q[0] if K > 1 else 2 * q[0]
        nxt *= 0.5
        nxt[trap_sites] = 0.0
        q, nxt = nxt, q
        out[t] = q.sum() / N
    return out


def crw_survival_per_walker(K: int, traps=None, T: int = 0) -> NDArray[np.float64]:
    """Same quantity as :func:`crw_survival_aggregate`, enumerating each walker separately."""
    mask = _trap_mask(K, traps)
    starts = np.flatnonzero(~mask)
    trap_sites = np.flatnonzero(mask)
    if starts.size == 0:
        raise ConfigurationError("every site is a trap")
    total = np.zeros(T + 1)
    for s in starts:
        p = np.zeros(K)
        p[s] = 1.0
        total[0] += 1.0
        for t in range(1, T + 1):
            p = crw_step(p, trap_sites)
            total[t] += p.sum()
    return total / starts.size
