"""Exact distributions of transaction statistics under independence models.

Every engine takes per-attribute probabilities ``p_i = p(a_i = 1)`` and
returns the probability vector ``p(S(A) = k)`` for ``k = 0..K``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable

import numpy as np

from .statistics import Statistic

BRUTE_FORCE_MAX_N = 24
_CHUNK_BITS = 16
# backward method is abandoned in favour of recomputation past these limits
BACKWARD_MAX_P = 1.0 - 1e-6
BACKWARD_NEG_TOL = -1e-9


def _as_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1:
        raise ValueError("probabilities must be a 1-d sequence")
    if np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def row_margin_add(dist: np.ndarray, p: float) -> np.ndarray:
    """Add one attribute with probability ``p`` to an untruncated row-margin distribution."""
    out = np.empty(dist.size + 1)
    out[:-1] = (1.0 - p) * dist
    out[-1] = 0.0
    out[1:] += p * dist
    return out


def row_margin_dist(probs, k: int | None = None) -> np.ndarray:
    """Distribution of ``min(|t|, K)``; ``K`` defaults to ``N``."""
    p = _as_probs(probs)
    n = p.size
    if k is None:
        k = n
    if not 0 <= k <= n:
        raise ValueError(f"K must lie in 0..{n}")
    if k == 0:
        return np.ones(1)
    # buckets 0..K-1 are exact counts; the cap bucket is p(|A| >= K)
    dist = np.zeros(k)
    dist[0] = 1.0
    for pi in p:
        shifted = dist[:-1] * pi
        dist *= 1.0 - pi
        dist[1:] += shifted
    cap = max(1.0 - dist.sum(), 0.0)
    return np.append(dist, cap)


def row_margin_remove(dist, probs, i: int) -> np.ndarray:
    """Remove attribute ``i`` from an exact untruncated row-margin distribution.

    Inverts one step of :func:`row_margin_add` in O(N). The recurrence is run
    upward from ``k = 0`` when ``p_i <= 1/2`` and downward from ``k = N - 1``
    otherwise, so errors are damped rather than amplified. Raises
    ``ZeroDivisionError`` when ``p_i = 1``; the caller must then recompute
    from scratch.
    """
    dist = np.asarray(dist, dtype=float)
    p = float(np.asarray(probs)[i])
    if p >= 1.0:
        raise ZeroDivisionError("cannot remove an attribute with probability 1")
    out = np.empty(dist.size - 1)
    if p <= 0.5:
        scale = 1.0 / (1.0 - p)
        out[0] = dist[0] * scale
        for k in range(1, out.size):
            out[k] = (dist[k] - p * out[k - 1]) * scale
    else:
        scale = 1.0 / p
        out[-1] = dist[-1] * scale
        for k in range(out.size - 1, 0, -1):
            out[k - 1] = (dist[k] - (1.0 - p) * out[k]) * scale
    return out


def lazarus_dist(probs) -> np.ndarray:
    """Distribution of the lazarus count, ``k = 0..max(N-2, 0)``.

    Sweeps the attributes once, keeping two vectors indexed by ``k``:
    ``last_one[k] = p(laz(A_i) = k, last(A_i) = i)`` and ``pending[k]``, the
    mass of prefixes that end in a one followed by zeros, indexed by the
    lazarus count they would have if a one came next. Each step is O(N),
    giving O(N^2) time and O(N) memory overall.
    """
    p = _as_probs(probs)
    n = p.size
    size = max(n - 2, 0) + 1
    # suffix[i] = prod_{m >= i} (1 - p_m), suffix[n] = 1
    suffix = np.ones(n + 1)
    suffix[:-1] = np.cumprod((1.0 - p)[::-1])[::-1]
    result = np.zeros(size)
    result[0] = suffix[0]  # empty transaction
    pending = np.zeros(size + 1)
    all_zero = 1.0  # prod_{m < i} (1 - p_m)
    for i in range(n):
        last_one = p[i] * pending[:size]
        last_one[0] += p[i] * all_zero
        result += last_one * suffix[i + 1]
        # one more zero between the previous one and the next one
        pending[1:] = (1.0 - p[i]) * pending[:-1]
        pending[0] = 0.0
        pending[:size] += last_one
        all_zero *= 1.0 - p[i]
    return result


def bounds_joint_dist(probs) -> np.ndarray:
    """Joint distribution of ``(first, last)`` encoded as ``first + (N+1) last``."""
    p = _as_probs(probs)
    n = p.size
    q = 1.0 - p
    prefix = np.concatenate(([1.0], np.cumprod(q)))  # prefix[i] = prod_{k <= i} q_k
    suffix = np.concatenate((np.cumprod(q[::-1])[::-1], [1.0]))  # suffix[j-1] = prod_{k >= j} q_k
    table = np.zeros((n + 1, n + 1))  # table[first, last]
    table[0, 0] = prefix[n]
    left = prefix[:n] * p  # first = i: zeros before, one at i
    right = p * suffix[1:]  # last = j: one at j, zeros after
    upper = np.triu(np.outer(left, right), k=1)
    table[1:, 1:] = upper
    idx = np.arange(1, n + 1)
    table[idx, idx] = prefix[:n] * p * suffix[1:]
    return table.T.reshape(-1)


@lru_cache(maxsize=32)
def _enumeration(n: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = ((codes[:, None] >> shifts) & 1).astype(bool)
    bits.setflags(write=False)
    return bits


@lru_cache(maxsize=64)
def _enumerated_values(statistic: Statistic, start: int, stop: int) -> np.ndarray:
    values = statistic.evaluate_rows(_enumeration(statistic.n_attributes, start, stop))
    values.setflags(write=False)
    return values


def enumerate_transactions(n: int) -> np.ndarray:
    """All ``2^N`` transactions as a boolean matrix (attribute 1 is the high bit)."""
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"enumeration limited to N <= {BRUTE_FORCE_MAX_N}")
    return _enumeration(n, 0, 1 << n)


def brute_force_dist(probs, statistic: Statistic) -> np.ndarray:
    """Sum product-distribution probabilities over all of ``{0,1}^N``."""
    p = _as_probs(probs)
    n = p.size
    if n != statistic.n_attributes:
        raise ValueError("statistic and parameters disagree on N")
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}")
    total = np.zeros(statistic.n_values, dtype=np.longdouble)
    step = 1 << min(n, _CHUNK_BITS)
    for start in range(0, 1 << n, step):
        bits = _enumeration(n, start, start + step)
        weights = np.where(bits, p, 1.0 - p).prod(axis=1)
        values = _enumerated_values(statistic, start, start + step)
        total += np.bincount(values, weights=weights, minlength=statistic.n_values)
    return total.astype(float)


def compute_prob(probs, statistic: Statistic) -> np.ndarray:
    """Dispatch to the exact engine for ``statistic``."""
    p = _as_probs(probs)
    if p.size != statistic.n_attributes:
        raise ValueError("statistic and parameters disagree on N")
    name = statistic.name
    if name == "constant":
        return np.ones(1)
    if name == "row_margins":
        return row_margin_dist(p, statistic.k_max)
    if name == "lazarus":
        return lazarus_dist(p)
    if name == "bounds_joint":
        return bounds_joint_dist(p)
    return brute_force_dist(p, statistic)


def clamp_itemset(probs, itemset: Iterable[int]) -> np.ndarray:
    p = np.array(probs, dtype=float)
    p[list(itemset)] = 1.0
    return p


def conditional_dist(probs, statistic: Statistic, itemset: Iterable[int]) -> np.ndarray:
    """``p(S(A) = k | X = 1)``: the engine run with the members of ``X`` forced to one."""
    return compute_prob(clamp_itemset(probs, itemset), statistic)
