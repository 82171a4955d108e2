"""Model scoring: likelihood, BIC, closed itemset mining and itemset frequency errors."""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import Dataset
from .maxent import MaxEntModel, query_itemset, transaction_log_probs

RANK_KEYS = ("abs_error", "rel_error", "ll_improvement")


class ZeroProbabilityTransaction(ArithmeticError):
    """A transaction in the evaluation data lies in the model's zero set."""


@dataclass(frozen=True)
class BicReport:
    neg_log_likelihood: float
    penalty: float
    free_params: int
    total: float


@dataclass(frozen=True)
class ItemsetScore:
    itemset: tuple
    observed_freq: float
    expected_freq: float
    abs_error: float
    rel_error: float
    ll_improvement: float

    def as_dict(self) -> dict:
        return asdict(self)


def dataset_log_likelihood(model: MaxEntModel, dataset: Dataset) -> float:
    """Sum of ``ln p*(A = t)`` over the transactions, in nats."""
    logp = transaction_log_probs(model, dataset.rows)
    bad = ~np.isfinite(logp)
    if bad.any():
        raise ZeroProbabilityTransaction(
            f"{int(bad.sum())} transactions have zero probability (first at row {int(np.argmax(bad))})"
        )
    return float(logp.sum())


def free_parameters(model: MaxEntModel) -> int:
    """Column margins plus one per supported bucket, minus one since the targets sum to one."""
    support = int(np.count_nonzero(model.constraints.stat_targets > 0))
    return model.n_attributes + max(support - 1, 0)


def bic(model: MaxEntModel, dataset: Dataset) -> BicReport:
    nll = -dataset_log_likelihood(model, dataset)
    k = free_parameters(model)
    penalty = 0.5 * k * math.log(len(dataset))
    return BicReport(nll, penalty, k, nll + penalty)


def _bitsets(rows: np.ndarray) -> list[int]:
    return [int.from_bytes(np.packbits(col).tobytes(), "big") for col in rows.T]


def mine_closed_frequent(dataset: Dataset, top_k: int) -> list[tuple[tuple[int, ...], float]]:
    """The ``top_k`` most frequent non-empty closed itemsets, as ``(columns, frequency)``.

    Best-first search over the prefix tree: supports only shrink along a
    branch, so itemsets leave the heap in order of decreasing support (ties
    by lexicographic column order). Tidsets are Python int bitsets and are
    rebuilt when an itemset is popped to keep the heap small.
    """
    if top_k < 1:
        return []
    cols = _bitsets(dataset.rows)
    n_items = len(cols)
    total = len(dataset)
    heap: list[tuple[int, tuple[int, ...]]] = []
    for j, col in enumerate(cols):
        s = col.bit_count()
        if s:
            heap.append((-s, (j,)))
    heapq.heapify(heap)
    out = []
    while heap and len(out) < top_k:
        neg_support, items = heapq.heappop(heap)
        support = -neg_support
        tids = cols[items[0]]
        for j in items[1:]:
            tids &= cols[j]
        closed = True
        members = set(items)
        for j in range(n_items):
            if j in members:
                continue
            s = (tids & cols[j]).bit_count()
            if s == support:
                closed = False
            if j > items[-1] and s:
                heapq.heappush(heap, (-s, items + (j,)))
        if closed:
            out.append((items, support / total))
    return out


def _itemset_loglik(f: float, p: float, n: int) -> float:
    return n * (f * math.log(p) + (1.0 - f) * math.log1p(-p))


def score_itemsets(
    model: MaxEntModel,
    independence_model: MaxEntModel,
    itemsets: Sequence[Sequence[int]],
    test_dataset: Dataset,
    threads: int = 1,
) -> list[ItemsetScore]:
    """Compare observed test frequencies with model estimates.

    Estimates are clamped to ``[delta, 1 - delta]`` with
    ``delta = 1 / (2 |D_test|)`` before taking logarithms.
    """
    if not itemsets:
        raise ValueError("no itemsets to score")
    n = len(test_dataset)
    delta = 1.0 / (2 * n)
    rows = test_dataset.rows

    def one(items) -> ItemsetScore:
        items = tuple(int(i) for i in items)
        f = float(rows[:, list(items)].all(axis=1).mean())
        p = min(max(query_itemset(model, items), delta), 1.0 - delta)
        p_ind = min(max(query_itemset(independence_model, items), delta), 1.0 - delta)
        err = abs(f - p)
        rel = err / f if f > 0 else math.inf
        gain = _itemset_loglik(f, p, n) - _itemset_loglik(f, p_ind, n)
        return ItemsetScore(items, f, p, err, rel, gain)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, itemsets))
    return [one(items) for items in itemsets]


def rank(scores: Iterable[ItemsetScore], by: str = "abs_error") -> list[ItemsetScore]:
    """Stable descending sort on one score field."""
    if by not in RANK_KEYS:
        raise ValueError(f"unknown ranking key {by!r}; expected one of {RANK_KEYS}")
    return sorted(scores, key=lambda s: getattr(s, by), reverse=True)


def summarize(scores: Sequence[ItemsetScore]) -> dict[str, float]:
    """Means and standard deviations of the error and gain columns."""
    out = {"n_itemsets": len(scores)}
    for key in RANK_KEYS:
        values = np.array([getattr(s, key) for s in scores], dtype=float)
        out[f"mean_{key}"] = float(values.mean())
        out[f"std_{key}"] = float(values.std())
    return out
