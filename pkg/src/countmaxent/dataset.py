"""Binary transaction datasets: FIMI-style I/O, synthetic generators, splits."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

GENERATOR_KINDS = ("independent", "clusters", "markov")


class DataError(ValueError):
    """Raised for malformed or unusable transaction data."""


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of transactions over a fixed attribute order.

    ``rows`` is a read-only boolean matrix of shape ``(|D|, N)``; column ``i``
    corresponds to ``labels[i]``.
    """

    rows: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        rows = np.array(self.rows, dtype=bool, copy=True)
        if rows.ndim != 2:
            raise DataError("transactions must form a 2-d bit matrix")
        if rows.shape[0] < 1:
            raise DataError("a dataset needs at least one transaction")
        if rows.shape[1] < 1:
            raise DataError("a dataset needs at least one attribute")
        rows.setflags(write=False)
        labels = tuple(self.labels) if len(self.labels) else tuple(range(1, rows.shape[1] + 1))
        if len(labels) != rows.shape[1]:
            raise DataError(f"{len(labels)} labels for {rows.shape[1]} attributes")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def n_attributes(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def subset(self, index) -> "Dataset":
        return Dataset(self.rows[index], self.labels)

    def drop_empty(self) -> "Dataset":
        return self.subset(self.rows.any(axis=1))

    def prune(self, min_freq: float) -> "Dataset":
        """Remove attributes whose frequency is below ``min_freq``."""
        keep = self.rows.mean(axis=0) >= min_freq
        if not keep.any():
            raise DataError(f"no attribute has frequency >= {min_freq}")
        return Dataset(self.rows[:, keep], tuple(np.asarray(self.labels, dtype=object)[keep]))

    def label_index(self, labels: Iterable) -> list[int]:
        """Map attribute labels (compared as strings) to column indices."""
        lookup = {str(lab): i for i, lab in enumerate(self.labels)}
        out = []
        for lab in labels:
            try:
                out.append(lookup[str(lab)])
            except KeyError:
                raise KeyError(f"unknown attribute label {lab!r}") from None
        return out


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int


def parse_fimi(lines: Iterable[str]) -> Dataset:
    label_pos: dict[int, int] = {}
    transactions: list[list[int]] = []
    for lineno, line in enumerate(lines, 1):
        items = []
        for token in line.split():
            try:
                item = int(token)
            except ValueError:
                raise DataError(f"line {lineno}: non-integer item {token!r}") from None
            if item < 0:
                raise DataError(f"line {lineno}: negative item id {item}")
            if item not in label_pos:
                label_pos[item] = len(label_pos)
            items.append(label_pos[item])
        transactions.append(items)
    if not transactions:
        raise DataError("no transactions found")
    if not label_pos:
        raise DataError("all transactions are empty")
    rows = np.zeros((len(transactions), len(label_pos)), dtype=bool)
    for r, items in enumerate(transactions):
        rows[r, items] = True
    return Dataset(rows, tuple(label_pos))


def load_fimi(path: str | os.PathLike) -> Dataset:
    """Read a FIMI file: one transaction per line, whitespace-separated item ids.

    Attributes are ordered by first appearance; blank lines are empty
    transactions.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return parse_fimi(lines)


def format_fimi(dataset: Dataset) -> str:
    labels = [str(lab) for lab in dataset.labels]
    out = []
    for row in dataset.rows:
        out.append(" ".join(labels[i] for i in np.flatnonzero(row)))
    return "\n".join(out) + "\n"


def save_fimi(dataset: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(format_fimi(dataset))


def generate_synthetic(kind: str, n_attributes: int, n_transactions: int, seed: int = 0) -> Dataset:
    """Draw one of the three synthetic benchmarks.

    ``independent``: each item has its own frequency, uniform on [0, 1].
    ``clusters``: two equal-probability clusters with independent items at
    25% and 75%.
    ``markov``: first item at 50%, every later item copies its predecessor
    and is flipped with probability 25%.
    """
    if kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if n_attributes < 1 or n_transactions < 1:
        raise ValueError("n_attributes and n_transactions must be positive")
    rng = np.random.default_rng(seed)
    shape = (n_transactions, n_attributes)
    if kind == "independent":
        freqs = rng.uniform(0.0, 1.0, size=n_attributes)
        rows = rng.random(shape) < freqs
    elif kind == "clusters":
        cluster = rng.random(n_transactions) < 0.5
        freqs = np.where(cluster, 0.75, 0.25)[:, None]
        rows = rng.random(shape) < freqs
    else:
        flips = rng.random(shape) < 0.25
        flips[:, 0] = rng.random(n_transactions) < 0.5
        # a_1 ~ Bernoulli(1/2), a_i = a_{i-1} xor flip_i
        rows = np.logical_xor.accumulate(flips, axis=1)
    return Dataset(rows)


def split(dataset: Dataset, fraction: float = 0.5, seed: int = 0) -> SplitPair:
    """Random partition; the train side gets ``floor(fraction * |D|)`` rows."""
    n = len(dataset)
    n_train = int(np.floor(fraction * n))
    if not 0 < fraction < 1 or n_train < 1 or n_train >= n:
        raise ValueError(f"fraction {fraction} leaves an empty side for |D|={n}")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return SplitPair(dataset.subset(train_idx), dataset.subset(test_idx), seed)


def column_margins(dataset: Dataset) -> np.ndarray:
    return dataset.rows.mean(axis=0)


def itemset_frequency(dataset: Dataset, itemset: Sequence[int]) -> float:
    if len(itemset) == 0:
        return 1.0
    return float(dataset.rows[:, list(itemset)].all(axis=1).mean())
