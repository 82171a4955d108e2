"""Integer-valued transaction statistics and their empirical histograms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import Dataset

STAT_NAMES = ("constant", "row_margins", "lazarus", "bounds_joint", "joint")

# CLI tokens
STAT_ALIASES = {
    "independence": "constant",
    "margins": "row_margins",
    "lazarus": "lazarus",
    "bounds": "bounds_joint",
}


def ones_count(t) -> int:
    return int(np.count_nonzero(t))


def ones_count_cut(t, k: int) -> int:
    if k < 0:
        raise ValueError("cut value must be non-negative")
    return min(ones_count(t), k)


def bounds(t) -> tuple[int, int]:
    """1-based positions of the first and last one; ``(0, 0)`` if none."""
    idx = np.flatnonzero(t)
    if idx.size == 0:
        return 0, 0
    return int(idx[0]) + 1, int(idx[-1]) + 1


def lazarus_count(t) -> int:
    """Number of zeros strictly between the first and the last one."""
    first, last = bounds(t)
    if first == 0:
        return 0
    return (last - first + 1) - ones_count(t)


def joint_encode(s1, s2, k1: int):
    s1 = np.asarray(s1)
    if np.any(s1 < 0) or np.any(s1 > k1):
        raise ValueError(f"first component out of range 0..{k1}")
    out = s1 + (k1 + 1) * np.asarray(s2)
    return int(out) if out.ndim == 0 else out


def joint_decode(code, k1: int):
    return divmod(code, k1 + 1)[::-1]


def _row_bounds(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = rows.shape[1]
    nonempty = rows.any(axis=1)
    first = np.where(nonempty, rows.argmax(axis=1) + 1, 0)
    last = np.where(nonempty, n - rows[:, ::-1].argmax(axis=1), 0)
    return first, last


@dataclass(frozen=True)
class Statistic:
    """A statistic ``S`` over transactions with ``N`` attributes, valued in ``0..k_max``.

    Use the constructors (:meth:`constant`, :meth:`row_margins`,
    :meth:`lazarus`, :meth:`bounds_joint`, :meth:`joint`) rather than
    building instances by hand.
    """

    name: str
    n_attributes: int
    k_max: int
    truncation: Optional[int] = None
    parts: tuple = ()

    @classmethod
    def constant(cls, n: int) -> "Statistic":
        return cls("constant", n, 0)

    @classmethod
    def row_margins(cls, n: int, truncation: Optional[int] = None) -> "Statistic":
        if truncation is not None and not 0 <= truncation <= n:
            raise ValueError(f"truncation must lie in 0..{n}")
        k = n if truncation is None else truncation
        return cls("row_margins", n, k, truncation=None if k == n else k)

    @classmethod
    def lazarus(cls, n: int) -> "Statistic":
        return cls("lazarus", n, max(n - 2, 0))

    @classmethod
    def bounds_joint(cls, n: int) -> "Statistic":
        # (N+1)^2 codes, of which only (N^2 + N)/2 + 1 are attainable
        return cls("bounds_joint", n, (n + 1) ** 2 - 1)

    @classmethod
    def joint(cls, first: "Statistic", second: "Statistic") -> "Statistic":
        if first.n_attributes != second.n_attributes:
            raise ValueError("joint statistics must share the attribute count")
        k = first.k_max + (first.k_max + 1) * second.k_max
        return cls("joint", first.n_attributes, k, parts=(first, second))

    @classmethod
    def from_name(cls, name: str, n: int) -> "Statistic":
        name = STAT_ALIASES.get(name, name)
        if name == "constant":
            return cls.constant(n)
        if name == "row_margins":
            return cls.row_margins(n)
        if name == "lazarus":
            return cls.lazarus(n)
        if name == "bounds_joint":
            return cls.bounds_joint(n)
        raise ValueError(f"unknown statistic {name!r}")

    @property
    def n_values(self) -> int:
        return self.k_max + 1

    def evaluate(self, t) -> int:
        t = np.asarray(t, dtype=bool)
        return int(self.evaluate_rows(t[None, :])[0])

    def evaluate_rows(self, rows: np.ndarray) -> np.ndarray:
        """Vectorised ``S`` over a ``(n, N)`` bit matrix."""
        rows = np.asarray(rows, dtype=bool)
        if rows.shape[1] != self.n_attributes:
            raise ValueError(f"expected {self.n_attributes} attributes, got {rows.shape[1]}")
        if self.name == "constant":
            return np.zeros(rows.shape[0], dtype=np.int64)
        if self.name == "row_margins":
            return np.minimum(rows.sum(axis=1), self.k_max).astype(np.int64)
        if self.name == "joint":
            s1, s2 = (part.evaluate_rows(rows) for part in self.parts)
            return s1 + (self.parts[0].k_max + 1) * s2
        first, last = _row_bounds(rows)
        if self.name == "bounds_joint":
            return (first + (self.n_attributes + 1) * last).astype(np.int64)
        if self.name == "lazarus":
            span = np.where(first > 0, last - first + 1, 0)
            return (span - rows.sum(axis=1)).astype(np.int64)
        raise ValueError(f"unknown statistic {self.name!r}")

    def token(self) -> str:
        """Inverse of :meth:`from_name`, used in model files."""
        if self.name == "joint":
            raise ValueError("joint statistics have no serial token")
        return self.name


def empirical_histogram(dataset: Dataset, statistic: Statistic) -> np.ndarray:
    """Fractions ``n_k`` of transactions with ``S(t) = k`` for ``k = 0..K``."""
    values = statistic.evaluate_rows(dataset.rows)
    return np.bincount(values, minlength=statistic.n_values) / len(dataset)
