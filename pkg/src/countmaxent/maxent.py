"""Maximum-entropy models constrained by column margins and one count statistic.

The fitted distribution is kept in mixture form

    p*(A = t) = r(S(t)) * q(A = t) / q(S(A) = S(t)),   r(k) = v_k q(S(A) = k) / Z_r,

where ``q`` is an independence model with parameters ``q_i``. Buckets with
a zero target get ``v_k = 0`` and carry no mass.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import indep_dp
from .dataset import Dataset, column_margins
from .statistics import Statistic, empirical_histogram

log = logging.getLogger(__name__)

FORMAT_VERSION = "maxent-v1"
# singleton probabilities this close to 0 or 1 cannot be moved by rescaling q_i
_PINNED = 1e-12


class NotConverged(RuntimeError):
    """Iterative scaling ran out of sweeps; ``model`` holds the last iterate."""

    def __init__(self, model: "MaxEntModel"):
        super().__init__(
            f"no convergence after {model.diagnostics.sweeps} sweeps "
            f"(residual {model.diagnostics.residual:.3g})"
        )
        self.model = model


class InfeasibleBucket(ArithmeticError):
    """A bucket with positive target has zero probability under the model."""


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Constraints:
    column_margins: np.ndarray
    stat: Statistic
    stat_targets: np.ndarray
    n_transactions: Optional[int] = None

    def __post_init__(self):
        m = np.asarray(self.column_margins, dtype=float)
        n = np.asarray(self.stat_targets, dtype=float)
        if m.size != self.stat.n_attributes:
            raise ValueError("one margin per attribute required")
        if n.size != self.stat.n_values:
            raise ValueError(f"expected {self.stat.n_values} statistic targets, got {n.size}")
        if np.any(n < 0) or np.any(m < 0) or np.any(m > 1):
            raise ValueError("targets must be non-negative and margins in [0, 1]")
        object.__setattr__(self, "column_margins", m)
        object.__setattr__(self, "stat_targets", n)

    @classmethod
    def from_dataset(cls, dataset: Dataset, stat: Statistic) -> "Constraints":
        return cls(column_margins(dataset), stat, empirical_histogram(dataset, stat), len(dataset))


@dataclass(frozen=True)
class FitConfig:
    tolerance: float = 1e-6
    max_sweeps: int = 1000
    # None means 1 / (2 |D|), or 1e-6 if |D| is unknown
    margin_clamp: Optional[float] = None
    # pin constant columns to q_i in {0, 1} instead of clamping them
    exclude_constant_columns: bool = False
    # remove/re-add attributes in the row-margin distribution instead of recomputing it
    backward_row_margins: bool = True
    strict: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.margin_clamp is not None and not 0 < self.margin_clamp < 0.5:
            raise ValueError("margin_clamp must lie in (0, 0.5)")

    def clamp_for(self, constraints: Constraints) -> float:
        if self.margin_clamp is not None:
            return self.margin_clamp
        if constraints.n_transactions:
            return 1.0 / (2 * constraints.n_transactions)
        return 1e-6


@dataclass(frozen=True)
class Diagnostics:
    sweeps: int = 0
    residual: float = math.inf
    converged: bool = False
    margin_clamp: float = 0.0
    history: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class MaxEntModel:
    q_probs: np.ndarray
    v: np.ndarray
    z_r: float
    constraints: Constraints
    diagnostics: Diagnostics = Diagnostics()
    labels: tuple = ()

    @property
    def stat(self) -> Statistic:
        return self.constraints.stat

    @property
    def n_attributes(self) -> int:
        return self.q_probs.size

    def independence_dist(self) -> np.ndarray:
        """``q(S(A) = k)`` under the independence component."""
        return indep_dp.compute_prob(self.q_probs, self.stat)

    def bucket_probs(self) -> np.ndarray:
        return model_bucket_probs(self)

    def query(self, itemset: Iterable[int]) -> float:
        return query_itemset(self, itemset)

    def transaction_prob(self, t) -> float:
        return transaction_prob(self, t)


def _mixture_query(q: np.ndarray, v: np.ndarray, z_r: float, stat: Statistic, itemset: Sequence[int]) -> float:
    if len(itemset) == 0:
        return 1.0
    y = float(np.prod(q[list(itemset)]))
    if y == 0.0:
        return 0.0
    cond = indep_dp.conditional_dist(q, stat, itemset)
    return y * float(v @ cond) / z_r


class _RowMarginCache:
    """Keeps the untruncated ``q(|A| = k)`` current across single-attribute updates."""

    def __init__(self, q: np.ndarray):
        self.dist = indep_dp.row_margin_dist(q)

    def removed(self, q: np.ndarray, i: int) -> np.ndarray:
        if q[i] <= indep_dp.BACKWARD_MAX_P:
            rest = indep_dp.row_margin_remove(self.dist, q, i)
            if rest.min() >= indep_dp.BACKWARD_NEG_TOL:
                return np.clip(rest, 0.0, None)
        return indep_dp.row_margin_dist(np.delete(q, i))

    def conditional(self, q: np.ndarray, i: int, k_max: int) -> np.ndarray:
        rest = self.removed(q, i)
        return _cap(np.concatenate(([0.0], rest)), k_max)

    def update(self, q: np.ndarray, i: int, rest: np.ndarray) -> None:
        self.dist = indep_dp.row_margin_add(rest, q[i])


def _cap(dist: np.ndarray, k_max: int) -> np.ndarray:
    if dist.size - 1 == k_max:
        return dist
    out = dist[: k_max + 1].copy()
    out[k_max] += dist[k_max + 1 :].sum()
    return out


class _Solver:
    """Mutable state of one iterative-scaling run."""

    def __init__(self, constraints: Constraints, config: FitConfig):
        self.constraints = constraints
        self.stat = constraints.stat
        self.config = config
        self.delta = config.clamp_for(constraints)
        m = constraints.column_margins
        self.pinned = np.zeros(m.size, dtype=bool)
        if config.exclude_constant_columns:
            self.pinned = (m == 0.0) | (m == 1.0)
        self.targets_m = np.where(self.pinned, m, np.clip(m, self.delta, 1.0 - self.delta))
        self.targets_n = constraints.stat_targets
        self.support = self.targets_n > 0
        self.q = self.targets_m.copy()
        self.v = self.support.astype(float)
        self.rows = None
        if self.stat.name == "row_margins" and config.backward_row_margins:
            self.rows = _RowMarginCache(self.q)
        self.q_dist = self._q_dist()
        self.z_r = float(self.v @ self.q_dist)

    def resync(self) -> None:
        """Recompute the cached distributions from scratch to stop rounding drift."""
        if self.rows is not None:
            self.rows = _RowMarginCache(self.q)
        self.q_dist = self._q_dist()
        self.z_r = float(self.v @ self.q_dist)

    def _q_dist(self) -> np.ndarray:
        if self.rows is not None:
            return _cap(self.rows.dist, self.stat.k_max)
        return indep_dp.compute_prob(self.q, self.stat)

    def singleton(self, i: int) -> float:
        if self.rows is not None:
            cond = self.rows.conditional(self.q, i, self.stat.k_max)
            return self.q[i] * float(self.v @ cond) / self.z_r
        return _mixture_query(self.q, self.v, self.z_r, self.stat, [i])

    def update_attribute(self, i: int) -> None:
        m = self.targets_m[i]
        d = self.singleton(i)
        if not _PINNED < d < 1.0 - _PINNED:
            # the statistic forces this margin; leave the mismatch to the residual check
            return
        c = m * (1.0 - d) / ((1.0 - m) * d)
        qi = self.q[i]
        # rescale the odds of q_i by c
        new_qi = qi * c / (1.0 - qi + qi * c)
        if self.rows is not None:
            rest = self.rows.removed(self.q, i)
            self.q[i] = new_qi
            self.rows.update(self.q, i, rest)
        else:
            self.q[i] = new_qi
        self.q_dist = self._q_dist()
        self.z_r = float(self.v @ self.q_dist)

    def update_buckets(self) -> None:
        p = self.v * self.q_dist / self.z_r
        bad = self.support & (p <= 0.0)
        if np.any(bad):
            raise InfeasibleBucket(f"buckets {np.flatnonzero(bad).tolist()} have targets but no mass")
        v = np.zeros_like(self.v)
        v[self.support] = self.v[self.support] * self.targets_n[self.support] / p[self.support]
        # v_k q(S=k) now sums to Z_r; fold Z_r into v so that Z_r = 1
        self.v = v / float(v @ self.q_dist)
        self.z_r = 1.0

    def residual(self) -> float:
        margins = np.array([self.singleton(i) for i in range(self.q.size)])
        buckets = self.v * self.q_dist / self.z_r
        return max(
            float(np.max(np.abs(margins - self.targets_m))),
            float(np.max(np.abs(buckets - self.targets_n))),
        )

    def model(self, sweeps: int, residual: float, history) -> MaxEntModel:
        diag = Diagnostics(sweeps, residual, residual <= self.config.tolerance, self.delta, tuple(history))
        return MaxEntModel(self.q.copy(), self.v.copy(), self.z_r, self.constraints, diag)


def fit(constraints: Constraints, config: FitConfig = FitConfig(), labels: Sequence = ()) -> MaxEntModel:
    """Fit the maximum-entropy model by iterative scaling.

    Each sweep rescales every ``q_i`` so that its margin matches ``m_i``,
    then rescales all ``v_k`` so that the bucket masses match ``n_k``.
    Stops once the largest constraint residual is at most
    ``config.tolerance``. Margins of exactly 0 or 1 are clamped to
    ``[delta, 1 - delta]`` unless ``exclude_constant_columns`` is set.
    """
    solver = _Solver(constraints, config)
    free = np.flatnonzero(~solver.pinned)
    history = []
    residual = math.inf
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        solver.resync()
        for i in free:
            solver.update_attribute(i)
        solver.update_buckets()
        residual = solver.residual()
        history.append(residual)
        log.debug("sweep %d residual %.3e", sweeps, residual)
        if residual <= config.tolerance:
            break
    model = replace(solver.model(sweeps, residual, history), labels=tuple(labels))
    if not model.diagnostics.converged:
        if config.strict:
            raise NotConverged(model)
        log.warning("iterative scaling stopped after %d sweeps, residual %.3e", sweeps, residual)
    return model


def fit_dataset(dataset: Dataset, stat: Statistic | str, config: FitConfig = FitConfig()) -> MaxEntModel:
    if isinstance(stat, str):
        stat = Statistic.from_name(stat, dataset.n_attributes)
    return fit(Constraints.from_dataset(dataset, stat), config, labels=dataset.labels)


def query_itemset(model: MaxEntModel, itemset: Iterable[int]) -> float:
    """Expected frequency ``p*(X = 1)`` of an itemset given by column indices."""
    items = sorted(set(int(i) for i in itemset))
    if items and (items[0] < 0 or items[-1] >= model.n_attributes):
        raise KeyError(f"itemset {items} refers to attributes outside 0..{model.n_attributes - 1}")
    value = _mixture_query(model.q_probs, model.v, model.z_r, model.stat, items)
    return min(max(value, 0.0), 1.0)


def model_bucket_probs(model: MaxEntModel) -> np.ndarray:
    return model.v * model.independence_dist() / model.z_r


def transaction_log_probs(model: MaxEntModel, rows: np.ndarray) -> np.ndarray:
    """``ln p*(A = t)`` for every row; ``-inf`` for transactions in the zero set."""
    rows = np.asarray(rows, dtype=bool)
    q = model.q_probs
    with np.errstate(divide="ignore"):
        log_on = np.log(q)
        log_off = np.log1p(-q)
        log_q_t = np.where(rows, log_on, log_off).sum(axis=1)
        k = model.stat.evaluate_rows(rows)
        log_v = np.log(model.v)
    out = log_q_t + log_v[k] - math.log(model.z_r)
    out[model.v[k] == 0.0] = -np.inf
    return out


def transaction_prob(model: MaxEntModel, t) -> float:
    t = np.asarray(t, dtype=bool)
    k = model.stat.evaluate(t)
    if model.v[k] == 0.0:
        return 0.0
    q = model.q_probs
    q_t = float(np.prod(np.where(t, q, 1.0 - q)))
    return model.v[k] / model.z_r * q_t


def serialize(model: MaxEntModel) -> str:
    """Versioned plain-text model file."""
    stat = model.stat
    fmt = "{:.17g}".format
    out = [f"{FORMAT_VERSION} {model.n_attributes} {stat.k_max} {stat.token()}"]
    out += [fmt(x) for x in model.q_probs]
    out += [fmt(x) for x in model.v]
    out.append(fmt(model.z_r))
    out += [fmt(x) for x in model.constraints.column_margins]
    out += [fmt(x) for x in model.constraints.stat_targets]
    d = model.diagnostics
    out.append(
        f"diagnostics {d.sweeps} {fmt(d.residual)} {int(d.converged)} {fmt(d.margin_clamp)} "
        f"{model.constraints.n_transactions or 0}"
    )
    if model.labels:
        out.append("labels " + " ".join(str(lab) for lab in model.labels))
    return "\n".join(out) + "\n"


def deserialize(text: str) -> MaxEntModel:
    lines = text.splitlines()
    if not lines:
        raise ModelFormatError("empty model file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != FORMAT_VERSION:
        raise ModelFormatError(f"expected header '{FORMAT_VERSION} N K stat', got {lines[0]!r}")
    try:
        n, k = int(header[1]), int(header[2])
    except ValueError:
        raise ModelFormatError(f"bad header {lines[0]!r}") from None
    name = header[3]
    try:
        stat = Statistic.from_name(name, n)
        if name == "row_margins" and k != n:
            stat = Statistic.row_margins(n, truncation=k)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
    if stat.k_max != k:
        raise ModelFormatError(f"K={k} does not match statistic {name} over N={n}")
    n_numbers = n + (k + 1) + 1 + n + (k + 1)
    body = lines[1 : 1 + n_numbers]
    if len(body) < n_numbers:
        raise ModelFormatError(f"truncated model file: expected {n_numbers} values, found {len(body)}")
    try:
        values = np.array([float(x) for x in body])
    except ValueError as exc:
        raise ModelFormatError(f"malformed value: {exc}") from None
    q, values = values[:n], values[n:]
    v, values = values[: k + 1], values[k + 1 :]
    z_r, values = float(values[0]), values[1:]
    m, targets = values[:n], values[n:]
    diag = Diagnostics()
    n_transactions = None
    labels: tuple = ()
    for line in lines[1 + n_numbers :]:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "diagnostics" and len(parts) == 6:
            diag = Diagnostics(int(parts[1]), float(parts[2]), bool(int(parts[3])), float(parts[4]))
            n_transactions = int(parts[5]) or None
        elif parts[0] == "labels":
            labels = tuple(parts[1:])
        else:
            raise ModelFormatError(f"unexpected line {line!r}")
    if labels and len(labels) != n:
        raise ModelFormatError(f"{len(labels)} labels for {n} attributes")
    constraints = Constraints(m, stat, targets, n_transactions)
    return MaxEntModel(q, v, z_r, constraints, diag, labels)


def save_model(model: MaxEntModel, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(model))


def load_model(path: str | os.PathLike) -> MaxEntModel:
    with open(path) as fh:
        return deserialize(fh.read())


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy in nats, with ``0 ln 0 = 0``."""
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())
