"""Independent reference computations used only by the test-suite."""

import numpy as np

from countmaxent.indep_dp import enumerate_transactions


def full_space_maxent(margins, stat, targets, tol=1e-14, max_iter=200000):
    """Iterative proportional fitting on the explicit distribution over {0,1}^N.

    Works directly on the 2^N probability table and never touches the
    mixture representation.
    """
    omega = enumerate_transactions(stat.n_attributes)
    values = stat.evaluate_rows(omega)
    targets = np.asarray(targets, dtype=float)
    p = np.ones(len(omega))
    p[targets[values] == 0] = 0.0
    p /= p.sum()
    for _ in range(max_iter):
        for i, m in enumerate(margins):
            on = omega[:, i]
            cur = p[on].sum()
            p[on] *= m / cur
            p[~on] *= (1 - m) / (1 - cur)
        cur_k = np.bincount(values, weights=p, minlength=targets.size)
        ratio = np.divide(targets, cur_k, out=np.zeros_like(targets), where=cur_k > 0)
        p *= ratio[values]
        p /= p.sum()
        res_m = np.abs(omega.T.astype(float) @ p - margins).max()
        res_k = np.abs(np.bincount(values, weights=p, minlength=targets.size) - targets).max()
        if max(res_m, res_k) < tol:
            break
    return omega, p


def product_probs(params, omega):
    return np.where(omega, params, 1 - params).prod(axis=1)
