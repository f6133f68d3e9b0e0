"""Ensemble plumbing: seed derivation, tree reduction, worker-safe path loops.

All ensemble statistics go through pairwise (tree) summation so that results
do not depend on how paths were distributed over workers.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def path_seed(master_seed, i):
    """Seed for the i-th path of an ensemble: master XOR path index."""
    return int(master_seed) ^ int(i)


def pairwise_sum(values, axis=0):
    """Sum by recursive pairing. Deterministic for a fixed input array."""
    a = np.asarray(values, dtype=float)
    if a.shape[axis] == 0:
        return np.zeros(a.shape[:axis] + a.shape[axis + 1:])
    a = np.moveaxis(a, axis, 0)
    while a.shape[0] > 1:
        n = a.shape[0]
        if n % 2:
            tail = a[-1]
            a = a[:-1:2] + a[1::2]
            a = np.concatenate([a, tail[None]], axis=0)
        else:
            a = a[0::2] + a[1::2]
    return a[0]


def ensemble_mean(values):
    values = np.asarray(values, dtype=float)
    return pairwise_sum(values) / values.shape[0]


def ensemble_mean_se(values):
    """Mean and standard error of the mean, tree-reduced.

    For a single sample the SE is reported as 0.0.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    mean = pairwise_sum(values) / n
    if n < 2:
        return float(mean), 0.0
    var = pairwise_sum((values - mean) ** 2) / (n - 1)
    return float(mean), float(np.sqrt(var / n))


def ensemble_rms(values):
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(pairwise_sum(values ** 2) / values.shape[0]))


def parallel_map(fn, n, workers=1):
    """Evaluate fn(i) for i in range(n), results ordered by index.

    Workers only change scheduling; the outputs (and any reduction of them
    through pairwise_sum) are identical for every worker count.
    """
    out = [None] * n
    if workers <= 1:
        for i in range(n):
            out[i] = fn(i)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, res in zip(range(n), pool.map(fn, range(n))):
            out[i] = res
    return out
