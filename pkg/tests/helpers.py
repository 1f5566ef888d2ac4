"""Shared generators for randomized tests."""
from __future__ import annotations

import numpy as np

from incomplete_infer import DiscreteMeasure, FiniteCorrespondence


def random_correspondence(rng, max_obs=8, max_latent=8, density=0.3, ny=None, nl=None):
    ny = ny or int(rng.integers(1, max_obs + 1))
    nl = nl or int(rng.integers(1, max_latent + 1))
    edges = {(i, int(rng.integers(nl))) for i in range(ny)}
    for i in range(ny):
        for j in range(nl):
            if rng.random() < density:
                edges.add((i, j))
    return FiniteCorrespondence(list(range(ny)), list(range(nl)), edges)


def random_counts(rng, size, high=10):
    c = rng.integers(0, high, size=size)
    if c.sum() == 0:
        c[rng.integers(size)] = 1
    return c


def rational_measure(counts):
    counts = np.asarray(counts, dtype=float)
    return DiscreteMeasure(counts / counts.sum())


def random_instance(rng, max_obs=8, max_latent=8):
    """Correspondence with rational ``P`` and ``nu``; half of the draws are compatible by construction."""
    corr = random_correspondence(rng, max_obs, max_latent)
    if rng.random() < 0.5:
        flow = np.zeros((corr.n_obs, corr.n_latent))
        for i, j in corr.edges:
            flow[i, j] = rng.integers(0, 6)
        if flow.sum() == 0:
            i, j = next(iter(sorted(corr.edges)))
            flow[i, j] = 1
        P, nu = rational_measure(flow.sum(axis=1)), rational_measure(flow.sum(axis=0))
    else:
        P = rational_measure(random_counts(rng, corr.n_obs))
        nu = rational_measure(random_counts(rng, corr.n_latent))
    return corr, P, nu


def classical_ks(sample, cdf):
    """Two-sided one-sample KS distance computed from order statistics."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
