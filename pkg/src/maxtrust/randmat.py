"""Random max-plus matrices with controlled block structure, for tests and
benchmarks."""

from __future__ import annotations

import numpy as np

from maxtrust.maxplus import EPS


def random_irreducible(rng: np.random.Generator, n: int, density: float = 0.4, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Strongly connected random matrix: a random Hamiltonian cycle plus
    extra arcs kept with probability ``density``."""
    a = np.full((n, n), EPS)
    mask = rng.random((n, n)) < density
    order = rng.permutation(n)
    for k in range(n):
        mask[order[k], order[(k + 1) % n]] = True
    a[mask] = rng.uniform(low, high, size=int(mask.sum()))
    return a


def random_reducible(
    rng: np.random.Generator,
    n: int,
    blocks: int,
    density: float = 0.4,
    coupling: float = 0.3,
    low: float = 0.0,
    high: float = 1.0,
    shuffle: bool = True,
) -> np.ndarray:
    """Regular reducible matrix D whose normal form has ``blocks`` diagonal
    blocks. Every row has a finite entry and the last block is irreducible.
    Returned with rows/columns shuffled unless ``shuffle`` is false."""
    if not 1 <= blocks <= n:
        raise ValueError("need 1 <= blocks <= n")
    cuts = np.sort(rng.choice(np.arange(1, n), size=blocks - 1, replace=False)) if blocks > 1 else []
    bounds = list(zip([0, *cuts], [*cuts, n]))
    d = np.full((n, n), EPS)
    for b, (s, e) in enumerate(bounds):
        size = e - s
        if size > 1 or b == blocks - 1 or rng.random() < 0.5:
            d[s:e, s:e] = random_irreducible(rng, size, density, low, high)
        if b < blocks - 1:
            # chain each block to the next so the structure cannot split further
            i = rng.integers(s, e)
            j = rng.integers(e, bounds[b + 1][1])
            d[i, j] = rng.uniform(low, high)
            extra = rng.random((size, n - e)) < coupling
            d[s:e, e:][extra] = rng.uniform(low, high, size=int(extra.sum()))
    for i in range(n):
        if not np.any(d[i] > EPS):
            j = rng.integers(i, n) if i < n - 1 else i
            d[i, j] = rng.uniform(low, high)
    if shuffle:
        p = rng.permutation(n)
        d = d[np.ix_(p, p)]
    return d
