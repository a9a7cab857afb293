"""Shared fixtures and small-instance helpers for the test suite.

The canonical instance here (`build_t1`) is tiny enough that every frozen
expected value in the tests was computed by exhaustive enumeration before
being written down.  The random-instance helpers always repair coverage so
the multicover side is satisfiable on its own; the block caps may still
make an instance infeasible, which several tests rely on.
"""

import numpy as np
import pytest

from gubcover import localsearch
from gubcover.model import Instance


def build_t1() -> Instance:
    """3 rows, 4 columns, blocks {0,1} cap 1 and {2,3} cap 2.

    Unique optimum is columns {1, 2} at cost 8.
    """
    return Instance.from_columns(
        cost=[4, 3, 5, 1],
        col_rows=[[0, 1], [1, 2], [0, 2], [2]],
        demand=[1, 1, 2],
        blocks=[(1, [0, 1]), (2, [2, 3])],
    )


@pytest.fixture
def t1() -> Instance:
    return build_t1()


def random_instance(rng, m=None, n=None, density=0.3, bmax=3, cost_hi=20):
    """Random instance with equal-size blocks and coverable demands."""
    m = int(rng.integers(3, 21)) if m is None else m
    n = int(rng.integers(6, 41)) if n is None else n
    cost = rng.integers(1, cost_hi + 1, size=n)
    demand = rng.integers(1, bmax + 1, size=m)
    covers = [set(np.flatnonzero(rng.random(m) < density)) for _ in range(n)]
    for j in range(n):
        if not covers[j]:
            covers[j].add(int(rng.integers(m)))
    counts = np.zeros(m, dtype=np.int64)
    for j in range(n):
        for i in covers[j]:
            counts[i] += 1
    for i in range(m):
        while counts[i] < demand[i]:
            j = int(rng.integers(n))
            if i not in covers[j]:
                covers[j].add(i)
                counts[i] += 1
    divisors = [g for g in range(1, n + 1) if n % g == 0]
    g = int(divisors[rng.integers(len(divisors))])
    blocks = []
    for h in range(n // g):
        members = list(range(h * g, (h + 1) * g))
        blocks.append((int(rng.integers(1, g + 1)), members))
    return Instance.from_columns(cost, [sorted(c) for c in covers], demand, blocks)


def random_gub_feasible(rng, inst):
    """Random selection that respects every block cap."""
    x = np.zeros(inst.n, dtype=bool)
    for h in range(inst.k):
        members = inst.block_cols[h]
        take = int(rng.integers(0, inst.cap[h] + 1))
        if take:
            pick = rng.choice(members, size=min(take, len(members)), replace=False)
            x[pick] = True
    return x


def random_weights(rng, inst, integer=True):
    wbar = int(inst.cost.sum()) + 1
    if integer:
        return rng.integers(1, wbar + 1, size=inst.m).astype(float)
    return rng.uniform(0.5, wbar, size=inst.m)


def nb1_state(rng, inst, w=None):
    """A single-flip local optimum reached from a random feasible start."""
    if w is None:
        w = np.full(inst.m, float(inst.cost.sum() + 1))
    state = localsearch.SearchState(inst, w, x0=random_gub_feasible(rng, inst))
    localsearch.two_fnls(state, one_flip_only=True)
    return state


def dense_arrays(inst):
    """(m x n) 0/1 coverage matrix and (k x n) block membership matrix."""
    a = np.zeros((inst.m, inst.n), dtype=np.int64)
    for j in range(inst.n):
        a[inst.col_rows[j], j] = 1
    g = np.zeros((inst.k, inst.n), dtype=np.int64)
    g[inst.block_of, np.arange(inst.n)] = 1
    return a, g


def penalized_dense(inst, a, xs, w):
    """Penalized objective of many solutions at once; xs is (r, n) 0/1."""
    s = xs @ a.T
    short = np.maximum(inst.demand[None, :] - s, 0)
    return xs @ inst.cost + short @ w


def all_pair_deltas(inst, x, w):
    """Exact penalized delta of every pair flip, plus GUB feasibility masks.

    Returns (deltas, ok) as (n, n) arrays over unordered pairs j1 < j2;
    entries with j1 >= j2 are undefined.  Small instances only: the pair
    solutions are materialized densely.
    """
    a, g = dense_arrays(inst)
    x = np.asarray(x, dtype=np.int64)
    n = inst.n
    j1s, j2s = np.triu_indices(n, k=1)
    xs = np.repeat(x[None, :], j1s.size, axis=0)
    xs[np.arange(j1s.size), j1s] ^= 1
    xs[np.arange(j2s.size), j2s] ^= 1
    vals = penalized_dense(inst, a, xs, np.asarray(w, dtype=float))
    base = penalized_dense(inst, a, x[None, :], np.asarray(w, dtype=float))[0]
    ok_flat = (xs @ g.T <= inst.cap[None, :]).all(axis=1)
    deltas = np.full((n, n), np.nan)
    ok = np.zeros((n, n), dtype=bool)
    deltas[j1s, j2s] = vals - base
    ok[j1s, j2s] = ok_flat
    return deltas, ok
