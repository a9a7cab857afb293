"""Heuristic problem-size reduction: variable fixing and core extraction.

Both lean on column scores derived from a dual-ish vector: the multipliers
from the subgradient phase, or the penalty weights when running without
one.  Fixing locks in columns that both guiding solutions agree on until a
fifth of the rows are covered by the fixed set alone; the core then keeps
only the attractively scored columns around the guiding solutions and the
search runs on that subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .localsearch import lowest_k
from .relaxation import reduced_costs


@dataclass
class FixResult:
    fixed: np.ndarray     # sorted fixed column indices
    scores_u: np.ndarray  # input vector with the satisfied rows zeroed
    exhausted: bool       # candidate pool ran dry before the coverage target


def fix_columns(inst, x_star, x_hat, u, rng, fraction=0.2):
    """Sample columns selected by both solutions into the fixed set.

    Draws without replacement, favoring low reduced cost under u, until
    the rows fully covered by the fixed set alone reach ceil(fraction*m).
    Those rows' entries are zeroed in the returned copy of u so they stop
    attracting further columns in the scores.
    """
    u = np.asarray(u, dtype=float)
    pool = list(np.flatnonzero(np.asarray(x_star, bool) & np.asarray(x_hat, bool)))
    rc = reduced_costs(inst, u)
    target = math.ceil(fraction * inst.m)
    covered = np.zeros(inst.m, dtype=np.int64)
    satisfied = int((inst.demand <= 0).sum())
    fixed = []
    exhausted = False
    while satisfied < target:
        if not pool:
            exhausted = True
            break
        live = np.asarray(pool)
        vals = rc[live]
        gaps = vals.max() - vals
        total = gaps.sum()
        if total > 0:
            pick = int(rng.choice(live.size, p=gaps / total))
        else:
            pick = int(rng.integers(live.size))
        j = pool.pop(pick)
        fixed.append(j)
        for i in inst.col_rows[j]:
            covered[i] += 1
            if covered[i] == inst.demand[i]:
                satisfied += 1
    scores_u = u.copy()
    scores_u[covered >= inst.demand] = 0.0
    return FixResult(np.asarray(sorted(fixed), dtype=np.int64), scores_u, exhausted)


@dataclass
class ReducedProblem:
    demand: np.ndarray    # residual demands after the fixed coverage
    cap: np.ndarray       # residual block caps
    nonfixed: np.ndarray  # bool mask of still-free columns
    fixed_cost: int


def apply_fixing(inst, fixed) -> ReducedProblem:
    """Fold the fixed columns into demands and caps; inst itself is untouched."""
    fixed = np.asarray(fixed, dtype=np.int64)
    nonfixed = np.ones(inst.n, dtype=bool)
    cover = np.zeros(inst.m, dtype=np.int64)
    if fixed.size:
        nonfixed[fixed] = False
        rows = np.concatenate([inst.col_rows[j] for j in fixed])
        cover = np.bincount(rows, minlength=inst.m).astype(np.int64)
    demand = np.maximum(inst.demand - cover, 0)
    cap = inst.cap - np.bincount(inst.block_of[fixed], minlength=inst.k)
    return ReducedProblem(demand=demand, cap=cap, nonfixed=nonfixed,
                          fixed_cost=int(inst.cost[fixed].sum()))


def lagrangian_scores(inst, u):
    """Plain reduced costs."""
    return reduced_costs(inst, u)


def normalized_scores(inst, u, cap=None, free=None):
    """Reduced costs shifted per block by the first over-cap member.

    Within each block the cap cheapest columns are the ones the relaxation
    could actually take; subtracting the (cap+1)-st lowest reduced cost
    (when negative) stops crowded blocks from flooding the core.  Blocks
    whose cap covers every member keep their raw values.
    """
    rc = reduced_costs(inst, u)
    d = inst.cap if cap is None else cap
    theta = np.zeros(inst.k)
    for h in range(inst.k):
        members = inst.block_cols[h]
        if free is not None:
            members = members[free[members]]
        dh = int(d[h])
        if 0 <= dh < members.size:
            theta[h] = np.partition(rc[members], dh)[dh]
    rho = rc.copy()
    shift = theta[inst.block_of]
    neg = shift < 0
    rho[neg] -= shift[neg]
    return rho


def pseudo_scores(inst, w):
    """Reduced costs with penalty weights standing in for multipliers."""
    return reduced_costs(inst, w)


def build_core(inst, scores, x_star, x_hat, demand=None, free=None, multiplier=10):
    """Column mask the reduced search is allowed to touch.

    Union of: per row, its demand's worth of best-scored covering columns;
    the multiplier * n' best-scored columns overall (n' = size of x_hat);
    and both guiding solutions.  Everything stays inside `free`.
    """
    b = inst.demand if demand is None else demand
    x_star = np.asarray(x_star, dtype=bool)
    x_hat = np.asarray(x_hat, dtype=bool)
    core = np.zeros(inst.n, dtype=bool)
    for i in range(inst.m):
        bi = int(b[i])
        if bi <= 0:
            continue
        cols = inst.row_cols[i]
        if free is not None:
            cols = cols[free[cols]]
        if cols.size <= bi:
            core[cols] = True
        else:
            order = np.lexsort((cols, scores[cols]))
            core[cols[order[:bi]]] = True
    pool = np.arange(inst.n) if free is None else np.flatnonzero(free)
    width = multiplier * int(x_hat.sum())
    if width >= pool.size:
        core[pool] = True
    elif width > 0:
        core[pool[lowest_k(scores[pool], width)]] = True
    core |= x_star
    core |= x_hat
    if free is not None:
        core &= free
    return core
