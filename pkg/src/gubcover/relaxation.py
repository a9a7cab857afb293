"""Lagrangian relaxation of the covering constraints and its subgradient solver.

Relaxing the covering rows with multipliers u >= 0 leaves a problem that
separates over the blocks: inside each block, pick columns with negative
reduced cost, at most cap of them.  The subgradient loop pushes the
resulting lower bound up and returns the best multiplier vector, which the
reduction heuristics reuse for scoring columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SubgradientParams:
    step_init: float = 2.0
    step_min: float = 0.005
    halve_after: int = 30           # stalled iterations before halving the step
    max_iters: int | None = None    # default 10 * m
    pricing: str = "auto"           # "auto" | "on" | "off"
    refresh: int = 100              # iterations between full evaluations
    core_factor: int = 5            # core keeps core_factor * m cheapest columns


@dataclass
class SubgradientResult:
    u: np.ndarray          # multipliers attaining the best full bound
    bound: float
    iterations: int
    evaluations: int       # full evaluations performed
    step_final: float


def reduced_costs(inst, u) -> np.ndarray:
    """c_j minus the multiplier mass of the rows column j covers."""
    u = np.asarray(u, dtype=float)
    return inst.cost.astype(float) - u @ inst.matrix()


def solve_lr(inst, u, rc=None, allowed=None, cap=None):
    """Closed-form minimizer of the relaxed objective.

    Per block: when at most cap columns have negative reduced cost, take
    exactly those; otherwise take the cap cheapest (ties to the lowest
    column index).  `allowed` restricts the choice to a column subset,
    `cap` overrides the block caps.  Returns (x, value).
    """
    if rc is None:
        rc = reduced_costs(inst, u)
    d = inst.cap if cap is None else np.asarray(cap, dtype=np.int64)
    neg = rc < 0
    if allowed is not None:
        neg = neg & allowed
    counts = np.bincount(inst.block_of[neg], minlength=inst.k)
    easy = counts <= d
    x = neg & easy[inst.block_of]
    for h in np.flatnonzero(~easy):
        members = inst.block_cols[h]
        if allowed is not None:
            members = members[allowed[members]]
        order = np.lexsort((members, rc[members]))
        x[members[order[: d[h]]]] = True
    value = float(rc[x].sum() + np.dot(inst.demand, np.asarray(u, dtype=float)))
    return x, value


def coverage_of(inst, x) -> np.ndarray:
    sel = np.flatnonzero(x)
    if sel.size == 0:
        return np.zeros(inst.m, dtype=np.int64)
    rows = np.concatenate([inst.col_rows[j] for j in sel])
    return np.bincount(rows, minlength=inst.m).astype(np.int64)


def _build_core(inst, rc, factor):
    """Column mask keeping the globally cheapest and per-block cheapest."""
    n = inst.n
    size = min(n, factor * inst.m)
    allowed = np.zeros(n, dtype=bool)
    if size >= n:
        allowed[:] = True
        return allowed
    allowed[np.argpartition(rc, size - 1)[:size]] = True
    # per-block: cap cheapest members, computed by rank within block
    order = np.lexsort((np.arange(n), rc, inst.block_of))
    sorted_blocks = inst.block_of[order]
    starts = np.flatnonzero(np.diff(sorted_blocks, prepend=-1))
    sizes = np.diff(starts, append=n)
    rank = np.arange(n) - np.repeat(starts, sizes)
    allowed[order[rank < inst.cap[sorted_blocks]]] = True
    return allowed


def subgradient_method(inst, ub, params: SubgradientParams | None = None) -> SubgradientResult:
    """Projected subgradient ascent on the Lagrangian dual.

    ub is the penalized value of the incumbent under the initial weights;
    the step is step * (ub - value) / ||g||^2 in the direction of the
    uncovered demand g.  The step halves after `halve_after` iterations
    without improvement and the loop stops once it falls below step_min,
    the iteration cap is hit, or g vanishes.

    With pricing on, iterations work on a reduced column core and only the
    periodic full evaluations update the returned bound (a core-restricted
    value is not a valid bound for the whole instance).
    """
    p = params or SubgradientParams()
    m = inst.m
    max_iters = p.max_iters if p.max_iters is not None else 10 * m
    core_size = min(inst.n, p.core_factor * m)
    if p.pricing == "on":
        pricing = True
    elif p.pricing == "off":
        pricing = False
    else:
        pricing = inst.n > max(4 * core_size, 20000)

    u = np.zeros(m)
    best_u = u.copy()
    best_lb = -np.inf
    best_seen = -np.inf
    lam = p.step_init
    stall = 0
    evals = 0
    allowed = None
    core_idx = None
    core_mat = None
    it = 0
    while it < max_iters and lam >= p.step_min:
        full = (not pricing) or (it % p.refresh == 0)
        if full:
            rc = reduced_costs(inst, u)
            x, value = solve_lr(inst, u, rc=rc)
            evals += 1
            if value > best_lb:
                best_lb = value
                best_u = u.copy()
            if pricing:
                allowed = _build_core(inst, rc, p.core_factor)
                core_idx = np.flatnonzero(allowed)
                core_mat = inst.matrix()[:, core_idx]
            if value >= ub:
                it += 1
                break
        else:
            rc = np.full(inst.n, np.inf)
            rc[core_idx] = inst.cost[core_idx] - u @ core_mat
            x, value = solve_lr(inst, u, rc=rc, allowed=allowed)
        if value > best_seen:
            best_seen = value
            stall = 0
        else:
            stall += 1
            if stall >= p.halve_after:
                lam *= 0.5
                stall = 0
        g = inst.demand - coverage_of(inst, x)
        gnorm2 = float(np.dot(g, g))
        it += 1
        if gnorm2 == 0.0:
            break
        step = lam * max(ub - value, 0.0) / gnorm2
        u = np.maximum(u + step * g, 0.0)
    # the last iterate never got a full look when pricing; give it one
    x, value = solve_lr(inst, u)
    evals += 1
    if value > best_lb:
        best_lb = value
        best_u = u.copy()
    return SubgradientResult(u=best_u, bound=best_lb, iterations=it, evaluations=evals, step_final=lam)
