"""Two-flip neighborhood local search with incremental evaluation.

The search works on the penalized objective: cost of the selected columns
plus, for every row, weight times the remaining shortfall.  SearchState
keeps per-column flip gains current under single flips, so evaluating a
move is O(1) and applying one costs time proportional to the adjacency of
the touched rows.

Moves never violate the block caps; the covering constraints are the soft
part handled by the weights.

The cached quantities, for the current solution x:

  s[i]        selected columns covering row i
  dp_up[j]    sum of w[i] over covered rows with s[i] <  demand[i]
  dp_down[j]  sum of w[i] over covered rows with s[i] <= demand[i]

so flipping j up changes the penalized value by cost[j] - dp_up[j] and
flipping it down by -cost[j] + dp_down[j].  A flip of j shifts s on its
rows by one; only rows crossing the demand threshold require touching the
dp entries of their adjacent columns.
"""

from __future__ import annotations

import time

import numpy as np


class SearchState:
    """One working solution plus everything needed to evaluate flips fast.

    demand / cap / free override the instance data for reduced problems:
    columns outside `free` are frozen at zero and never proposed.  The
    weight vector is owned by the state (copied in) because the weighting
    scheme rescales it in place between search rounds.
    """

    def __init__(self, inst, weights, x0=None, demand=None, cap=None, free=None):
        self.inst = inst
        self.b = np.array(inst.demand if demand is None else demand, dtype=np.int64)
        self.d = np.array(inst.cap if cap is None else cap, dtype=np.int64)
        if free is None:
            self.free = np.ones(inst.n, dtype=bool)
        else:
            self.free = np.array(free, dtype=bool)
        self.w = np.array(weights, dtype=float)
        self.wbar = float(inst.cost.sum() + 1)
        self.costf = inst.cost.astype(float)
        self.x = np.zeros(inst.n, dtype=bool)
        if x0 is not None:
            self.x |= np.asarray(x0, dtype=bool)
        if np.any(self.x & ~self.free):
            raise ValueError("initial solution selects frozen columns")
        self._rebuild()
        if np.any(self.blk > self.d):
            raise ValueError("initial solution violates a block cap")

    # -- construction / resync -------------------------------------------

    def _rebuild(self):
        inst = self.inst
        a = inst.matrix()
        self.s = (a @ self.x.astype(np.int64)).astype(np.int64)
        sel = np.flatnonzero(self.x)
        self.blk = np.bincount(inst.block_of[sel], minlength=inst.k).astype(np.int64)
        self.cost = int(inst.cost[sel].sum())
        short = np.maximum(self.b - self.s, 0)
        self.viol = int(short.sum())
        self.zhat = self.cost + float(np.dot(self.w, short))
        self.dp_up = (self.w * (self.s < self.b)) @ a
        self.dp_down = (self.w * (self.s <= self.b)) @ a

    def resync_zhat(self):
        """Recompute the scalar penalized value from s; cheap drift guard."""
        short = np.maximum(self.b - self.s, 0)
        self.zhat = self.cost + float(np.dot(self.w, short))

    def set_weights(self, w):
        """Install a new weight vector and rebuild the dp tables."""
        self.w = np.array(w, dtype=float)
        a = self.inst.matrix()
        self.dp_up = (self.w * (self.s < self.b)) @ a
        self.dp_down = (self.w * (self.s <= self.b)) @ a
        self.resync_zhat()

    def scale_weights(self, factor):
        """Uniform rescaling; the dp tables scale along, no rebuild needed."""
        self.w *= factor
        self.dp_up *= factor
        self.dp_down *= factor
        self.resync_zhat()

    # -- evaluation -------------------------------------------------------

    def zbar(self) -> float:
        """Penalized value under the initial uniform weights."""
        return self.cost + self.wbar * self.viol

    def delta_up(self, j) -> float:
        return self.costf[j] - self.dp_up[j]

    def delta_down(self, j) -> float:
        return -self.costf[j] + self.dp_down[j]

    def two_flip_delta(self, j1, j2) -> float:
        """Gain of dropping selected j1 and adding unselected j2.

        The single-flip gains double-count rows both columns cover that sit
        exactly at their demand, hence the correction term.
        """
        inst = self.inst
        common = np.intersect1d(inst.col_rows[j1], inst.col_rows[j2], assume_unique=True)
        corr = 0.0
        if common.size:
            at = common[self.s[common] == self.b[common]]
            corr = float(self.w[at].sum())
        return self.delta_down(j1) + self.delta_up(j2) - corr

    # -- mutation ---------------------------------------------------------

    def flip(self, j):
        if self.x[j]:
            self._flip_down(j)
        else:
            self._flip_up(j)

    def _flip_up(self, j):
        inst = self.inst
        h = inst.block_of[j]
        assert not self.x[j] and self.free[j] and self.blk[h] < self.d[h]
        self.zhat += self.costf[j] - self.dp_up[j]
        self.x[j] = True
        self.cost += int(inst.cost[j])
        self.blk[h] += 1
        w, b, s = self.w, self.b, self.s
        for i in inst.col_rows[j]:
            si = s[i] + 1
            s[i] = si
            if si <= b[i]:
                self.viol -= 1
            if si == b[i]:
                self.dp_up[inst.row_cols[i]] -= w[i]
            elif si == b[i] + 1:
                self.dp_down[inst.row_cols[i]] -= w[i]

    def _flip_down(self, j):
        inst = self.inst
        assert self.x[j]
        self.zhat += -self.costf[j] + self.dp_down[j]
        self.x[j] = False
        self.cost -= int(inst.cost[j])
        self.blk[inst.block_of[j]] -= 1
        w, b, s = self.w, self.b, self.s
        for i in inst.col_rows[j]:
            si = s[i] - 1
            s[i] = si
            if si < b[i]:
                self.viol += 1
            if si == b[i] - 1:
                self.dp_up[inst.row_cols[i]] += w[i]
            elif si == b[i]:
                self.dp_down[inst.row_cols[i]] += w[i]

    def trial_flip_down(self, j):
        """Flip selected j down, remembering enough to undo it exactly.

        Returns (opened_rows, undo).  opened_rows are the covered rows that
        dropped to demand-1, i.e. the rows whose adjacent columns just got
        more attractive to add; the swap search scans exactly those.  undo
        restores every touched cell from saved copies, so restoration is
        bit-exact even with real-valued weights.
        """
        inst = self.inst
        assert self.x[j]
        rows = inst.col_rows[j]
        undo = {
            "j": j,
            "cost": self.cost,
            "viol": self.viol,
            "zhat": self.zhat,
            "s": self.s[rows].copy(),
            "patches": [],
        }
        self.zhat += -self.costf[j] + self.dp_down[j]
        self.x[j] = False
        self.cost -= int(inst.cost[j])
        self.blk[inst.block_of[j]] -= 1
        w, b, s = self.w, self.b, self.s
        opened = []
        for i in rows:
            si = s[i] - 1
            s[i] = si
            if si < b[i]:
                self.viol += 1
            if si == b[i] - 1:
                cols = inst.row_cols[i]
                undo["patches"].append((self.dp_up, cols, self.dp_up[cols].copy()))
                self.dp_up[cols] += w[i]
                opened.append(i)
            elif si == b[i]:
                cols = inst.row_cols[i]
                undo["patches"].append((self.dp_down, cols, self.dp_down[cols].copy()))
                self.dp_down[cols] += w[i]
        return opened, undo

    def undo_trial(self, undo):
        j = undo["j"]
        for arr, idx, saved in reversed(undo["patches"]):
            arr[idx] = saved
        self.s[self.inst.col_rows[j]] = undo["s"]
        self.x[j] = True
        self.blk[self.inst.block_of[j]] += 1
        self.cost = undo["cost"]
        self.viol = undo["viol"]
        self.zhat = undo["zhat"]

    def copy_solution(self) -> np.ndarray:
        return self.x.copy()


class BestTracker:
    """Remembers the best solution under the initial weights seen so far."""

    def __init__(self):
        self.value = np.inf
        self.x = None

    def observe(self, state: SearchState):
        v = state.zbar()
        if v < self.value:
            self.value = v
            self.x = state.x.copy()


def _observe(tracker, state):
    if tracker is not None:
        tracker.observe(state)


def _add_candidates(state: SearchState):
    open_blocks = state.blk < state.d
    return ~state.x & state.free & open_blocks[state.inst.block_of]


def gain_tol(state) -> float:
    """Minimum gain a move must clear to count as improving.

    Relative to the current penalized value.  The weight-decrease step
    parks weights a whisker below exact break-even ratios on purpose;
    without this floor the swap scan can chew through endless chains of
    break-even-minus-epsilon moves that change nothing.  Integer-weight
    gains are whole numbers and sit far above the floor.
    """
    return 1e-6 * max(1.0, abs(state.zhat))


def _step_add(state, tracker, budget):
    """Flip the best improving unselected column until none improves."""
    moved = False
    while budget[0] > 0:
        deltas = np.where(_add_candidates(state), state.costf - state.dp_up, np.inf)
        j = int(np.argmin(deltas))
        if not deltas[j] < -gain_tol(state):
            break
        state._flip_up(j)
        _observe(tracker, state)
        budget[0] -= 1
        moved = True
    return moved


def _step_drop(state, tracker, budget):
    """Flip the best improving selected column until none improves."""
    moved = False
    while budget[0] > 0:
        deltas = np.where(state.x, -state.costf + state.dp_down, np.inf)
        j = int(np.argmin(deltas))
        if not deltas[j] < -gain_tol(state):
            break
        state._flip_down(j)
        _observe(tracker, state)
        budget[0] -= 1
        moved = True
    return moved


def _block_argmin_pair(state, h):
    """Best drop and best add inside block h, or None when one side is empty."""
    members = state.inst.block_cols[h]
    selected = members[state.x[members]]
    addable = members[~state.x[members] & state.free[members]]
    if selected.size == 0 or addable.size == 0:
        return None
    j1 = selected[int(np.argmin(-state.costf[selected] + state.dp_down[selected]))]
    j2 = addable[int(np.argmin(state.costf[addable] - state.dp_up[addable]))]
    return int(j1), int(j2)


def _step_swap_saturated(state, tracker, budget):
    """Swap inside saturated blocks while any such swap improves.

    Inside a block at its cap, a single add is never allowed, so the only
    candidate is the pair (cheapest drop, cheapest add); if some improving
    swap exists there with no shared exactly-covered row, that pair is
    improving too, which is what makes checking one pair per block enough.
    """
    moved = False
    while budget[0] > 0:
        updated = False
        for h in np.flatnonzero(state.blk == state.d):
            pair = _block_argmin_pair(state, h)
            if pair is None:
                continue
            j1, j2 = pair
            if state.two_flip_delta(j1, j2) < -gain_tol(state):
                state._flip_down(j1)
                state._flip_up(j2)
                _observe(tracker, state)
                budget[0] -= 1
                updated = True
                moved = True
        if not updated:
            break
    return moved


def _best_swap_for(state, j1, d1, opened):
    """Best partner to add after trially dropping j1.

    Candidates are the unselected columns covering a row that the drop
    pushed below demand; any other column shares no newly-short row with
    j1 and cannot combine with it for a gain beyond the two single flips.
    Caps are checked against the trial state, where j1 is already out.
    """
    if not opened:
        return None
    cols = np.unique(np.concatenate([state.inst.row_cols[i] for i in opened]))
    cols = cols[~state.x[cols] & state.free[cols]]
    if cols.size == 0:
        return None
    hb = state.inst.block_of[cols]
    cols = cols[state.blk[hb] < state.d[hb]]
    if cols.size == 0:
        return None
    deltas = d1 + state.costf[cols] - state.dp_up[cols]
    pos = int(np.argmin(deltas))
    return float(deltas[pos]), int(cols[pos])


def _scan_candidates(state):
    """Selected columns that could anchor an improving swap, scan-ordered.

    For selected j1 the best conceivable pair gain is bounded below by
    Δẑ_j1↓ + (cheapest add gain) − (total weight of j1's exactly-covered
    rows), the last term being dp_down − dp_up.  The add-gain floor is the
    minimum over cap-open blocks, or over j1's own block mates, which the
    drop itself reopens.  Columns whose bound is nonnegative cannot start
    an improving swap and are dropped before any trial work.
    """
    inst = state.inst
    sel = np.flatnonzero(state.x)
    if sel.size == 0:
        return sel
    gains = np.where(~state.x & state.free, state.costf - state.dp_up, np.inf)
    open_blocks = state.blk < state.d
    open_gain = gains[open_blocks[inst.block_of]].min(initial=np.inf)
    block_gain = np.full(inst.k, np.inf)
    np.minimum.at(block_gain, inst.block_of, gains)
    floor = np.minimum(open_gain, block_gain[inst.block_of[sel]])
    d1 = -state.costf[sel] + state.dp_down[sel]
    bound = d1 + floor - (state.dp_down[sel] - state.dp_up[sel])
    keep = sel[bound < 0]
    return keep[np.lexsort((keep, -state.costf[keep] + state.dp_down[keep]))]


def _step_swap_scan(state, tracker, budget):
    """Drop/add swaps over the selected columns, first hit wins.

    Visits the candidate columns by ascending drop gain (order frozen at
    entry), tries each as the dropped half of a swap, and applies the best
    improving partner of the first column that has one.  The caller then
    restarts from the single-flip phases, so at most one swap lands here.
    """
    for j1 in _scan_candidates(state):
        if budget[0] <= 0:
            break
        d1 = state.delta_down(j1)
        opened, undo = state.trial_flip_down(j1)
        best = _best_swap_for(state, j1, d1, opened)
        if best is not None and best[0] < -gain_tol(state):
            state._flip_up(best[1])
            _observe(tracker, state)
            budget[0] -= 1
            return True
        state.undo_trial(undo)
    return False


def two_fnls(state: SearchState, one_flip_only=False, tracker=None, move_cap=None,
             deadline=None):
    """Drive the state to a local optimum of the penalized objective.

    Phase order: exhaust improving adds, exhaust improving drops, swap
    inside saturated blocks, then scan for general drop/add swaps; any
    accepted pair move restarts the cycle, so on exit no phase has an
    improving move left.  Single-flip phases always run to completion
    before the pair phases, and the routine only ever accepts strictly
    improving moves.

    deadline (time.monotonic seconds) cuts the run short between phases;
    near-uniform weights can make the swap scan grind through long chains
    of tiny gains, and the caller's time budget outranks local optimality.
    move_cap bounds the total accepted flips as insurance against
    float-induced cycling after weight rescaling.
    """
    state.resync_zhat()
    _observe(tracker, state)
    budget = [move_cap if move_cap is not None else 200 * state.inst.n + 1000]
    while True:
        # alternate the single-flip phases until quiet: under small weights
        # an accepted drop can uncover rows and re-enable adds
        while budget[0] > 0:
            _step_add(state, tracker, budget)
            if not _step_drop(state, tracker, budget):
                break
        if one_flip_only or budget[0] <= 0:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        if _step_swap_saturated(state, tracker, budget):
            continue
        if not _step_swap_scan(state, tracker, budget):
            break
    return state


def find_improving_two_flip(state: SearchState):
    """Locate one improving two-column move without changing the state.

    Meant for states with no improving single flip; under that premise the
    saturated-block argmin pairs and the trial-drop scan together cover
    every improving pair move.  Returns (delta, j1, j2) or None.
    """
    for h in np.flatnonzero(state.blk == state.d):
        pair = _block_argmin_pair(state, h)
        if pair is None:
            continue
        delta = state.two_flip_delta(*pair)
        if delta < 0:
            return float(delta), pair[0], pair[1]
    for j1 in _scan_candidates(state):
        d1 = state.delta_down(j1)
        opened, undo = state.trial_flip_down(j1)
        best = _best_swap_for(state, j1, d1, opened)
        state.undo_trial(undo)
        if best is not None and best[0] < 0:
            return best[0], int(j1), best[1]
    return None


def lowest_k(values, k):
    """Indices of the k smallest values, ties to the lowest index."""
    if k >= values.size:
        return np.arange(values.size)
    kth = np.partition(values, k - 1)[k - 1]
    strict = np.flatnonzero(values < kth)
    tied = np.flatnonzero(values == kth)
    return np.concatenate([strict, tied[: k - strict.size]])


def greedy_construct(inst, weights, rng, width=5, uniform=False,
                     demand=None, cap=None, free=None):
    """Randomized greedy start: noisy add phase, then a clean drop phase.

    Adds improving columns one at a time, picking uniformly among the
    `width` best candidates (or among all candidates when uniform=True),
    then removes redundant columns the usual way so no selected column has
    a negative drop gain.  Returns the SearchState.
    """
    state = SearchState(inst, weights, demand=demand, cap=cap, free=free)
    while True:
        deltas = np.where(_add_candidates(state), state.costf - state.dp_up, np.inf)
        cand = np.flatnonzero(deltas < 0)
        if cand.size == 0:
            break
        if uniform:
            j = int(cand[rng.integers(cand.size)])
        else:
            pool = cand[lowest_k(deltas[cand], width)]
            j = int(pool[rng.integers(pool.size)])
        state._flip_up(j)
    _step_drop(state, None, [1 << 60])
    return state
