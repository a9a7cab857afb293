"""Adaptive penalty weights around the local search.

The search minimizes cost plus weighted shortfall.  Between search rounds
the weights move: up on violated rows when the current solution still
looks better than the best known (pushing the search toward coverage),
down uniformly when the penalized value has drifted above the best known
value (letting the search shed expensive columns).  Progress is always
measured against the initial weights, which never change.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .localsearch import BestTracker, two_fnls


def decrease_factor(state, fraction=0.15, eps=1e-9):
    """Uniform shrink factor eta for w <- (1 - eta) w.

    Chosen minimally so that at least ceil(fraction * n') of the selected
    columns end up with a negative drop gain, n' being the number of
    selected columns.  Columns already improving to drop count toward the
    quota; if the quota is already met (or nothing is selected) returns
    None and the weights should stay put.
    """
    sel = np.flatnonzero(state.x)
    if sel.size == 0:
        return None
    quota = math.ceil(fraction * sel.size)
    c = state.costf[sel]
    dpd = state.dp_down[sel]
    # dp_down <= 0 means the drop gain is -c, negative at any scale
    always = int((dpd <= 0).sum())
    need = quota - always
    if need <= 0:
        return None
    pos = dpd > 0
    # drop gain after scaling is -c + (1-eta) dpd, negative iff eta > 1 - c/dpd
    thresholds = np.sort(1.0 - c[pos] / dpd[pos])
    if thresholds.size == 0:
        return None
    v = float(thresholds[min(need, thresholds.size) - 1])
    eta = v + eps * max(1.0, abs(v))
    if eta <= 0:
        return None
    return min(eta, 1.0 - 1e-12)


def decrease_weights(state, fraction=0.15):
    eta = decrease_factor(state, fraction=fraction)
    if eta is not None:
        state.scale_weights(1.0 - eta)
    return eta


def increase_weights(state, delta=0.2):
    """Raise weights on violated rows, proportionally to their shortfall.

    The most violated row gains the full factor (1 + delta), others less,
    and nothing ever exceeds the initial weight.  No violation, no change.
    """
    y = np.maximum(state.b - state.s, 0).astype(float)
    ymax = float(y.max()) if y.size else 0.0
    if ymax == 0.0:
        return False
    w_new = np.minimum(state.w * (1.0 + delta * y / ymax), state.wbar)
    state.set_weights(w_new)
    return True


@dataclass
class WlsResult:
    x_hat: np.ndarray       # where the search stopped
    x_best: np.ndarray      # best seen under the initial weights
    zbar_best: float
    w: np.ndarray           # final weight vector
    iterations: int


def wls(state, window=50, delta=0.2, fraction=0.15, one_flip_only=False, move_cap=None,
        deadline=None):
    """Weighted local search: repeat two_fnls, adapting weights in between.

    Restarts the weights at their initial values, then loops: search,
    compare the best solution the round visited against the incumbent of
    this call (always under the initial weights), and stop after `window`
    rounds without improvement or when the deadline passes.  After each
    round the weights decrease when the round's end state is no better
    than that incumbent, and increase on the violated rows otherwise.
    """
    state.set_weights(np.full(state.inst.m, state.wbar))
    best_x = state.x.copy()
    best_val = state.zbar()
    fails = 0
    rounds = 0
    while True:
        rounds += 1
        tracker = BestTracker()
        two_fnls(state, one_flip_only=one_flip_only, tracker=tracker,
                 move_cap=move_cap, deadline=deadline)
        if tracker.value < best_val:
            best_val = tracker.value
            best_x = tracker.x
            fails = 0
        else:
            fails += 1
        if fails >= window:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        if state.zhat >= best_val:
            decrease_weights(state, fraction=fraction)
        else:
            increase_weights(state, delta=delta)
    return WlsResult(x_hat=state.x.copy(), x_best=best_x, zbar_best=best_val,
                     w=state.w.copy(), iterations=rounds)
