"""Top-level solve loop.

Order of operations: randomized greedy runs fill the two reference pools,
one subgradient run prices the columns, then until the deadline: fix
agreed columns, carve out a scored core, run the weighted local search on
it, refresh the pools and relink a new starting point.  The incumbent is
always re-evaluated on the original instance.
"""

from __future__ import annotations

import subprocess
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import model, reduction
from .localsearch import SearchState, greedy_construct
from .pathrelink import ReferenceSet, draw_pair, walk
from .relaxation import SubgradientParams, subgradient_method
from .weighting import wls

SCORE_SCHEMES = ("lagrangian", "normalized", "pseudo", "none")


@dataclass
class SolverConfig:
    score: str = "pseudo"           # column scoring scheme, or "none" to skip reduction
    time_limit: float = 600.0       # seconds
    seed: int = 0
    neighborhood: str = "2flip"     # "2flip" | "1flip"
    path_relinking: bool = True
    greedy: str = "randomized"      # "randomized" | "uniform"
    greedy_width: int = 5           # candidate pool of the randomized greedy
    ref_capacity: int = 10          # size of each reference pool
    window: int = 50                # non-improving rounds before a search call stops
    weight_delta: float = 0.2       # increase factor on the most violated row
    weight_fraction: float = 0.15   # drop-gain quota for the uniform decrease
    fix_fraction: float = 0.2       # row-coverage target of the fixing step
    core_multiplier: int = 10       # core keeps multiplier * n' best columns
    compute_bound: bool = True      # run the subgradient phase even if scores don't need it
    subgradient: SubgradientParams = field(default_factory=SubgradientParams)
    target: float | None = None     # stop early at this objective (optional)
    max_iterations: int | None = None  # outer-loop cap (optional)

    def check(self):
        if self.score not in SCORE_SCHEMES:
            raise ValueError(f"unknown score scheme {self.score!r}")
        if self.neighborhood not in ("1flip", "2flip"):
            raise ValueError(f"unknown neighborhood {self.neighborhood!r}")
        if self.greedy not in ("randomized", "uniform"):
            raise ValueError(f"unknown greedy mode {self.greedy!r}")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.ref_capacity < 1 or self.greedy_width < 1 or self.window < 1:
            raise ValueError("ref_capacity, greedy_width and window must be >= 1")
        if not (0 < self.weight_fraction <= 1) or not (0 <= self.fix_fraction <= 1):
            raise ValueError("weight_fraction/fix_fraction out of range")
        return self


@dataclass
class RunResult:
    selected: list        # chosen column indices, 0-based
    objective: int
    feasible: bool
    penalized: float      # value under the initial weights
    cost_sum: int
    infeasibility_signal: bool  # penalized > cost_sum: no feasible solution found
    lower_bound: float | None
    iterations: int
    timeline: list        # (outer iteration, penalized value, elapsed seconds)
    core_fractions: list  # per-iteration |core| / n
    fix_exhaustions: int
    relink_fallbacks: int
    elapsed: float
    seed: int
    config: dict
    instance: dict
    build: str


def build_id() -> str:
    """Package version, with the git revision when running from a checkout."""
    try:
        version = metadata.version("gubcover")
    except metadata.PackageNotFoundError:
        version = "0+unknown"
    tag = f"gubcover-{version}"
    try:
        out = subprocess.run(
            ["git", "-C", str(Path(__file__).resolve().parent), "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            tag += "+" + out.stdout.strip()
    except Exception:
        pass
    return tag


def solve(inst, config: SolverConfig | None = None) -> RunResult:
    cfg = (config or SolverConfig()).check()
    t0 = time.monotonic()
    deadline = t0 + cfg.time_limit
    rng = np.random.default_rng(cfg.seed)
    wbar_vec = model.initial_weights(inst)
    wbar = float(wbar_vec[0]) if inst.m else 1.0
    cost_sum = int(inst.cost.sum())
    uniform = cfg.greedy == "uniform"

    def zbar_of(x):
        s = model.coverage_counts(inst, x)
        short = int(np.maximum(inst.demand - s, 0).sum())
        return float(inst.cost[np.asarray(x, bool)].sum() + wbar * short)

    r1 = ReferenceSet(cfg.ref_capacity)
    r2 = ReferenceSet(cfg.ref_capacity)
    for pool in (r1, r2):
        for _ in range(cfg.ref_capacity):
            st = greedy_construct(inst, wbar_vec, rng,
                                  width=cfg.greedy_width, uniform=uniform)
            pool.add_initial(st.x)

    x_hat = None
    star_val = np.inf
    for member in r1.members + r2.members:
        v = zbar_of(member)
        if v < star_val:
            star_val = v
            x_hat = member
    x_hat = x_hat.copy()
    x_star = x_hat.copy()
    timeline = [(0, star_val, time.monotonic() - t0)]

    bound = None
    u_tilde = np.zeros(inst.m)
    if cfg.compute_bound or cfg.score in ("lagrangian", "normalized"):
        sres = subgradient_method(inst, star_val, cfg.subgradient)
        bound = sres.bound
        u_tilde = sres.u

    w_cur = wbar_vec.copy()
    core_fractions: list[float] = []
    fix_exhaustions = 0
    relink_fallbacks = 0
    outer = 0

    def finished():
        if time.monotonic() - t0 >= cfg.time_limit:
            return True
        if cfg.max_iterations is not None and outer >= cfg.max_iterations:
            return True
        if cfg.target is not None and star_val <= cost_sum and star_val <= cfg.target:
            return True
        return False

    while not finished():
        outer += 1
        if cfg.score != "none":
            base = u_tilde if cfg.score in ("lagrangian", "normalized") else w_cur
            fres = reduction.fix_columns(inst, x_star, x_hat, base, rng,
                                         fraction=cfg.fix_fraction)
            if fres.exhausted:
                fix_exhaustions += 1
            red = reduction.apply_fixing(inst, fres.fixed)
            if cfg.score == "lagrangian":
                scores = reduction.lagrangian_scores(inst, fres.scores_u)
            elif cfg.score == "normalized":
                scores = reduction.normalized_scores(inst, fres.scores_u,
                                                     cap=red.cap, free=red.nonfixed)
            else:
                scores = reduction.pseudo_scores(inst, fres.scores_u)
            xh_free = x_hat & red.nonfixed
            core = reduction.build_core(inst, scores, x_star & red.nonfixed, xh_free,
                                        demand=red.demand, free=red.nonfixed,
                                        multiplier=cfg.core_multiplier)
            core_fractions.append(core.sum() / inst.n if inst.n else 0.0)
            fixed_mask = ~red.nonfixed
            state = SearchState(inst, wbar_vec, x0=xh_free,
                                demand=red.demand, cap=red.cap, free=core)
        else:
            fixed_mask = np.zeros(inst.n, dtype=bool)
            state = SearchState(inst, wbar_vec, x0=x_hat)

        wres = wls(state, window=cfg.window, delta=cfg.weight_delta,
                   fraction=cfg.weight_fraction,
                   one_flip_only=(cfg.neighborhood == "1flip"),
                   deadline=deadline)
        w_cur = wres.w
        x_hat = wres.x_hat | fixed_mask
        x_best = wres.x_best | fixed_mask
        v = zbar_of(x_best)
        if v < star_val:
            star_val = v
            x_star = x_best.copy()
            timeline.append((outer, star_val, time.monotonic() - t0))

        if cfg.path_relinking:
            def weval(x):
                return model.penalized_objective(inst, x, w_cur)

            r1.update(x_hat, weval(x_hat), [weval(mm) for mm in r1.members])
            r2.update(x_best, zbar_of(x_best), [zbar_of(mm) for mm in r2.members])
            init, guide, fallback = draw_pair(r1, r2, model.solution_key(x_hat),
                                              weval, rng)
            if fallback is not None:
                relink_fallbacks += 1
                x_hat = fallback.copy()
            else:
                x_hat = walk(inst, w_cur, init, guide)

    elapsed = time.monotonic() - t0
    feasible = model.is_feasible(inst, x_star)
    penalized = zbar_of(x_star)
    return RunResult(
        selected=[int(j) for j in np.flatnonzero(x_star)],
        objective=int(inst.cost[x_star].sum()),
        feasible=bool(feasible),
        penalized=penalized,
        cost_sum=cost_sum,
        infeasibility_signal=penalized > cost_sum,
        lower_bound=bound,
        iterations=outer,
        timeline=[(int(i), float(v), float(e)) for i, v, e in timeline],
        core_fractions=[float(f) for f in core_fractions],
        fix_exhaustions=fix_exhaustions,
        relink_fallbacks=relink_fallbacks,
        elapsed=elapsed,
        seed=cfg.seed,
        config=asdict(cfg),
        instance={"m": inst.m, "n": inst.n, "k": inst.k, "nnz": inst.nnz},
        build=build_id(),
    )
