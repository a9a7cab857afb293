"""Instance file formats, the random instance generator, and run output.

Three input formats are understood, all whitespace-token streams and all
transparently gzip-decompressed for .gz paths:

* native ("gub"): header "m n k", then n costs, m demands, m row lines
  ("count idx..." with 1-based column indices), and k block lines
  ("cap size idx...").  The writer emits exactly this shape, so
  write -> read -> write is byte-identical.
* "orlib": set covering, row-major.  Header "m n", n costs, then per row a
  count and the covering columns.  Demands become 1, every column gets its
  own block with cap 1.
* "rail": set covering, column-major.  Header "m n", then per column its
  cost, a count and the covered rows.  Demands and blocks as for orlib.
"""

from __future__ import annotations

import csv
import gzip
import json
from dataclasses import asdict, dataclass

import numpy as np

from .model import Instance

FORMATS = ("gub", "orlib", "rail")


class FormatError(ValueError):
    """Malformed instance or solution file."""


class _Tokens:
    """Whitespace token stream that tracks line numbers for error messages."""

    def __init__(self, fh):
        self._lines = enumerate(fh, start=1)
        self._line_no = 0
        self._buf = iter(())

    def next_int(self, what, lo=None, hi=None):
        tok = self._next(what)
        try:
            value = int(tok)
        except ValueError:
            raise FormatError(
                f"line {self._line_no}: expected integer ({what}), got {tok!r}"
            ) from None
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            raise FormatError(f"line {self._line_no}: {what} {value} out of range")
        return value

    def _next(self, what):
        while True:
            tok = next(self._buf, None)
            if tok is not None:
                return tok
            nxt = next(self._lines, None)
            if nxt is None:
                raise FormatError(
                    f"line {self._line_no}: unexpected end of file while reading {what}"
                )
            self._line_no, text = nxt
            self._buf = iter(text.split())

    def expect_eof(self):
        tok = next(self._buf, None)
        if tok is None:
            for self._line_no, text in self._lines:
                toks = text.split()
                if toks:
                    tok = toks[0]
                    break
        if tok is not None:
            raise FormatError(f"line {self._line_no}: trailing data {tok!r}")


def _open_text(path, mode="rt"):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode.rstrip("t") or "r")


def read_gub(path) -> Instance:
    with _open_text(path) as fh:
        t = _Tokens(fh)
        m = t.next_int("row count", lo=1)
        n = t.next_int("column count", lo=1)
        k = t.next_int("block count", lo=1)
        cost = [t.next_int(f"cost of column {j + 1}", lo=1) for j in range(n)]
        demand = [t.next_int(f"demand of row {i + 1}", lo=0) for i in range(m)]
        col_rows = [[] for _ in range(n)]
        for i in range(m):
            cnt = t.next_int(f"cover count of row {i + 1}", lo=0, hi=n)
            for _ in range(cnt):
                j = t.next_int(f"covering column of row {i + 1}", lo=1, hi=n)
                col_rows[j - 1].append(i)
        blocks = []
        seen = np.zeros(n, dtype=np.int64)
        for h in range(k):
            cap = t.next_int(f"cap of block {h + 1}", lo=0)
            size = t.next_int(f"size of block {h + 1}", lo=1, hi=n)
            members = [
                t.next_int(f"member of block {h + 1}", lo=1, hi=n) - 1
                for _ in range(size)
            ]
            seen[members] += 1
            blocks.append((cap, members))
        t.expect_eof()
    if np.any(seen != 1):
        j = int(np.flatnonzero(seen != 1)[0])
        raise FormatError(f"column {j + 1} appears in {seen[j]} blocks")
    return Instance.from_columns(cost, col_rows, demand, blocks)


def read_orlib_scp(path) -> Instance:
    with _open_text(path) as fh:
        t = _Tokens(fh)
        m = t.next_int("row count", lo=1)
        n = t.next_int("column count", lo=1)
        cost = [t.next_int(f"cost of column {j + 1}", lo=1) for j in range(n)]
        col_rows = [[] for _ in range(n)]
        for i in range(m):
            cnt = t.next_int(f"cover count of row {i + 1}", lo=0, hi=n)
            for _ in range(cnt):
                j = t.next_int(f"covering column of row {i + 1}", lo=1, hi=n)
                col_rows[j - 1].append(i)
        t.expect_eof()
    blocks = [(1, [j]) for j in range(n)]
    return Instance.from_columns(cost, col_rows, np.ones(m, dtype=np.int64), blocks)


def read_rail(path) -> Instance:
    with _open_text(path) as fh:
        t = _Tokens(fh)
        m = t.next_int("row count", lo=1)
        n = t.next_int("column count", lo=1)
        col_rows = []
        cost = []
        for j in range(n):
            cost.append(t.next_int(f"cost of column {j + 1}", lo=1))
            cnt = t.next_int(f"row count of column {j + 1}", lo=1, hi=m)
            rows = [
                t.next_int(f"covered row of column {j + 1}", lo=1, hi=m) - 1
                for _ in range(cnt)
            ]
            col_rows.append(rows)
        t.expect_eof()
    blocks = [(1, [j]) for j in range(n)]
    return Instance.from_columns(cost, col_rows, np.ones(m, dtype=np.int64), blocks)


_READERS = {"gub": read_gub, "orlib": read_orlib_scp, "rail": read_rail}


def read_instance(path, fmt="gub") -> Instance:
    try:
        reader = _READERS[fmt]
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}") from None
    return reader(path)


def write_gub(inst: Instance, path):
    with _open_text(path, "wt") as fh:
        fh.write(f"{inst.m} {inst.n} {inst.k}\n")
        fh.write(" ".join(str(int(c)) for c in inst.cost) + "\n")
        fh.write(" ".join(str(int(b)) for b in inst.demand) + "\n")
        for i in range(inst.m):
            cols = inst.row_cols[i]
            fh.write(" ".join([str(len(cols))] + [str(int(j) + 1) for j in cols]) + "\n")
        for h in range(inst.k):
            members = inst.block_cols[h]
            fh.write(
                " ".join(
                    [str(int(inst.cap[h])), str(len(members))]
                    + [str(int(j) + 1) for j in members]
                )
                + "\n"
            )


def parse_solution(path) -> np.ndarray:
    """Read a solution as whitespace-separated 1-based column indices."""
    with _open_text(path) as fh:
        tokens = fh.read().split()
    out = []
    for pos, tok in enumerate(tokens, start=1):
        try:
            value = int(tok)
        except ValueError:
            raise FormatError(f"token {pos}: expected column index, got {tok!r}") from None
        if value < 1:
            raise FormatError(f"token {pos}: column index {value} out of range")
        out.append(value - 1)
    return np.asarray(sorted(set(out)), dtype=np.int64)


# -- random instances ---------------------------------------------------


@dataclass
class GeneratorParams:
    rows: int
    cols: int
    density: float
    block_size: int
    cap: int
    cost_lo: int = 1
    cost_hi: int = 100
    demand_lo: int = 1
    demand_hi: int = 5
    seed: int = 0

    def check(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        if not (0 < self.density < 1):
            raise ValueError("density must be in (0, 1)")
        if self.cols % self.block_size != 0:
            raise ValueError("block_size must divide cols")
        if not (1 <= self.cap <= self.block_size):
            raise ValueError("cap must be in [1, block_size]")
        if not (1 <= self.cost_lo <= self.cost_hi):
            raise ValueError("bad cost range")
        if not (0 <= self.demand_lo <= self.demand_hi):
            raise ValueError("bad demand range")
        return self


def generate(params: GeneratorParams):
    """Random instance: Bernoulli coverage, uniform costs and demands.

    Post-processing guarantees that every column covers at least one row
    and every row is covered by at least max(demand, 2) columns, so the
    covering side alone is always satisfiable; the block caps may still
    make an instance infeasible, which is left to the solver to detect.

    Columns are emitted in ascending cost order and blocks take contiguous
    index ranges, so each block groups columns of similar cost.  With loose
    caps this is harmless; with tight caps (say 1 of 10) it forces any
    solution to climb the cost distribution, which is what makes the tight
    variants noticeably harder than their uncapped counterparts.
    Deterministic per seed.  Returns (instance, stats).
    """
    p = params.check()
    rng = np.random.default_rng(p.seed)
    cost = rng.integers(p.cost_lo, p.cost_hi + 1, size=p.cols)
    demand = rng.integers(p.demand_lo, p.demand_hi + 1, size=p.rows)
    col_rows = []
    chunk = 512
    for lo in range(0, p.cols, chunk):
        width = min(chunk, p.cols - lo)
        hits = rng.random((width, p.rows)) < p.density
        for c in range(width):
            col_rows.append(list(np.flatnonzero(hits[c])))
    empty_fixes = 0
    for j in range(p.cols):
        if not col_rows[j]:
            col_rows[j] = [int(rng.integers(p.rows))]
            empty_fixes += 1
    counts = np.zeros(p.rows, dtype=np.int64)
    covers = [set(r) for r in col_rows]
    for j in range(p.cols):
        for i in col_rows[j]:
            counts[i] += 1
    row_fixes = 0
    for i in range(p.rows):
        need = max(int(demand[i]), 2)
        while counts[i] < need:
            j = int(rng.integers(p.cols))
            if i in covers[j]:
                continue
            covers[j].add(i)
            col_rows[j].append(i)
            counts[i] += 1
            row_fixes += 1
    order = np.argsort(cost, kind="stable")
    cost = cost[order]
    col_rows = [col_rows[j] for j in order]
    k = p.cols // p.block_size
    blocks = [
        (p.cap, list(range(h * p.block_size, (h + 1) * p.block_size)))
        for h in range(k)
    ]
    inst = Instance.from_columns(cost, col_rows, demand, blocks)
    achieved = inst.density()
    stats = {
        "target_density": p.density,
        "achieved_density": achieved,
        "density_within_10pct": abs(achieved - p.density) <= 0.1 * p.density,
        "empty_column_repairs": empty_fixes,
        "row_coverage_repairs": row_fixes,
    }
    return inst, stats


# -- run output ----------------------------------------------------------

RESULT_CSV_FIELDS = [
    "instance", "scheme", "seed", "objective", "feasible", "penalized",
    "lower_bound", "iterations", "elapsed", "build",
]


def write_result_json(result, path, instance_name=None):
    payload = asdict(result) if not isinstance(result, dict) else dict(result)
    if instance_name is not None:
        payload["instance_name"] = str(instance_name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def result_csv_row(result, instance_name="") -> dict:
    return {
        "instance": str(instance_name),
        "scheme": result.config["score"],
        "seed": result.seed,
        "objective": result.objective,
        "feasible": int(result.feasible),
        "penalized": result.penalized,
        "lower_bound": "" if result.lower_bound is None else result.lower_bound,
        "iterations": result.iterations,
        "elapsed": f"{result.elapsed:.3f}",
        "build": result.build,
    }


def append_result_csv(result, path, instance_name=""):
    import os

    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_CSV_FIELDS)
        if new:
            writer.writeheader()
        writer.writerow(result_csv_row(result, instance_name))
