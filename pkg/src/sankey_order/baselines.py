"""Exact solver, unweighted barycentre baseline, random instances and the robust test."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import CrossingReport, Edge, LayeredGraph, Ordering, crossing_report, total_crossing
from .markov import Stage1Config, order_by_position, run_stage1
from .refine import Stage2Config, run_stage2

RATIO_EPS = 1e-9
TIE_RTOL = 1e-9


class BudgetExceeded(RuntimeError):
    pass


def ratio(x: float, y: float, eps: float = RATIO_EPS) -> float:
    """(x + eps) / (y + eps): heuristic crossing x against optimum y."""
    return (x + eps) / (y + eps)


# -- exact -----------------------------------------------------------------


def _before_matrices(perms: np.ndarray) -> np.ndarray:
    """B[t, x, y] = 1 when vertex x precedes vertex y in permutation t."""
    k = perms.shape[1]
    rank = np.empty_like(perms)
    rows = np.arange(len(perms))[:, None]
    rank[rows, perms] = np.arange(k)
    return (rank[:, :, None] < rank[:, None, :]).astype(float)


def pair_table(m: np.ndarray, row_perms: np.ndarray, col_perms: np.ndarray) -> np.ndarray:
    """Weighted crossing of ``m`` for every (row permutation, column permutation) pair.

    Rows a above b cross where a's column y comes after b's column x, adding
    m[a, y] * m[b, x]. Per row pair that is (M Q_t M^T)[b, a] with Q_t the
    column precedence of permutation t; the table contracts it with the row
    precedence.
    """
    m = np.asarray(m, dtype=float)
    rows_before = _before_matrices(row_perms)  # [s, a, b]: a above b
    cols_before = _before_matrices(col_perms)  # [t, x, y]: x before y
    # g[t, b, a] = sum_{x before y} m[b, x] m[a, y]
    g = np.einsum("bx,txy,ay->tba", m, cols_before, m)
    return np.einsum("sab,tba->st", rows_before, g)


def _all_perms(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.intp).reshape(-1, k)


def search_size(g: LayeredGraph) -> int:
    """Number of (ordering pair) evaluations the exact solver performs."""
    f = [math.factorial(s) for s in g.sizes]
    work = sum(f[i] * f[i + 1] for i in range(g.n - 1))
    if g.is_cycle:
        work = f[0] * (work + f[-1])
    return work


def brute_force_optimal(g: LayeredGraph, budget: int = 10**7) -> tuple[Ordering, CrossingReport]:
    """Globally minimal weighted crossing over all per-level permutations.

    Crossings only couple successive levels, so the search over the product
    of per-level permutations runs as a shortest path through the levels,
    with one path per fixed first-level permutation in cycle form. Among
    optimal orderings the lexicographically first (by permutation index per
    level, in itertools order) is returned.
    """
    if search_size(g) > budget:
        raise BudgetExceeded(f"exact search needs {search_size(g)} evaluations, budget is {budget}")
    perms = [_all_perms(s) for s in g.sizes]
    n = g.n
    tables = [pair_table(g.matrices[i], perms[i], perms[i + 1]) for i in range(n - 1)]
    closing = pair_table(g.matrices[n - 1], perms[n - 1], perms[0]) if g.is_cycle else None

    def solve(first: int | None) -> tuple[float, list[int]]:
        # cost[i][s]: best cost of levels i..n given permutation s at level i
        last = closing[:, first] if closing is not None else np.zeros(len(perms[-1]))
        cost = [None] * n
        cost[n - 1] = last
        for i in range(n - 2, -1, -1):
            cost[i] = (tables[i] + cost[i + 1][None, :]).min(axis=1)
        starts = [first] if first is not None else range(len(perms[0]))
        start_cost = cost[0][list(starts)]
        target = start_cost.min()
        pick = [s for s, c in zip(starts, start_cost) if _close(c, target)][0]
        chosen = [pick]
        remaining = target
        for i in range(n - 1):
            row = tables[i][chosen[-1]] + cost[i + 1]
            nxt = int(np.flatnonzero(np.isclose(row, remaining, rtol=TIE_RTOL, atol=1e-12))[0])
            remaining = cost[i + 1][nxt]
            chosen.append(nxt)
        return float(target), chosen

    if closing is None:
        _, chosen = solve(None)
    else:
        best = None
        for f in range(len(perms[0])):
            val, ch = solve(f)
            if best is None or val < best[0] and not _close(val, best[0]):
                best = (val, ch)
        chosen = best[1]
    order = [perms[i][c] for i, c in enumerate(chosen)]
    return g.ordering_from_perms(order), crossing_report(g, order)


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=TIE_RTOL, abs_tol=1e-12)


def enumerate_optimal(g: LayeredGraph, budget: int = 10**6) -> float:
    """Minimum weighted crossing by plain enumeration of every ordering (small graphs only)."""
    count = math.prod(math.factorial(s) for s in g.sizes)
    if count > budget:
        raise BudgetExceeded(f"{count} orderings exceed budget {budget}")
    best = math.inf
    for combo in itertools.product(*(itertools.permutations(range(s)) for s in g.sizes)):
        best = min(best, total_crossing(g, [np.array(c, dtype=np.intp) for c in combo]))
    return best


# -- classic barycentre ----------------------------------------------------


def bc_method(g: LayeredGraph, iters: int = 100) -> tuple[Ordering, CrossingReport]:
    """Unweighted barycentre sweeps, positions are ranks (0 = top).

    Down passes sort levels 2..n by mean neighbour rank on the left, up
    passes sort levels n-1..1 by the right. Vertices without neighbours on
    the active side keep their rank. Binding links are ignored while
    sweeping but counted when scoring; the best ordering seen is returned.
    """
    n = g.n
    adj = [(m > 0).astype(float) for m in g.matrices[: n - 1]]
    perms = [np.arange(s) for s in g.sizes]
    best, best_x = [p.copy() for p in perms], total_crossing(g, perms)

    def rank_of(p):
        r = np.empty(len(p))
        r[p] = np.arange(len(p))
        return r

    def resort(i, a, nbr_rank):
        cnt = a.sum(axis=1)
        own = rank_of(perms[i])
        mean = np.where(cnt > 0, a @ nbr_rank / np.where(cnt > 0, cnt, 1), own)
        # ascending rank = descending position
        new = order_by_position(-mean, perms[i])
        changed = not np.array_equal(new, perms[i])
        perms[i] = new
        return changed

    for _ in range(iters):
        changed = False
        for i in range(1, n):
            changed |= resort(i, adj[i - 1].T, rank_of(perms[i - 1]))
        x = total_crossing(g, perms)
        if x < best_x:
            best, best_x = [p.copy() for p in perms], x
        for i in range(n - 2, -1, -1):
            changed |= resort(i, adj[i], rank_of(perms[i + 1]))
        x = total_crossing(g, perms)
        if x < best_x:
            best, best_x = [p.copy() for p in perms], x
        if not changed:
            break
    return g.ordering_from_perms(best), crossing_report(g, best)


# -- random instances and the robust test ----------------------------------


@dataclass(frozen=True)
class RobustCase:
    n: int
    v_bar: int
    density: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.v_bar < 1:
            raise ValueError("need n >= 2 and v_bar >= 1")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")


def random_instance(case: RobustCase, max_attempts: int = 1000) -> LayeredGraph:
    """Random parallel graph with ``case.v_bar`` vertices on each of ``case.n`` levels.

    Each pair of vertices on successive levels is joined with probability
    ``density``, weights uniform on [1, 100). Draws are repeated until every
    vertex has a neighbour on each side that exists.
    """
    rng = np.random.default_rng(case.seed)
    levels = tuple(tuple(f"L{i + 1}_{j + 1}" for j in range(case.v_bar)) for i in range(case.n))
    for _ in range(max_attempts):
        mask = rng.random((case.n - 1, case.v_bar, case.v_bar)) < case.density
        w = rng.uniform(1.0, 100.0, size=mask.shape)
        if all(m.any(axis=0).all() and m.any(axis=1).all() for m in mask):
            edges = tuple(
                tuple(
                    Edge(levels[i][j], levels[i + 1][k], float(w[i, j, k]))
                    for j in range(case.v_bar)
                    for k in range(case.v_bar)
                    if mask[i, j, k]
                )
                for i in range(case.n - 1)
            )
            return LayeredGraph(levels, edges)
    raise RuntimeError(f"no connected instance for {case} after {max_attempts} draws")


@dataclass(frozen=True)
class RatioResult:
    method: str
    x: float
    y: float
    r: float


@dataclass
class CaseRecord:
    case: RobustCase
    edges: int
    reports: dict[str, CrossingReport]  # method -> report, includes "oracle"
    stage1_ordering: Ordering
    stage2_ordering: Ordering

    def ratios(self) -> list[RatioResult]:
        y = self.reports["oracle"].weighted
        return [RatioResult(m, r.weighted, y, ratio(r.weighted, y)) for m, r in self.reports.items() if m != "oracle"]


def run_case(case: RobustCase, cfg1: Stage1Config, cfg2: Stage2Config, budget: int = 10**7) -> CaseRecord:
    g = random_instance(case)
    s1 = run_stage1(g, cfg1)
    s2 = run_stage2(g, s1.ordering, cfg2)
    _, bc = bc_method(g)
    _, opt = brute_force_optimal(g, budget)
    return CaseRecord(
        case,
        sum(len(es) for es in g.edges),
        {"stage1": s1.report, "stage2": s2.report, "bc": bc, "oracle": opt},
        s1.ordering,
        s2.ordering,
    )


def robust_test(
    grid: Iterable[tuple[int, int]],
    cases_per_cell: int = 10,
    cfg1: Stage1Config = Stage1Config(),
    cfg2: Stage2Config = Stage2Config(),
    density: float = 0.5,
    budget: int = 10**7,
) -> list[CaseRecord]:
    """Run both stages, the BC baseline and the exact solver on seeded random cases.

    Case seeds are 0..cases_per_cell-1 in every cell; stage seeds come from
    the configs.
    """
    records = []
    for n, v_bar in grid:
        for seed in range(cases_per_cell):
            records.append(run_case(RobustCase(n, v_bar, density, seed), cfg1, cfg2, budget))
    return records


CSV_FIELDS = ["n", "v_bar", "seed", "edges", "method", "weighted", "unweighted", "oracle_weighted", "ratio"]


def write_report(records: Sequence[CaseRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rec in records:
            y = rec.reports["oracle"].weighted
            for method, rep in rec.reports.items():
                w.writerow(
                    [rec.case.n, rec.case.v_bar, rec.case.seed, rec.edges, method,
                     repr(rep.weighted), rep.unweighted, repr(y), repr(ratio(rep.weighted, y))]
                )


def fraction(records: Sequence[CaseRecord], method: str, threshold: float, strict: bool) -> float:
    """Share of cases whose ratio for ``method`` is below (strict) or at most ``threshold``."""
    hits = 0
    for rec in records:
        r = ratio(rec.reports[method].weighted, rec.reports["oracle"].weighted)
        hits += r < threshold if strict else r <= threshold
    return hits / len(records)


def staircase_instance(sizes: Sequence[int], seed: int = 0, cycle: bool = False) -> tuple[LayeredGraph, Ordering]:
    """Random graph with a known crossing-free ordering, which is also returned.

    Each pair of successive levels (and the last/first pair in cycle form)
    is joined along a monotone lattice path from the top vertices to the
    bottom ones, so keeping every level in its hidden order crosses nothing.
    The canonical vertex order is shuffled.
    """
    rng = np.random.default_rng(seed)
    n = len(sizes)
    hidden = [[f"L{i + 1}_{j + 1}" for j in range(s)] for i, s in enumerate(sizes)]

    def path(r, c):
        a = b = 0
        out = [(0, 0)]
        while (a, b) != (r - 1, c - 1):
            moves = [m for m in ((1, 0), (0, 1), (1, 1)) if a + m[0] < r and b + m[1] < c]
            da, db = moves[rng.integers(len(moves))]
            a, b = a + da, b + db
            out.append((a, b))
        return out

    def edges_between(i, k):
        return tuple(
            Edge(hidden[i][a], hidden[k][b], float(rng.uniform(1.0, 100.0)))
            for a, b in path(sizes[i], sizes[k])
        )

    edges = tuple(edges_between(i, i + 1) for i in range(n - 1))
    binding = edges_between(n - 1, 0) if cycle else ()
    levels = tuple(tuple(lv[k] for k in rng.permutation(len(lv))) for lv in hidden)
    g = LayeredGraph(levels, edges, binding)
    return g, Ordering(tuple(tuple(lv) for lv in hidden))
