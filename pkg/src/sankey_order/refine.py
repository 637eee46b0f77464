"""Stage 2: partition refinement of an ordering.

Each level of height 1 is cut into equal blocks, one per vertex, the top
block going to the first-ranked vertex. Every edge end is a point inside its
owner's block, so a vertex offers a different position to each neighbour.
Barycentres are computed from these points, levels are re-sorted, and the
points are rescaled into the new blocks. The best ordering seen is kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import CrossingReport, LayeredGraph, Ordering, crossing_report, total_crossing
from .markov import left_transition, mix_random, order_by_position, right_transition

ROUTES = ("forward", "backward", "cyclic")


@dataclass(frozen=True)
class Stage2Config:
    alpha2: float = 0.1
    max_sweeps: int = 100
    stability_window: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha2 <= 1.0:
            raise ValueError(f"alpha2 must lie in [0, 1], got {self.alpha2}")
        if self.max_sweeps < 1 or self.stability_window < 1:
            raise ValueError("max_sweeps and stability_window must be >= 1")


def block_bases(size: int, perm: np.ndarray) -> np.ndarray:
    """Block base of every vertex (canonical index) given its rank in ``perm``."""
    rank = np.empty(size, dtype=np.intp)
    rank[perm] = np.arange(size)
    return (size - 1 - rank) / size


@dataclass
class PointMap:
    """Edge-end positions.

    ``left[i][j, k]`` is p(v_j, v_k) for v_j in level i and its left
    neighbour v_k; ``right[i][j, k]`` likewise for right neighbours. Entries
    without an edge are 0. Sides that do not exist are None.
    """

    left: list[np.ndarray | None]
    right: list[np.ndarray | None]

    def copy(self) -> "PointMap":
        return PointMap(
            [None if a is None else a.copy() for a in self.left],
            [None if a is None else a.copy() for a in self.right],
        )

    def equals(self, other: "PointMap") -> bool:
        return all(
            (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))
            for a, b in zip(self.left + self.right, other.left + other.right)
        )


class Refiner:
    """Level structure and stochastic rows shared by every sweep of one run."""

    def __init__(self, g: LayeredGraph, cyclic: bool, alpha2: float = 0.0, rng: np.random.Generator | None = None):
        if cyclic and not g.is_cycle:
            raise ValueError("cyclic refinement needs binding links")
        self.g = g
        self.cyclic = cyclic
        n = g.n
        self.sizes = g.sizes
        if rng is None:
            rng = np.random.default_rng(0)
        # pair[i] is the matrix from level i to level (i + 1) % n
        pair = list(g.matrices) if cyclic else list(g.matrices[: n - 1])
        self.prev = [((i - 1) % n if cyclic or i > 0 else None) for i in range(n)]
        self.next = [((i + 1) % n if cyclic or i < n - 1 else None) for i in range(n)]
        self.left_mask: list[np.ndarray | None] = []
        self.right_mask: list[np.ndarray | None] = []
        self.left_rows: list[np.ndarray | None] = []
        self.right_rows: list[np.ndarray | None] = []
        for i in range(n):
            p, q = self.prev[i], self.next[i]
            if p is None:
                self.left_mask.append(None)
                self.left_rows.append(None)
            else:
                m = pair[p]
                self.left_mask.append(m.T > 0)
                self.left_rows.append(mix_random(left_transition(m, empty="uniform"), alpha2, rng))
            if q is None:
                self.right_mask.append(None)
                self.right_rows.append(None)
            else:
                m = pair[i]
                self.right_mask.append(m > 0)
                self.right_rows.append(mix_random(right_transition(m, empty="uniform"), alpha2, rng))

    def init_points(self, perms: Sequence[np.ndarray]) -> PointMap:
        """Spread each vertex's edge ends evenly over its block, following neighbour ranks."""
        n = self.g.n
        ranks = []
        for s, perm in zip(self.sizes, perms):
            r = np.empty(s, dtype=np.intp)
            r[perm] = np.arange(s)
            ranks.append(r)
        left, right = [], []
        for i in range(n):
            s = self.sizes[i]
            base = block_bases(s, perms[i])
            h = 1.0 / s
            for side, other, out in ((self.left_mask[i], self.prev[i], left), (self.right_mask[i], self.next[i], right)):
                if side is None:
                    out.append(None)
                    continue
                pts = np.zeros(side.shape)
                for j in range(s):
                    nbrs = np.flatnonzero(side[j])
                    nbrs = nbrs[np.argsort(ranks[other][nbrs], kind="stable")]
                    c = len(nbrs)
                    for mu, k in enumerate(nbrs, start=1):
                        pts[j, k] = base[j] + (c + 1 - mu) / (c + 1) * h
                out.append(pts)
        return PointMap(left, right)

    def barycentres(self, i: int, points: PointMap) -> np.ndarray:
        p, q = self.prev[i], self.next[i]
        s = self.sizes[i]
        bl = br = None
        has_l = has_r = np.zeros(s, dtype=bool)
        if p is not None:
            bl = np.sum(self.left_rows[i] * points.right[p].T, axis=1)
            has_l = self.left_mask[i].any(axis=1)
        if q is not None:
            br = np.sum(self.right_rows[i] * points.left[q].T, axis=1)
            has_r = self.right_mask[i].any(axis=1)
        if bl is None:
            return br
        if br is None:
            return bl
        return np.where(has_l & has_r, (bl + br) / 2, np.where(has_l, bl, br))

    def update_level(self, i: int, perms: list[np.ndarray], points: PointMap) -> bool:
        """Re-sort level ``i`` by barycentre and rescale its points; True if its order changed."""
        b = self.barycentres(i, points)
        new = order_by_position(b, perms[i])
        changed = not np.array_equal(new, perms[i])
        perms[i] = new
        s = self.sizes[i]
        base = block_bases(s, new)[:, None]
        h = 1.0 / s
        p, q = self.prev[i], self.next[i]
        if p is not None:
            points.left[i] = np.where(self.left_mask[i], base + h * points.right[p].T, 0.0)
        if q is not None:
            points.right[i] = np.where(self.right_mask[i], base + h * points.left[q].T, 0.0)
        return changed

    def route(self, name: str) -> range:
        n = self.g.n
        if name == "forward":
            return range(1, n)
        if name == "backward":
            return range(n - 2, -1, -1)
        if name == "cyclic":
            return range(n)
        raise ValueError(f"unknown route {name!r}, expected one of {ROUTES}")

    def sweep(self, perms: Sequence[np.ndarray], points: PointMap, route: str) -> tuple[list[np.ndarray], PointMap, bool]:
        """One pass over the levels of ``route``. Inputs are left untouched."""
        perms = [p.copy() for p in perms]
        points = points.copy()
        changed = False
        for i in self.route(route):
            changed |= self.update_level(i, perms, points)
        return perms, points, changed


def local_barycentre(
    left_row: np.ndarray | None,
    left_points: np.ndarray | None,
    right_row: np.ndarray | None,
    right_points: np.ndarray | None,
) -> float:
    """Two-sided barycentre of one vertex from its stochastic rows and neighbour points.

    ``left_points[k]`` is the position of the edge end on left neighbour k
    (0 for non-neighbours). Pass None for an empty side; the value then comes
    from the other side alone.
    """
    sides = [
        float(np.dot(row, pts))
        for row, pts in ((left_row, left_points), (right_row, right_points))
        if row is not None and pts is not None
    ]
    if not sides:
        raise ValueError("vertex has no neighbours")
    return sum(sides) / len(sides)


def init_points(g: LayeredGraph, ordering: Ordering, cyclic: bool | None = None) -> PointMap:
    if cyclic is None:
        cyclic = g.is_cycle
    return Refiner(g, cyclic).init_points(g.perms(ordering))


@dataclass
class Stage2Result:
    ordering: Ordering
    report: CrossingReport
    sweeps_used: int  # sweeps up to the last change of ordering (at least 1)
    sweeps_run: int
    best_sweep: int  # sweep that produced the returned ordering, 0 for the input
    history: list[tuple[int, float]] = field(default_factory=list)  # (sweep, weighted) of evaluated orderings
    perms: list[np.ndarray] = field(default_factory=list, repr=False)
    points: PointMap | None = field(default=None, repr=False)


def run_stage2(
    g: LayeredGraph,
    ordering: Ordering | Sequence[np.ndarray],
    cfg: Stage2Config = Stage2Config(),
    cyclic: bool | None = None,
) -> Stage2Result:
    """Refine ``ordering`` and return the lowest-crossing ordering seen, input included.

    Parallel form alternates a forward pass (levels 2..n) and a backward pass
    (levels n-1..1); cycle form loops over levels 1..n with wraparound
    neighbours. Stops after ``stability_window`` consecutive sweeps without
    an ordering change or after ``max_sweeps`` sweeps.
    """
    if cyclic is None:
        cyclic = g.is_cycle
    perms = g.perms(ordering) if isinstance(ordering, Ordering) else [np.asarray(p, dtype=np.intp) for p in ordering]
    ref = Refiner(g, cyclic, cfg.alpha2, np.random.default_rng(cfg.seed))
    points = ref.init_points(perms)
    routes = ("cyclic",) if cyclic else ("forward", "backward")

    best, best_x, best_sweep = perms, total_crossing(g, perms), 0
    history = [(0, best_x)]
    last = perms
    last_change, stable, sweep_no = 0, 0, 0
    for sweep_no in range(1, cfg.max_sweeps + 1):
        changed = False
        for r in routes:
            perms, points, c = ref.sweep(perms, points, r)
            changed |= c
            if not all(np.array_equal(a, b) for a, b in zip(perms, last)):
                x = total_crossing(g, perms)
                history.append((sweep_no, x))
                if x < best_x:
                    best, best_x, best_sweep = perms, x, sweep_no
                last = perms
        if changed:
            last_change, stable = sweep_no, 0
        else:
            stable += 1
            if stable >= cfg.stability_window:
                break
    return Stage2Result(
        ordering=g.ordering_from_perms(best),
        report=crossing_report(g, best),
        sweeps_used=max(last_change, 1),
        sweeps_run=sweep_no,
        best_sweep=best_sweep,
        history=history,
        perms=best,
        points=points,
    )
