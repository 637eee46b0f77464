"""Layered graph model, flow ingestion and weighted crossing metrics.

Levels are indexed from 0 inside the library. Flow files, reports and the
CLI use 1-based level numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

LOG_FLOOR = 1e-6


class GraphError(ValueError):
    """Raised for flow data that cannot form a valid layered graph."""


class Edge(NamedTuple):
    source: str
    target: str
    weight: float


@dataclass(frozen=True)
class Ordering:
    """Per-level vertex ids, top to bottom (rank 1 first)."""

    levels: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(tuple(lv) for lv in self.levels))

    def reversed(self) -> "Ordering":
        return Ordering(tuple(lv[::-1] for lv in self.levels))

    def to_dict(self) -> dict[str, list[str]]:
        return {str(i + 1): list(lv) for i, lv in enumerate(self.levels)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Sequence[str]]) -> "Ordering":
        keys = sorted(data, key=int)
        if [int(k) for k in keys] != list(range(1, len(keys) + 1)):
            raise GraphError(f"ordering levels must be 1..n, got {keys}")
        return cls(tuple(tuple(data[k]) for k in keys))


@dataclass(frozen=True)
class CrossingReport:
    weighted: float
    unweighted: int
    per_level: tuple[float, ...]


@dataclass(frozen=True)
class LayeredGraph:
    """An n-level graph with edges only between successive levels.

    ``edges[i]`` holds the edges from ``levels[i]`` to ``levels[i + 1]``.
    ``binding_edges`` run from the last level back to the first and are only
    present in cycle form.
    """

    levels: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[Edge, ...], ...]
    binding_edges: tuple[Edge, ...] = ()
    dummies: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if len(self.levels) < 2:
            raise GraphError("a layered graph needs at least 2 levels")
        if len(self.edges) != len(self.levels) - 1:
            raise GraphError("edges must be grouped into n-1 level pairs")
        seen: set[str] = set()
        for lv in self.levels:
            if not lv:
                raise GraphError("empty level")
            for v in lv:
                if v in seen:
                    raise GraphError(f"vertex {v!r} appears twice")
                seen.add(v)
        pairs = [(i, i + 1, es) for i, es in enumerate(self.edges)]
        pairs.append((self.n - 1, 0, self.binding_edges))
        for a, b, es in pairs:
            for e in es:
                if self.level_of(e.source) != a or self.level_of(e.target) != b:
                    raise GraphError(f"edge {e.source}->{e.target} does not join levels {a + 1} and {b + 1}")
                if not e.weight > 0 or not math.isfinite(e.weight):
                    raise GraphError(f"edge {e.source}->{e.target} has non-positive weight {e.weight}")

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def is_cycle(self) -> bool:
        return bool(self.binding_edges)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(lv) for lv in self.levels)

    @cached_property
    def _index(self) -> dict[str, tuple[int, int]]:
        return {v: (i, j) for i, lv in enumerate(self.levels) for j, v in enumerate(lv)}

    def level_of(self, v: str) -> int:
        return self._index[v][0]

    def position_of(self, v: str) -> int:
        """Canonical (ingestion) index of ``v`` inside its level."""
        return self._index[v][1]

    def all_edges(self) -> Iterable[Edge]:
        for es in self.edges:
            yield from es
        yield from self.binding_edges

    @cached_property
    def matrices(self) -> tuple[np.ndarray, ...]:
        """Interconnection matrices in canonical order; binding matrix last in cycle form."""
        out = []
        groups = list(self.edges) + ([self.binding_edges] if self.is_cycle else [])
        for i, es in enumerate(groups):
            a, b = i, (i + 1) % self.n
            m = np.zeros((len(self.levels[a]), len(self.levels[b])))
            for e in es:
                m[self.position_of(e.source), self.position_of(e.target)] += e.weight
            m.setflags(write=False)
            out.append(m)
        return tuple(out)

    def identity_ordering(self) -> Ordering:
        return Ordering(self.levels)

    def perms(self, ordering: Ordering) -> list[np.ndarray]:
        """Canonical indices of each level in rank order."""
        if len(ordering.levels) != self.n:
            raise GraphError(f"ordering has {len(ordering.levels)} levels, graph has {self.n}")
        out = []
        for i, (lv, want) in enumerate(zip(ordering.levels, self.levels)):
            if sorted(lv) != sorted(want):
                missing = sorted(set(want) - set(lv))
                extra = sorted(set(lv) - set(want))
                raise GraphError(f"level {i + 1} ordering mismatch: missing {missing}, unexpected {extra}")
            out.append(np.array([self.position_of(v) for v in lv], dtype=np.intp))
        return out

    def ordering_from_perms(self, perms: Sequence[Sequence[int]]) -> Ordering:
        return Ordering(tuple(tuple(lv[k] for k in p) for lv, p in zip(self.levels, perms)))

    def with_weights(self, fn) -> "LayeredGraph":
        def conv(es):
            return tuple(Edge(e.source, e.target, fn(e.weight)) for e in es)

        return LayeredGraph(
            self.levels, tuple(conv(es) for es in self.edges), conv(self.binding_edges), self.dummies
        )

    def parallel(self) -> "LayeredGraph":
        """The same graph with binding links dropped."""
        if not self.is_cycle:
            return self
        return LayeredGraph(self.levels, self.edges, (), self.dummies)


def dummy_id(source: str, target: str, level: int) -> str:
    return f"{source}->{target}@{level + 1}"


def ingest(
    flows: Iterable[tuple[str, str, float]],
    level_of: Mapping[str, int],
    cycle: bool = False,
) -> LayeredGraph:
    """Build a layered graph from ``(source, target, value)`` flows.

    ``level_of`` maps ids to 1-based levels; its iteration order fixes the
    canonical vertex order. Links spanning k > 1 levels are split through
    k - 1 dummy vertices carrying the full value. With ``cycle`` set, links
    from the last level to the first become binding edges. Repeated links
    between the same pair are merged by summing their values.
    """
    if not level_of:
        raise GraphError("no nodes")
    lv_idx = {}
    for v, lv in level_of.items():
        if isinstance(lv, bool) or int(lv) != lv or lv < 1:
            raise GraphError(f"node {v!r}: level must be a positive integer, got {lv!r}")
        lv_idx[str(v)] = int(lv) - 1
    n = max(lv_idx.values()) + 1
    levels: list[list[str]] = [[] for _ in range(n)]
    for v, i in lv_idx.items():
        levels[i].append(v)
    for i, lv in enumerate(levels):
        if not lv:
            raise GraphError(f"level {i + 1} has no nodes")

    weights: list[dict[tuple[str, str], float]] = [{} for _ in range(n - 1)]
    binding: dict[tuple[str, str], float] = {}
    dummies: list[str] = []

    def add(bucket, s, t, w):
        bucket[(s, t)] = bucket.get((s, t), 0.0) + w

    for row, flow in enumerate(flows):
        try:
            s, t, w = flow
        except (TypeError, ValueError):
            raise GraphError(f"flow {row}: expected (source, target, value)") from None
        s, t = str(s), str(t)
        try:
            w = float(w)
        except (TypeError, ValueError):
            raise GraphError(f"flow {row} {s}->{t}: value {w!r} is not a number") from None
        for v in (s, t):
            if v not in lv_idx:
                raise GraphError(f"flow {row}: unknown node {v!r}")
        if s == t:
            raise GraphError(f"flow {row}: self-link on {s!r}")
        if not (w > 0 and math.isfinite(w)):
            raise GraphError(f"flow {row} {s}->{t}: value must be positive, got {w}")
        a, b = lv_idx[s], lv_idx[t]
        if b == a + 1:
            add(weights[a], s, t, w)
        elif b > a + 1:
            prev = s
            for i in range(a + 1, b):
                d = dummy_id(s, t, i)
                if d not in lv_idx and d not in dummies:
                    dummies.append(d)
                    levels[i].append(d)
                add(weights[i - 1], prev, d, w)
                prev = d
            add(weights[b - 1], prev, t, w)
        elif cycle and a == n - 1 and b == 0:
            add(binding, s, t, w)
        else:
            raise GraphError(f"flow {row} {s}->{t}: runs from level {a + 1} to level {b + 1}")

    degree = {v: 0 for lv in levels for v in lv}
    for bucket in [*weights, binding]:
        for s, t in bucket:
            degree[s] += 1
            degree[t] += 1
    isolated = [v for v, d in degree.items() if d == 0]
    if isolated:
        raise GraphError(f"isolated nodes: {isolated}")

    return LayeredGraph(
        levels=tuple(tuple(lv) for lv in levels),
        edges=tuple(tuple(Edge(s, t, w) for (s, t), w in bucket.items()) for bucket in weights),
        binding_edges=tuple(Edge(s, t, w) for (s, t), w in binding.items()),
        dummies=frozenset(dummies),
    )


def log_transform(g: LayeredGraph, floor: float = LOG_FLOOR) -> LayeredGraph:
    """Replace every weight w by max(log10(w), floor)."""
    return g.with_weights(lambda w: max(math.log10(w), floor))


def interconnection(g: LayeredGraph, i: int) -> np.ndarray:
    """Weighted biadjacency between level ``i`` and ``i + 1`` (0-based).

    ``i = n - 1`` gives the binding matrix (last level x first level) and is
    only valid in cycle form.
    """
    if not 0 <= i < g.n - 1 and not (i == g.n - 1 and g.is_cycle):
        raise IndexError(f"no interconnection matrix {i} for a {'cycle' if g.is_cycle else 'parallel'} graph with {g.n} levels")
    return g.matrices[i]


def apply_ordering(m: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """Reorder ``m`` so row r is vertex ``rows[r]`` and column c is ``cols[c]``."""
    m = np.asarray(m)
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    if sorted(rows.tolist()) != list(range(m.shape[0])) or sorted(cols.tolist()) != list(range(m.shape[1])):
        raise ValueError(f"permutations of length {len(rows)}x{len(cols)} do not match matrix {m.shape}")
    return m[np.ix_(rows, cols)]


def weighted_crossing_level(m: np.ndarray) -> float:
    """Sum of w(j,q) * w(k,p) over row pairs j < k and column pairs p < q."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    right_of = np.cumsum(m[:, ::-1], axis=1)[:, ::-1] - m
    above = np.cumsum(right_of, axis=0) - right_of
    return float(np.sum(m * above))


def level_crossings(g: LayeredGraph, perms: Sequence[np.ndarray], unit: bool = False) -> list[float]:
    out = []
    for i, m in enumerate(g.matrices):
        if unit:
            m = (m > 0).astype(float)
        out.append(weighted_crossing_level(m[np.ix_(perms[i], perms[(i + 1) % g.n])]))
    return out


def total_crossing(g: LayeredGraph, perms: Sequence[np.ndarray]) -> float:
    return math.fsum(level_crossings(g, perms))


def crossing_report(g: LayeredGraph, ordering: Ordering | Sequence[np.ndarray]) -> CrossingReport:
    perms = g.perms(ordering) if isinstance(ordering, Ordering) else ordering
    per_level = level_crossings(g, perms)
    unweighted = math.fsum(level_crossings(g, perms, unit=True))
    return CrossingReport(math.fsum(per_level), int(round(unweighted)), tuple(per_level))
