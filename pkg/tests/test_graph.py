import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sankey_order.graph import (
    GraphError,
    Ordering,
    apply_ordering,
    crossing_report,
    ingest,
    interconnection,
    log_transform,
    weighted_crossing_level,
)
from sankey_order.baselines import staircase_instance

from conftest import flow_matrix


def pairwise_inversions(m):
    """Independent oracle: sum over edge pairs (j<k, l>q) of the weight products."""
    total = 0.0
    r, c = m.shape
    for j, k in itertools.combinations(range(r), 2):
        for q, l in itertools.combinations(range(c), 2):
            total += m[j, l] * m[k, q]
    return total


def direct_sum(m):
    r, c = m.shape
    return sum(
        m[j, l] * m[k, q]
        for j in range(r - 1)
        for k in range(j + 1, r)
        for l in range(1, c)
        for q in range(l)
    )


def test_two_by_two_examples():
    assert weighted_crossing_level(np.array([[0.0, 2.0], [3.0, 0.0]])) == 6.0
    assert weighted_crossing_level(np.array([[1.0, 1.0], [1.0, 1.0]])) == 1.0
    assert weighted_crossing_level(np.array([[2.0, 0.0], [0.0, 3.0]])) == 0.0


def test_empty_and_thin():
    assert weighted_crossing_level(np.zeros((0, 3))) == 0.0
    assert weighted_crossing_level(np.ones((1, 4))) == 0.0
    assert weighted_crossing_level(np.ones((4, 1))) == 0.0


@given(flow_matrix())
def test_matches_oracles(m):
    fast = weighted_crossing_level(m)
    assert fast == pytest.approx(pairwise_inversions(m), rel=1e-9, abs=1e-12)
    assert fast == pytest.approx(direct_sum(m), rel=1e-9, abs=1e-12)


@given(flow_matrix())
def test_reversing_both_sides_is_symmetric(m):
    assert weighted_crossing_level(m[::-1, ::-1]) == pytest.approx(weighted_crossing_level(m), rel=1e-12, abs=1e-12)


@given(flow_matrix(), st.floats(0.1, 10.0))
def test_scales_quadratically(m, a):
    assert weighted_crossing_level(a * m) == pytest.approx(a * a * weighted_crossing_level(m), rel=1e-9, abs=1e-9)


def test_ingest_dummies(tiny_flows):
    g = ingest(*tiny_flows)
    assert g.n == 3
    assert g.sizes == (2, 2, 1)
    assert len(g.dummies) == 1
    (d,) = g.dummies
    assert g.level_of(d) == 1
    # dummy carries the full value on both hops
    weights = {(e.source, e.target): e.weight for e in g.all_edges()}
    assert weights[("A", d)] == 2.0 and weights[(d, "D")] == 2.0


def test_dummy_flow_preserved():
    g, _ = staircase_instance([3, 4, 3])
    flows = [(e.source, e.target, e.weight) for e in g.all_edges()]
    flows.append(("L1_1", "L3_1", 7.0))
    level_of = {v: i + 1 for i, lv in enumerate(g.levels) for v in lv}
    h = ingest(flows, level_of)
    out_of_source = sum(e.weight for e in h.all_edges() if e.source == "L1_1")
    assert out_of_source == pytest.approx(sum(w for s, _, w in flows if s == "L1_1"))
    for d in h.dummies:
        w_in = sum(e.weight for e in h.all_edges() if e.target == d)
        w_out = sum(e.weight for e in h.all_edges() if e.source == d)
        assert w_in == w_out == 7.0


def test_duplicate_links_summed():
    g = ingest([("a", "b", 1.0), ("a", "b", 2.5)], {"a": 1, "b": 2})
    assert g.matrices[0].tolist() == [[3.5]]


@pytest.mark.parametrize(
    "flows, level_of, msg",
    [
        ([("a", "z", 1.0)], {"a": 1, "b": 2}, "unknown"),
        ([("a", "b", 0.0)], {"a": 1, "b": 2}, "positive"),
        ([("b", "a", 1.0)], {"a": 1, "b": 2}, None),
        ([("a", "b", 1.0)], {"a": 1, "b": 2, "c": 2}, "isolated"),
        ([("a", "b", 1.0)], {"a": 1, "b": 3}, "no nodes"),
    ],
)
def test_ingest_rejects(flows, level_of, msg):
    with pytest.raises(GraphError, match=msg):
        ingest(flows, level_of)


def test_cycle_binding_edges():
    flows = [("a", "b", 1.0), ("b", "c", 2.0), ("c", "a", 3.0)]
    g = ingest(flows, {"a": 1, "b": 2, "c": 3}, cycle=True)
    assert g.is_cycle
    assert len(g.matrices) == 3
    assert interconnection(g, 2).tolist() == [[3.0]]
    p = ingest(flows[:2], {"a": 1, "b": 2, "c": 3})
    with pytest.raises(IndexError):
        interconnection(p, 2)


def test_log_transform_floor():
    g = ingest([("a", "b", 1.0), ("a", "c", 1000.0)], {"a": 1, "b": 2, "c": 2})
    h = log_transform(g)
    assert sorted(h.matrices[0].ravel().tolist()) == [1e-6, 3.0]


def test_apply_ordering():
    m = np.arange(6.0).reshape(2, 3)
    assert apply_ordering(m, [1, 0], [2, 0, 1]).tolist() == [[5, 3, 4], [2, 0, 1]]
    with pytest.raises(ValueError):
        apply_ordering(m, [0, 1], [0, 1])


def test_known_ordering_and_report():
    g, known = staircase_instance([3, 4, 4, 3], seed=2, cycle=True)
    rep = crossing_report(g, known)
    assert rep.weighted == 0.0 and rep.unweighted == 0
    assert len(rep.per_level) == 4
    # reversing every level keeps the crossing count
    assert crossing_report(g, known.reversed()).weighted == 0.0


def test_ordering_roundtrip_and_mismatch():
    g, known = staircase_instance([2, 3])
    assert Ordering.from_dict(known.to_dict()) == known
    bad = Ordering((known.levels[0], known.levels[1][:2]))
    with pytest.raises(GraphError):
        g.perms(bad)


def test_unweighted_counts_pairs():
    g = ingest([("a", "d", 5.0), ("b", "c", 2.0)], {"a": 1, "b": 1, "c": 2, "d": 2})
    rep = crossing_report(g, g.identity_ordering())
    assert rep.weighted == 10.0 and rep.unweighted == 1


def _graph_oracle(g, perms):
    total = 0.0
    for i, m in enumerate(g.matrices):
        j = (i + 1) % g.n
        total += pairwise_inversions(apply_ordering(m, perms[i], perms[j]))
    return total


def test_report_matches_oracle_on_random_graphs():
    from sankey_order.baselines import RobustCase, random_instance

    rng = np.random.default_rng(0)
    for seed in range(20):
        g = random_instance(RobustCase(3, int(rng.integers(2, 5)), 0.6, seed))
        perms = [rng.permutation(s) for s in g.sizes]
        assert crossing_report(g, perms).weighted == pytest.approx(_graph_oracle(g, perms), rel=1e-9)


def test_reversal_symmetry_many_graphs():
    from sankey_order.baselines import RobustCase, random_instance

    rng = np.random.default_rng(1)
    for seed in range(100):
        g = random_instance(RobustCase(int(rng.integers(2, 5)), int(rng.integers(2, 5)), 0.6, seed))
        perms = [rng.permutation(s) for s in g.sizes]
        a = crossing_report(g, perms)
        b = crossing_report(g, [p[::-1] for p in perms])
        assert b.unweighted == a.unweighted
        assert b.weighted == pytest.approx(a.weighted, rel=1e-12)
